// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_GRADCHECK_HPP
#define SEPASR_GRADCHECK_HPP

#include <ostream>

namespace sepasr {

struct GradcheckResult {
  int passed = 0;
  int failed = 0;
  double seconds = 0.0;
  bool ok() const { return failed == 0; }
};

// Central finite-difference validation (step 1e-5, 64-bit) of every
// differentiable op against its recorded backward, 20 random seeds per op.
// Core ops must stay under 1e-4 relative error; composite paths (logmel, CTC,
// attention, separator) under 1e-3. Prints one pass/fail line per op.
GradcheckResult run_gradcheck(std::ostream& os);

}  // namespace sepasr

#endif  // SEPASR_GRADCHECK_HPP
