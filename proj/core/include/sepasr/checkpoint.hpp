// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_CHECKPOINT_HPP
#define SEPASR_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include "sepasr/tensor.hpp"

namespace sepasr {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Versioned checkpoint container: a textual header listing format version,
// precision and every parameter with its shape, followed by raw little-endian
// doubles in header order. Round-trips bit-exactly.
//
//   sepasr-checkpoint v1
//   precision f64
//   count <n>
//   param <name> <rank> <d0> <d1> ...
//   ...
//   data
//   <raw bytes>
void save_checkpoint(const std::string& path, const NamedParams& params);

// Loads values into the given parameters. Names and shapes must match the
// stored header exactly (order-independent); mismatches raise checkpoint
// errors naming the parameter.
void load_checkpoint(const std::string& path, NamedParams& params);

}  // namespace sepasr

#endif  // SEPASR_CHECKPOINT_HPP
