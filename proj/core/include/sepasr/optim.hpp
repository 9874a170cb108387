// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_OPTIM_HPP
#define SEPASR_OPTIM_HPP

#include <memory>
#include <string>

#include "sepasr/checkpoint.hpp"

namespace sepasr {

struct OptimizerConfig {
  enum class Kind { Adam, Adadelta };
  Kind kind = Kind::Adam;
  // adam
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // adadelta
  double rho = 0.95;
  double adadelta_eps = 1e-6;

  static OptimizerConfig adam(double lr_value) {
    OptimizerConfig c;
    c.kind = Kind::Adam;
    c.lr = lr_value;
    return c;
  }
  static OptimizerConfig adadelta(double rho_value, double eps_value) {
    OptimizerConfig c;
    c.kind = Kind::Adadelta;
    c.rho = rho_value;
    c.adadelta_eps = eps_value;
    return c;
  }
};

// Updates the registered parameter group in place from accumulated gradients;
// parameters with no accumulated gradient are treated as zero-gradient.
// Freezing is expressed by which parameters get registered.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step() = 0;
  virtual const char* name() const = 0;

  void zero_grad();
  // Scales gradients so the global L2 norm is at most max_norm; returns the
  // pre-clip norm.
  double clip_global_norm(double max_norm);

  NamedParams& params() { return params_; }

 protected:
  explicit Optimizer(NamedParams params) : params_(std::move(params)) {}
  NamedParams params_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, NamedParams params);

}  // namespace sepasr

#endif  // SEPASR_OPTIM_HPP
