// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/optim.hpp"

#include <cmath>
#include <vector>

namespace sepasr {

void Optimizer::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

double Optimizer::clip_global_norm(double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params_) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, p] : params_) {
      if (!p.has_grad()) continue;
      for (auto& v : p.mutable_grad()) v *= scale;
    }
  }
  return norm;
}

namespace {

class Adam final : public Optimizer {
 public:
  Adam(OptimizerConfig cfg, NamedParams params) : Optimizer(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const std::size_t n = static_cast<std::size_t>(params_[i].second.numel());
      m_[i].assign(n, 0.0);
      v_[i].assign(n, 0.0);
    }
  }

  const char* name() const override { return "adam"; }

  void step() override {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i].second;
      auto& values = p.mutable_values();
      const bool has_grad = p.has_grad();
      const std::vector<double>* grad = has_grad ? &p.grad() : nullptr;
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double g = has_grad ? (*grad)[j] : 0.0;
        m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        values[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

class Adadelta final : public Optimizer {
 public:
  Adadelta(OptimizerConfig cfg, NamedParams params) : Optimizer(std::move(params)), cfg_(cfg) {
    eg2_.resize(params_.size());
    ed2_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const std::size_t n = static_cast<std::size_t>(params_[i].second.numel());
      eg2_[i].assign(n, 0.0);
      ed2_[i].assign(n, 0.0);
    }
  }

  const char* name() const override { return "adadelta"; }

  void step() override {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i].second;
      auto& values = p.mutable_values();
      const bool has_grad = p.has_grad();
      const std::vector<double>* grad = has_grad ? &p.grad() : nullptr;
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double g = has_grad ? (*grad)[j] : 0.0;
        eg2_[i][j] = cfg_.rho * eg2_[i][j] + (1.0 - cfg_.rho) * g * g;
        const double dx = -std::sqrt(ed2_[i][j] + cfg_.adadelta_eps) /
                          std::sqrt(eg2_[i][j] + cfg_.adadelta_eps) * g;
        ed2_[i][j] = cfg_.rho * ed2_[i][j] + (1.0 - cfg_.rho) * dx * dx;
        values[j] += dx;
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> eg2_, ed2_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, NamedParams params) {
  if (config.kind == OptimizerConfig::Kind::Adam) {
    return std::make_unique<Adam>(config, std::move(params));
  }
  return std::make_unique<Adadelta>(config, std::move(params));
}

}  // namespace sepasr
