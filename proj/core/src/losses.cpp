// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace sepasr {

namespace {

constexpr double kLog10Scale = 10.0 / 2.302585092994045684;  // 10 / ln(10)

void check_ref_power(const Tensor& ref) {
  double p = 0.0;
  for (double v : ref.values()) p += v * v;
  if (p <= 0.0) {
    fail(Error::Kind::Data, "si_snr: reference signal has zero power");
  }
}

}  // namespace

Tensor si_snr_t(const Tensor& est, const Tensor& ref, double eps, bool zero_mean) {
  if (est.shape() != ref.shape() || est.rank() != 1) {
    fail(Error::Kind::Shape, "si_snr: estimate and reference must be equal-length 1-D, got ",
         shape_str(est.shape()), " and ", shape_str(ref.shape()));
  }
  check_ref_power(ref);
  Tensor e = est;
  Tensor r = ref;
  if (zero_mean) {
    const std::int64_t n = est.dim(0);
    e = sub(est, scale(Tensor::full({n}, 1.0), mean(est)));
    r = sub(ref, scale(Tensor::full({n}, 1.0), mean(ref)));
  }
  Tensor dot_er = sum(mul(e, r));
  Tensor ref_pow = add_scalar(sum(mul(r, r)), eps);
  Tensor proj = div(dot_er, ref_pow);       // scalar
  Tensor target = scale(r, proj);           // projection of est onto ref
  Tensor noise = sub(e, target);
  Tensor num = sum(mul(target, target));
  Tensor den = sum(mul(noise, noise));
  // The ratio itself carries no additive guard: that keeps the value exactly
  // scale-invariant at any amplitude. Exact zeros clamp to the bounds.
  if (num.item() == 0.0) return Tensor::scalar(-kSiSnrClampDb);
  if (den.item() == 0.0) return Tensor::scalar(kSiSnrClampDb);
  Tensor ratio_db = mul_scalar(sub(log(num), log(den)), kLog10Scale);
  return clamp(ratio_db, -kSiSnrClampDb, kSiSnrClampDb);
}

double si_snr(const Waveform& est, const Waveform& ref, double eps, bool zero_mean) {
  NoGradGuard no_grad;
  Tensor e = Tensor::constant(est.samples, {est.size()});
  Tensor r = Tensor::constant(ref.samples, {ref.size()});
  return si_snr_t(e, r, eps, zero_mean).item();
}

namespace {

PitResult pit_signal_loss_impl(const std::vector<Tensor>& ests, const std::vector<Tensor>& refs,
                               double eps) {
  const int s = static_cast<int>(ests.size());
  if (s == 0 || refs.size() != ests.size()) {
    fail(Error::Kind::Usage, "pit_signal_loss: need equal nonzero stream counts, got ",
         ests.size(), " and ", refs.size());
  }
  if (s > 6) {
    fail(Error::Kind::Usage, "pit_signal_loss: exhaustive search capped at S=6, got ", s);
  }

  // Pairwise SI-SNR graph branches; only the winning assignment feeds the loss.
  std::vector<std::vector<Tensor>> pair(static_cast<std::size_t>(s),
                                        std::vector<Tensor>(static_cast<std::size_t>(s)));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      pair[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          si_snr_t(ests[static_cast<std::size_t>(i)], refs[static_cast<std::size_t>(j)], eps);
    }
  }

  std::vector<int> perm(static_cast<std::size_t>(s));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm;
  double best_mean = -std::numeric_limits<double>::infinity();
  do {  // std::next_permutation enumerates in lexicographic order
    double acc = 0.0;
    for (int i = 0; i < s; ++i) {
      acc += pair[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]
                 .item();
    }
    const double mean_db = acc / s;
    if (mean_db > best_mean) {  // strict: ties keep the earliest (lexicographic) permutation
      best_mean = mean_db;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  PitResult result;
  Tensor acc;
  for (int i = 0; i < s; ++i) {
    const Tensor& term =
        pair[static_cast<std::size_t>(i)][static_cast<std::size_t>(best_perm[static_cast<std::size_t>(i)])];
    result.pair_db.push_back(term.item());
    acc = acc.defined() ? add(acc, term) : term;
  }
  result.loss = mul_scalar(acc, -1.0 / s);  // mean over sources, negated
  result.perm.mapping = best_perm;
  result.perm.criterion = "signal";
  result.perm.value = -best_mean;
  return result;
}

}  // namespace

PitResult pit_signal_loss(const std::vector<Tensor>& ests, const std::vector<Tensor>& refs,
                          double eps) {
  return pit_signal_loss_impl(ests, refs, eps);
}

PitResult pit_signal_loss(const std::vector<Waveform>& ests, const std::vector<Waveform>& refs,
                          double eps) {
  std::vector<Tensor> e, r;
  for (const auto& w : ests) e.push_back(Tensor::constant(w.samples, {w.size()}));
  for (const auto& w : refs) r.push_back(Tensor::constant(w.samples, {w.size()}));
  NoGradGuard no_grad;
  return pit_signal_loss_impl(e, r, eps);
}

PermutationAssignment pi_ctc_assign(const std::vector<Tensor>& stream_log_probs,
                                    const std::vector<std::vector<int>>& label_sets, int blank) {
  const int s = static_cast<int>(stream_log_probs.size());
  if (s == 0 || label_sets.size() != stream_log_probs.size()) {
    fail(Error::Kind::Usage, "pi_ctc_assign: need equal nonzero stream counts");
  }
  if (s > 6) fail(Error::Kind::Usage, "pi_ctc_assign: exhaustive search capped at S=6");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  NoGradGuard no_grad;
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(s),
                                        std::vector<double>(static_cast<std::size_t>(s), kInf));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      try {
        cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            ctc_loss(stream_log_probs[static_cast<std::size_t>(i)],
                     label_sets[static_cast<std::size_t>(j)], blank)
                .item();
      } catch (const Error& e) {
        if (e.kind() != Error::Kind::Alignment) throw;
      }
    }
  }

  std::vector<int> perm(static_cast<std::size_t>(s));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm;
  double best_cost = kInf;
  do {
    double acc = 0.0;
    for (int i = 0; i < s; ++i) {
      acc += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    if (acc < best_cost) {
      best_cost = acc;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  if (!(best_cost < kInf)) {
    fail(Error::Kind::Alignment,
         "pi_ctc_assign: every assignment has an infeasible CTC alignment");
  }
  PermutationAssignment out;
  out.mapping = best_perm;
  out.criterion = "ctc";
  out.value = best_cost;
  return out;
}

Tensor joint_loss(double alpha, double beta, const Tensor& l_fe, const Tensor& l_asr) {
  if (alpha < 0.0 || beta < 0.0) {
    fail(Error::Kind::Usage, "joint_loss: weights must be non-negative, got alpha=", alpha,
         " beta=", beta);
  }
  if (alpha == 0.0 && beta == 0.0) {
    fail(Error::Kind::Usage, "joint_loss: alpha and beta must not both be zero");
  }
  if (beta == 0.0) return mul_scalar(l_fe, alpha);
  if (alpha == 0.0) return mul_scalar(l_asr, beta);
  return add(mul_scalar(l_fe, alpha), mul_scalar(l_asr, beta));
}

ModePreset mode_preset(FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::A:
      return {0.0, 1.0, true, false};   // fine-tune the recognizer only
    case FinetuneMode::B:
      return {1.0, 0.0, false, true};   // fine-tune the front-end only
    case FinetuneMode::C:
      return {0.5, 1.0, false, false};  // joint with auxiliary signal loss
  }
  fail(Error::Kind::Usage, "unknown fine-tune mode");
}

std::string LossReport::to_json() const {
  nlohmann::json j{{"L_FE", l_fe},   {"L_CTC", l_ctc},   {"L_att", l_att},
                   {"L_ASR", l_asr}, {"L", l_total},     {"alpha", alpha},
                   {"beta", beta},   {"lambda", lambda}, {"perms", permutations}};
  return j.dump();
}

}  // namespace sepasr
