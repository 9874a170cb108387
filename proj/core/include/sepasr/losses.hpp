// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_LOSSES_HPP
#define SEPASR_LOSSES_HPP

#include <string>
#include <vector>

#include "sepasr/audio.hpp"
#include "sepasr/ops.hpp"

namespace sepasr {

// Guard epsilon for the SI-SNR ratios. Small enough not to perturb healthy
// signals at any training amplitude (scale invariance holds to well under
// 1e-6 dB); the +-60 dB clamp bounds the degenerate cases.
inline constexpr double kSiSnrEps = 1e-12;
inline constexpr double kSiSnrClampDb = 60.0;

// Scale-invariant SNR in dB, clamped to [-60, +60]. After optional mean
// removal the estimate is projected onto the reference; the ratio of target
// to residual power goes through 10*log10. Differentiable w.r.t. the
// estimate. zero_mean=false is the scale-projection SDR proxy.
Tensor si_snr_t(const Tensor& est, const Tensor& ref, double eps = kSiSnrEps,
                bool zero_mean = true);
double si_snr(const Waveform& est, const Waveform& ref, double eps = kSiSnrEps,
              bool zero_mean = true);

/// Bijective assignment of estimate streams to reference streams.
struct PermutationAssignment {
  std::vector<int> mapping;   // estimate index -> reference index
  std::string criterion;      // "signal" or "ctc"
  double value = 0.0;         // criterion value under this assignment
};

struct PitResult {
  Tensor loss;                    // L_FE = -mean si_snr under the best assignment
  PermutationAssignment perm;
  std::vector<double> pair_db;    // per-estimate si_snr under the best assignment
};

// Exhaustive permutation-invariant signal loss (S! candidates, S <= 6). Ties
// break toward the lexicographically smallest permutation.
PitResult pit_signal_loss(const std::vector<Tensor>& ests, const std::vector<Tensor>& refs,
                          double eps = kSiSnrEps);
PitResult pit_signal_loss(const std::vector<Waveform>& ests, const std::vector<Waveform>& refs,
                          double eps = kSiSnrEps);

// Assignment minimizing the summed CTC loss of per-stream log-prob matrices
// [T, C] against label sets (CTC class ids). Assignments whose every pairing
// is infeasible are skipped; if no assignment is feasible, raises an
// alignment error.
PermutationAssignment pi_ctc_assign(const std::vector<Tensor>& stream_log_probs,
                                    const std::vector<std::vector<int>>& label_sets, int blank);

// L = alpha * L_FE + beta * L_ASR (Eq. 3 weighting).
Tensor joint_loss(double alpha, double beta, const Tensor& l_fe, const Tensor& l_asr);

/// Fine-tuning mode presets for (alpha, beta) and parameter freezing.
enum class FinetuneMode { A, B, C };
struct ModePreset {
  double alpha;
  double beta;
  bool freeze_frontend;
  bool freeze_backend;
};
ModePreset mode_preset(FinetuneMode mode);

/// Per-step loss record; consumed by the step log and the report command.
struct LossReport {
  double l_fe = 0.0;
  double l_ctc = 0.0;
  double l_att = 0.0;
  double l_asr = 0.0;
  double l_total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  std::vector<std::vector<int>> permutations;  // per example in the batch
  std::string to_json() const;
};

}  // namespace sepasr

#endif  // SEPASR_LOSSES_HPP
