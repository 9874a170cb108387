// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_TRAINER_HPP
#define SEPASR_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sepasr/asr.hpp"
#include "sepasr/corpus.hpp"
#include "sepasr/losses.hpp"
#include "sepasr/optim.hpp"
#include "sepasr/separator.hpp"

namespace sepasr {

/// One chunk cut for the approximated TBPTT forward.
struct ChunkPlan {
  std::int64_t start = 0;
  std::int64_t length = 0;
  std::int64_t signal_length = 0;
  std::int64_t rf_margin = 0;  // informative: edge-avoidance margin used

  void validate(std::int64_t min_chunk) const;
};

struct TbpttPolicy {
  bool enabled = false;
  std::int64_t chunk_samples = 0;
  bool edge_avoid = false;  // keep one receptive field off the signal edges
};

// Approximated truncated backprop for the convolutional front-end:
//   1. forward over the whole signal with graph recording disabled,
//   2. forward over the chunk alone with recording enabled,
//   3. outputs are the full-signal outputs with the chunk region overwritten
//      by the chunk outputs.
// Gradients reaching the spliced outputs propagate into the separator only
// through the chunk region.
std::vector<Tensor> tbptt_forward(const SeparatorModel& model, const Tensor& x,
                                  const ChunkPlan& plan);

// Uniform-random chunk placement, start aligned down to the encoder stride;
// with edge_avoid the start keeps rf_samples clear of both signal edges when
// the signal is long enough. A signal shorter than the chunk is used whole.
ChunkPlan place_chunk(std::int64_t signal_len, std::int64_t chunk_samples, bool edge_avoid,
                      std::int64_t rf_samples, std::mt19937_64& rng,
                      std::int64_t stride_align = 1);

struct MemoryProbe {
  std::int64_t frontend_bytes = 0;  // retained-activation bytes of the separator forward
  std::int64_t backend_bytes = 0;
  double wall_ms = 0.0;
};

enum class PermCriterion { Signal, Ctc };

struct FinetunePlan {
  FinetuneMode mode = FinetuneMode::C;
  double alpha = 0.5;   // derived from mode unless overridden
  double beta = 1.0;
  bool freeze_frontend = false;
  bool freeze_backend = false;
  double lambda = 0.2;
  PermCriterion perm = PermCriterion::Signal;
  TbpttPolicy tbptt;
  OptimizerConfig optimizer = OptimizerConfig::adam(5e-4);
  int batch_size = 4;
  int steps = 100;
  double clip_norm = 5.0;
  std::uint64_t seed = 1234;

  static FinetunePlan for_mode(FinetuneMode mode);
  // Mode-c variant without the auxiliary signal loss still assigns
  // transcripts by pi_sig.
  void override_alpha(double value);
};

struct StepResult {
  LossReport report;
  MemoryProbe probe;
};

// One optimizer step over a batch of mixture examples. Losses are averaged
// over the batch; frozen parameter groups are not registered with the
// optimizer and stay bit-identical.
StepResult finetune_step(const MixtureDataset& data, const std::vector<int>& batch,
                         SeparatorModel& sep, AsrModel& asr, const FinetunePlan& plan,
                         Optimizer& opt, std::uint64_t step_index);

using StepLogFn = std::function<void(const std::string& json_line)>;

struct SeparatorPretrainOptions {
  std::int64_t crop_samples = 8000;
  int batch_size = 4;
  int epochs = 2;
  OptimizerConfig optimizer = OptimizerConfig::adam(1e-3);
  double clip_norm = 5.0;
  std::uint64_t seed = 1234;
};

struct SeparatorTrainResult {
  std::vector<double> step_si_snr;       // training SI-SNR per step (mean over batch)
  std::vector<double> dev_si_snr;        // per epoch
  int skipped_short = 0;
};

// Chunk-level permutation-invariant SI-SNR training on the min-variant set.
SeparatorTrainResult pretrain_separator(const MixtureDataset& train, const MixtureDataset* dev,
                                        SeparatorModel& model,
                                        const SeparatorPretrainOptions& opts,
                                        const StepLogFn& log = {});

struct AsrPretrainOptions {
  int batch_size = 4;
  int epochs = 6;
  double lambda = 0.2;
  OptimizerConfig optimizer = OptimizerConfig::adam(2e-3);
  double clip_norm = 5.0;
  std::uint64_t seed = 1234;
};

struct AsrTrainResult {
  std::vector<double> step_loss;
  std::vector<double> dev_wer;  // per epoch, greedy CTC decode
};

// Teacher-forced multi-task training on clean single-speaker utterances.
AsrTrainResult pretrain_asr(const CleanDataset& train, const CleanDataset* dev, AsrModel& model,
                            const AsrPretrainOptions& opts, const StepLogFn& log = {});

struct FinetuneResult {
  std::vector<LossReport> reports;
  std::vector<MemoryProbe> probes;
};

// Runs plan.steps optimizer steps with deterministic batch composition.
FinetuneResult finetune(const MixtureDataset& train, SeparatorModel& sep, AsrModel& asr,
                        const FinetunePlan& plan, const StepLogFn& log = {});

// Mean dev-set SI-SNR of the separator under the best signal assignment.
double dev_si_snr(const MixtureDataset& data, const SeparatorModel& model);

// Greedy-decode WER of the recognizer on clean utterances.
double dev_clean_wer(const CleanDataset& data, const AsrModel& model);

}  // namespace sepasr

#endif  // SEPASR_TRAINER_HPP
