// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_SEPARATOR_HPP
#define SEPASR_SEPARATOR_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sepasr/audio.hpp"
#include "sepasr/checkpoint.hpp"
#include "sepasr/ops.hpp"

namespace sepasr {

// Hyperparameters follow the Conv-TasNet naming: N encoder bases, L encoder
// window, B bottleneck channels, H block channels, P depthwise kernel size,
// X blocks per repeat (dilation 2^x), R repeats, S speakers.
struct SeparatorConfig {
  std::int64_t N = 64;
  std::int64_t L = 16;
  std::int64_t B = 32;
  std::int64_t H = 64;
  std::int64_t P = 3;
  std::int64_t X = 4;
  std::int64_t R = 2;
  std::int64_t S = 2;
  double norm_eps = 1e-8;

  std::int64_t stride() const { return L / 2; }
  void validate() const;
};

// Receptive field of the mask network in latent frames:
// 1 + R * (P - 1) * (2^X - 1).
std::int64_t receptive_field_frames(const SeparatorConfig& config);
// Same span converted to input samples: (frames - 1) * stride + L.
std::int64_t receptive_field_samples(const SeparatorConfig& config);

// Time-domain separator: learnable encoder, dilated temporal conv mask
// network (residual + skip blocks, global layer norm, PReLU), sigmoid mask
// head and transposed-conv decoder.
class SeparatorModel {
 public:
  SeparatorModel(SeparatorConfig config, std::uint64_t seed);

  const SeparatorConfig& config() const { return config_; }

  // Strided windows through the learned basis, then ReLU: [N, F] with
  // F = floor((len - L) / stride) + 1. Input must be at least L samples.
  Tensor encode(const Tensor& x) const;

  // Sigmoid masks for each speaker, [S, N, F].
  Tensor separate_masks(const Tensor& latent) const;

  // Overlap-add synthesis of one masked latent back to out_len samples.
  Tensor decode(const Tensor& masked, std::int64_t out_len) const;

  // Full separation: S waveform tensors, each the length of the input.
  std::vector<Tensor> forward(const Tensor& x) const;

  // Forward with externally supplied masks [S, N, F] (test hook).
  std::vector<Tensor> forward_with_masks(const Tensor& x, const Tensor& masks) const;

  // Mask network alone on a latent [N, F] -> [S*N, F] pre-sigmoid activations
  // are not exposed; output is post-sigmoid. Used for receptive-field probes.
  Tensor mask_network(const Tensor& latent) const;

  NamedParams parameters();
  NamedParams parameters() const;

 private:
  struct Conv1x1 {
    Tensor w;  // [out, in, 1]
    Tensor b;  // [out]
  };
  struct Gln {
    Tensor gain;
    Tensor bias;
  };
  struct Block {
    Conv1x1 in;        // B -> H
    Tensor prelu1;
    Gln norm1;
    Tensor dw_kernel;  // [H, 1, P], depthwise, dilation 2^x
    Tensor prelu2;
    Gln norm2;
    Conv1x1 res;       // H -> B
    Conv1x1 skip;      // H -> B
    std::int64_t dilation = 1;
  };

  Tensor apply_block(const Block& block, const Tensor& input, Tensor& skip_acc) const;
  std::vector<Tensor> forward_with_masks_latent(const Tensor& x, const Tensor& latent,
                                                const Tensor& masks) const;

  SeparatorConfig config_;
  Tensor encoder_kernel_;  // [N, 1, L]
  Gln enc_norm_;
  Conv1x1 bottleneck_;     // N -> B
  std::vector<Block> blocks_;
  Tensor mask_prelu_;
  Conv1x1 mask_head_;      // B -> S*N
  Tensor decoder_kernel_;  // [N, 1, L]
};

}  // namespace sepasr

#endif  // SEPASR_SEPARATOR_HPP
