// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_ASR_HPP
#define SEPASR_ASR_HPP

#include <cstdint>
#include <vector>

#include "sepasr/audio.hpp"
#include "sepasr/checkpoint.hpp"
#include "sepasr/ops.hpp"
#include "sepasr/vocab.hpp"

namespace sepasr {

struct AsrConfig {
  std::int64_t n_mels = 40;
  std::int64_t stft_window = 256;  // 32 ms at 8 kHz
  std::int64_t stft_hop = 128;
  std::int64_t conv_channels = 48;
  std::int64_t subsample = 4;      // product of conv strides; 1, 2 or 4
  std::int64_t hidden = 48;        // encoder GRU size == decoder size (dot attention)
  std::int64_t embed_dim = 24;
  double lambda = 0.2;             // CTC weight in the multi-task loss
  double log_eps = 1e-10;
  int sample_rate = 8000;

  void validate() const;
};

// Single-speaker CTC/attention recognizer over a differentiable log-mel
// front feature, so gradients reach whatever produced the waveform.
class AsrModel {
 public:
  AsrModel(AsrConfig config, Vocabulary vocab, std::uint64_t seed);

  const AsrConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const Tensor& mel_filterbank() const { return mel_fb_; }

  // |STFT|^2 -> mel -> log(. + eps), differentiable w.r.t. the waveform.
  // [n_mels, Tf] with Tf = floor((len - window)/hop) + 1.
  Tensor logmel(const Tensor& audio) const;

  // Subsampling conv stack plus a GRU layer; [Tenc, hidden] with
  // Tenc = ceil(Tf / subsample).
  Tensor encode(const Tensor& audio) const;

  // Log-softmax CTC scores [Tenc, V+1] over the encoder output.
  Tensor ctc_log_probs(const Tensor& enc) const;

  // Teacher-forced attention decoder: sum of per-step cross-entropies
  // predicting labels + eos with dot-product attention over enc rows.
  Tensor attention_loss(const Tensor& enc, const std::vector<int>& word_ids) const;

  struct LossParts {
    Tensor total;
    Tensor ctc;
    Tensor att;
  };
  // lambda * CTC + (1 - lambda) * attention. lambda of exactly 0 or 1 skips
  // the unused branch.
  LossParts loss_parts(const Tensor& audio, const std::vector<int>& word_ids,
                       double lambda) const;
  Tensor loss(const Tensor& audio, const std::vector<int>& word_ids, double lambda) const;

  // Greedy CTC decode to word ids (no gradients recorded).
  std::vector<int> greedy_decode(const Waveform& audio) const;
  std::vector<int> greedy_decode_tensor(const Tensor& audio) const;

  NamedParams parameters();
  NamedParams parameters() const;

  std::int64_t min_audio_samples() const { return config_.stft_window; }

 private:
  struct Gru {
    Tensor wz, wr, wn;  // input -> hidden
    Tensor uz, ur, un;  // hidden -> hidden
    Tensor bz, br, bn;
  };

  Tensor gru_sequence(const Tensor& inputs) const;  // [T, C] -> [T, hidden]
  Tensor gru_cell(const Gru& p, const Tensor& x, const Tensor& h) const;

  AsrConfig config_;
  Vocabulary vocab_;

  Tensor stft_cos_, stft_sin_;  // fixed conv kernels [n_bins, 1, window]
  Tensor mel_fb_;               // fixed [n_mels, n_bins]
  Tensor feat_norm_gain_, feat_norm_bias_;  // fixed unit/zero [n_mels]

  Tensor conv1_w_, conv1_b_;  // [C, n_mels, 3]
  Tensor conv2_w_, conv2_b_;  // [C, C, 3]
  Gru enc_gru_;               // conv channels -> hidden
  Tensor ctc_w_, ctc_b_;      // [hidden, V+1]

  Tensor embed_;              // [V+2, embed_dim]
  Gru dec_gru_;               // embed+hidden -> hidden
  Tensor out_w_, out_b_;      // [2*hidden, V+1]
};

}  // namespace sepasr

#endif  // SEPASR_ASR_HPP
