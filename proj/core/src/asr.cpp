// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/asr.hpp"

#include <cmath>
#include <numbers>

#include "sepasr/random.hpp"

namespace sepasr {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor init_uniform(Shape shape, std::int64_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::param_uniform(shape, rng, -bound, bound);
}

}  // namespace

void AsrConfig::validate() const {
  if (n_mels < 2) fail(Error::Kind::Config, "asr: n_mels must be >= 2, got ", n_mels);
  if (stft_window < 4 || stft_hop < 1 || stft_hop > stft_window) {
    fail(Error::Kind::Config, "asr: bad stft window/hop (", stft_window, ", ", stft_hop, ")");
  }
  if (subsample != 1 && subsample != 2 && subsample != 4) {
    fail(Error::Kind::Config, "asr: subsample must be 1, 2 or 4, got ", subsample);
  }
  if (conv_channels < 1 || hidden < 1 || embed_dim < 1) {
    fail(Error::Kind::Config, "asr: conv_channels, hidden, embed_dim must be >= 1");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    fail(Error::Kind::Config, "asr: lambda must be within [0, 1], got ", lambda);
  }
  if (!(log_eps > 0.0)) fail(Error::Kind::Config, "asr: log_eps must be > 0");
  if (sample_rate <= 0) fail(Error::Kind::Config, "asr: sample_rate must be positive");
}

AsrModel::AsrModel(AsrConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  auto rng = make_rng(seed, "asr-init");
  const auto& c = config_;
  const std::int64_t bins = c.stft_window / 2 + 1;

  // Fixed Hann-windowed DFT kernels; constants, not parameters.
  {
    std::vector<double> wcos(static_cast<std::size_t>(bins * c.stft_window));
    std::vector<double> wsin(static_cast<std::size_t>(bins * c.stft_window));
    for (std::int64_t b = 0; b < bins; ++b) {
      for (std::int64_t n = 0; n < c.stft_window; ++n) {
        const double hann =
            0.5 - 0.5 * std::cos(kTau * static_cast<double>(n) / static_cast<double>(c.stft_window));
        const double arg = kTau * static_cast<double>(b) * static_cast<double>(n) /
                           static_cast<double>(c.stft_window);
        wcos[static_cast<std::size_t>(b * c.stft_window + n)] = hann * std::cos(arg);
        wsin[static_cast<std::size_t>(b * c.stft_window + n)] = hann * std::sin(arg);
      }
    }
    stft_cos_ = Tensor::constant(std::move(wcos), {bins, 1, c.stft_window});
    stft_sin_ = Tensor::constant(std::move(wsin), {bins, 1, c.stft_window});
  }

  // Triangular mel filters between 0 Hz and Nyquist.
  {
    const double mel_hi = hz_to_mel(static_cast<double>(c.sample_rate) / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(c.n_mels + 2));
    for (std::int64_t m = 0; m < c.n_mels + 2; ++m) {
      edges[static_cast<std::size_t>(m)] =
          mel_to_hz(mel_hi * static_cast<double>(m) / static_cast<double>(c.n_mels + 1));
    }
    std::vector<double> fb(static_cast<std::size_t>(c.n_mels * bins), 0.0);
    for (std::int64_t m = 0; m < c.n_mels; ++m) {
      const double lo = edges[static_cast<std::size_t>(m)];
      const double mid = edges[static_cast<std::size_t>(m + 1)];
      const double hi = edges[static_cast<std::size_t>(m + 2)];
      for (std::int64_t b = 0; b < bins; ++b) {
        const double hz = static_cast<double>(b) * static_cast<double>(c.sample_rate) /
                          static_cast<double>(c.stft_window);
        double w = 0.0;
        if (hz > lo && hz < mid) {
          w = (hz - lo) / (mid - lo);
        } else if (hz >= mid && hz < hi) {
          w = (hi - hz) / (hi - mid);
        }
        fb[static_cast<std::size_t>(m * bins + b)] = w;
      }
    }
    mel_fb_ = Tensor::constant(std::move(fb), {c.n_mels, bins});
  }

  feat_norm_gain_ = Tensor::constant(std::vector<double>(c.n_mels, 1.0), {c.n_mels});
  feat_norm_bias_ = Tensor::constant(std::vector<double>(c.n_mels, 0.0), {c.n_mels});
  conv1_w_ = init_uniform({c.conv_channels, c.n_mels, 3}, c.n_mels * 3, rng);
  conv1_b_ = Tensor::param(std::vector<double>(c.conv_channels, 0.0), {c.conv_channels});
  conv2_w_ = init_uniform({c.conv_channels, c.conv_channels, 3}, c.conv_channels * 3, rng);
  conv2_b_ = Tensor::param(std::vector<double>(c.conv_channels, 0.0), {c.conv_channels});

  auto make_gru = [&](std::int64_t in, std::int64_t hid) {
    Gru g;
    g.wz = init_uniform({in, hid}, in, rng);
    g.wr = init_uniform({in, hid}, in, rng);
    g.wn = init_uniform({in, hid}, in, rng);
    g.uz = init_uniform({hid, hid}, hid, rng);
    g.ur = init_uniform({hid, hid}, hid, rng);
    g.un = init_uniform({hid, hid}, hid, rng);
    g.bz = Tensor::param(std::vector<double>(hid, 0.0), {hid});
    g.br = Tensor::param(std::vector<double>(hid, 0.0), {hid});
    g.bn = Tensor::param(std::vector<double>(hid, 0.0), {hid});
    return g;
  };
  enc_gru_ = make_gru(c.conv_channels, c.hidden);
  ctc_w_ = init_uniform({c.hidden, vocab_.ctc_classes()}, c.hidden, rng);
  ctc_b_ = Tensor::param(std::vector<double>(vocab_.ctc_classes(), 0.0),
                         {vocab_.ctc_classes()});

  embed_ = init_uniform({vocab_.att_embed_entries(), c.embed_dim}, c.embed_dim, rng);
  dec_gru_ = make_gru(c.embed_dim + c.hidden, c.hidden);
  // Zero-initialized output layer: the untrained decoder predicts the uniform
  // distribution over its classes.
  out_w_ = Tensor::param(
      std::vector<double>(static_cast<std::size_t>(2 * c.hidden * vocab_.att_classes()), 0.0),
      {2 * c.hidden, vocab_.att_classes()});
  out_b_ = Tensor::param(std::vector<double>(vocab_.att_classes(), 0.0), {vocab_.att_classes()});
}

Tensor AsrModel::logmel(const Tensor& audio) const {
  if (audio.rank() != 1) {
    fail(Error::Kind::Shape, "logmel: expected 1-D waveform tensor, got ",
         shape_str(audio.shape()));
  }
  if (audio.dim(0) < config_.stft_window) {
    fail(Error::Kind::Data, "logmel: input length ", audio.dim(0),
         " shorter than the analysis window ", config_.stft_window);
  }
  Tensor x = reshape(audio, {1, audio.dim(0)});
  Tensor re = conv1d(x, stft_cos_, config_.stft_hop, 1, 0);
  Tensor im = conv1d(x, stft_sin_, config_.stft_hop, 1, 0);
  Tensor psd = add(mul(re, re), mul(im, im));            // [bins, Tf]
  Tensor mel = matmul(mel_fb_, psd);                     // [n_mels, Tf]
  return log(add_scalar(mel, config_.log_eps));
}

Tensor AsrModel::gru_cell(const Gru& p, const Tensor& x, const Tensor& h) const {
  Tensor z = sigmoid(add(affine(x, p.wz, p.bz), affine(h, p.uz, Tensor())));
  Tensor r = sigmoid(add(affine(x, p.wr, p.br), affine(h, p.ur, Tensor())));
  Tensor n = tanh(add(affine(x, p.wn, p.bn), mul(r, affine(h, p.un, Tensor()))));
  Tensor one_minus_z = add_scalar(neg(z), 1.0);
  return add(mul(one_minus_z, n), mul(z, h));
}

Tensor AsrModel::gru_sequence(const Tensor& inputs) const {
  const std::int64_t frames = inputs.dim(0);
  Tensor h = Tensor::zeros({config_.hidden});
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t t = 0; t < frames; ++t) {
    Tensor x = reshape(slice(inputs, 0, t, 1), {inputs.dim(1)});
    h = gru_cell(enc_gru_, x, h);
    rows.push_back(reshape(h, {1, config_.hidden}));
  }
  return concat(rows, 0);
}

Tensor AsrModel::encode(const Tensor& audio) const {
  const auto& c = config_;
  Tensor feats = logmel(audio);  // [n_mels, Tf]
  // Per-utterance mean/variance normalization; raw log-mel values sit around
  // log(eps) in silence, which conditions the conv stack poorly.
  feats = global_layer_norm(feats, feat_norm_gain_, feat_norm_bias_, 1e-8);
  const std::int64_t s1 = c.subsample >= 2 ? 2 : 1;
  const std::int64_t s2 = c.subsample >= 4 ? 2 : 1;
  Tensor h = relu(add_channel_bias(conv1d(feats, conv1_w_, s1, 1, 1), conv1_b_));
  h = relu(add_channel_bias(conv1d(h, conv2_w_, s2, 1, 1), conv2_b_));
  return gru_sequence(transpose2d(h));  // [Tenc, hidden]
}

Tensor AsrModel::ctc_log_probs(const Tensor& enc) const {
  return log_softmax(affine(enc, ctc_w_, ctc_b_));
}

Tensor AsrModel::attention_loss(const Tensor& enc, const std::vector<int>& word_ids) const {
  if (word_ids.empty()) {
    fail(Error::Kind::Usage, "attention_loss: label sequence must be non-empty");
  }
  const auto& c = config_;
  const std::int64_t frames = enc.dim(0);

  // Teacher-forced inputs: sos then the gold words; targets: words then eos.
  std::vector<int> embed_in;
  embed_in.push_back(Vocabulary::kEmbedSos);
  for (int w : word_ids) embed_in.push_back(Vocabulary::word_to_embed(w));
  std::vector<int> targets;
  for (int w : word_ids) targets.push_back(Vocabulary::word_to_att(w));
  targets.push_back(Vocabulary::kAttEos);

  Tensor h = Tensor::zeros({c.hidden});
  Tensor ctx = Tensor::zeros({c.hidden});
  Tensor total;
  for (std::size_t step = 0; step < targets.size(); ++step) {
    Tensor emb = reshape(slice(embed_, 0, embed_in[step], 1), {c.embed_dim});
    Tensor inp = concat({emb, ctx}, 0);
    h = gru_cell(dec_gru_, inp, h);
    Tensor scores = reshape(matmul(enc, reshape(h, {c.hidden, 1})), {frames});
    Tensor alpha = softmax(scores);
    ctx = reshape(matmul(reshape(alpha, {1, frames}), enc), {c.hidden});
    Tensor logits = affine(concat({h, ctx}, 0), out_w_, out_b_);
    Tensor logp = log_softmax(logits);
    Tensor step_loss = neg(reshape(slice(logp, 0, targets[step], 1), Shape{}));
    total = total.defined() ? add(total, step_loss) : step_loss;
  }
  return total;
}

AsrModel::LossParts AsrModel::loss_parts(const Tensor& audio, const std::vector<int>& word_ids,
                                         double lambda) const {
  if (lambda < 0.0 || lambda > 1.0) {
    fail(Error::Kind::Usage, "asr loss: lambda must be within [0, 1], got ", lambda);
  }
  Tensor enc = encode(audio);
  LossParts parts;
  std::vector<int> ctc_labels;
  ctc_labels.reserve(word_ids.size());
  for (int w : word_ids) ctc_labels.push_back(Vocabulary::word_to_ctc(w));
  if (lambda > 0.0) {
    parts.ctc = ctc_loss(ctc_log_probs(enc), ctc_labels, Vocabulary::kCtcBlank);
  }
  if (lambda < 1.0) {
    parts.att = attention_loss(enc, word_ids);
  }
  if (lambda == 0.0) {
    parts.total = parts.att;
  } else if (lambda == 1.0) {
    parts.total = parts.ctc;
  } else {
    parts.total = add(mul_scalar(parts.ctc, lambda), mul_scalar(parts.att, 1.0 - lambda));
  }
  return parts;
}

Tensor AsrModel::loss(const Tensor& audio, const std::vector<int>& word_ids,
                      double lambda) const {
  return loss_parts(audio, word_ids, lambda).total;
}

std::vector<int> AsrModel::greedy_decode_tensor(const Tensor& audio) const {
  NoGradGuard no_grad;
  Tensor lp = ctc_log_probs(encode(audio));
  std::vector<int> ctc = greedy_ctc_decode(lp.values(), lp.dim(0), lp.dim(1),
                                           Vocabulary::kCtcBlank);
  std::vector<int> words;
  words.reserve(ctc.size());
  for (int c : ctc) words.push_back(Vocabulary::ctc_to_word(c));
  return words;
}

std::vector<int> AsrModel::greedy_decode(const Waveform& audio) const {
  return greedy_decode_tensor(Tensor::constant(audio.samples, {audio.size()}));
}

NamedParams AsrModel::parameters() {
  NamedParams p;
  p.emplace_back("backend.conv1.w", conv1_w_);
  p.emplace_back("backend.conv1.b", conv1_b_);
  p.emplace_back("backend.conv2.w", conv2_w_);
  p.emplace_back("backend.conv2.b", conv2_b_);
  auto add_gru = [&p](const std::string& base, Gru& g) {
    p.emplace_back(base + ".wz", g.wz);
    p.emplace_back(base + ".wr", g.wr);
    p.emplace_back(base + ".wn", g.wn);
    p.emplace_back(base + ".uz", g.uz);
    p.emplace_back(base + ".ur", g.ur);
    p.emplace_back(base + ".un", g.un);
    p.emplace_back(base + ".bz", g.bz);
    p.emplace_back(base + ".br", g.br);
    p.emplace_back(base + ".bn", g.bn);
  };
  add_gru("backend.enc_gru", enc_gru_);
  p.emplace_back("backend.ctc.w", ctc_w_);
  p.emplace_back("backend.ctc.b", ctc_b_);
  p.emplace_back("backend.embed", embed_);
  add_gru("backend.dec_gru", dec_gru_);
  p.emplace_back("backend.out.w", out_w_);
  p.emplace_back("backend.out.b", out_b_);
  return p;
}

NamedParams AsrModel::parameters() const {
  return const_cast<AsrModel*>(this)->parameters();
}

}  // namespace sepasr
