// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/separator.hpp"

#include <cmath>

#include "sepasr/random.hpp"

namespace sepasr {

void SeparatorConfig::validate() const {
  if (L < 2 || L % 2 != 0) fail(Error::Kind::Config, "separator: L must be even and >= 2, got ", L);
  if (N < 1 || B < 1 || H < 1) fail(Error::Kind::Config, "separator: N, B, H must be >= 1");
  if (P < 1) fail(Error::Kind::Config, "separator: P must be >= 1, got ", P);
  if (X < 1) fail(Error::Kind::Config, "separator: X must be >= 1, got ", X);
  if (R < 1) fail(Error::Kind::Config, "separator: R must be >= 1, got ", R);
  if (S < 2) fail(Error::Kind::Config, "separator: S must be >= 2, got ", S);
  if (P % 2 == 0) {
    fail(Error::Kind::Config, "separator: P must be odd for symmetric dilation padding, got ", P);
  }
  if (!(norm_eps > 0.0)) fail(Error::Kind::Config, "separator: norm_eps must be > 0");
}

std::int64_t receptive_field_frames(const SeparatorConfig& config) {
  config.validate();
  return 1 + config.R * (config.P - 1) * ((std::int64_t{1} << config.X) - 1);
}

std::int64_t receptive_field_samples(const SeparatorConfig& config) {
  return (receptive_field_frames(config) - 1) * config.stride() + config.L;
}

namespace {

Tensor conv_param(Shape shape, std::int64_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::param_uniform(shape, rng, -bound, bound);
}

}  // namespace

SeparatorModel::SeparatorModel(SeparatorConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  auto rng = make_rng(seed, "separator-init");
  const auto& c = config_;

  encoder_kernel_ = conv_param({c.N, 1, c.L}, c.L, rng);
  enc_norm_ = {Tensor::param(std::vector<double>(c.N, 1.0), {c.N}),
               Tensor::param(std::vector<double>(c.N, 0.0), {c.N})};
  bottleneck_ = {conv_param({c.B, c.N, 1}, c.N, rng),
                 Tensor::param(std::vector<double>(c.B, 0.0), {c.B})};
  for (std::int64_t r = 0; r < c.R; ++r) {
    for (std::int64_t x = 0; x < c.X; ++x) {
      Block blk;
      blk.dilation = std::int64_t{1} << x;
      blk.in = {conv_param({c.H, c.B, 1}, c.B, rng),
                Tensor::param(std::vector<double>(c.H, 0.0), {c.H})};
      blk.prelu1 = Tensor::param({0.25}, {});
      blk.norm1 = {Tensor::param(std::vector<double>(c.H, 1.0), {c.H}),
                   Tensor::param(std::vector<double>(c.H, 0.0), {c.H})};
      blk.dw_kernel = conv_param({c.H, 1, c.P}, c.P, rng);
      blk.prelu2 = Tensor::param({0.25}, {});
      blk.norm2 = {Tensor::param(std::vector<double>(c.H, 1.0), {c.H}),
                   Tensor::param(std::vector<double>(c.H, 0.0), {c.H})};
      blk.res = {conv_param({c.B, c.H, 1}, c.H, rng),
                 Tensor::param(std::vector<double>(c.B, 0.0), {c.B})};
      blk.skip = {conv_param({c.B, c.H, 1}, c.H, rng),
                  Tensor::param(std::vector<double>(c.B, 0.0), {c.B})};
      blocks_.push_back(std::move(blk));
    }
  }
  mask_prelu_ = Tensor::param({0.25}, {});
  mask_head_ = {conv_param({c.S * c.N, c.B, 1}, c.B, rng),
                Tensor::param(std::vector<double>(c.S * c.N, 0.0), {c.S * c.N})};
  decoder_kernel_ = conv_param({c.N, 1, c.L}, c.N, rng);
}

namespace {

// 1x1 conv with per-channel bias on [C, T].
Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_channel_bias(conv1d(x, w, 1, 1, 0), b);
}

}  // namespace

Tensor SeparatorModel::encode(const Tensor& x) const {
  if (x.rank() != 1) {
    fail(Error::Kind::Shape, "separator encode: expected 1-D waveform tensor, got ",
         shape_str(x.shape()));
  }
  if (x.dim(0) < config_.L) {
    fail(Error::Kind::Data, "separator encode: input length ", x.dim(0),
         " is shorter than the encoder window L=", config_.L);
  }
  Tensor frames = reshape(x, {1, x.dim(0)});
  return relu(conv1d(frames, encoder_kernel_, config_.stride(), 1, 0));
}

Tensor SeparatorModel::mask_network(const Tensor& latent) const {
  const auto& c = config_;
  Tensor y = global_layer_norm(latent, enc_norm_.gain, enc_norm_.bias, c.norm_eps);
  y = conv1x1(y, bottleneck_.w, bottleneck_.b);
  Tensor skip_acc;
  for (const auto& blk : blocks_) y = apply_block(blk, y, skip_acc);
  Tensor m = prelu(skip_acc, mask_prelu_);
  m = conv1x1(m, mask_head_.w, mask_head_.b);  // [S*N, F]
  return sigmoid(m);
}

Tensor SeparatorModel::apply_block(const Block& block, const Tensor& input,
                                   Tensor& skip_acc) const {
  const auto& c = config_;
  Tensor h = conv1x1(input, block.in.w, block.in.b);
  h = prelu(h, block.prelu1);
  h = global_layer_norm(h, block.norm1.gain, block.norm1.bias, c.norm_eps);
  const std::int64_t pad = block.dilation * (c.P - 1) / 2;
  h = conv1d(h, block.dw_kernel, 1, block.dilation, pad, c.H);  // depthwise
  h = prelu(h, block.prelu2);
  h = global_layer_norm(h, block.norm2.gain, block.norm2.bias, c.norm_eps);
  Tensor skip = conv1x1(h, block.skip.w, block.skip.b);
  skip_acc = skip_acc.defined() ? add(skip_acc, skip) : skip;
  Tensor res = conv1x1(h, block.res.w, block.res.b);
  return add(input, res);
}

Tensor SeparatorModel::separate_masks(const Tensor& latent) const {
  if (latent.rank() != 2 || latent.dim(0) != config_.N) {
    fail(Error::Kind::Shape, "separate_masks: expected latent [N, F] with N=", config_.N,
         ", got ", shape_str(latent.shape()));
  }
  Tensor m = mask_network(latent);
  return reshape(m, {config_.S, config_.N, latent.dim(1)});
}

Tensor SeparatorModel::decode(const Tensor& masked, std::int64_t out_len) const {
  if (masked.rank() != 2 || masked.dim(0) != config_.N) {
    fail(Error::Kind::Shape, "separator decode: expected [N, F] with N=", config_.N, ", got ",
         shape_str(masked.shape()));
  }
  const std::int64_t frames = masked.dim(1);
  const std::int64_t synth_len = (frames - 1) * config_.stride() + config_.L;
  if (out_len < 1 || out_len > synth_len || synth_len - out_len >= config_.L) {
    fail(Error::Kind::Shape, "separator decode: out_len ", out_len,
         " inconsistent with frame count ", frames, " (synthesis length ", synth_len, ")");
  }
  Tensor y = conv_transpose1d(masked, decoder_kernel_, config_.stride());  // [1, synth_len]
  Tensor flat = reshape(y, {synth_len});
  return out_len == synth_len ? flat : slice(flat, 0, 0, out_len);
}

namespace {

// Inputs are zero-padded at the tail so the strided analysis covers every
// sample; outputs are trimmed back to the input length.
Tensor pad_to_frames(const Tensor& x, std::int64_t window, std::int64_t stride) {
  const std::int64_t len = x.dim(0);
  const std::int64_t frames = len <= window ? 1 : (len - window + stride - 1) / stride + 1;
  const std::int64_t padded = (frames - 1) * stride + window;
  if (padded == len) return x;
  return concat({x, Tensor::zeros({padded - len})}, 0);
}

}  // namespace

std::vector<Tensor> SeparatorModel::forward(const Tensor& x) const {
  if (x.rank() != 1 || x.dim(0) < config_.L) {
    fail(Error::Kind::Data, "separator forward: input must be at least L=", config_.L,
         " samples, got ", shape_str(x.shape()));
  }
  Tensor xin = pad_to_frames(x, config_.L, config_.stride());
  Tensor latent = encode(xin);
  Tensor masks = separate_masks(latent);
  return forward_with_masks_latent(x, latent, masks);
}

std::vector<Tensor> SeparatorModel::forward_with_masks(const Tensor& x,
                                                       const Tensor& masks) const {
  if (x.rank() != 1 || x.dim(0) < config_.L) {
    fail(Error::Kind::Data, "separator forward: input must be at least L=", config_.L,
         " samples, got ", shape_str(x.shape()));
  }
  Tensor xin = pad_to_frames(x, config_.L, config_.stride());
  Tensor latent = encode(xin);
  return forward_with_masks_latent(x, latent, masks);
}

std::vector<Tensor> SeparatorModel::forward_with_masks_latent(const Tensor& x,
                                                              const Tensor& latent,
                                                              const Tensor& masks) const {
  const auto& c = config_;
  if (masks.rank() != 3 || masks.dim(0) != c.S || masks.dim(1) != c.N ||
      masks.dim(2) != latent.dim(1)) {
    fail(Error::Kind::Shape, "separator: masks must be [S, N, F] = [", c.S, ", ", c.N, ", ",
         latent.dim(1), "], got ", shape_str(masks.shape()));
  }
  const std::int64_t out_len = x.dim(0);
  std::vector<Tensor> outputs;
  outputs.reserve(static_cast<std::size_t>(c.S));
  for (std::int64_t s = 0; s < c.S; ++s) {
    Tensor mask_s = reshape(slice(masks, 0, s, 1), {c.N, latent.dim(1)});
    Tensor masked = mul(mask_s, latent);
    outputs.push_back(decode(masked, out_len));
  }
  return outputs;
}

NamedParams SeparatorModel::parameters() {
  NamedParams p;
  p.emplace_back("frontend.encoder.kernel", encoder_kernel_);
  p.emplace_back("frontend.enc_norm.gain", enc_norm_.gain);
  p.emplace_back("frontend.enc_norm.bias", enc_norm_.bias);
  p.emplace_back("frontend.bottleneck.w", bottleneck_.w);
  p.emplace_back("frontend.bottleneck.b", bottleneck_.b);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string base = "frontend.block" + std::to_string(i) + ".";
    auto& blk = blocks_[i];
    p.emplace_back(base + "in.w", blk.in.w);
    p.emplace_back(base + "in.b", blk.in.b);
    p.emplace_back(base + "prelu1", blk.prelu1);
    p.emplace_back(base + "norm1.gain", blk.norm1.gain);
    p.emplace_back(base + "norm1.bias", blk.norm1.bias);
    p.emplace_back(base + "dw.kernel", blk.dw_kernel);
    p.emplace_back(base + "prelu2", blk.prelu2);
    p.emplace_back(base + "norm2.gain", blk.norm2.gain);
    p.emplace_back(base + "norm2.bias", blk.norm2.bias);
    p.emplace_back(base + "res.w", blk.res.w);
    p.emplace_back(base + "res.b", blk.res.b);
    p.emplace_back(base + "skip.w", blk.skip.w);
    p.emplace_back(base + "skip.b", blk.skip.b);
  }
  p.emplace_back("frontend.mask.prelu", mask_prelu_);
  p.emplace_back("frontend.mask.w", mask_head_.w);
  p.emplace_back("frontend.mask.b", mask_head_.b);
  p.emplace_back("frontend.decoder.kernel", decoder_kernel_);
  return p;
}

NamedParams SeparatorModel::parameters() const {
  return const_cast<SeparatorModel*>(this)->parameters();
}

}  // namespace sepasr
