// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>

#include "sepasr/ops.hpp"

namespace sepasr {

namespace {

using detail::grad_buf;
using detail::make_op;
using detail::Node;

struct ConvDims {
  std::int64_t c_in, t_in, c_out, c_in_group, k, t_out, groups;
};

ConvDims check_conv(const Tensor& input, const Tensor& kernel, std::int64_t stride,
                    std::int64_t dilation, std::int64_t padding, std::int64_t groups) {
  if (input.rank() != 2) {
    fail(Error::Kind::Shape, "conv1d: input must be [C_in, T], got ", shape_str(input.shape()));
  }
  if (kernel.rank() != 3) {
    fail(Error::Kind::Shape, "conv1d: kernel must be [C_out, C_in/groups, K], got ",
         shape_str(kernel.shape()));
  }
  if (stride < 1 || dilation < 1 || padding < 0 || groups < 1) {
    fail(Error::Kind::Usage, "conv1d: stride/dilation must be >= 1 and padding >= 0 (stride=",
         stride, " dilation=", dilation, " padding=", padding, " groups=", groups, ")");
  }
  ConvDims d{};
  d.c_in = input.dim(0);
  d.t_in = input.dim(1);
  d.c_out = kernel.dim(0);
  d.c_in_group = kernel.dim(1);
  d.k = kernel.dim(2);
  d.groups = groups;
  if (d.k < 1) fail(Error::Kind::Shape, "conv1d: kernel length must be >= 1, got ", d.k);
  if (d.c_in % groups != 0 || d.c_out % groups != 0) {
    fail(Error::Kind::Shape, "conv1d: channel counts C_in=", d.c_in, ", C_out=", d.c_out,
         " not divisible by groups=", groups);
  }
  if (d.c_in_group != d.c_in / groups) {
    fail(Error::Kind::Shape, "conv1d: kernel dim 1 is ", d.c_in_group, ", expected C_in/groups = ",
         d.c_in / groups);
  }
  const std::int64_t span = dilation * (d.k - 1) + 1;
  if (d.t_in + 2 * padding < span) {
    fail(Error::Kind::Shape, "conv1d: input length ", d.t_in, " with padding ", padding,
         " is shorter than kernel span ", span, " (dim 1 too small)");
  }
  d.t_out = (d.t_in + 2 * padding - dilation * (d.k - 1) - 1) / stride + 1;
  return d;
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& kernel, std::int64_t stride,
              std::int64_t dilation, std::int64_t padding, std::int64_t groups) {
  const ConvDims d = check_conv(input, kernel, stride, dilation, padding, groups);
  const std::int64_t cg_out = d.c_out / d.groups;
  const auto& xv = input.values();
  const auto& kv = kernel.values();
  std::vector<double> out(static_cast<std::size_t>(d.c_out * d.t_out), 0.0);

  for (std::int64_t co = 0; co < d.c_out; ++co) {
    const std::int64_t g = co / cg_out;
    for (std::int64_t cl = 0; cl < d.c_in_group; ++cl) {
      const double* xrow = xv.data() + (g * d.c_in_group + cl) * d.t_in;
      const double* krow = kv.data() + (co * d.c_in_group + cl) * d.k;
      double* orow = out.data() + co * d.t_out;
      for (std::int64_t k = 0; k < d.k; ++k) {
        const double w = krow[k];
        if (w == 0.0) continue;
        const std::int64_t off = k * dilation - padding;
        // valid t range: 0 <= t*stride + off < t_in
        std::int64_t t_lo = off < 0 ? (-off + stride - 1) / stride : 0;
        std::int64_t t_hi = (d.t_in - 1 - off) / stride;  // inclusive
        t_hi = std::min(t_hi, d.t_out - 1);
        const double* xp = xrow + t_lo * stride + off;
        for (std::int64_t t = t_lo; t <= t_hi; ++t, xp += stride) orow[t] += w * (*xp);
      }
    }
  }

  auto px = input.node();
  auto pk = kernel.node();
  auto vx = input.node()->values;
  auto vk = kernel.node()->values;
  const std::int64_t bytes =
      (input.numel() + kernel.numel()) * static_cast<std::int64_t>(sizeof(double));
  return make_op(
      "conv1d", {d.c_out, d.t_out}, std::move(out), {input, kernel},
      [=]() {
        return [=](Node& self) {
          const auto& gs = self.grad;
          const bool need_x = px->on_grad_path;
          const bool need_k = pk->on_grad_path;
          std::vector<double>* gx = need_x ? &grad_buf(*px) : nullptr;
          std::vector<double>* gk = need_k ? &grad_buf(*pk) : nullptr;
          for (std::int64_t co = 0; co < d.c_out; ++co) {
            const std::int64_t g = co / cg_out;
            const double* grow = gs.data() + co * d.t_out;
            for (std::int64_t cl = 0; cl < d.c_in_group; ++cl) {
              const std::int64_t ci = g * d.c_in_group + cl;
              const double* xrow = vx->data() + ci * d.t_in;
              const double* krow = vk->data() + (co * d.c_in_group + cl) * d.k;
              for (std::int64_t k = 0; k < d.k; ++k) {
                const std::int64_t off = k * dilation - padding;
                std::int64_t t_lo = off < 0 ? (-off + stride - 1) / stride : 0;
                std::int64_t t_hi = std::min((d.t_in - 1 - off) / stride, d.t_out - 1);
                if (need_x) {
                  const double w = krow[k];
                  double* gxp = gx->data() + ci * d.t_in + t_lo * stride + off;
                  for (std::int64_t t = t_lo; t <= t_hi; ++t, gxp += stride) {
                    *gxp += w * grow[t];
                  }
                }
                if (need_k) {
                  double acc = 0.0;
                  const double* xp = xrow + t_lo * stride + off;
                  for (std::int64_t t = t_lo; t <= t_hi; ++t, xp += stride) {
                    acc += (*xp) * grow[t];
                  }
                  (*gk)[static_cast<std::size_t>((co * d.c_in_group + cl) * d.k + k)] += acc;
                }
              }
            }
          }
        };
      },
      bytes);
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel, std::int64_t stride) {
  if (input.rank() != 2) {
    fail(Error::Kind::Shape, "conv_transpose1d: input must be [C_in, T], got ",
         shape_str(input.shape()));
  }
  if (kernel.rank() != 3) {
    fail(Error::Kind::Shape, "conv_transpose1d: kernel must be [C_in, C_out, K], got ",
         shape_str(kernel.shape()));
  }
  if (stride < 1) fail(Error::Kind::Usage, "conv_transpose1d: stride must be >= 1, got ", stride);
  const std::int64_t c_in = input.dim(0);
  const std::int64_t t_in = input.dim(1);
  if (kernel.dim(0) != c_in) {
    fail(Error::Kind::Shape, "conv_transpose1d: kernel dim 0 is ", kernel.dim(0),
         ", expected C_in = ", c_in);
  }
  const std::int64_t c_out = kernel.dim(1);
  const std::int64_t k_len = kernel.dim(2);
  const std::int64_t t_out = (t_in - 1) * stride + k_len;

  const auto& xv = input.values();
  const auto& kv = kernel.values();
  std::vector<double> out(static_cast<std::size_t>(c_out * t_out), 0.0);
  for (std::int64_t ci = 0; ci < c_in; ++ci) {
    const double* xrow = xv.data() + ci * t_in;
    for (std::int64_t co = 0; co < c_out; ++co) {
      const double* krow = kv.data() + (ci * c_out + co) * k_len;
      double* orow = out.data() + co * t_out;
      for (std::int64_t t = 0; t < t_in; ++t) {
        const double xval = xrow[t];
        if (xval == 0.0) continue;
        double* op = orow + t * stride;
        for (std::int64_t k = 0; k < k_len; ++k) op[k] += xval * krow[k];
      }
    }
  }

  auto px = input.node();
  auto pk = kernel.node();
  auto vx = input.node()->values;
  auto vk = kernel.node()->values;
  const std::int64_t bytes =
      (input.numel() + kernel.numel()) * static_cast<std::int64_t>(sizeof(double));
  return make_op(
      "conv_transpose1d", {c_out, t_out}, std::move(out), {input, kernel},
      [=]() {
        return [=](Node& self) {
          const auto& gs = self.grad;
          const bool need_x = px->on_grad_path;
          const bool need_k = pk->on_grad_path;
          std::vector<double>* gx = need_x ? &grad_buf(*px) : nullptr;
          std::vector<double>* gk = need_k ? &grad_buf(*pk) : nullptr;
          for (std::int64_t ci = 0; ci < c_in; ++ci) {
            for (std::int64_t co = 0; co < c_out; ++co) {
              const double* krow = vk->data() + (ci * c_out + co) * k_len;
              const double* grow = gs.data() + co * t_out;
              const double* xrow = vx->data() + ci * t_in;
              for (std::int64_t t = 0; t < t_in; ++t) {
                const double* gp = grow + t * stride;
                if (need_x) {
                  double acc = 0.0;
                  for (std::int64_t k = 0; k < k_len; ++k) acc += krow[k] * gp[k];
                  (*gx)[static_cast<std::size_t>(ci * t_in + t)] += acc;
                }
                if (need_k) {
                  const double xval = xrow[t];
                  if (xval != 0.0) {
                    double* gkp = gk->data() + (ci * c_out + co) * k_len;
                    for (std::int64_t k = 0; k < k_len; ++k) gkp[k] += xval * gp[k];
                  }
                }
              }
            }
          }
        };
      },
      bytes);
}

namespace {

struct GlnStatsState {
  GlnStatsMode mode = GlnStatsMode::Off;
  std::vector<std::pair<double, double>> stats;  // (mean, scale) per call
  std::size_t cursor = 0;
};

GlnStatsState& gln_state() {
  thread_local GlnStatsState state;
  return state;
}

}  // namespace

void gln_stats_set_mode(GlnStatsMode mode) {
  gln_state().mode = mode;
  gln_state().cursor = 0;
}

GlnStatsMode gln_stats_mode() { return gln_state().mode; }

void gln_stats_clear() {
  gln_state().stats.clear();
  gln_state().cursor = 0;
  gln_state().mode = GlnStatsMode::Off;
}

GlnStatsSnapshot gln_stats_swap(GlnStatsSnapshot snapshot) {
  GlnStatsState& state = gln_state();
  GlnStatsSnapshot old{state.mode, std::move(state.stats), state.cursor};
  state.mode = snapshot.mode;
  state.stats = std::move(snapshot.stats);
  state.cursor = snapshot.cursor;
  return old;
}

Tensor global_layer_norm(const Tensor& input, const Tensor& gain, const Tensor& bias,
                         double eps) {
  if (input.rank() != 2) {
    fail(Error::Kind::Shape, "global_layer_norm: input must be [C, T], got ",
         shape_str(input.shape()));
  }
  const std::int64_t c = input.dim(0);
  const std::int64_t t = input.dim(1);
  if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
    fail(Error::Kind::Shape, "global_layer_norm: gain/bias must be [C] with C=", c, ", got ",
         shape_str(gain.shape()), " and ", shape_str(bias.shape()));
  }
  if (!(eps > 0.0)) fail(Error::Kind::Usage, "global_layer_norm: eps must be > 0, got ", eps);

  const auto& xv = input.values();
  const double n = static_cast<double>(c * t);
  double mu = 0.0;
  double r = 0.0;
  GlnStatsState& hook = gln_state();
  if (hook.mode == GlnStatsMode::Replay) {
    if (hook.cursor >= hook.stats.size()) {
      fail(Error::Kind::Usage, "global_layer_norm: replay has no recorded stats for call ",
           hook.cursor);
    }
    mu = hook.stats[hook.cursor].first;
    r = hook.stats[hook.cursor].second;
    ++hook.cursor;
  } else {
    for (double v : xv) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : xv) {
      const double dlt = v - mu;
      var += dlt * dlt;
    }
    var /= n;
    r = std::sqrt(var + eps);
    if (hook.mode == GlnStatsMode::Record) hook.stats.emplace_back(mu, r);
  }

  // Normalized activations are retained for backward.
  auto norm = std::make_shared<std::vector<double>>(xv.size());
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  std::vector<double> out(xv.size());
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) {
      const std::size_t i = static_cast<std::size_t>(ci * t + ti);
      const double y = (xv[i] - mu) / r;
      (*norm)[i] = y;
      out[i] = gv[static_cast<std::size_t>(ci)] * y + bv[static_cast<std::size_t>(ci)];
    }
  }

  auto px = input.node();
  auto pg = gain.node();
  auto pb = bias.node();
  auto vgain = gain.node()->values;
  const std::int64_t bytes =
      (input.numel() + gain.numel()) * static_cast<std::int64_t>(sizeof(double));
  return make_op(
      "global_layer_norm", input.shape(), std::move(out), {input, gain, bias},
      [=]() {
        return [=](Node& self) {
          const auto& gs = self.grad;
          const auto& y = *norm;
          const auto& gn = *vgain;
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            for (std::int64_t ci = 0; ci < c; ++ci) {
              double acc = 0.0;
              for (std::int64_t ti = 0; ti < t; ++ti) {
                acc += gs[static_cast<std::size_t>(ci * t + ti)];
              }
              gb[static_cast<std::size_t>(ci)] += acc;
            }
          }
          if (pg->on_grad_path) {
            auto& gg = grad_buf(*pg);
            for (std::int64_t ci = 0; ci < c; ++ci) {
              double acc = 0.0;
              for (std::int64_t ti = 0; ti < t; ++ti) {
                const std::size_t i = static_cast<std::size_t>(ci * t + ti);
                acc += gs[i] * y[i];
              }
              gg[static_cast<std::size_t>(ci)] += acc;
            }
          }
          if (px->on_grad_path) {
            // u = gain ⊙ g; dx = (u - mean(u) - y * mean(u ⊙ y)) / r
            double u_mean = 0.0, uy_mean = 0.0;
            for (std::int64_t ci = 0; ci < c; ++ci) {
              const double gc = gn[static_cast<std::size_t>(ci)];
              for (std::int64_t ti = 0; ti < t; ++ti) {
                const std::size_t i = static_cast<std::size_t>(ci * t + ti);
                const double u = gc * gs[i];
                u_mean += u;
                uy_mean += u * y[i];
              }
            }
            u_mean /= n;
            uy_mean /= n;
            auto& gx = grad_buf(*px);
            for (std::int64_t ci = 0; ci < c; ++ci) {
              const double gc = gn[static_cast<std::size_t>(ci)];
              for (std::int64_t ti = 0; ti < t; ++ti) {
                const std::size_t i = static_cast<std::size_t>(ci * t + ti);
                gx[i] += (gc * gs[i] - u_mean - y[i] * uy_mean) / r;
              }
            }
          }
        };
      },
      bytes);
}

}  // namespace sepasr
