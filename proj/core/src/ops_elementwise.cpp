// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "sepasr/ops.hpp"

namespace sepasr {

namespace {

using detail::grad_buf;
using detail::make_op;
using detail::Node;

std::int64_t bytes_of(const Tensor& t) { return t.numel() * static_cast<std::int64_t>(sizeof(double)); }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(Error::Kind::Shape, op, ": operand shapes differ: ", shape_str(a.shape()), " vs ",
         shape_str(b.shape()));
  }
}

// True when b's shape equals the trailing extents of a's shape, so b
// broadcasts over a's leading extents.
bool is_leading_broadcast(const Shape& a, const Shape& b) {
  if (b.size() >= a.size()) return false;
  return std::equal(b.begin(), b.end(), a.end() - static_cast<std::ptrdiff_t>(b.size()));
}

template <typename Fwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd&& fwd,
                const std::function<std::function<void(Node&)>()>& make_backward,
                std::int64_t saved_bytes) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return make_op(name, x.shape(), std::move(out), {x}, make_backward, saved_bytes);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& av = a.values();
  const auto& bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(
        "add", a.shape(), std::move(out), {a, b},
        [pa, pb]() {
          return [pa, pb](Node& self) {
            const auto& g = self.grad;
            if (pa->on_grad_path) {
              auto& ga = grad_buf(*pa);
              for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (pb->on_grad_path) {
              auto& gb = grad_buf(*pb);
              for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
          };
        },
        0);
  }
  if (is_leading_broadcast(a.shape(), b.shape())) {
    const std::int64_t inner = b.numel();
    const std::int64_t rows = a.numel() / std::max<std::int64_t>(inner, 1);
    std::vector<double> out(av.size());
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t i = 0; i < inner; ++i) {
        out[static_cast<std::size_t>(r * inner + i)] =
            av[static_cast<std::size_t>(r * inner + i)] + bv[static_cast<std::size_t>(i)];
      }
    }
    auto pa = a.node();
    auto pb = b.node();
    return make_op(
        "add", a.shape(), std::move(out), {a, b},
        [pa, pb, rows, inner]() {
          return [pa, pb, rows, inner](Node& self) {
            const auto& g = self.grad;
            if (pa->on_grad_path) {
              auto& ga = grad_buf(*pa);
              for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (pb->on_grad_path) {
              auto& gb = grad_buf(*pb);
              for (std::int64_t r = 0; r < rows; ++r) {
                for (std::int64_t i = 0; i < inner; ++i) {
                  gb[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(r * inner + i)];
                }
              }
            }
          };
        },
        0);
  }
  fail(Error::Kind::Shape, "add: shapes ", shape_str(a.shape()), " and ", shape_str(b.shape()),
       " neither match nor broadcast over a leading extent");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_op(
      "sub", a.shape(), std::move(out), {a, b},
      [pa, pb]() {
        return [pa, pb](Node& self) {
          const auto& g = self.grad;
          if (pa->on_grad_path) {
            auto& ga = grad_buf(*pa);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
          }
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
          }
        };
      },
      0);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  auto pa = a.node();
  auto pb = b.node();
  auto va = a.node()->values;
  auto vb = b.node()->values;
  return make_op(
      "mul", a.shape(), std::move(out), {a, b},
      [pa, pb, va, vb]() {
        return [pa, pb, va, vb](Node& self) {
          const auto& g = self.grad;
          if (pa->on_grad_path) {
            auto& ga = grad_buf(*pa);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*vb)[i];
          }
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (*va)[i];
          }
        };
      },
      bytes_of(a) + bytes_of(b));
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape("div", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
  auto pa = a.node();
  auto pb = b.node();
  auto va = a.node()->values;
  auto vb = b.node()->values;
  return make_op(
      "div", a.shape(), std::move(out), {a, b},
      [pa, pb, va, vb]() {
        return [pa, pb, va, vb](Node& self) {
          const auto& g = self.grad;
          if (pa->on_grad_path) {
            auto& ga = grad_buf(*pa);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (*vb)[i];
          }
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            for (std::size_t i = 0; i < g.size(); ++i) {
              gb[i] -= g[i] * (*va)[i] / ((*vb)[i] * (*vb)[i]);
            }
          }
        };
      },
      bytes_of(a) + bytes_of(b));
}

Tensor neg(const Tensor& x) {
  return unary_op(
      "neg", x, [](double v) { return -v; },
      [p = x.node()]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        };
      },
      0);
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary_op(
      "add_scalar", x, [c](double v) { return v + c; },
      [p = x.node()]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        };
      },
      0);
}

Tensor mul_scalar(const Tensor& x, double c) {
  return unary_op(
      "mul_scalar", x, [c](double v) { return v * c; },
      [p = x.node(), c]() {
        return [p, c](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += c * self.grad[i];
        };
      },
      0);
}

Tensor scale(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) {
    fail(Error::Kind::Shape, "scale: scale factor must be a scalar tensor, got shape ",
         shape_str(s.shape()));
  }
  const double sv = s.values()[0];
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = sv * xv[i];
  auto px = x.node();
  auto ps = s.node();
  auto vx = x.node()->values;
  return make_op(
      "scale", x.shape(), std::move(out), {x, s},
      [px, ps, vx, sv]() {
        return [px, ps, vx, sv](Node& self) {
          const auto& g = self.grad;
          if (px->on_grad_path) {
            auto& gx = grad_buf(*px);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += sv * g[i];
          }
          if (ps->on_grad_path) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * (*vx)[i];
            grad_buf(*ps)[0] += acc;
          }
        };
      },
      bytes_of(x));
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  if (x.rank() != 2 || b.rank() != 1 || b.dim(0) != x.dim(0)) {
    fail(Error::Kind::Shape, "add_channel_bias: need x [C, T] and b [C], got ",
         shape_str(x.shape()), " and ", shape_str(b.shape()));
  }
  const std::int64_t c = x.dim(0), t = x.dim(1);
  const auto& xv = x.values();
  const auto& bv = b.values();
  std::vector<double> out(xv.size());
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const double bias = bv[static_cast<std::size_t>(ci)];
    for (std::int64_t ti = 0; ti < t; ++ti) {
      const std::size_t i = static_cast<std::size_t>(ci * t + ti);
      out[i] = xv[i] + bias;
    }
  }
  auto px = x.node();
  auto pb = b.node();
  return make_op(
      "add_channel_bias", x.shape(), std::move(out), {x, b},
      [px, pb, c, t]() {
        return [px, pb, c, t](Node& self) {
          const auto& g = self.grad;
          if (px->on_grad_path) {
            auto& gx = grad_buf(*px);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
          }
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            for (std::int64_t ci = 0; ci < c; ++ci) {
              double acc = 0.0;
              for (std::int64_t ti = 0; ti < t; ++ti) {
                acc += g[static_cast<std::size_t>(ci * t + ti)];
              }
              gb[static_cast<std::size_t>(ci)] += acc;
            }
          }
        };
      },
      0);
}

Tensor relu(const Tensor& x) {
  auto vx = x.node()->values;
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [p = x.node(), vx]() {
        return [p, vx](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if ((*vx)[i] > 0.0) g[i] += self.grad[i];
          }
        };
      },
      bytes_of(x));
}

Tensor prelu(const Tensor& x, const Tensor& alpha) {
  if (alpha.numel() != 1) {
    fail(Error::Kind::Shape, "prelu: alpha must be a scalar tensor, got shape ",
         shape_str(alpha.shape()));
  }
  const double a = alpha.values()[0];
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : a * xv[i];
  auto px = x.node();
  auto pa = alpha.node();
  auto vx = x.node()->values;
  return make_op(
      "prelu", x.shape(), std::move(out), {x, alpha},
      [px, pa, vx, a]() {
        return [px, pa, vx, a](Node& self) {
          const auto& g = self.grad;
          if (px->on_grad_path) {
            auto& gx = grad_buf(*px);
            for (std::size_t i = 0; i < g.size(); ++i) {
              gx[i] += g[i] * ((*vx)[i] > 0.0 ? 1.0 : a);
            }
          }
          if (pa->on_grad_path) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
              if ((*vx)[i] <= 0.0) acc += g[i] * (*vx)[i];
            }
            grad_buf(*pa)[0] += acc;
          }
        };
      },
      bytes_of(x));
}

Tensor sigmoid(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  auto p = x.node();
  // Backward reads the op's own output (self.values), counted as retained.
  return make_op(
      "sigmoid", x.shape(), std::move(out), {x},
      [p]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          const auto& y = *self.values;
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[i] += self.grad[i] * y[i] * (1.0 - y[i]);
          }
        };
      },
      bytes_of(x));
}

Tensor tanh(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  auto p = x.node();
  return make_op(
      "tanh", x.shape(), std::move(out), {x},
      [p]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          const auto& y = *self.values;
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[i] += self.grad[i] * (1.0 - y[i] * y[i]);
          }
        };
      },
      bytes_of(x));
}

Tensor exp(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::exp(xv[i]);
  auto p = x.node();
  return make_op(
      "exp", x.shape(), std::move(out), {x},
      [p]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          const auto& y = *self.values;
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y[i];
        };
      },
      bytes_of(x));
}

Tensor log(const Tensor& x) {
  auto vx = x.node()->values;
  return unary_op(
      "log", x, [](double v) { return std::log(v); },
      [p = x.node(), vx]() {
        return [p, vx](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / (*vx)[i];
        };
      },
      bytes_of(x));
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) fail(Error::Kind::Usage, "clamp: lo ", lo, " exceeds hi ", hi);
  auto vx = x.node()->values;
  return unary_op(
      "clamp", x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [p = x.node(), vx, lo, hi]() {
        return [p, vx, lo, hi](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double v = (*vx)[i];
            if (v > lo && v < hi) g[i] += self.grad[i];
          }
        };
      },
      bytes_of(x));
}

namespace {

std::vector<std::int64_t> row_strides(const Shape& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i) {
    strides[static_cast<std::size_t>(i)] =
        strides[static_cast<std::size_t>(i + 1)] * shape[static_cast<std::size_t>(i + 1)];
  }
  return strides;
}

}  // namespace

Tensor slice(const Tensor& x, int dim, std::int64_t start, std::int64_t len) {
  const Shape& shape = x.shape();
  if (dim < 0 || dim >= static_cast<int>(shape.size())) {
    fail(Error::Kind::Shape, "slice: dim ", dim, " out of range for shape ", shape_str(shape));
  }
  const std::int64_t extent = shape[static_cast<std::size_t>(dim)];
  if (start < 0 || len < 0 || start + len > extent) {
    fail(Error::Kind::Shape, "slice: range [", start, ", ", start + len,
         ") exceeds extent ", extent, " of dim ", dim);
  }
  Shape out_shape = shape;
  out_shape[static_cast<std::size_t>(dim)] = len;

  // Copy [outer, len, inner] block out of [outer, extent, inner].
  const auto strides = row_strides(shape);
  const std::int64_t inner = strides[static_cast<std::size_t>(dim)];
  const std::int64_t outer = x.numel() / (extent * inner);
  const auto& xv = x.values();
  std::vector<double> out(static_cast<std::size_t>(shape_numel(out_shape)));
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = xv.data() + (o * extent + start) * inner;
    double* dst = out.data() + o * len * inner;
    std::memcpy(dst, src, static_cast<std::size_t>(len * inner) * sizeof(double));
  }
  auto p = x.node();
  return make_op(
      "slice", std::move(out_shape), std::move(out), {x},
      [p, outer, inner, len, extent, start]() {
        return [p, outer, inner, len, extent, start](Node& self) {
          auto& g = grad_buf(*p);
          const auto& gs = self.grad;
          for (std::int64_t o = 0; o < outer; ++o) {
            const double* src = gs.data() + o * len * inner;
            double* dst = g.data() + (o * extent + start) * inner;
            for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
          }
        };
      },
      0);
}

Tensor concat(const std::vector<Tensor>& xs, int dim) {
  if (xs.empty()) fail(Error::Kind::Usage, "concat: no operands");
  const Shape& first = xs[0].shape();
  if (dim < 0 || dim >= static_cast<int>(first.size())) {
    fail(Error::Kind::Shape, "concat: dim ", dim, " out of range for shape ", shape_str(first));
  }
  std::int64_t total = 0;
  for (const auto& x : xs) {
    const Shape& s = x.shape();
    if (s.size() != first.size()) {
      fail(Error::Kind::Shape, "concat: rank mismatch: ", shape_str(first), " vs ", shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (static_cast<int>(d) != dim && s[d] != first[d]) {
        fail(Error::Kind::Shape, "concat: extent mismatch at dim ", d, ": ", shape_str(first),
             " vs ", shape_str(s));
      }
    }
    total += s[static_cast<std::size_t>(dim)];
  }
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(dim)] = total;

  const auto strides = row_strides(out_shape);
  const std::int64_t inner = strides[static_cast<std::size_t>(dim)];
  const std::int64_t outer = shape_numel(out_shape) / (total * inner);
  std::vector<double> out(static_cast<std::size_t>(shape_numel(out_shape)));
  std::vector<std::int64_t> offsets;  // start of each operand along dim
  {
    std::int64_t off = 0;
    for (const auto& x : xs) {
      offsets.push_back(off);
      const std::int64_t ext = x.shape()[static_cast<std::size_t>(dim)];
      const auto& xv = x.values();
      for (std::int64_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + (o * total + off) * inner, xv.data() + o * ext * inner,
                    static_cast<std::size_t>(ext * inner) * sizeof(double));
      }
      off += ext;
    }
  }
  std::vector<detail::NodePtr> nodes;
  std::vector<std::int64_t> extents;
  for (const auto& x : xs) {
    nodes.push_back(x.node());
    extents.push_back(x.shape()[static_cast<std::size_t>(dim)]);
  }
  return make_op(
      "concat", std::move(out_shape), std::move(out), xs,
      [nodes, extents, offsets, outer, inner, total]() {
        return [nodes, extents, offsets, outer, inner, total](Node& self) {
          const auto& gs = self.grad;
          for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i]->on_grad_path) continue;
            auto& g = grad_buf(*nodes[i]);
            const std::int64_t ext = extents[i];
            const std::int64_t off = offsets[i];
            for (std::int64_t o = 0; o < outer; ++o) {
              const double* src = gs.data() + (o * total + off) * inner;
              double* dst = g.data() + o * ext * inner;
              for (std::int64_t k = 0; k < ext * inner; ++k) dst[k] += src[k];
            }
          }
        };
      },
      0);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    fail(Error::Kind::Shape, "reshape: cannot view ", shape_str(x.shape()), " as ",
         shape_str(shape));
  }
  std::vector<double> out = x.values();
  auto p = x.node();
  return make_op(
      "reshape", std::move(shape), std::move(out), {x},
      [p]() {
        return [p](Node& self) {
          auto& g = grad_buf(*p);
          for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        };
      },
      0);
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2) {
    fail(Error::Kind::Shape, "transpose2d: expected rank-2 tensor, got ", shape_str(x.shape()));
  }
  const std::int64_t r = x.dim(0), c = x.dim(1);
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < c; ++j) {
      out[static_cast<std::size_t>(j * r + i)] = xv[static_cast<std::size_t>(i * c + j)];
    }
  }
  auto p = x.node();
  return make_op(
      "transpose2d", {c, r}, std::move(out), {x},
      [p, r, c]() {
        return [p, r, c](Node& self) {
          auto& g = grad_buf(*p);
          const auto& gs = self.grad;
          for (std::int64_t j = 0; j < c; ++j) {
            for (std::int64_t i = 0; i < r; ++i) {
              g[static_cast<std::size_t>(i * c + j)] += gs[static_cast<std::size_t>(j * r + i)];
            }
          }
        };
      },
      0);
}

Tensor log_softmax(const Tensor& x) {
  if (x.rank() < 1 || x.rank() > 2) {
    fail(Error::Kind::Shape, "log_softmax: expected rank 1 or 2, got ", shape_str(x.shape()));
  }
  const std::int64_t cols = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / cols;
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * cols;
    double* orow = out.data() + r * cols;
    double mx = row[0];
    for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) z += std::exp(row[j] - mx);
    const double logz = mx + std::log(z);
    for (std::int64_t j = 0; j < cols; ++j) orow[j] = row[j] - logz;
  }
  auto p = x.node();
  return make_op(
      "log_softmax", x.shape(), std::move(out), {x},
      [p, rows, cols]() {
        return [p, rows, cols](Node& self) {
          auto& g = grad_buf(*p);
          const auto& gs = self.grad;
          const auto& y = *self.values;
          for (std::int64_t r = 0; r < rows; ++r) {
            double gsum = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) gsum += gs[static_cast<std::size_t>(r * cols + j)];
            for (std::int64_t j = 0; j < cols; ++j) {
              const std::size_t i = static_cast<std::size_t>(r * cols + j);
              g[i] += gs[i] - std::exp(y[i]) * gsum;
            }
          }
        };
      },
      bytes_of(x));
}

Tensor softmax(const Tensor& x) { return exp(log_softmax(x)); }

Tensor sum(const Tensor& x) {
  const auto& xv = x.values();
  double acc = 0.0;
  for (double v : xv) acc += v;
  auto p = x.node();
  return make_op(
      "sum", Shape{}, {acc}, {x},
      [p]() {
        return [p](Node& self) {
          const double g = self.grad[0];
          auto& gp = grad_buf(*p);
          for (auto& v : gp) v += g;
        };
      },
      0);
}

Tensor mean(const Tensor& x) {
  const std::int64_t n = x.numel();
  if (n == 0) fail(Error::Kind::Shape, "mean of an empty tensor");
  const auto& xv = x.values();
  double acc = 0.0;
  for (double v : xv) acc += v;
  auto p = x.node();
  const double inv = 1.0 / static_cast<double>(n);
  return make_op(
      "mean", Shape{}, {acc * inv}, {x},
      [p, inv]() {
        return [p, inv](Node& self) {
          const double g = self.grad[0] * inv;
          auto& gp = grad_buf(*p);
          for (auto& v : gp) v += g;
        };
      },
      0);
}

}  // namespace sepasr
