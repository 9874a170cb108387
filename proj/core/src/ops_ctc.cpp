// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <limits>

#include "sepasr/ops.hpp"

namespace sepasr {

namespace {

using detail::grad_buf;
using detail::make_op;
using detail::Node;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// Blank-extended label sequence: blank, l1, blank, l2, ..., blank.
std::vector<int> extend_labels(const std::vector<int>& labels, int blank) {
  std::vector<int> ext(2 * labels.size() + 1, blank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  return ext;
}

// alpha[t][u]: log-prob of prefixes ending in lattice state u at frame t,
// emission at frame t included.
std::vector<double> ctc_alpha(const std::vector<double>& lp, std::int64_t frames,
                              std::int64_t classes, const std::vector<int>& ext) {
  const std::int64_t states = static_cast<std::int64_t>(ext.size());
  std::vector<double> alpha(static_cast<std::size_t>(frames * states), kNegInf);
  auto lpat = [&](std::int64_t t, int k) { return lp[static_cast<std::size_t>(t * classes + k)]; };
  alpha[0] = lpat(0, ext[0]);
  if (states > 1) alpha[1] = lpat(0, ext[1]);
  for (std::int64_t t = 1; t < frames; ++t) {
    for (std::int64_t u = 0; u < states; ++u) {
      double best = alpha[static_cast<std::size_t>((t - 1) * states + u)];
      if (u >= 1) best = log_add(best, alpha[static_cast<std::size_t>((t - 1) * states + u - 1)]);
      if (u >= 2 && ext[static_cast<std::size_t>(u)] != ext[static_cast<std::size_t>(u - 2)] &&
          ext[static_cast<std::size_t>(u)] != ext[0]) {
        best = log_add(best, alpha[static_cast<std::size_t>((t - 1) * states + u - 2)]);
      }
      alpha[static_cast<std::size_t>(t * states + u)] =
          best == kNegInf ? kNegInf : best + lpat(t, ext[static_cast<std::size_t>(u)]);
    }
  }
  return alpha;
}

// beta[t][u]: log-prob of suffixes starting in state u at frame t, emission at
// frame t included (symmetric to alpha, so posteriors divide out one emission).
std::vector<double> ctc_beta(const std::vector<double>& lp, std::int64_t frames,
                             std::int64_t classes, const std::vector<int>& ext) {
  const std::int64_t states = static_cast<std::int64_t>(ext.size());
  std::vector<double> beta(static_cast<std::size_t>(frames * states), kNegInf);
  auto lpat = [&](std::int64_t t, int k) { return lp[static_cast<std::size_t>(t * classes + k)]; };
  beta[static_cast<std::size_t>((frames - 1) * states + states - 1)] =
      lpat(frames - 1, ext[static_cast<std::size_t>(states - 1)]);
  if (states > 1) {
    beta[static_cast<std::size_t>((frames - 1) * states + states - 2)] =
        lpat(frames - 1, ext[static_cast<std::size_t>(states - 2)]);
  }
  for (std::int64_t t = frames - 2; t >= 0; --t) {
    for (std::int64_t u = states - 1; u >= 0; --u) {
      double best = beta[static_cast<std::size_t>((t + 1) * states + u)];
      if (u + 1 < states) {
        best = log_add(best, beta[static_cast<std::size_t>((t + 1) * states + u + 1)]);
      }
      if (u + 2 < states &&
          ext[static_cast<std::size_t>(u)] != ext[static_cast<std::size_t>(u + 2)] &&
          ext[static_cast<std::size_t>(u + 2)] != ext[0]) {
        best = log_add(best, beta[static_cast<std::size_t>((t + 1) * states + u + 2)]);
      }
      beta[static_cast<std::size_t>(t * states + u)] =
          best == kNegInf ? kNegInf : best + lpat(t, ext[static_cast<std::size_t>(u)]);
    }
  }
  return beta;
}

}  // namespace

std::int64_t ctc_min_frames(const std::vector<int>& labels) {
  std::int64_t repeats = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++repeats;
  }
  return static_cast<std::int64_t>(labels.size()) + repeats;
}

Tensor ctc_loss(const Tensor& log_probs, const std::vector<int>& labels, int blank) {
  if (log_probs.rank() != 2) {
    fail(Error::Kind::Shape, "ctc_loss: log_probs must be [T, C], got ",
         shape_str(log_probs.shape()));
  }
  const std::int64_t frames = log_probs.dim(0);
  const std::int64_t classes = log_probs.dim(1);
  if (blank < 0 || blank >= classes) {
    fail(Error::Kind::Usage, "ctc_loss: blank index ", blank, " outside [0, ", classes, ")");
  }
  for (int l : labels) {
    if (l < 0 || l >= classes) {
      fail(Error::Kind::Usage, "ctc_loss: label ", l, " outside [0, ", classes, ")");
    }
    if (l == blank) fail(Error::Kind::Usage, "ctc_loss: labels must not contain the blank");
  }
  const std::int64_t need = ctc_min_frames(labels);
  if (frames < need) {
    fail(Error::Kind::Alignment, "ctc_loss: label sequence needs at least ", need,
         " frames but only ", frames, " are available");
  }

  const std::vector<int> ext = extend_labels(labels, blank);
  const std::int64_t states = static_cast<std::int64_t>(ext.size());
  const auto& lp = log_probs.values();
  const std::vector<double> alpha = ctc_alpha(lp, frames, classes, ext);
  double log_z = alpha[static_cast<std::size_t>((frames - 1) * states + states - 1)];
  if (states > 1) {
    log_z = log_add(log_z, alpha[static_cast<std::size_t>((frames - 1) * states + states - 2)]);
  }
  if (log_z == kNegInf) {
    fail(Error::Kind::Alignment, "ctc_loss: no feasible alignment has nonzero probability");
  }

  auto p = log_probs.node();
  auto vlp = log_probs.node()->values;
  const std::int64_t bytes = log_probs.numel() * static_cast<std::int64_t>(sizeof(double));
  return make_op(
      "ctc_loss", Shape{}, {-log_z}, {log_probs},
      [p, vlp, ext, frames, classes, log_z]() {
        return [p, vlp, ext, frames, classes, log_z](Node& self) {
          const double groot = self.grad[0];
          const std::int64_t states = static_cast<std::int64_t>(ext.size());
          const std::vector<double> alpha = ctc_alpha(*vlp, frames, classes, ext);
          const std::vector<double> beta = ctc_beta(*vlp, frames, classes, ext);
          auto& g = grad_buf(*p);
          // d(-logZ)/d lp[t][k] = -sum_{u: ext[u]=k} exp(alpha+beta - lp - logZ)
          for (std::int64_t t = 0; t < frames; ++t) {
            for (std::int64_t u = 0; u < states; ++u) {
              const std::size_t tu = static_cast<std::size_t>(t * states + u);
              if (alpha[tu] == kNegInf || beta[tu] == kNegInf) continue;
              const int k = ext[static_cast<std::size_t>(u)];
              const std::size_t tk = static_cast<std::size_t>(t * classes + k);
              const double post = std::exp(alpha[tu] + beta[tu] - (*vlp)[tk] - log_z);
              g[tk] -= groot * post;
            }
          }
        };
      },
      bytes);
}

std::vector<int> greedy_ctc_decode(const std::vector<double>& log_probs, std::int64_t frames,
                                   std::int64_t classes, int blank) {
  std::vector<int> out;
  int prev = blank;
  for (std::int64_t t = 0; t < frames; ++t) {
    const double* row = log_probs.data() + t * classes;
    int best = 0;
    for (std::int64_t k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = static_cast<int>(k);
    }
    if (best != blank && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace sepasr
