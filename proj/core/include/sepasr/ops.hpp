// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_OPS_HPP
#define SEPASR_OPS_HPP

#include <cstdint>
#include <vector>

#include "sepasr/tensor.hpp"

namespace sepasr {

// Elementwise and shape ops. Binary ops require identical shapes, except add,
// which also broadcasts a lower-rank operand over the leading extents of the
// other (bias rows, batch offsets).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
// out = s * x with a scalar tensor s (gradient flows into both).
Tensor scale(const Tensor& x, const Tensor& s);

// out[c, t] = x[c, t] + b[c] for x of shape [C, T] and b of shape [C].
Tensor add_channel_bias(const Tensor& x, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor prelu(const Tensor& x, const Tensor& alpha);  // alpha: scalar parameter
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor slice(const Tensor& x, int dim, std::int64_t start, std::int64_t len);
Tensor concat(const std::vector<Tensor>& xs, int dim);
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose2d(const Tensor& x);

// matmul over 2-D operands with optional transposes; affine is matmul plus a
// broadcast bias row and accepts a rank-1 input as a single row.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Row-wise log-softmax (rank 1 = one row), max-subtraction stabilized.
Tensor log_softmax(const Tensor& x);
Tensor softmax(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// 1-D convolution: input [C_in, T], kernel [C_out, C_in/groups, K].
// T' = floor((T + 2*padding - dilation*(K-1) - 1)/stride) + 1.
Tensor conv1d(const Tensor& input, const Tensor& kernel, std::int64_t stride,
              std::int64_t dilation, std::int64_t padding, std::int64_t groups = 1);

// Transposed 1-D convolution: input [C_in, T], kernel [C_in, C_out, K].
// T' = (T-1)*stride + K; adjoint of conv1d with the same stride.
Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel, std::int64_t stride);

// Global layer norm over all C*T entries of input [C, T]; gain/bias are [C].
Tensor global_layer_norm(const Tensor& input, const Tensor& gain, const Tensor& bias,
                         double eps);

// Capture the (mean, scale) statistics of every global_layer_norm call in
// order, then replay them on a later pass over the same layer sequence. Used
// by the TBPTT chunk pass (the chunk sees the full signal's statistics, so
// chunk-interior outputs stay consistent with the full forward) and by
// receptive-field probes. Replay with recording enabled saves the standard
// backward at the replayed statistics, which coincides bit-exactly with the
// natural backward whenever the replayed stats equal the input's own.
// Thread-local; Off by default.
enum class GlnStatsMode { Off, Record, Replay };
void gln_stats_set_mode(GlnStatsMode mode);
GlnStatsMode gln_stats_mode();
void gln_stats_clear();

struct GlnStatsSnapshot {
  GlnStatsMode mode = GlnStatsMode::Off;
  std::vector<std::pair<double, double>> stats;
  std::size_t cursor = 0;
};
// Swaps the whole thread-local hook state; callers restore on scope exit so
// nested uses cannot interfere.
GlnStatsSnapshot gln_stats_swap(GlnStatsSnapshot snapshot);

// CTC negative log-likelihood over log-probability rows [T, C] for the given
// label sequence (labels index classes, `blank` excluded). Log-space
// forward-backward over the blank-extended label lattice.
Tensor ctc_loss(const Tensor& log_probs, const std::vector<int>& labels, int blank);

// Frames required for any feasible CTC alignment of `labels`.
std::int64_t ctc_min_frames(const std::vector<int>& labels);

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<int> greedy_ctc_decode(const std::vector<double>& log_probs, std::int64_t frames,
                                   std::int64_t classes, int blank);

}  // namespace sepasr

#endif  // SEPASR_OPS_HPP
