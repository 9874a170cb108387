// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstring>

#include "sepasr/ops.hpp"

namespace sepasr {

namespace {

using detail::grad_buf;
using detail::make_op;
using detail::Node;

// C[m,n] += A[m,k] * B[k,n], with optional transposes on logical operands.
// a has physical shape (ar, ac); logical A is a or a^T per ta. Likewise b.
void gemm_acc(const double* a, std::int64_t ar, std::int64_t ac, bool ta, const double* b,
              std::int64_t br, std::int64_t bc, bool tb, double* c, std::int64_t m,
              std::int64_t n, std::int64_t k) {
  (void)br;
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = ta ? a[p * ac + i] : a[i * ac + p];
      if (av == 0.0) continue;
      const double* brow = tb ? nullptr : b + p * bc;
      double* crow = c + i * n;
      if (!tb) {
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        // logical B[p, j] = b[j * bc + p]
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * b[j * bc + p];
      }
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.rank() != 2 || b.rank() != 2) {
    fail(Error::Kind::Shape, "matmul: expected rank-2 operands, got ", shape_str(a.shape()),
         " and ", shape_str(b.shape()));
  }
  const std::int64_t ar = a.dim(0), ac = a.dim(1);
  const std::int64_t br = b.dim(0), bc = b.dim(1);
  const std::int64_t m = trans_a ? ac : ar;
  const std::int64_t ka = trans_a ? ar : ac;
  const std::int64_t kb = trans_b ? bc : br;
  const std::int64_t n = trans_b ? br : bc;
  if (ka != kb) {
    fail(Error::Kind::Shape, "matmul: inner extents differ: ", ka, " vs ", kb, " (shapes ",
         shape_str(a.shape()), trans_a ? "^T" : "", " x ", shape_str(b.shape()),
         trans_b ? "^T" : "", ")");
  }
  std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
  gemm_acc(a.values().data(), ar, ac, trans_a, b.values().data(), br, bc, trans_b, out.data(),
           m, n, ka);

  auto pa = a.node();
  auto pb = b.node();
  auto va = a.node()->values;
  auto vb = b.node()->values;
  const std::int64_t k = ka;
  const std::int64_t bytes = (a.numel() + b.numel()) * static_cast<std::int64_t>(sizeof(double));
  return make_op(
      "matmul", {m, n}, std::move(out), {a, b},
      [=]() {
        return [=](Node& self) {
          const double* g = self.grad.data();
          // dA = G B^T (or transposed variants); dB = A^T G.
          if (pa->on_grad_path) {
            auto& ga = grad_buf(*pa);
            if (!trans_a) {
              // ga[m,k] += G[m,n] * B_logical[k,n]^T
              gemm_acc(g, m, n, false, vb->data(), br, bc, !trans_b, ga.data(), m, k, n);
            } else {
              // a is [k, m] physically: ga[k,m] += B_logical[k,n] * G^T
              gemm_acc(vb->data(), br, bc, trans_b, g, m, n, true, ga.data(), k, m, n);
            }
          }
          if (pb->on_grad_path) {
            auto& gb = grad_buf(*pb);
            if (!trans_b) {
              // gb[k,n] += A_logical^T[k,m] * G[m,n]
              gemm_acc(va->data(), ar, ac, !trans_a, g, m, n, false, gb.data(), k, n, m);
            } else {
              // b is [n, k] physically: gb[n,k] += G^T[n,m] * A_logical[m,k]
              gemm_acc(g, m, n, true, va->data(), ar, ac, trans_a, gb.data(), n, k, m);
            }
          }
        };
      },
      bytes);
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) {
    fail(Error::Kind::Shape, "affine: weight must be rank 2, got ", shape_str(weight.shape()));
  }
  const bool vector_input = x.rank() == 1;
  Tensor rows = vector_input ? reshape(x, {1, x.dim(0)}) : x;
  if (rows.rank() != 2 || rows.dim(1) != weight.dim(0)) {
    fail(Error::Kind::Shape, "affine: input ", shape_str(x.shape()),
         " incompatible with weight ", shape_str(weight.shape()));
  }
  Tensor y = matmul(rows, weight);
  if (bias.defined()) {
    if (bias.rank() != 1 || bias.dim(0) != weight.dim(1)) {
      fail(Error::Kind::Shape, "affine: bias ", shape_str(bias.shape()),
           " incompatible with weight ", shape_str(weight.shape()));
    }
    y = add(y, bias);
  }
  return vector_input ? reshape(y, {weight.dim(1)}) : y;
}

}  // namespace sepasr
