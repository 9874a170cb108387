// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_TENSOR_HPP
#define SEPASR_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sepasr/common.hpp"

namespace sepasr {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One node of the reverse-mode graph. Interior nodes carry a backward closure
// plus the activations it retained; leaves carry persistent gradients.
struct Node {
  Shape shape;
  std::shared_ptr<std::vector<double>> values;
  bool on_grad_path = false;       // reaches a requires-grad leaf
  bool leaf_requires_grad = false;
  bool consumed = false;           // closure released by backward()
  std::vector<double> grad;        // persistent for leaves, transient otherwise
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  std::int64_t saved_bytes = 0;    // activation bytes retained for backward
  const char* op = "";

  ~Node();
  std::int64_t numel() const {
    return values ? static_cast<std::int64_t>(values->size()) : 0;
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

// Per-thread recording state for the autodiff graph: whether ops record
// backward closures, an ordered log of recorded ops, and the byte count of
// activations currently retained for backward. The counter is monotone
// non-decreasing during forward and returns to zero once every recorded graph
// has been backpropagated or destroyed.
class Recorder {
 public:
  bool enabled = true;
  std::int64_t retained_bytes = 0;
  std::int64_t peak_retained_bytes = 0;
  std::int64_t ops_recorded = 0;

  // Optional op trace, used by diagnostics; disabled by default so long
  // training runs do not accumulate entries.
  bool trace_ops = false;
  std::vector<std::pair<const char*, std::int64_t>> trace;

  void on_record(const char* op, std::int64_t bytes);
  void on_release(std::int64_t bytes);
  void reset_peak() { peak_retained_bytes = retained_bytes; }
  void reset_counters();

  static Recorder& instance();
};

// RAII guard: ops executed in scope produce plain values with no backward
// graph and retain nothing.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Dense tensor of doubles participating in a reverse-mode autodiff graph.
// Value-semantics handle over a shared graph node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(std::vector<double> values, Shape shape);
  static Tensor scalar(double value);
  static Tensor param(std::vector<double> values, Shape shape);
  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor uniform(const Shape& shape, std::mt19937_64& rng, double lo, double hi);
  static Tensor param_uniform(const Shape& shape, std::mt19937_64& rng, double lo, double hi);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::int64_t dim(int i) const;
  std::int64_t numel() const;

  const std::vector<double>& values() const;
  double item() const;

  // Mutation is restricted to graph sources (leaves and constants); interior
  // values are owned by the recorded computation.
  std::vector<double>& mutable_values();

  bool requires_grad() const;
  bool on_grad_path() const;
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();
  bool has_grad() const;
  void accumulate_grad(const std::vector<double>& g);
  void zero_grad();

  // Reverse-mode sweep from a scalar root. Gradients accumulate (+=) into
  // requires-grad leaves; the graph's closures and retained activations are
  // released afterwards, so a second backward on the same graph is rejected.
  void backward() const;

  detail::NodePtr node() const { return node_; }
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

 private:
  detail::NodePtr node_;
};

namespace detail {

// Shared helper for op implementations: builds a result node, wiring parents
// and the backward closure only when recording is enabled and some parent is
// on the gradient path. `saved_bytes` must equal the bytes of every buffer the
// closure captured for backward.
Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               std::vector<Tensor> parents,
               const std::function<std::function<void(Node&)>()>& make_backward,
               std::int64_t saved_bytes);

// Accumulation buffer for a parent during backward; allocates zeros on first use.
std::vector<double>& grad_buf(Node& node);

}  // namespace detail

}  // namespace sepasr

#endif  // SEPASR_TENSOR_HPP
