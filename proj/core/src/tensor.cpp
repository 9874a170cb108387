// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>
#include <utility>

namespace sepasr {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail(Error::Kind::Shape, "negative extent in shape ", shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace detail {

Node::~Node() {
  if (saved_bytes > 0) {
    Recorder::instance().on_release(saved_bytes);
    saved_bytes = 0;
  }
}

std::vector<double>& grad_buf(Node& node) {
  if (node.grad.empty()) node.grad.assign(static_cast<std::size_t>(node.numel()), 0.0);
  return node.grad;
}

}  // namespace detail

void Recorder::on_record(const char* op, std::int64_t bytes) {
  ++ops_recorded;
  retained_bytes += bytes;
  peak_retained_bytes = std::max(peak_retained_bytes, retained_bytes);
  if (trace_ops) trace.emplace_back(op, bytes);
}

void Recorder::on_release(std::int64_t bytes) { retained_bytes -= bytes; }

void Recorder::reset_counters() {
  retained_bytes = 0;
  peak_retained_bytes = 0;
  ops_recorded = 0;
  trace.clear();
}

Recorder& Recorder::instance() {
  thread_local Recorder rec;
  return rec;
}

NoGradGuard::NoGradGuard() : prev_(Recorder::instance().enabled) {
  Recorder::instance().enabled = false;
}

NoGradGuard::~NoGradGuard() { Recorder::instance().enabled = prev_; }

namespace {

detail::NodePtr make_source(std::vector<double> values, Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    fail(Error::Kind::Shape, "value count ", values.size(), " does not match shape ",
         shape_str(shape));
  }
  n->shape = std::move(shape);
  n->values = std::make_shared<std::vector<double>>(std::move(values));
  n->leaf_requires_grad = requires_grad;
  n->on_grad_path = requires_grad;
  n->op = requires_grad ? "param" : "constant";
  return n;
}

}  // namespace

Tensor Tensor::constant(std::vector<double> values, Shape shape) {
  return Tensor(make_source(std::move(values), std::move(shape), false));
}

Tensor Tensor::scalar(double value) { return constant({value}, {}); }

Tensor Tensor::param(std::vector<double> values, Shape shape) {
  return Tensor(make_source(std::move(values), std::move(shape), true));
}

Tensor Tensor::zeros(const Shape& shape) {
  return constant(std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), 0.0), shape);
}

Tensor Tensor::full(const Shape& shape, double value) {
  return constant(std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), value), shape);
}

Tensor Tensor::uniform(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = dist(rng);
  return constant(std::move(v), shape);
}

Tensor Tensor::param_uniform(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = dist(rng);
  return param(std::move(v), shape);
}

const Shape& Tensor::shape() const {
  if (!node_) fail(Error::Kind::Usage, "operation on an undefined tensor");
  return node_->shape;
}

std::int64_t Tensor::dim(int i) const {
  const Shape& s = shape();
  if (i < 0 || i >= static_cast<int>(s.size())) {
    fail(Error::Kind::Shape, "dim index ", i, " out of range for shape ", shape_str(s));
  }
  return s[static_cast<std::size_t>(i)];
}

std::int64_t Tensor::numel() const {
  if (!node_) fail(Error::Kind::Usage, "operation on an undefined tensor");
  return node_->numel();
}

const std::vector<double>& Tensor::values() const {
  if (!node_) fail(Error::Kind::Usage, "operation on an undefined tensor");
  return *node_->values;
}

double Tensor::item() const {
  if (numel() != 1) {
    fail(Error::Kind::Shape, "item() requires a single-element tensor, got shape ",
         shape_str(shape()));
  }
  return (*node_->values)[0];
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_) fail(Error::Kind::Usage, "operation on an undefined tensor");
  if (!node_->parents.empty() || node_->backward_fn) {
    fail(Error::Kind::Graph, "mutable access is only allowed on graph sources");
  }
  return *node_->values;
}

bool Tensor::requires_grad() const { return node_ && node_->leaf_requires_grad; }

bool Tensor::on_grad_path() const { return node_ && node_->on_grad_path; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!node_) fail(Error::Kind::Usage, "operation on an undefined tensor");
  if (node_->grad.empty()) {
    fail(Error::Kind::Graph, "no gradient accumulated for this tensor");
  }
  return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
  if (!node_ || node_->grad.empty()) {
    fail(Error::Kind::Graph, "no gradient accumulated for this tensor");
  }
  return node_->grad;
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
  if (!requires_grad()) fail(Error::Kind::Graph, "accumulate_grad on a non-parameter tensor");
  if (static_cast<std::int64_t>(g.size()) != numel()) {
    fail(Error::Kind::Shape, "gradient size ", g.size(), " does not match tensor shape ",
         shape_str(shape()));
  }
  auto& buf = detail::grad_buf(*node_);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

void Tensor::zero_grad() {
  if (!node_) return;
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  using detail::Node;
  if (!node_) fail(Error::Kind::Usage, "backward on an undefined tensor");
  Node* root = node_.get();
  if (root->numel() != 1) {
    fail(Error::Kind::Graph, "backward requires a scalar root, got shape ",
         shape_str(root->shape));
  }
  if (root->consumed) {
    fail(Error::Kind::Graph,
         "backward was already run on this graph; rerun the forward pass first");
  }
  if (!root->on_grad_path) return;  // nothing reaches a requires-grad leaf

  // Reverse topological order via iterative post-order DFS over parents. The
  // order holds strong references: releasing a node's parent links during the
  // sweep must not destroy nodes the sweep still has to visit.
  std::vector<detail::NodePtr> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    detail::NodePtr n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({node_, 0});
  seen.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      const detail::NodePtr& p = f.n->parents[f.next++];
      if (!p->on_grad_path) continue;
      if (p->consumed) {
        fail(Error::Kind::Graph,
             "graph reuses a node whose backward state was already released");
      }
      if (seen.insert(p.get()).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  detail::grad_buf(*root)[0] += 1.0;

  // `order` is post-order (parents before children), so iterate backwards.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    if (n->backward_fn) {
      detail::grad_buf(*n);  // ensure allocated even if no child contributed
      n->backward_fn(*n);
    }
    if (!n->leaf_requires_grad) {
      // Release everything retained for backward; leaves keep their grads.
      n->grad.clear();
      n->grad.shrink_to_fit();
      if (n->backward_fn || !n->parents.empty()) {
        n->backward_fn = nullptr;
        n->parents.clear();
        if (n->saved_bytes > 0) {
          Recorder::instance().on_release(n->saved_bytes);
          n->saved_bytes = 0;
        }
        n->consumed = true;
      }
    }
  }
}

namespace detail {

Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               std::vector<Tensor> parents,
               const std::function<std::function<void(Node&)>()>& make_backward,
               std::int64_t saved_bytes) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    fail(Error::Kind::Shape, op, ": result value count ", values.size(),
         " does not match shape ", shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->values = std::make_shared<std::vector<double>>(std::move(values));

  Recorder& rec = Recorder::instance();
  bool track = false;
  if (rec.enabled) {
    for (const auto& p : parents) {
      if (p.on_grad_path()) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    n->on_grad_path = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = make_backward();
    n->saved_bytes = saved_bytes;
    rec.on_record(op, saved_bytes);
  }
  return Tensor(std::move(n));
}

}  // namespace detail

}  // namespace sepasr
