#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stationcast/tensor.hpp"

// Reverse-mode automatic differentiation over Tensor values. Each operation
// appends a node to a dynamically built graph; backward() runs the recorded
// closures in reverse topological order. Accumulation order is fixed by
// construction order, so single-threaded runs are bit-reproducible.

namespace stationcast::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;  // pushes this->grad into parents

  explicit Node(Tensor v, bool req) : value(std::move(v)), requires_grad(req) {
    if (requires_grad) grad = Tensor(value.shape());
  }
};

inline Var constant(Tensor v) { return std::make_shared<Node>(std::move(v), false); }

inline Var parameter(Tensor v) { return std::make_shared<Node>(std::move(v), true); }

inline void zero_grad(const Var& p) { p->grad.fill(0.0); }

namespace detail {

inline Var make_op(Tensor value, std::vector<Var> parents,
                   std::function<void(Node&)> backprop) {
  bool req = false;
  for (const auto& p : parents) req = req || p->requires_grad;
  auto n = std::make_shared<Node>(std::move(value), req);
  if (req) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
#ifdef STATIONCAST_CHECK_FINITE
  if (!n->value.all_finite()) throw NonFiniteError("non-finite forward value");
#endif
  return n;
}

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value)) {
    throw ShapeMismatchError(std::string(op) + ": " + a->value.shape_str() +
                             " vs " + b->value.shape_str());
  }
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  Tensor c = stationcast::matmul(a->value, b->value);
  return detail::make_op(std::move(c), {a, b}, [](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    const std::size_t m = a->value.rows(), k = a->value.cols(), nc = b->value.cols();
    if (a->requires_grad) {
      kernels::matmul_nt_acc(n.grad.data(), b->value.data(), a->grad.data(), m, nc, k);
    }
    if (b->requires_grad) {
      kernels::matmul_tn_acc(a->value.data(), n.grad.data(), b->grad.data(), m, k, nc);
    }
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "add");
  Tensor c = a->value;
  const double* bd = b->value.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += bd[i];
  return detail::make_op(std::move(c), {a, b}, [](Node& n) {
    for (int s = 0; s < 2; ++s) {
      const Var& p = n.parents[s];
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "sub");
  Tensor c = a->value;
  const double* bd = b->value.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= bd[i];
  return detail::make_op(std::move(c), {a, b}, [](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    if (a->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) b->grad[i] -= n.grad[i];
  });
}

inline Var mul(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor c = a->value;
  const double* bd = b->value.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= bd[i];
  return detail::make_op(std::move(c), {a, b}, [](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    if (a->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        a->grad[i] += n.grad[i] * b->value[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        b->grad[i] += n.grad[i] * a->value[i];
  });
}

// Broadcast a length-n bias over the rows of an (m x n) matrix.
inline Var add_bias(const Var& a, const Var& bias) {
  const std::size_t m = a->value.rows(), nc = a->value.cols();
  if (bias->value.size() != nc) {
    throw ShapeMismatchError("add_bias: " + a->value.shape_str() + " + bias of " +
                             std::to_string(bias->value.size()));
  }
  Tensor c = a->value;
  const double* bd = bias->value.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < nc; ++j) c[i * nc + j] += bd[j];
  return detail::make_op(std::move(c), {a, bias}, [m, nc](Node& n) {
    const Var& a = n.parents[0];
    const Var& bias = n.parents[1];
    if (a->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
    if (bias->requires_grad) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nc; ++j) bias->grad[j] += n.grad[i * nc + j];
    }
  });
}

inline Var scale(const Var& a, double s) {
  Tensor c = a->value;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
  return detail::make_op(std::move(c), {a}, [s](Node& n) {
    const Var& a = n.parents[0];
    if (a->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += s * n.grad[i];
  });
}

inline Var sigmoid(const Var& a) {
  Tensor c = a->value;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 1.0 / (1.0 + std::exp(-c[i]));
  return detail::make_op(std::move(c), {a}, [](Node& n) {
    const Var& a = n.parents[0];
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double s = n.value[i];
      a->grad[i] += n.grad[i] * s * (1.0 - s);
    }
  });
}

inline Var tanh_act(const Var& a) {
  Tensor c = a->value;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::tanh(c[i]);
  return detail::make_op(std::move(c), {a}, [](Node& n) {
    const Var& a = n.parents[0];
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double t = n.value[i];
      a->grad[i] += n.grad[i] * (1.0 - t * t);
    }
  });
}

inline Var relu(const Var& a) {
  Tensor c = a->value;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = c[i] > 0.0 ? c[i] : 0.0;
  return detail::make_op(std::move(c), {a}, [](Node& n) {
    const Var& a = n.parents[0];
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (a->value[i] > 0.0) a->grad[i] += n.grad[i];
  });
}

// [a | 0]: widen an (m x f) matrix to (m x cols) with zero columns on the right.
inline Var pad_cols(const Var& a, std::size_t cols) {
  const std::size_t m = a->value.rows(), f = a->value.cols();
  if (cols < f) throw ShapeMismatchError("pad_cols: target narrower than input");
  Tensor c(m, cols);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < f; ++j) c(i, j) = a->value(i, j);
  return detail::make_op(std::move(c), {a}, [m, f, cols](Node& n) {
    const Var& a = n.parents[0];
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < f; ++j) a->grad[i * f + j] += n.grad[i * cols + j];
  });
}

inline Var sum_all(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  Tensor out(std::vector<std::size_t>{1});
  out[0] = s;
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    const Var& a = n.parents[0];
    if (!a->requires_grad) return;
    const double g = n.grad[0];
    for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  });
}

// Mean of element-wise squared error against a constant target.
inline Var mse_against(const Var& pred, const Tensor& target) {
  if (!pred->value.same_shape(target)) {
    throw ShapeMismatchError("mse: " + pred->value.shape_str() + " vs " +
                             target.shape_str());
  }
  Var diff = sub(pred, constant(target));
  Var sq = mul(diff, diff);
  return scale(sum_all(sq), 1.0 / static_cast<double>(target.size()));
}

// Reverse topological sweep from a scalar root. Throws GraphNotRecorded when
// the root has no recorded graph behind it.
inline void backward(const Var& root) {
  if (!root->requires_grad) {
    throw GraphNotRecordedError("backward: no differentiable graph behind value");
  }
  if (root->value.size() != 1) {
    throw ShapeMismatchError("backward: root must be scalar, got " +
                             root->value.shape_str());
  }

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad.fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace stationcast::ad
