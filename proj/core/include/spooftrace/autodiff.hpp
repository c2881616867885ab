#pragma once

#include <functional>
#include <type_traits>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "spooftrace/image_ops.hpp"
#include "spooftrace/tensor.hpp"

namespace spooftrace {

/// Reverse-mode autodiff over dense tensors. Graphs are built dynamically;
/// a node owns its forward value and a closure that routes incoming
/// gradients to its parents. Nodes with no differentiable ancestors carry
/// neither parents nor closure, so constant subgraphs are freed eagerly.
template <typename S>
struct Node {
  Tensor<S> value;
  Tensor<S> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void(Node<S>&)> backprop;

  Tensor<S>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<S>::zeros(value.dims());
    return grad;
  }
};

template <typename S>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}

  static Var leaf(Tensor<S> v, bool requires_grad = false) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  static Var constant(Tensor<S> v) { return leaf(std::move(v), false); }

  bool defined() const { return node_ != nullptr; }
  const Tensor<S>& val() const { return node_->value; }
  Tensor<S>& mutable_val() { return node_->value; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  Tensor<S>& grad() const { return node_->grad_buffer(); }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad = Tensor<S>(); }

  Node<S>* get() const { return node_.get(); }
  const std::shared_ptr<Node<S>>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node<S>> node_;
};

template <typename S>
Var<S> make_op(Tensor<S> value, std::vector<Var<S>> parents,
               std::function<void(Node<S>&)> backprop) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad |= p.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.ptr());
    n->backprop = std::move(backprop);
  }
  return Var<S>(std::move(n));
}

template <typename S>
void accumulate(const Var<S>& target, const Tensor<S>& g) {
  if (!target.requires_grad()) return;
  Tensor<S>& buf = target.grad();
  for (std::int64_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

/// Backpropagates from a scalar root through every reachable node.
template <typename S>
void backward(const Var<S>& root) {
  if (root.val().size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!root.requires_grad()) return;

  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<S>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root.grad()[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->backprop && n->grad.size() == n->value.size()) n->backprop(*n);
  }
}

// ---- elementwise ops ----

template <typename S>
Var<S> operator+(const Var<S>& a, const Var<S>& b) {
  return make_op<S>(a.val() + b.val(), {a, b}, [a, b](Node<S>& n) {
    accumulate(a, n.grad);
    accumulate(b, n.grad);
  });
}

template <typename S>
Var<S> operator-(const Var<S>& a, const Var<S>& b) {
  return make_op<S>(a.val() - b.val(), {a, b}, [a, b](Node<S>& n) {
    accumulate(a, n.grad);
    if (b.requires_grad()) {
      Tensor<S>& buf = b.grad();
      for (std::int64_t i = 0; i < n.grad.size(); ++i) buf[i] -= n.grad[i];
    }
  });
}

template <typename S>
Var<S> operator*(const Var<S>& a, std::type_identity_t<S> s) {
  return make_op<S>(a.val() * s, {a}, [a, s](Node<S>& n) {
    if (!a.requires_grad()) return;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) buf[i] += n.grad[i] * s;
  });
}

template <typename S>
Var<S> operator*(std::type_identity_t<S> s, const Var<S>& a) { return a * s; }

template <typename S>
Var<S> one_minus(const Var<S>& a) {
  return make_op<S>(one_minus(a.val()), {a}, [a](Node<S>& n) {
    if (!a.requires_grad()) return;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) buf[i] -= n.grad[i];
  });
}

template <typename S>
Var<S> add_const(const Var<S>& a, std::type_identity_t<S> c) {
  return make_op<S>(map(a.val(), [c](S x) { return x + c; }), {a},
                    [a](Node<S>& n) { accumulate(a, n.grad); });
}

/// Elementwise product; a single-channel operand broadcasts over channels.
template <typename S>
Var<S> hadamard(const Var<S>& a, const Var<S>& b) {
  Tensor<S> value = hadamard(a.val(), b.val());
  return make_op<S>(std::move(value), {a, b}, [a, b](Node<S>& n) {
    const auto backward_side = [&n](const Var<S>& x, const Var<S>& other) {
      if (!x.requires_grad()) return;
      const Shape4 sx = as4(x.val());
      const Shape4 so = as4(other.val());
      Tensor<S>& buf = x.grad();
      if (sx.c == 1 && so.c > 1) {
        // x is the single-channel mask: reduce over the other's channels
        const std::int64_t pixels = x.val().size();
        const int c = so.c;
        for (std::int64_t p = 0; p < pixels; ++p) {
          S s = 0;
          for (int k = 0; k < c; ++k) s += n.grad[p * c + k] * other.val()[p * c + k];
          buf[p] += s;
        }
      } else {
        const Tensor<S> g = hadamard(n.grad, other.val());
        for (std::int64_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      }
    };
    backward_side(a, b);
    backward_side(b, a);
  });
}

template <typename S>
Var<S> square(const Var<S>& a) {
  return make_op<S>(map(a.val(), [](S x) { return x * x; }), {a}, [a](Node<S>& n) {
    if (!a.requires_grad()) return;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) buf[i] += S(2) * a.val()[i] * n.grad[i];
  });
}

template <typename S>
Var<S> abs_(const Var<S>& a) {
  return make_op<S>(map(a.val(), [](S x) { return std::abs(x); }), {a}, [a](Node<S>& n) {
    if (!a.requires_grad()) return;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) {
      const S x = a.val()[i];
      buf[i] += (x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0))) * n.grad[i];
    }
  });
}

// ---- reductions ----

template <typename S>
Var<S> sum_all(const Var<S>& a) {
  return make_op<S>(Tensor<S>::scalar(sum_all(a.val())), {a}, [a](Node<S>& n) {
    if (!a.requires_grad()) return;
    const S g = n.grad[0];
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < buf.size(); ++i) buf[i] += g;
  });
}

template <typename S>
Var<S> mean_all(const Var<S>& a) {
  const S inv = S(1) / static_cast<S>(a.val().size());
  return sum_all(a) * inv;
}

template <typename S>
Var<S> mean_square(const Var<S>& a) { return mean_all(square(a)); }

template <typename S>
Var<S> mean_abs(const Var<S>& a) { return mean_all(abs_(a)); }

/// Cuts the graph: same value, no gradient flow.
template <typename S>
Var<S> detach(const Var<S>& a) { return Var<S>::constant(a.val()); }

// ---- channel ops ----

template <typename S>
Var<S> concat_channels(const std::vector<Var<S>>& parts) {
  std::vector<const Tensor<S>*> vs;
  vs.reserve(parts.size());
  for (const auto& p : parts) vs.push_back(&p.val());
  Tensor<S> value = concat_channels<S>(vs);
  return make_op<S>(std::move(value), parts, [parts](Node<S>& n) {
    const Shape4 so = as4(n.value);
    const std::int64_t pixels = static_cast<std::int64_t>(so.b) * so.h * so.w;
    int coff = 0;
    for (const auto& p : parts) {
      const int pc = as4(p.val()).c;
      if (p.requires_grad()) {
        Tensor<S>& buf = p.grad();
        for (std::int64_t i = 0; i < pixels; ++i)
          for (int c = 0; c < pc; ++c) buf[i * pc + c] += n.grad[i * so.c + coff + c];
      }
      coff += pc;
    }
  });
}

template <typename S>
Var<S> slice_channels(const Var<S>& a, int c0, int c1) {
  const Shape4 s = as4(a.val());
  if (c0 < 0 || c1 > s.c || c0 >= c1) throw std::invalid_argument("slice_channels: bad range");
  std::vector<int> od = a.val().dims();
  od[od.size() - 1] = c1 - c0;
  Tensor<S> value(od);
  const std::int64_t pixels = static_cast<std::int64_t>(s.b) * s.h * s.w;
  const int cs = c1 - c0;
  for (std::int64_t i = 0; i < pixels; ++i)
    for (int c = 0; c < cs; ++c) value[i * cs + c] = a.val()[i * s.c + c0 + c];
  return make_op<S>(std::move(value), {a}, [a, c0, cs](Node<S>& n) {
    if (!a.requires_grad()) return;
    const int ac = as4(a.val()).c;
    const std::int64_t pixels = a.val().size() / ac;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < pixels; ++i)
      for (int c = 0; c < cs; ++c) buf[i * ac + c0 + c] += n.grad[i * cs + c];
  });
}

/// Rows [b0, b1) of a batched variable.
template <typename S>
Var<S> slice_batch(const Var<S>& a, int b0, int b1) {
  Tensor<S> value = slice_batch(a.val(), b0, b1);
  return make_op<S>(std::move(value), {a}, [a, b0](Node<S>& n) {
    if (!a.requires_grad()) return;
    const Shape4 s = as4(a.val());
    Tensor<S>& buf = a.grad();
    S* dst = buf.data() + static_cast<std::int64_t>(b0) * s.plane();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
  });
}

/// Per-pixel mean over channels -> [.,H,W,1].
template <typename S>
Var<S> channel_mean(const Var<S>& a) {
  const Shape4 s = as4(a.val());
  std::vector<int> od = a.val().dims();
  od[od.size() - 1] = 1;
  Tensor<S> value(od);
  const std::int64_t pixels = a.val().size() / s.c;
  for (std::int64_t i = 0; i < pixels; ++i) {
    S acc = 0;
    for (int c = 0; c < s.c; ++c) acc += a.val()[i * s.c + c];
    value[i] = acc / static_cast<S>(s.c);
  }
  return make_op<S>(std::move(value), {a}, [a](Node<S>& n) {
    if (!a.requires_grad()) return;
    const int c = as4(a.val()).c;
    const S inv = S(1) / static_cast<S>(c);
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i)
      for (int k = 0; k < c; ++k) buf[i * c + k] += n.grad[i] * inv;
  });
}

/// Per-pixel max over channels -> [.,H,W,1]; gradient routes to the first
/// attaining channel.
template <typename S>
Var<S> channel_max(const Var<S>& a) {
  const Shape4 s = as4(a.val());
  std::vector<int> od = a.val().dims();
  od[od.size() - 1] = 1;
  Tensor<S> value(od);
  const std::int64_t pixels = a.val().size() / s.c;
  auto argmax = std::make_shared<std::vector<int>>(pixels);
  for (std::int64_t i = 0; i < pixels; ++i) {
    int best = 0;
    S bv = a.val()[i * s.c];
    for (int c = 1; c < s.c; ++c) {
      const S v = a.val()[i * s.c + c];
      if (v > bv) { bv = v; best = c; }
    }
    value[i] = bv;
    (*argmax)[i] = best;
  }
  return make_op<S>(std::move(value), {a}, [a, argmax](Node<S>& n) {
    if (!a.requires_grad()) return;
    const int c = as4(a.val()).c;
    Tensor<S>& buf = a.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) buf[i * c + (*argmax)[i]] += n.grad[i];
  });
}

// ---- resampling ----

template <typename S>
Var<S> resize_bilinear(const Var<S>& a, int ho, int wo) {
  const Shape4 s = as4(a.val());
  const int hi = s.h, wi = s.w;
  if (ho == hi && wo == wi) return a;
  return make_op<S>(resize_bilinear(a.val(), ho, wo), {a}, [a, hi, wi](Node<S>& n) {
    if (!a.requires_grad()) return;
    const Tensor<S> g = resize_bilinear_adjoint(n.grad, hi, wi);
    accumulate(a, g);
  });
}

template <typename S>
Var<S> bandpass_low(const Var<S>& a, int n) {
  const Shape4 s = as4(a.val());
  if (n <= 0 || n > s.h || n > s.w)
    throw std::invalid_argument("bandpass_low: band size out of range");
  if (n == s.h && n == s.w) return a;
  return resize_bilinear(resize_bilinear(a, n, n), s.h, s.w);
}

}  // namespace spooftrace
