#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sdlnet/ops.hpp"
#include "sdlnet/tensor.hpp"

// Reverse-mode tape. Graphs are built per forward pass; backward() walks a
// deterministic topological order. Nodes whose inputs require no gradient
// carry no closure, so backward naturally stops at a frozen encoder.
namespace sdlnet {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // sized lazily by backward()
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backprop;
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> make_constant(Tensor<T> v) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(v);
  return n;
}

template <typename T>
Var<T> make_leaf(Tensor<T> v, bool needs_grad = true) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(v);
  n->needs_grad = needs_grad;
  return n;
}

namespace autodiff_detail {

template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents)
    if (p->needs_grad) n->needs_grad = true;
  if (n->needs_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

}  // namespace autodiff_detail

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, int stride, int padding) {
  auto y = kernels::conv2d(x->value, w->value, stride, padding);
  return autodiff_detail::make_op<T>(
      std::move(y), {x, w}, [x, w, stride, padding](Node<T>& self) {
        kernels::conv2d_grad(x->value, w->value, stride, padding, self.grad,
                             x->needs_grad ? &x->grad : nullptr,
                             w->needs_grad ? &w->grad : nullptr);
      });
}

template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& w, int stride, int padding) {
  auto y = kernels::depthwise_conv2d(x->value, w->value, stride, padding);
  return autodiff_detail::make_op<T>(
      std::move(y), {x, w}, [x, w, stride, padding](Node<T>& self) {
        kernels::depthwise_conv2d_grad(x->value, w->value, stride, padding, self.grad,
                                       x->needs_grad ? &x->grad : nullptr,
                                       w->needs_grad ? &w->grad : nullptr);
      });
}

template <typename T>
Var<T> conv2d_transpose(const Var<T>& x, const Var<T>& w, int stride) {
  auto y = kernels::conv2d_transpose(x->value, w->value, stride);
  return autodiff_detail::make_op<T>(std::move(y), {x, w}, [x, w, stride](Node<T>& self) {
    kernels::conv2d_transpose_grad(x->value, w->value, stride, self.grad,
                                   x->needs_grad ? &x->grad : nullptr,
                                   w->needs_grad ? &w->grad : nullptr);
  });
}

template <typename T>
Var<T> relu6(const Var<T>& x) {
  return autodiff_detail::make_op<T>(kernels::relu6(x->value), {x}, [x](Node<T>& self) {
    if (x->needs_grad) kernels::relu6_grad(x->value, self.grad, x->grad);
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  auto y = kernels::sigmoid(x->value);
  return autodiff_detail::make_op<T>(std::move(y), {x}, [x](Node<T>& self) {
    if (x->needs_grad) kernels::sigmoid_grad(self.value, self.grad, x->grad);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return autodiff_detail::make_op<T>(kernels::add(a->value, b->value), {a, b}, [a, b](Node<T>& self) {
    if (a->needs_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i) a->grad[i] += self.grad[i];
    if (b->needs_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i) b->grad[i] += self.grad[i];
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  auto y = kernels::concat_channels(a->value, b->value);
  const std::size_t B = a->value.dim(0), Ca = a->value.dim(1), Cb = b->value.dim(1);
  const std::size_t HW = a->value.dim(2) * a->value.dim(3);
  return autodiff_detail::make_op<T>(std::move(y), {a, b}, [a, b, B, Ca, Cb, HW](Node<T>& self) {
    kernels::concat_channels_grad(Ca, Cb, B, HW, self.grad, a->needs_grad ? &a->grad : nullptr,
                                  b->needs_grad ? &b->grad : nullptr);
  });
}

template <typename T>
Var<T> bias_add(const Var<T>& x, const Var<T>& b) {
  return autodiff_detail::make_op<T>(kernels::bias_add(x->value, b->value), {x, b},
                                     [x, b](Node<T>& self) {
                                       kernels::bias_add_grad(self.grad,
                                                              x->needs_grad ? &x->grad : nullptr,
                                                              b->needs_grad ? &b->grad : nullptr);
                                     });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  Tensor<T> loss = Tensor<T>::scalar(kernels::mse_loss(pred->value, target->value));
  return autodiff_detail::make_op<T>(std::move(loss), {pred, target}, [pred, target](Node<T>& self) {
    const T g = self.grad[0] * T(2) / static_cast<T>(pred->value.numel());
    if (pred->needs_grad)
      for (std::size_t i = 0; i < pred->value.numel(); ++i)
        pred->grad[i] += g * (pred->value[i] - target->value[i]);
    if (target->needs_grad)
      for (std::size_t i = 0; i < target->value.numel(); ++i)
        target->grad[i] -= g * (pred->value[i] - target->value[i]);
  });
}

// batch norm over [B,C,H,W]; mutates running stats when training
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  T momentum = T(0.1), T eps = T(1e-5)) {
  auto saved = std::make_shared<kernels::BatchStats<T>>();
  auto y = kernels::batch_norm(x->value, gamma->value, beta->value, running_mean, running_var,
                               training, momentum, eps, saved.get());
  return autodiff_detail::make_op<T>(
      std::move(y), {x, gamma, beta}, [x, gamma, beta, saved, training](Node<T>& self) {
        kernels::batch_norm_grad(x->value, gamma->value, *saved, training, self.grad,
                                 x->needs_grad ? &x->grad : nullptr,
                                 gamma->needs_grad ? &gamma->grad : nullptr,
                                 beta->needs_grad ? &beta->grad : nullptr);
      });
}

// scalar projection <x, w> against a constant; the reduction grad_check uses
template <typename T>
Var<T> dot_const(const Var<T>& x, Tensor<T> w) {
  if (!x->value.same_shape(w)) throw std::invalid_argument("dot_const: shape mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < w.numel(); ++i) acc += x->value[i] * w[i];
  auto wp = std::make_shared<Tensor<T>>(std::move(w));
  return autodiff_detail::make_op<T>(Tensor<T>::scalar(acc), {x}, [x, wp](Node<T>& self) {
    if (x->needs_grad)
      for (std::size_t i = 0; i < wp->numel(); ++i) x->grad[i] += self.grad[0] * (*wp)[i];
  });
}

// Reverse sweep from a scalar root. Parent order fixes the topological
// order, so repeated runs are bit-identical.
template <typename T>
void backward(const Var<T>& root) {
  if (root->value.numel() != 1)
    throw std::invalid_argument("backward: root must be scalar, got " + root->value.shape_string());

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  if (root->needs_grad) {
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->needs_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) {
    n->grad = Tensor<T>(n->value.shape());
  }
  if (!root->needs_grad) return;
  root->grad.fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

}  // namespace sdlnet
