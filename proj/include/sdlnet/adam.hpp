#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdlnet/tensor.hpp"

namespace sdlnet {

// A learnable tensor. Freezing is a property of the parameter, honored by
// both the tape (leaf nodes of frozen parameters need no gradient) and the
// optimizer (frozen parameters are never touched).
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

template <typename T>
using ParamPtr = std::shared_ptr<Parameter<T>>;

template <typename T>
struct AdamState {
  T lr = T(2e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  long long step_count = 0;
  std::vector<ParamPtr<T>> params;
  std::vector<Tensor<T>> m, v;

  AdamState() = default;
  explicit AdamState(std::vector<ParamPtr<T>> ps, T learning_rate = T(2e-4))
      : lr(learning_rate), params(std::move(ps)) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
      m.emplace_back(p->value.shape());
      v.emplace_back(p->value.shape());
    }
  }
};

// Bias-corrected Adam update. Non-trainable parameters are skipped
// entirely: no moment decay, no write, bit-identical before and after.
template <typename T>
void adam_step(AdamState<T>& st) {
  st.step_count += 1;
  const T t = static_cast<T>(st.step_count);
  const T bc1 = T(1) - std::pow(st.beta1, t);
  const T bc2 = T(1) - std::pow(st.beta2, t);
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    Parameter<T>& p = *st.params[i];
    if (!p.trainable) continue;
    if (!p.grad.same_shape(p.value))
      throw std::invalid_argument("adam_step: gradient not populated for " + p.name);
    Tensor<T>& m = st.m[i];
    Tensor<T>& v = st.v[i];
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      const T g = p.grad[j];
      m[j] = st.beta1 * m[j] + (T(1) - st.beta1) * g;
      v[j] = st.beta2 * v[j] + (T(1) - st.beta2) * g * g;
      const T mhat = m[j] / bc1;
      const T vhat = v[j] / bc2;
      p.value[j] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace sdlnet
