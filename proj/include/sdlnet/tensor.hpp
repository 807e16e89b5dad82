#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "sdlnet/rng.hpp"

namespace sdlnet {

namespace detail {

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline std::size_t numel_of(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

}  // namespace detail

// Dense row-major N-d array. No broadcasting anywhere: every operation
// states the exact shapes it accepts.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor holds float or double");

 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(detail::numel_of(shape_), T(0)) {}

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != detail::numel_of(shape_))
      throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                  " does not match shape " + detail::shape_str(shape_));
  }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  static Tensor full(std::vector<std::size_t> shape, T v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor random_normal(std::vector<std::size_t> shape, Rng& rng, T mean = 0, T stddev = 1) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = static_cast<T>(rng.normal(mean, stddev));
    return t;
  }

  static Tensor random_uniform(std::vector<std::size_t> shape, Rng& rng, T lo = 0, T hi = 1) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_string() const { return detail::shape_str(shape_); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Ix>
  T& operator()(Ix... ix) {
    return data_[offset(ix...)];
  }
  template <typename... Ix>
  const T& operator()(Ix... ix) const {
    return data_[offset(ix...)];
  }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }
  void zero() { fill(T(0)); }

  bool all_finite() const {
    for (auto x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  template <typename... Ix>
  std::size_t offset(Ix... ix) const {
    constexpr std::size_t n = sizeof...(Ix);
    if (n != shape_.size()) throw std::invalid_argument("Tensor: index rank mismatch");
    const std::size_t idx[n] = {static_cast<std::size_t>(ix)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < n; ++d) off = off * shape_[d] + idx[d];
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

}  // namespace sdlnet
