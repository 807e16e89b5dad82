#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sdlnet/autodiff.hpp"
#include "sdlnet/rng.hpp"
#include "sdlnet/tensor.hpp"

namespace sdlnet {

// Finite-difference verification of the tape. The op under test is given as
// a graph builder over leaf variables; its output is projected against a
// fixed random cotangent so vector-valued ops reduce to one scalar. Returns
// the max over all input elements of
//   |analytic - central_difference| / max(|analytic|, |cd|, 1e-8).
// Run in double. The conv/add/concat family is multilinear, so the central
// difference is exact for any step and a larger step only reduces roundoff;
// 1e-3 keeps the nonlinear ops' truncation error below the 1e-5 gate too.
template <typename F>
double grad_check(F&& build, const std::vector<Tensor<double>>& inputs, std::uint64_t seed = 1,
                  double fd_step = 1e-3) {
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(make_leaf(t, true));
  Var<double> out = build(leaves);
  Rng rng(seed, 0xC07A);
  Tensor<double> w = Tensor<double>::random_uniform(out->value.shape(), rng, -1.0, 1.0);

  Var<double> loss = dot_const(out, w);
  backward(loss);

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    std::vector<Var<double>> ls;
    ls.reserve(xs.size());
    for (const auto& t : xs) ls.push_back(make_leaf(t, false));
    Var<double> o = build(ls);
    double acc = 0;
    for (std::size_t i = 0; i < w.numel(); ++i) acc += o->value[i] * w[i];
    return acc;
  };

  double max_err = 0;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double orig = probe[k][i];
      probe[k][i] = orig + fd_step;
      const double fp = eval(probe);
      probe[k][i] = orig - fd_step;
      const double fm = eval(probe);
      probe[k][i] = orig;
      const double cd = (fp - fm) / (2.0 * fd_step);
      const double an = leaves[k]->grad[i];
      const double denom = std::max({std::abs(an), std::abs(cd), 1e-8});
      max_err = std::max(max_err, std::abs(an - cd) / denom);
    }
  }
  return max_err;
}

}  // namespace sdlnet
