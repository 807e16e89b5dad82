#include <catch2/catch.hpp>

#include "sdlnet/adam.hpp"
#include "sdlnet/autodiff.hpp"
#include "sdlnet/gradcheck.hpp"

using namespace sdlnet;

namespace {

Tensor<double> randn(std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor<double>::random_normal(std::move(shape), rng);
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d forward basics") {
  SECTION("zero input gives zero output") {
    Tensor<double> x({1, 1, 3, 3});
    Tensor<double> w = randn({2, 1, 3, 3}, 11);
    auto y = kernels::conv2d(x, w, 1, 1);
    for (std::size_t i = 0; i < y.numel(); ++i) REQUIRE(y[i] == 0.0);
  }
  SECTION("1x1 identity kernel reproduces the input") {
    Tensor<double> x = randn({1, 1, 4, 5}, 12);
    Tensor<double> w({1, 1, 1, 1}, {1.0});
    auto y = kernels::conv2d(x, w, 1, 0);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) REQUIRE(y[i] == x[i]);
  }
  SECTION("output dims follow the floor formula") {
    Tensor<double> x({1, 1, 7, 9});
    Tensor<double> w({1, 1, 3, 3});
    auto y = kernels::conv2d(x, w, 2, 1);
    REQUIRE(y.dim(2) == 4);  // (7+2-3)/2+1
    REQUIRE(y.dim(3) == 5);  // (9+2-3)/2+1
  }
  SECTION("channel mismatch is rejected with a shape diagnostic") {
    Tensor<double> x({1, 3, 4, 4});
    Tensor<double> w({2, 4, 3, 3});
    REQUIRE_THROWS_WITH(kernels::conv2d(x, w, 1, 1), Catch::Contains("channels"));
  }
}

TEST_CASE("conv2d gradient matches finite differences") {
  // step 1e-5 here on purpose: the documented oracle perturbs every element
  // by +/-1e-5
  auto build = [](const std::vector<Var<double>>& in) { return conv2d(in[0], in[1], 1, 1); };
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    double err = grad_check(build, {randn({1, 2, 5, 5}, seed), randn({3, 2, 3, 3}, seed + 50)},
                            seed, 1e-5);
    INFO("seed " << seed);
    REQUIRE(err < 1e-5);
  }
  SECTION("strided case") {
    auto build2 = [](const std::vector<Var<double>>& in) { return conv2d(in[0], in[1], 2, 1); };
    double err = grad_check(build2, {randn({2, 2, 6, 6}, 7), randn({3, 2, 3, 3}, 8)}, 7);
    REQUIRE(err < 1e-5);
  }
}

TEST_CASE("depthwise conv basics and equivalences") {
  SECTION("per-channel identity kernels reproduce the input") {
    Tensor<double> x = randn({1, 3, 5, 5}, 21);
    Tensor<double> w({3, 1, 3, 3});
    for (int c = 0; c < 3; ++c) w(c, 0, 1, 1) = 1.0;
    auto y = kernels::depthwise_conv2d(x, w, 1, 1);
    for (std::size_t i = 0; i < x.numel(); ++i) REQUIRE(y[i] == Approx(x[i]).margin(0));
  }
  SECTION("equals conv2d with a block-diagonal kernel") {
    Tensor<double> x = randn({1, 2, 4, 4}, 22);
    Tensor<double> wd = randn({2, 1, 3, 3}, 23);
    Tensor<double> wfull({2, 2, 3, 3});
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 9; ++i) wfull.data()[(c * 2 + c) * 9 + i] = wd.data()[c * 9 + i];
    auto yd = kernels::depthwise_conv2d(x, wd, 1, 1);
    auto yf = kernels::conv2d(x, wfull, 1, 1);
    REQUIRE(yd.same_shape(yf));
    for (std::size_t i = 0; i < yd.numel(); ++i) REQUIRE(yd[i] == Approx(yf[i]).margin(1e-12));
  }
  SECTION("gradient check") {
    auto build = [](const std::vector<Var<double>>& in) {
      return depthwise_conv2d(in[0], in[1], 2, 1);
    };
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
      double err = grad_check(build, {randn({1, 3, 6, 6}, seed), randn({3, 1, 3, 3}, seed + 60)},
                              seed);
      REQUIRE(err < 1e-5);
    }
  }
}

TEST_CASE("conv2d_transpose doubles resolution and is the conv adjoint") {
  SECTION("zero input gives zero output") {
    Tensor<double> x({1, 2, 3, 3});
    Tensor<double> w = randn({2, 3, 4, 4}, 31);
    auto y = kernels::conv2d_transpose(x, w, 2);
    REQUIRE(y.shape() == std::vector<std::size_t>({1, 3, 6, 6}));
    for (std::size_t i = 0; i < y.numel(); ++i) REQUIRE(y[i] == 0.0);
  }
  SECTION("forward equals gradient-w.r.t.-input of the matching conv2d") {
    Tensor<double> x = randn({1, 3, 4, 4}, 32);  // plays the conv-output role
    Tensor<double> w = randn({3, 2, 4, 4}, 33);  // [Cin=3, Cout=2, 4, 4]
    auto y = kernels::conv2d_transpose(x, w, 2);

    Tensor<double> z({1, 2, 8, 8});  // conv input placeholder
    Tensor<double> gz(z.shape());
    kernels::conv2d_grad<double>(z, w, 2, 1, x, &gz, nullptr);
    REQUIRE(y.same_shape(gz));
    for (std::size_t i = 0; i < y.numel(); ++i) REQUIRE(y[i] == Approx(gz[i]).margin(1e-10));
  }
  SECTION("stride other than 2 is rejected") {
    Tensor<double> x({1, 2, 3, 3});
    Tensor<double> w({2, 3, 2, 2});
    REQUIRE_THROWS_AS(kernels::conv2d_transpose(x, w, 1), std::invalid_argument);
  }
  SECTION("gradient check") {
    auto build = [](const std::vector<Var<double>>& in) {
      return conv2d_transpose(in[0], in[1], 2);
    };
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
      double err = grad_check(build, {randn({1, 2, 3, 3}, seed), randn({2, 3, 4, 4}, seed + 70)},
                              seed);
      REQUIRE(err < 1e-5);
    }
  }
}

TEST_CASE("batch_norm semantics") {
  SECTION("train mode normalizes to zero mean unit variance") {
    Tensor<double> x = randn({4, 3, 5, 5}, 41);
    Tensor<double> gamma = Tensor<double>::full({3}, 1.0);
    Tensor<double> beta({3});
    Tensor<double> rm({3}), rv = Tensor<double>::full({3}, 1.0);
    auto y = kernels::batch_norm(x, gamma, beta, rm, rv, true, 0.1, 1e-5);
    const std::size_t HW = 25, B = 4, C = 3;
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0, s2 = 0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < HW; ++i) {
          double v = y.data()[(n * C + c) * HW + i];
          s += v;
          s2 += v * v;
        }
      double mean = s / (B * HW);
      double var = s2 / (B * HW) - mean * mean;
      REQUIRE(std::abs(mean) < 1e-6);
      REQUIRE(std::abs(var - 1.0) < 1e-4);  // eps shifts variance slightly below 1
    }
  }
  SECTION("constant channel maps to beta") {
    Tensor<double> x = Tensor<double>::full({2, 1, 3, 3}, 7.5);
    Tensor<double> gamma = Tensor<double>::full({1}, 2.0);
    Tensor<double> beta = Tensor<double>::full({1}, -0.25);
    Tensor<double> rm({1}), rv = Tensor<double>::full({1}, 1.0);
    auto y = kernels::batch_norm(x, gamma, beta, rm, rv, true, 0.1, 1e-5);
    for (std::size_t i = 0; i < y.numel(); ++i) REQUIRE(y[i] == Approx(-0.25).margin(1e-9));
  }
  SECTION("running stats blend with momentum") {
    Tensor<double> x = Tensor<double>::full({1, 1, 2, 2}, 3.0);
    Tensor<double> gamma = Tensor<double>::full({1}, 1.0);
    Tensor<double> beta({1});
    Tensor<double> rm({1}), rv = Tensor<double>::full({1}, 1.0);
    kernels::batch_norm(x, gamma, beta, rm, rv, true, 0.1, 1e-5);
    REQUIRE(rm[0] == Approx(0.3));       // 0.9*0 + 0.1*3
    REQUIRE(rv[0] == Approx(0.9));       // 0.9*1 + 0.1*0
  }
  SECTION("gradient check w.r.t. input, gamma, beta (train and eval)") {
    for (bool training : {true, false}) {
      auto build = [training](const std::vector<Var<double>>& in) {
        Tensor<double> rm({2});
        rm[0] = 0.2;
        rm[1] = -0.4;
        Tensor<double> rv({2});
        rv[0] = 1.3;
        rv[1] = 0.6;
        return batch_norm(in[0], in[1], in[2], rm, rv, training, 0.1, 1e-5);
      };
      for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        double err = grad_check(
            build, {randn({2, 2, 4, 4}, seed), randn({2}, seed + 80), randn({2}, seed + 90)},
            seed);
        INFO("training=" << training << " seed=" << seed);
        REQUIRE(err < 1e-5);
      }
    }
  }
}

TEST_CASE("pointwise and structural ops") {
  SECTION("relu6 clamps") {
    Tensor<double> x({3}, {7.0, -1.0, 3.0});
    auto y = kernels::relu6(x);
    REQUIRE(y[0] == 6.0);
    REQUIRE(y[1] == 0.0);
    REQUIRE(y[2] == 3.0);
  }
  SECTION("sigmoid symmetry") {
    Tensor<double> x({1}, {0.0});
    REQUIRE(kernels::sigmoid(x)[0] == Approx(0.5));
    Tensor<double> far({2}, {40.0, -40.0});
    auto y = kernels::sigmoid(far);
    REQUIRE(y[0] == Approx(1.0));
    REQUIRE(y[1] == Approx(0.0).margin(1e-15));
  }
  SECTION("add requires equal shapes") {
    Tensor<double> a({2, 2});
    Tensor<double> b({4});
    REQUIRE_THROWS_AS(kernels::add(a, b), std::invalid_argument);
  }
  SECTION("concat stacks channels") {
    Tensor<double> a = randn({1, 2, 3, 4}, 51);
    Tensor<double> b = randn({1, 3, 3, 4}, 52);
    auto y = kernels::concat_channels(a, b);
    REQUIRE(y.shape() == std::vector<std::size_t>({1, 5, 3, 4}));
    REQUIRE(y(0, 0, 0, 0) == a(0, 0, 0, 0));
    REQUIRE(y(0, 2, 1, 2) == b(0, 0, 1, 2));
    Tensor<double> c({1, 2, 4, 4});
    REQUIRE_THROWS_AS(kernels::concat_channels(a, c), std::invalid_argument);
  }
  SECTION("relu6 gradient away from kinks") {
    // probe only where |x| and |x-6| are comfortably non-zero
    Rng rng(61);
    Tensor<double> x({40});
    for (std::size_t i = 0; i < x.numel(); ++i) {
      double v = rng.uniform(-3.0, 9.0);
      while (std::abs(v) < 1e-3 || std::abs(v - 6.0) < 1e-3) v = rng.uniform(-3.0, 9.0);
      x[i] = v;
    }
    auto build = [](const std::vector<Var<double>>& in) { return relu6(in[0]); };
    REQUIRE(grad_check(build, {x}, 3) < 1e-6);
  }
  SECTION("sigmoid and bias_add gradients") {
    auto bsig = [](const std::vector<Var<double>>& in) { return sigmoid(in[0]); };
    REQUIRE(grad_check(bsig, {randn({2, 3}, 62)}, 4) < 1e-5);
    auto bbias = [](const std::vector<Var<double>>& in) { return bias_add(in[0], in[1]); };
    REQUIRE(grad_check(bbias, {randn({2, 3, 2, 2}, 63), randn({3}, 64)}, 5) < 1e-9);
  }
  SECTION("concat and add gradients are exact for linear ops") {
    // linear in every element, so a large step costs no truncation and
    // leaves roundoff far below the gate
    auto badd = [](const std::vector<Var<double>>& in) { return add(in[0], in[1]); };
    REQUIRE(grad_check(badd, {randn({3, 3}, 65), randn({3, 3}, 66)}, 6, 0.25) < 1e-10);
    auto bcat = [](const std::vector<Var<double>>& in) {
      return concat_channels(in[0], in[1]);
    };
    REQUIRE(grad_check(bcat, {randn({1, 2, 2, 2}, 67), randn({1, 1, 2, 2}, 68)}, 7, 0.25) < 1e-10);
  }
}

TEST_CASE("mse loss") {
  Tensor<double> a = randn({2, 4}, 71);
  SECTION("identical tensors give zero") { REQUIRE(kernels::mse_loss(a, a) == 0.0); }
  SECTION("constant offset of one gives one") {
    Tensor<double> b(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) b[i] = a[i] + 1.0;
    REQUIRE(kernels::mse_loss(b, a) == Approx(1.0));
  }
  SECTION("shape mismatch rejected") {
    Tensor<double> c({3});
    REQUIRE_THROWS_AS(kernels::mse_loss(a, c), std::invalid_argument);
  }
  SECTION("gradient matches finite differences") {
    auto build = [](const std::vector<Var<double>>& in) { return mse_loss(in[0], in[1]); };
    for (std::uint64_t seed : {1, 2, 3, 4, 5})
      REQUIRE(grad_check(build, {randn({3, 4}, seed), randn({3, 4}, seed + 99)}, seed) < 1e-5);
  }
}

TEST_CASE("adjointness of the linear ops") {
  // <L(x), y> == <x, L^T(y)> checked in double at 1e-10
  const double tol = 1e-10;
  SECTION("conv2d, both input and kernel side") {
    Tensor<double> x = randn({2, 3, 6, 6}, 81);
    Tensor<double> w = randn({4, 3, 3, 3}, 82);
    auto lx = kernels::conv2d(x, w, 2, 1);
    Tensor<double> y = randn(lx.shape(), 83);
    Tensor<double> gx(x.shape()), gw(w.shape());
    kernels::conv2d_grad(x, w, 2, 1, y, &gx, &gw);
    REQUIRE(dot(lx, y) == Approx(dot(x, gx)).epsilon(tol));
    REQUIRE(dot(lx, y) == Approx(dot(w, gw)).epsilon(tol));
  }
  SECTION("depthwise conv") {
    Tensor<double> x = randn({1, 4, 6, 6}, 84);
    Tensor<double> w = randn({4, 1, 3, 3}, 85);
    auto lx = kernels::depthwise_conv2d(x, w, 1, 1);
    Tensor<double> y = randn(lx.shape(), 86);
    Tensor<double> gx(x.shape()), gw(w.shape());
    kernels::depthwise_conv2d_grad(x, w, 1, 1, y, &gx, &gw);
    REQUIRE(dot(lx, y) == Approx(dot(x, gx)).epsilon(tol));
    REQUIRE(dot(lx, y) == Approx(dot(w, gw)).epsilon(tol));
  }
  SECTION("transposed conv") {
    Tensor<double> x = randn({1, 3, 4, 4}, 87);
    Tensor<double> w = randn({3, 2, 4, 4}, 88);
    auto lx = kernels::conv2d_transpose(x, w, 2);
    Tensor<double> y = randn(lx.shape(), 89);
    Tensor<double> gx(x.shape()), gw(w.shape());
    kernels::conv2d_transpose_grad(x, w, 2, y, &gx, &gw);
    REQUIRE(dot(lx, y) == Approx(dot(x, gx)).epsilon(tol));
    REQUIRE(dot(lx, y) == Approx(dot(w, gw)).epsilon(tol));
  }
}

TEST_CASE("adam step") {
  SECTION("first step moves by lr*g/(|g|+eps)") {
    auto p = std::make_shared<Parameter<double>>("p", Tensor<double>({3}, {1.0, -2.0, 0.5}));
    p->grad = Tensor<double>({3}, {0.4, -0.7, 1.3});
    AdamState<double> st({p}, 1e-3);
    adam_step(st);
    REQUIRE(st.step_count == 1);
    for (int i = 0; i < 3; ++i) {
      // t=1: mhat = g, vhat = g^2 -> update = -lr * g / (|g| + eps)
      double g = (i == 0) ? 0.4 : (i == 1 ? -0.7 : 1.3);
      double init = (i == 0) ? 1.0 : (i == 1 ? -2.0 : 0.5);
      double expected = init - 1e-3 * g / (std::abs(g) + 1e-8);
      REQUIRE(p->value[i] == Approx(expected).margin(1e-12));
      // which for |g| >> eps is just -lr * sign(g)
      REQUIRE(p->value[i] == Approx(init - 1e-3 * (g > 0 ? 1 : -1)).margin(1e-9));
    }
  }
  SECTION("non-trainable parameter is bit-identical after steps") {
    auto p = std::make_shared<Parameter<double>>("frozen", Tensor<double>({2}, {0.25, -0.125}));
    p->trainable = false;
    p->grad = Tensor<double>({2}, {10.0, 10.0});
    auto before = p->value;
    AdamState<double> st({p}, 0.1);
    for (int i = 0; i < 5; ++i) adam_step(st);
    REQUIRE(p->value == before);
  }
  SECTION("zero gradient leaves the value unchanged") {
    auto p = std::make_shared<Parameter<double>>("p", Tensor<double>({2}, {1.0, 2.0}));
    AdamState<double> st({p}, 0.1);
    // one real step to populate moments, then a zero-grad step
    p->grad = Tensor<double>({2}, {1.0, -1.0});
    adam_step(st);
    auto after_first = p->value;
    p->grad.zero();
    auto m_before = st.m[0];
    adam_step(st);
    // moments decayed, value moved only by the decayed momentum term
    REQUIRE(st.m[0][0] == Approx(0.9 * m_before[0]));
    REQUIRE(st.step_count == 2);
    // with zero grad from the start the value would not move at all
    auto q = std::make_shared<Parameter<double>>("q", Tensor<double>({2}, {3.0, 4.0}));
    AdamState<double> st2({q}, 0.1);
    q->grad.zero();
    adam_step(st2);
    REQUIRE(q->value[0] == 3.0);
    REQUIRE(q->value[1] == 4.0);
  }
}

TEST_CASE("grad_check sanity on a linear op") {
  auto build = [](const std::vector<Var<double>>& in) { return add(in[0], in[1]); };
  REQUIRE(grad_check(build, {randn({4}, 91), randn({4}, 92)}, 8, 0.25) < 1e-10);
}

TEST_CASE("graph reuse accumulates gradients") {
  // y = x + x -> dy/dx = 2
  auto x = make_leaf(Tensor<double>({2}, {1.0, 2.0}));
  auto y = add(x, x);
  auto loss = dot_const(y, Tensor<double>::full({2}, 1.0));
  backward(loss);
  REQUIRE(x->grad[0] == Approx(2.0));
  REQUIRE(x->grad[1] == Approx(2.0));
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Rng rng(1001);
    auto x = make_leaf(Tensor<double>::random_normal({1, 2, 8, 8}, rng));
    auto w1 = make_leaf(Tensor<double>::random_normal({3, 2, 3, 3}, rng));
    auto w2 = make_leaf(Tensor<double>::random_normal({3, 1, 3, 3}, rng));
    auto h = relu6(conv2d(x, w1, 2, 1));
    auto z = depthwise_conv2d(h, w2, 1, 1);
    auto t = make_constant(Tensor<double>(z->value.shape()));
    auto loss = mse_loss(z, t);
    backward(loss);
    return std::make_tuple(loss->value[0], x->grad, w1->grad, w2->grad);
  };
  auto a = run();
  auto b = run();
  REQUIRE(std::get<0>(a) == std::get<0>(b));
  REQUIRE(std::get<1>(a) == std::get<1>(b));
  REQUIRE(std::get<2>(a) == std::get<2>(b));
  REQUIRE(std::get<3>(a) == std::get<3>(b));
}

TEST_CASE("float32 gradients stay within loose tolerance") {
  // the production dtype; run one conv through the float tape and compare
  // against the double tape
  Rng rng(77);
  Tensor<double> xd = Tensor<double>::random_normal({1, 2, 5, 5}, rng);
  Tensor<double> wd = Tensor<double>::random_normal({2, 2, 3, 3}, rng);
  auto xf = make_leaf(xd.cast<float>());
  auto wf = make_leaf(wd.cast<float>());
  auto xv = make_leaf(xd);
  auto wv = make_leaf(wd);
  auto yf = conv2d(xf, wf, 1, 1);
  auto yd = conv2d(xv, wv, 1, 1);
  auto lf = mse_loss(yf, make_constant(Tensor<float>(yf->value.shape())));
  auto ld = mse_loss(yd, make_constant(Tensor<double>(yd->value.shape())));
  backward(lf);
  backward(ld);
  for (std::size_t i = 0; i < xd.numel(); ++i) {
    double a = xf->grad[i], b = xv->grad[i];
    REQUIRE(std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}) < 1e-4);
  }
}
