#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hqrl/nn.hpp"
#include "hqrl/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace hqrl;
using namespace hqrl::nn;
using std::numbers::pi;

namespace {

template <class T>
Tensor<T> random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(shape);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : t.v) v = static_cast<T>(dist(rng));
  return t;
}

// Scalar loss sum_k c_k * out_k used to turn layer outputs into a single
// number for finite differencing.
template <class T>
double weighted_sum(const Tensor<T>& out, const Tensor<double>& c) {
  double acc = 0.0;
  for (std::size_t k = 0; k < out.v.size(); ++k) acc += static_cast<double>(out.v[k]) * c.v[k];
  return acc;
}

}  // namespace

TEST_CASE("conv_out_size follows the floor formula and validates") {
  CHECK(conv_out_size(84, 8, 4) == 20);
  CHECK(conv_out_size(20, 4, 2) == 9);
  CHECK(conv_out_size(9, 3, 1) == 7);
  for (int in = 1; in <= 12; ++in)
    for (int k = 1; k <= in; ++k)
      for (int s = 1; s <= 4; ++s)
        CHECK(conv_out_size(in, k, s) == (in - k) / s + 1);
  CHECK_THROWS_AS(conv_out_size(4, 5, 1), ConfigError);
  CHECK_THROWS_AS(conv_out_size(0, 1, 1), ConfigError);
  CHECK_THROWS_AS(conv_out_size(4, 2, 0), ConfigError);
}

TEST_CASE("the three-layer stack flattens 84x84x4 to 3136 features") {
  Rng rng = make_rng(1);
  auto l1 = make_conv<float>({4, 32, 8, 4});
  auto l2 = make_conv<float>({32, 64, 4, 2});
  auto l3 = make_conv<float>({64, 64, 3, 1});
  init_conv(l1, rng);
  init_conv(l2, rng);
  init_conv(l3, rng);

  Tensor<float> obs = random_tensor<float>({84, 84, 4}, rng, 0.0, 1.0);
  Tensor<float> h1 = conv2d_forward(l1, obs);
  CHECK(h1.shape == std::vector<int>{20, 20, 32});
  Tensor<float> h2 = conv2d_forward(l2, h1);
  CHECK(h2.shape == std::vector<int>{9, 9, 64});
  Tensor<float> h3 = conv2d_forward(l3, h2);
  CHECK(h3.shape == std::vector<int>{7, 7, 64});
  CHECK(h3.v.size() == 3136);
}

TEST_CASE("zero weights and bias give zero conv output") {
  Rng rng = make_rng(2);
  auto layer = make_conv<double>({2, 3, 3, 1});
  Tensor<double> in = random_tensor<double>({5, 5, 2}, rng);
  Tensor<double> out = conv2d_forward(layer, in);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("1x1 identity kernel reproduces a non-negative input") {
  auto layer = make_conv<double>({1, 1, 1, 1});
  layer.w.v[0] = 1.0;
  Rng rng = make_rng(3);
  Tensor<double> in = random_tensor<double>({4, 6, 1}, rng, 0.0, 1.0);
  Tensor<double> out = conv2d_forward(layer, in);
  REQUIRE(out.shape == in.shape);
  for (std::size_t k = 0; k < in.v.size(); ++k) CHECK(out.v[k] == in.v[k]);
}

TEST_CASE("conv rejects mismatched inputs and missing caches") {
  auto layer = make_conv<double>({2, 3, 3, 1});
  Tensor<double> wrong({5, 5, 3});
  CHECK_THROWS_AS(conv2d_forward(layer, wrong), ArgumentError);
  ConvCache<double> cache;
  Tensor<double> d_out({3, 3, 3});
  CHECK_THROWS_AS(conv2d_backward(layer, cache, d_out), StateError);
}

TEST_CASE("conv backward matches finite differences") {
  Rng rng = make_rng(4);
  auto layer = make_conv<double>({2, 3, 3, 2});
  init_conv(layer, rng);
  Tensor<double> in = random_tensor<double>({8, 8, 2}, rng);
  Tensor<double> c = random_tensor<double>({3, 3, 3}, rng);

  ConvCache<double> cache;
  conv2d_forward(layer, in, &cache);
  Tensor<double> upstream({3, 3, 3});
  for (std::size_t k = 0; k < upstream.v.size(); ++k) upstream.v[k] = c.v[k];
  ConvGrads<double> g = conv2d_backward(layer, cache, upstream);

  const double h = 1e-6;
  auto loss_with = [&](const ConvLayer<double>& l, const Tensor<double>& x) {
    return weighted_sum(conv2d_forward(l, x), c);
  };
  for (std::size_t k = 0; k < layer.w.v.size(); ++k) {
    ConvLayer<double> pert = layer;
    pert.w.v[k] += h;
    double up = loss_with(pert, in);
    pert.w.v[k] -= 2 * h;
    double down = loss_with(pert, in);
    double fd = (up - down) / (2 * h);
    CHECK(std::abs(g.d_w.v[k] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t k = 0; k < layer.b.v.size(); ++k) {
    ConvLayer<double> pert = layer;
    pert.b.v[k] += h;
    double up = loss_with(pert, in);
    pert.b.v[k] -= 2 * h;
    double down = loss_with(pert, in);
    double fd = (up - down) / (2 * h);
    CHECK(std::abs(g.d_b.v[k] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t k = 0; k < in.v.size(); ++k) {
    Tensor<double> pert = in;
    pert.v[k] += h;
    double up = loss_with(layer, pert);
    pert.v[k] -= 2 * h;
    double down = loss_with(layer, pert);
    double fd = (up - down) / (2 * h);
    CHECK(std::abs(g.d_input.v[k] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("conv backward is linear in the upstream gradient") {
  Rng rng = make_rng(5);
  auto layer = make_conv<double>({1, 2, 2, 1});
  init_conv(layer, rng);
  Tensor<double> in = random_tensor<double>({4, 4, 1}, rng);
  ConvCache<double> cache;
  conv2d_forward(layer, in, &cache);

  Tensor<double> up = random_tensor<double>({3, 3, 2}, rng);
  ConvGrads<double> g1 = conv2d_backward(layer, cache, up);
  Tensor<double> up2 = up;
  for (double& v : up2.v) v *= 2.0;
  ConvGrads<double> g2 = conv2d_backward(layer, cache, up2);

  for (std::size_t k = 0; k < g1.d_w.v.size(); ++k) CHECK(g2.d_w.v[k] == 2.0 * g1.d_w.v[k]);
  for (std::size_t k = 0; k < g1.d_b.v.size(); ++k) CHECK(g2.d_b.v[k] == 2.0 * g1.d_b.v[k]);
  for (std::size_t k = 0; k < g1.d_input.v.size(); ++k)
    CHECK(g2.d_input.v[k] == 2.0 * g1.d_input.v[k]);

  Tensor<double> zero({3, 3, 2});
  ConvGrads<double> gz = conv2d_backward(layer, cache, zero);
  for (double v : gz.d_w.v) CHECK(v == 0.0);
  for (double v : gz.d_b.v) CHECK(v == 0.0);
  for (double v : gz.d_input.v) CHECK(v == 0.0);
}

TEST_CASE("ReLU blocks gradient exactly where pre-activation is negative") {
  auto layer = make_conv<double>({1, 2, 2, 1});
  layer.w.fill(1.0);
  layer.b.v[0] = -100.0;  // channel 0 pre-activation forced negative
  layer.b.v[1] = 100.0;

  Tensor<double> in({2, 2, 1});
  in.fill(0.5);
  ConvCache<double> cache;
  conv2d_forward(layer, in, &cache);
  Tensor<double> up({1, 1, 2});
  up.fill(1.0);
  ConvGrads<double> g = conv2d_backward(layer, cache, up);
  CHECK(g.d_b.v[0] == 0.0);
  CHECK(g.d_b.v[1] == 1.0);
  for (int ci = 0; ci < 4; ++ci) {
    CHECK(g.d_w.v[2 * ci + 0] == 0.0);      // channel 0 weights get nothing
    CHECK(g.d_w.v[2 * ci + 1] == 0.5);      // channel 1 sees the input value
  }
}

TEST_CASE("dense parameter counts include biases") {
  DenseSpec hidden{16, 512, Activation::ReLU};
  CHECK(hidden.n_params() == 8704);
  DenseSpec preproc{3136, 16, Activation::Linear};
  CHECK(preproc.n_params() == 3136 * 16 + 16);
}

TEST_CASE("identity dense layer is the identity map") {
  auto layer = make_dense<double>({3, 3, Activation::Linear});
  for (int i = 0; i < 3; ++i) layer.w.at(i, i) = 1.0;
  Tensor<double> x({3});
  x.v = {0.5, -1.25, 2.0};
  Tensor<double> y = dense_forward(layer, x);
  CHECK(y.v == x.v);
}

TEST_CASE("dense backward matches finite differences for every activation") {
  Rng rng = make_rng(6);
  for (Activation act : {Activation::Linear, Activation::ReLU, Activation::TanhPi}) {
    auto layer = make_dense<double>({5, 4, act});
    init_dense(layer, rng);
    Tensor<double> x = random_tensor<double>({5}, rng);
    Tensor<double> c = random_tensor<double>({4}, rng);

    DenseCache<double> cache;
    dense_forward(layer, x, &cache);
    DenseGrads<double> g = dense_backward(layer, cache, c);

    const double h = 1e-6;
    auto loss_with = [&](const DenseLayer<double>& l, const Tensor<double>& xin) {
      return weighted_sum(dense_forward(l, xin), c);
    };
    for (std::size_t k = 0; k < layer.w.v.size(); ++k) {
      DenseLayer<double> pert = layer;
      pert.w.v[k] += h;
      double up = loss_with(pert, x);
      pert.w.v[k] -= 2 * h;
      double down = loss_with(pert, x);
      CHECK(std::abs(g.d_w.v[k] - (up - down) / (2 * h)) < 1e-6);
    }
    for (std::size_t k = 0; k < layer.b.v.size(); ++k) {
      DenseLayer<double> pert = layer;
      pert.b.v[k] += h;
      double up = loss_with(pert, x);
      pert.b.v[k] -= 2 * h;
      double down = loss_with(pert, x);
      CHECK(std::abs(g.d_b.v[k] - (up - down) / (2 * h)) < 1e-6);
    }
    for (std::size_t k = 0; k < x.v.size(); ++k) {
      Tensor<double> pert = x;
      pert.v[k] += h;
      double up = loss_with(layer, pert);
      pert.v[k] -= 2 * h;
      double down = loss_with(layer, pert);
      CHECK(std::abs(g.d_input.v[k] - (up - down) / (2 * h)) < 1e-6);
    }
  }
}

TEST_CASE("tanh_pi stays strictly inside (-pi, pi) with derivative pi at 0") {
  CHECK(tanh_pi(0.0) == 0.0);
  for (double x : {-50.0, -3.0, -0.1, 0.2, 4.0, 50.0}) {
    CHECK(tanh_pi(x) < pi);
    CHECK(tanh_pi(x) > -pi);
  }
  CHECK(tanh_pi(30.0) == doctest::Approx(pi).epsilon(1e-9));

  const double h = 1e-6;
  for (double x : {0.0, 0.7, -1.3, 2.2}) {
    double fd = (tanh_pi(x + h) - tanh_pi(x - h)) / (2 * h);
    CHECK(std::abs(tanh_pi_derivative(x) - fd) < 1e-8);
  }
  CHECK(tanh_pi_derivative(0.0) == pi);
}

TEST_CASE("adam matches the hand-evaluated bias-corrected formula") {
  std::vector<double> params = {1.0};
  std::vector<double> grads = {0.5};
  AdamState<double> state(1);
  adam_step<double>(params, grads, state, 0.1);

  const double m = 0.1 * 0.5;
  const double v = 0.001 * 0.25;
  const double m_hat = m / (1.0 - 0.9);
  const double v_hat = v / (1.0 - 0.999);
  const double expected = 1.0 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(params[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(state.step == 1);
}

TEST_CASE("adam with zero gradients or zero lr leaves parameters bit-identical") {
  Rng rng = make_rng(7);
  std::vector<float> params(64);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (float& p : params) p = static_cast<float>(dist(rng));
  std::vector<float> snapshot = params;

  AdamState<float> state(params.size());
  std::vector<float> zeros(params.size(), 0.0f);
  for (int t = 0; t < 5; ++t) adam_step<float>(params, zeros, state, 0.1);
  CHECK(params == snapshot);

  std::vector<float> grads(params.size());
  for (float& g : grads) g = static_cast<float>(dist(rng));
  AdamState<float> state2(params.size());
  adam_step<float>(params, grads, state2, 0.0);
  CHECK(params == snapshot);
}

TEST_CASE("adam updates scale linearly with the group learning rate") {
  std::vector<double> pa = {2.0, -1.0};
  std::vector<double> pb = pa;
  std::vector<double> g = {0.3, -0.7};
  AdamState<double> sa(2), sb(2);
  adam_step<double>(pa, g, sa, 2.5e-4);
  adam_step<double>(pb, g, sb, 2.5e-2);
  for (int i = 0; i < 2; ++i) {
    double ua = 2.0 - pa[0], ub = 2.0 - pb[0];
    (void)i;
    CHECK(ub == doctest::Approx(100.0 * ua).epsilon(1e-12));
  }
}

TEST_CASE("adam rejects mismatched sizes") {
  std::vector<double> params = {1.0, 2.0};
  std::vector<double> grads = {0.1};
  AdamState<double> state(2);
  CHECK_THROWS_AS(adam_step<double>(params, grads, state, 0.1), ArgumentError);
}

TEST_CASE("initialization is seeded and respects fan-in bounds") {
  auto layer = make_conv<float>({4, 32, 8, 4});
  Rng a = make_rng(11), b = make_rng(11);
  init_conv(layer, a);
  std::vector<float> first = layer.w.v;
  init_conv(layer, b);
  CHECK(layer.w.v == first);
  const double limit = std::sqrt(6.0 / (8.0 * 8.0 * 4.0));
  for (float w : first) CHECK(std::abs(w) <= limit);
  for (float bias : layer.b.v) CHECK(bias == 0.0f);

  auto dense = make_dense<float>({3136, 16, Activation::Linear});
  Rng c = make_rng(12);
  init_dense(dense, c);
  const double glimit = std::sqrt(6.0 / (3136.0 + 16.0));
  for (float w : dense.w.v) CHECK(std::abs(w) <= glimit);
}

TEST_CASE("serial reference agrees with the parallel kernels") {
  Rng rng = make_rng(13);
  auto layer = make_conv<double>({3, 8, 4, 2});
  init_conv(layer, rng);
  Tensor<double> in = random_tensor<double>({12, 12, 3}, rng);

  ConvCache<double> cp, cs;
  Tensor<double> outp = conv2d_forward(layer, in, &cp);
  Tensor<double> outs = serial::conv2d_forward(layer, in, &cs);
  REQUIRE(outp.shape == outs.shape);
  for (std::size_t k = 0; k < outp.v.size(); ++k)
    CHECK(std::abs(outp.v[k] - outs.v[k]) < 1e-12);

  Tensor<double> up = random_tensor<double>(outp.shape, rng);
  ConvGrads<double> gp = conv2d_backward(layer, cp, up);
  ConvGrads<double> gs = serial::conv2d_backward(layer, cs, up);
  for (std::size_t k = 0; k < gp.d_w.v.size(); ++k)
    CHECK(std::abs(gp.d_w.v[k] - gs.d_w.v[k]) < 1e-12);
  for (std::size_t k = 0; k < gp.d_input.v.size(); ++k)
    CHECK(std::abs(gp.d_input.v[k] - gs.d_input.v[k]) < 1e-12);

  auto dl = make_dense<double>({64, 32, Activation::ReLU});
  init_dense(dl, rng);
  Tensor<double> x = random_tensor<double>({64}, rng);
  DenseCache<double> dcp, dcs;
  Tensor<double> yp = dense_forward(dl, x, &dcp);
  Tensor<double> ys = serial::dense_forward(dl, x, &dcs);
  for (std::size_t k = 0; k < yp.v.size(); ++k) CHECK(std::abs(yp.v[k] - ys.v[k]) < 1e-12);
  Tensor<double> dup = random_tensor<double>({32}, rng);
  DenseGrads<double> dgp = dense_backward(dl, dcp, dup);
  DenseGrads<double> dgs = serial::dense_backward(dl, dcs, dup);
  for (std::size_t k = 0; k < dgp.d_w.v.size(); ++k)
    CHECK(std::abs(dgp.d_w.v[k] - dgs.d_w.v[k]) < 1e-12);
  for (std::size_t k = 0; k < dgp.d_input.v.size(); ++k)
    CHECK(std::abs(dgp.d_input.v[k] - dgs.d_input.v[k]) < 1e-12);
}

#ifdef _OPENMP
TEST_CASE("conv kernels are bit-identical across thread counts") {
  Rng rng = make_rng(14);
  auto layer = make_conv<float>({4, 32, 8, 4});
  init_conv(layer, rng);
  Tensor<float> in = random_tensor<float>({84, 84, 4}, rng, 0.0, 1.0);

  int saved = omp_get_max_threads();
  std::vector<Tensor<float>> outs;
  std::vector<ConvGrads<float>> grads;
  Tensor<float> up;
  for (int t : {1, 2, 4}) {
    omp_set_num_threads(t);
    ConvCache<float> cache;
    Tensor<float> out = conv2d_forward(layer, in, &cache);
    if (up.v.empty()) up = random_tensor<float>(out.shape, rng);
    grads.push_back(conv2d_backward(layer, cache, up));
    outs.push_back(std::move(out));
  }
  omp_set_num_threads(saved);
  for (std::size_t i = 1; i < outs.size(); ++i) {
    CHECK(outs[0].v == outs[i].v);
    CHECK(grads[0].d_w.v == grads[i].d_w.v);
    CHECK(grads[0].d_b.v == grads[i].d_b.v);
    CHECK(grads[0].d_input.v == grads[i].d_input.v);
  }
}
#endif
