#include <cmath>
#include <vector>

#include "doctest.h"
#include "qtomo/nn/lstm.hpp"

using namespace qtomo;

namespace {

double rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar loss over a fixed input sequence: 0.5 sum_t ||head(h_t)||^2.
double sequence_loss(const nn::LstmNet& net, const std::vector<RealMatrix>& xs) {
  nn::LstmState state = net.zero_state(xs[0].rows());
  double total = 0.0;
  for (const RealMatrix& x : xs) {
    RealMatrix h = net.step(x, state);
    RealMatrix y = net.head_forward(h);
    total += 0.5 * y.squaredNorm();
  }
  return total;
}

}  // namespace

TEST_CASE("tensor table carries the expected names and shapes") {
  nn::LstmNet net(5, 7, 2, 3);
  const auto& specs = net.weights().specs();
  auto shape_of = [&](const std::string& name) {
    return specs[net.weights().index_of(name)].shape;
  };
  CHECK(shape_of("l0.wx") == std::vector<std::size_t>{28, 5});
  CHECK(shape_of("l0.wh") == std::vector<std::size_t>{28, 7});
  CHECK(shape_of("l0.b") == std::vector<std::size_t>{28});
  CHECK(shape_of("l1.wx") == std::vector<std::size_t>{28, 7});  // stacked input = h below
  CHECK(shape_of("l1.wh") == std::vector<std::size_t>{28, 7});
  CHECK(shape_of("l1.b") == std::vector<std::size_t>{28});
  CHECK(shape_of("head.w") == std::vector<std::size_t>{3, 7});
  CHECK(shape_of("head.b") == std::vector<std::size_t>{3});
  CHECK(net.input_size() == 5);
  CHECK(net.hidden_size() == 7);
  CHECK(net.layers() == 2);
  CHECK(net.head_size() == 3);
}

TEST_CASE("init biases the forget gate open") {
  nn::LstmNet net(4, 6, 2, 2);
  rng::Xoshiro256pp gen(9);
  net.init_params(gen);
  for (std::size_t layer = 0; layer < 2; ++layer) {
    auto b = net.weights().vec(
        net.weights().index_of("l" + std::to_string(layer) + ".b"));
    REQUIRE(b.size() == 24);
    for (Eigen::Index i = 0; i < 24; ++i) {
      bool forget_segment = i >= 6 && i < 12;  // gate order [i, f, g, o]
      CHECK(b(i) == (forget_segment ? 1.0 : 0.0));
    }
    auto wx = net.weights().mat(
        net.weights().index_of("l" + std::to_string(layer) + ".wx"));
    CHECK(wx.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("one step matches the gate equations by hand") {
  nn::LstmNet net(1, 1, 1, 1);
  auto& w = net.weights();
  auto wx = w.mat(w.index_of("l0.wx"));
  auto wh = w.mat(w.index_of("l0.wh"));
  auto b = w.vec(w.index_of("l0.b"));
  // Gate rows in order [i, f, g, o].
  wx << 0.5, -0.4, 0.8, 0.3;
  wh << 0.2, 0.1, -0.5, 0.7;
  b << 0.05, 1.0, -0.1, 0.2;
  auto hw = w.mat(w.index_of("head.w"));
  auto hb = w.vec(w.index_of("head.b"));
  hw << 2.0;
  hb << -0.3;

  double x0 = 0.7;
  nn::LstmState state = net.zero_state(1);
  RealMatrix x(1, 1);
  x << x0;
  RealMatrix h1 = net.step(x, state);

  double i_g = sigmoid(0.5 * x0 + 0.05);
  double f_g = sigmoid(-0.4 * x0 + 1.0);
  double g_g = std::tanh(0.8 * x0 - 0.1);
  double o_g = sigmoid(0.3 * x0 + 0.2);
  double c1 = f_g * 0.0 + i_g * g_g;
  double h_expect = o_g * std::tanh(c1);
  CHECK(h1(0, 0) == doctest::Approx(h_expect).epsilon(1e-12));
  CHECK(state.c[0](0, 0) == doctest::Approx(c1).epsilon(1e-12));
  CHECK(state.h[0](0, 0) == doctest::Approx(h_expect).epsilon(1e-12));
  CHECK(net.head_forward(h1)(0, 0) ==
        doctest::Approx(2.0 * h_expect - 0.3).epsilon(1e-12));

  // Second step feeds h1/c1 back in.
  RealMatrix h2 = net.step(x, state);
  double i2 = sigmoid(0.5 * x0 + 0.2 * h_expect + 0.05);
  double f2 = sigmoid(-0.4 * x0 + 0.1 * h_expect + 1.0);
  double g2 = std::tanh(0.8 * x0 - 0.5 * h_expect - 0.1);
  double o2 = sigmoid(0.3 * x0 + 0.7 * h_expect + 0.2);
  double c2 = f2 * c1 + i2 * g2;
  CHECK(h2(0, 0) == doctest::Approx(o2 * std::tanh(c2)).epsilon(1e-12));
}

TEST_CASE("truncated backprop through five steps matches finite differences") {
  const Eigen::Index batch = 3;
  const std::size_t steps = 5;
  nn::LstmNet net(4, 6, 2, 3);
  rng::Xoshiro256pp gen(17);
  net.init_params(gen);

  std::vector<RealMatrix> xs(steps);
  rng::Xoshiro256pp gx(23);
  for (auto& x : xs) {
    x.resize(batch, 4);
    for (Eigen::Index r = 0; r < batch; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) x(r, c) = 2.0 * gx.uniform() - 1.0;
  }

  // Forward with caches, then reverse BPTT accumulating parameter grads.
  nn::LstmState state = net.zero_state(batch);
  std::vector<nn::LstmStepCache> caches(steps);
  std::vector<RealMatrix> hs(steps);
  for (std::size_t t = 0; t < steps; ++t)
    hs[t] = net.step(xs[t], state, &caches[t]);

  std::vector<double> grad(net.weights().total_size(), 0.0);
  nn::LstmCarry carry = net.zero_carry(batch);
  std::vector<RealMatrix> dxs(steps);
  for (std::size_t t = steps; t-- > 0;) {
    RealMatrix y = net.head_forward(hs[t]);
    RealMatrix dh_top;
    net.head_backward(hs[t], y, grad, &dh_top);  // dL/dy = y
    net.backward_step(caches[t], dh_top, carry, grad, &dxs[t]);
  }

  auto loss = [&] { return sequence_loss(net, xs); };
  auto& flat = net.weights().flat();
  // Stride through the parameters (there are ~1000; every 7th is plenty).
  for (std::size_t k = 0; k < flat.size(); k += 7) {
    double keep = flat[k];
    double h = 1e-5;
    flat[k] = keep + h;
    double up = loss();
    flat[k] = keep - h;
    double dn = loss();
    flat[k] = keep;
    double fd = (up - dn) / (2 * h);
    CHECK(rel_err(grad[k], fd) < 1e-4);
  }

  // Input gradients, first and last step.
  for (std::size_t t : {std::size_t{0}, steps - 1}) {
    for (Eigen::Index r = 0; r < batch; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        double keep = xs[t](r, c);
        double h = 1e-5;
        xs[t](r, c) = keep + h;
        double up = loss();
        xs[t](r, c) = keep - h;
        double dn = loss();
        xs[t](r, c) = keep;
        CHECK(rel_err(dxs[t](r, c), (up - dn) / (2 * h)) < 1e-4);
      }
    }
  }
}

TEST_CASE("zero state and carry have layer-by-layer batch shapes") {
  nn::LstmNet net(3, 5, 2, 1);
  nn::LstmState s = net.zero_state(4);
  REQUIRE(s.h.size() == 2);
  REQUIRE(s.c.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(s.h[l].rows() == 4);
    CHECK(s.h[l].cols() == 5);
    CHECK(s.h[l].norm() == 0.0);
    CHECK(s.c[l].norm() == 0.0);
  }
  nn::LstmCarry c = net.zero_carry(4);
  REQUIRE(c.dh.size() == 2);
  CHECK(c.dh[0].rows() == 4);
  CHECK(c.dh[0].cols() == 5);
  CHECK(c.dc[1].norm() == 0.0);
}

TEST_CASE("deterministic init and step across identical seeds") {
  nn::LstmNet a(3, 4, 1, 2), b(3, 4, 1, 2);
  rng::Xoshiro256pp g1(42), g2(42);
  a.init_params(g1);
  b.init_params(g2);
  CHECK(a.weights().flat() == b.weights().flat());
  RealMatrix x(2, 3);
  x << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6;
  nn::LstmState sa = a.zero_state(2), sb = b.zero_state(2);
  CHECK((a.step(x, sa) - b.step(x, sb)).norm() == 0.0);
}
