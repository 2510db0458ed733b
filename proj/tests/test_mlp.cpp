#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "lsem/mlp.hpp"
#include "lsem/rng.hpp"

using namespace lsem;

namespace {

// Independent forward-pass oracle: plain nested loops, no Eigen products.
Eigen::VectorXd loop_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (int l = 0; l < p.n_layers(); ++l) {
    const auto& W = p.weights[l];
    std::vector<double> s(W.rows(), 0.0);
    for (int i = 0; i < W.rows(); ++i) {
      double acc = p.biases[l][i];
      for (int j = 0; j < W.cols(); ++j) acc += W(i, j) * a[j];
      s[i] = acc;
    }
    if (l + 1 < p.n_layers()) {
      for (auto& v : s)
        v = p.activation == Activation::softplus
                ? std::fmax(v, 0.0) + std::log1p(std::exp(-std::fabs(v)))
                : std::tanh(v);
    }
    a = std::move(s);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
}

MlpParams random_net(const std::vector<int>& sizes, Activation act,
                     std::uint64_t seed) {
  MlpParams p = init_params(sizes, act, seed);
  Rng rng(seed + 1);
  for (auto& b : p.biases)
    for (int i = 0; i < b.size(); ++i) b[i] = 0.1 * rng.normal();
  return p;
}

}  // namespace

TEST_CASE("init_params is deterministic and respects the Xavier bound") {
  auto a = init_params({639, 100, 30, 5}, Activation::softplus, 42);
  auto b = init_params({639, 100, 30, 5}, Activation::softplus, 42);
  for (int l = 0; l < a.n_layers(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero(0.0));
    const double bound =
        std::sqrt(6.0 / (a.layer_sizes[l] + a.layer_sizes[l + 1]));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
  }
  auto c = init_params({639, 100, 30, 5}, Activation::softplus, 43);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("init_params mean is within 3 sigma of zero on a 639x100 layer") {
  auto p = init_params({639, 100}, Activation::tanh, 7);
  const double bound = std::sqrt(6.0 / (639 + 100));
  const double n = 639.0 * 100.0;
  const double mean = p.weights[0].mean();
  const double sigma_mean = bound / std::sqrt(3.0 * n);
  CHECK(std::abs(mean) <= 3.0 * sigma_mean);
}

TEST_CASE("init_params rejects degenerate shapes") {
  CHECK_THROWS_AS(init_params({5}, Activation::tanh, 0), std::invalid_argument);
  CHECK_THROWS_AS(init_params({5, 0, 2}, Activation::tanh, 0), std::invalid_argument);
}

TEST_CASE("zero-parameter nets map anything to zero") {
  for (auto act : {Activation::softplus, Activation::tanh}) {
    MlpParams p = init_params({6, 4, 4, 3}, act, 1);
    for (auto& w : p.weights) w.setZero();
    Eigen::VectorXd x = Eigen::VectorXd::Random(6);
    CHECK(forward(p, x).isZero(0.0));
  }
}

TEST_CASE("softplus hidden units at zero input sit at ln 2") {
  MlpParams p = init_params({3, 2, 2, 1}, Activation::softplus, 1);
  for (auto& w : p.weights) w.setZero();
  // Probe the first hidden layer through an identity-ish first weight row.
  p.weights[0].setZero();
  ForwardTrace trace = forward_trace(p, Eigen::VectorXd::Zero(3));
  CHECK(trace.layer_inputs[1](0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(trace.output(0, 0) == 0.0);
}

TEST_CASE("forward agrees with an independent dense-matmul oracle") {
  Rng rng(99);
  for (auto act : {Activation::softplus, Activation::tanh}) {
    MlpParams p = random_net({7, 11, 5, 3}, act, 1234);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd x(7);
      for (int i = 0; i < 7; ++i) x[i] = rng.normal();
      Eigen::VectorXd got = forward(p, x);
      Eigen::VectorXd want = loop_forward(p, x);
      CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("forward rejects mismatched input length") {
  MlpParams p = init_params({4, 3, 2}, Activation::tanh, 5);
  CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("single linear layer gradient is input times upstream") {
  MlpParams p = init_params({3, 2}, Activation::tanh, 11);
  Eigen::VectorXd x(3);
  x << 0.5, -1.0, 2.0;
  Eigen::VectorXd up(2);
  up << 1.5, -0.25;
  GradientTape tape = GradientTape::zeros_like(p);
  ForwardTrace trace = forward_trace(p, x);
  Eigen::MatrixXd dx = backprop(p, trace, up, tape);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(tape.d_weights[0](i, j) == doctest::Approx(x[j] * up[i]).epsilon(1e-14));
  CHECK((dx - p.weights[0].transpose() * up).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((tape.d_biases[0] - up).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero upstream leaves the tape at zero") {
  MlpParams p = random_net({4, 6, 3}, Activation::softplus, 3);
  GradientTape tape = GradientTape::zeros_like(p);
  ForwardTrace trace = forward_trace(p, Eigen::VectorXd::Random(4));
  backprop(p, trace, Eigen::MatrixXd::Zero(3, 1), tape);
  for (const auto& w : tape.d_weights) CHECK(w.isZero(0.0));
  for (const auto& b : tape.d_biases) CHECK(b.isZero(0.0));
}

TEST_CASE("backprop matches central finite differences on random 4-layer nets") {
  // Scalar loss L = sum(c .* y); dL/dtheta checked parameter by parameter.
  Rng rng(2024);
  for (auto act : {Activation::softplus, Activation::tanh}) {
    MlpParams p = random_net({6, 8, 7, 4}, act, 555);
    Eigen::MatrixXd x(6, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::MatrixXd c(4, 3);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();

    GradientTape tape = GradientTape::zeros_like(p);
    ForwardTrace trace = forward_trace(p, x);
    Eigen::MatrixXd dx = backprop(p, trace, c, tape);

    auto loss = [&](const MlpParams& q) {
      return (forward(q, x).array() * c.array()).sum();
    };

    const double h = 1e-6;
    auto check_entry = [&](double analytic, double* slot) {
      const double saved = *slot;
      *slot = saved + h;
      const double lp = loss(p);
      *slot = saved - h;
      const double lm = loss(p);
      *slot = saved;
      const double fd = (lp - lm) / (2.0 * h);
      CHECK(std::abs(analytic - fd) <=
            1e-6 * std::max({std::abs(analytic), std::abs(fd), 1e-4}));
    };

    for (int l = 0; l < p.n_layers(); ++l) {
      // Spot-check a deterministic spread of weight entries plus all biases.
      for (int k = 0; k < p.weights[l].size(); k += 7)
        check_entry(tape.d_weights[l].data()[k], p.weights[l].data() + k);
      for (int i = 0; i < p.biases[l].size(); ++i)
        check_entry(tape.d_biases[l][i], p.biases[l].data() + i);
    }

    // Input gradient against finite differences too.
    for (int k = 0; k < x.size(); k += 3) {
      const double saved = x.data()[k];
      x.data()[k] = saved + h;
      const double lp = loss(p);
      x.data()[k] = saved - h;
      const double lm = loss(p);
      x.data()[k] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      CHECK(std::abs(dx.data()[k] - fd) <=
            1e-6 * std::max({std::abs(dx.data()[k]), std::abs(fd), 1e-4}));
    }
  }
}

TEST_CASE("softplus identity softplus(x) - softplus(-x) = x") {
  Eigen::ArrayXXd x(1, 61);
  for (int i = 0; i <= 60; ++i) x(0, i) = -30.0 + i;
  Eigen::ArrayXXd d = softplus(x) - softplus(-x) - x;
  CHECK(d.abs().maxCoeff() <= 1e-12);
}

TEST_CASE("fast_tanh matches libm tanh to 1 ulp scale") {
  Rng rng(31);
  Eigen::ArrayXXd x(1, 1000);
  for (int i = 0; i < 1000; ++i) x(0, i) = rng.uniform(-40.0, 40.0);
  Eigen::ArrayXXd y = fast_tanh(x);
  for (int i = 0; i < 1000; ++i)
    CHECK(std::abs(y(0, i) - std::tanh(x(0, i))) <= 5e-16);
}
