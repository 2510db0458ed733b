#include "lsem/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lsem/rng.hpp"

namespace lsem {

GradientTape GradientTape::zeros_like(const MlpParams& params) {
  GradientTape tape;
  tape.d_weights.reserve(params.weights.size());
  tape.d_biases.reserve(params.biases.size());
  for (const auto& w : params.weights)
    tape.d_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases)
    tape.d_biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return tape;
}

GradientTape& GradientTape::operator+=(const GradientTape& other) {
  if (d_weights.size() != other.d_weights.size())
    throw std::invalid_argument("GradientTape: layer count mismatch");
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    d_weights[l] += other.d_weights[l];
    d_biases[l] += other.d_biases[l];
  }
  return *this;
}

GradientTape& GradientTape::operator*=(double s) {
  for (auto& w : d_weights) w *= s;
  for (auto& b : d_biases) b *= s;
  return *this;
}

MlpParams init_params(const std::vector<int>& layer_sizes, Activation activation,
                      std::uint64_t seed, int type_id) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("init_params: need at least input and output sizes");
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("init_params: zero-width layer");

  MlpParams params;
  params.layer_sizes = layer_sizes;
  params.activation = activation;
  params.type_id = type_id;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

Eigen::ArrayXXd softplus(const Eigen::ArrayXXd& x) {
  return x.max(0.0) + (-x.abs()).exp().log1p();
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& s) {
  if (act == Activation::softplus) return softplus(s.array()).matrix();
  return fast_tanh(s.array()).matrix();
}

void check_input(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != params.input_size())
    throw std::invalid_argument("mlp: input has " + std::to_string(inputs.rows()) +
                                " rows, expected " +
                                std::to_string(params.input_size()));
}

}  // namespace

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_input(params, inputs);
  Eigen::MatrixXd a = inputs;
  const int last = params.n_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd s = params.weights[l] * a;
    s.colwise() += params.biases[l];
    a = (l == last) ? std::move(s) : apply_activation(params.activation, s);
  }
  return a;
}

ForwardTrace forward_trace(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_input(params, inputs);
  ForwardTrace trace;
  const int last = params.n_layers() - 1;
  trace.layer_inputs.reserve(last + 1);
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l <= last; ++l) {
    trace.layer_inputs.push_back(a);
    Eigen::MatrixXd s = params.weights[l] * a;
    s.colwise() += params.biases[l];
    if (l == last) {
      trace.output = std::move(s);
    } else {
      // tanh' recovers from the output (1 - y^2); softplus' needs the preact.
      if (params.activation == Activation::softplus) trace.preacts.push_back(s);
      a = apply_activation(params.activation, s);
    }
  }
  return trace;
}

Eigen::MatrixXd backprop(const MlpParams& params, const ForwardTrace& trace,
                         const Eigen::MatrixXd& upstream, GradientTape& tape) {
  const int last = params.n_layers() - 1;
  if (upstream.rows() != params.output_size() ||
      upstream.cols() != trace.output.cols())
    throw std::invalid_argument("backprop: upstream gradient shape mismatch");
  if (tape.d_weights.size() != params.weights.size())
    throw std::invalid_argument("backprop: tape shape mismatch");

  Eigen::MatrixXd delta = upstream;
  for (int l = last; l >= 0; --l) {
    tape.d_weights[l].noalias() += delta * trace.layer_inputs[l].transpose();
    tape.d_biases[l] += delta.rowwise().sum();
    Eigen::MatrixXd prev = params.weights[l].transpose() * delta;
    if (l > 0) {
      if (params.activation == Activation::softplus) {
        prev.array() *= sigmoid(trace.preacts[l - 1].array());
      } else {
        // layer_inputs[l] holds tanh of the previous preactivation.
        prev.array() *= 1.0 - trace.layer_inputs[l].array().square();
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace lsem
