#ifndef LSEM_MLP_HPP
#define LSEM_MLP_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace lsem {

enum class Activation { softplus, tanh };

/// Weight stack of one fully connected network. Hidden layers apply the
/// configured activation; the output layer is linear.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;   // biases[l]:  sizes[l+1]
  Activation activation = Activation::softplus;
  int type_id = 0;

  int n_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
};

/// Per-parameter gradient accumulators, shaped like the MlpParams they mirror.
struct GradientTape {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;

  static GradientTape zeros_like(const MlpParams& params);
  GradientTape& operator+=(const GradientTape& other);
  GradientTape& operator*=(double s);
};

/// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic in the seed.
MlpParams init_params(const std::vector<int>& layer_sizes, Activation activation,
                      std::uint64_t seed, int type_id = 0);

/// Forward pass for a batch of inputs (one column each).
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Named entry points for the two halves of an autoencoder; both are the
/// same forward map applied to different parameter stacks.
inline Eigen::MatrixXd encode(const MlpParams& encoder, const Eigen::MatrixXd& q) {
  return forward(encoder, q);
}
inline Eigen::MatrixXd decode(const MlpParams& decoder, const Eigen::MatrixXd& z) {
  return forward(decoder, z);
}

/// Forward pass that keeps what the backward pass needs.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> layer_inputs;  // inputs[l] fed to layer l
  std::vector<Eigen::MatrixXd> preacts;       // only kept for softplus nets
  Eigen::MatrixXd output;
};
ForwardTrace forward_trace(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Reverse-mode gradients of the forward map. Adds parameter gradients into
/// `tape` and returns d(loss)/d(inputs) for the given upstream d(loss)/d(output).
Eigen::MatrixXd backprop(const MlpParams& params, const ForwardTrace& trace,
                         const Eigen::MatrixXd& upstream, GradientTape& tape);

/// Overflow-safe softplus max(x,0) + log1p(exp(-|x|)) and its derivative.
Eigen::ArrayXXd softplus(const Eigen::ArrayXXd& x);
Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x);
/// tanh evaluated through the vectorized exponential (accurate to ~1 ulp,
/// much faster than the scalar libm fallback for double).
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& x);

}  // namespace lsem

#endif
