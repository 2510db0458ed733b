#ifndef LSEM_OPTIMIZER_HPP
#define LSEM_OPTIMIZER_HPP

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace lsem {

/// View of one trainable tensor (bias vectors are n x 1).
struct ParamSlot {
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update; grads[i] matches the shape of slots[i].
  virtual void step(const std::vector<ParamSlot>& slots,
                    const std::vector<Eigen::MatrixXd>& grads) = 0;
};

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
std::unique_ptr<Optimizer> make_adam(double learning_rate);

/// SOAP: Adam run in the eigenbasis of Shampoo's two-sided gradient
/// covariances, refreshed every few steps. Vector-shaped tensors fall back
/// to plain Adam.
std::unique_ptr<Optimizer> make_soap(double learning_rate);

}  // namespace lsem

#endif
