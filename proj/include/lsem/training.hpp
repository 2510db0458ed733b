#ifndef LSEM_TRAINING_HPP
#define LSEM_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "lsem/latent_dynamics.hpp"
#include "lsem/model.hpp"
#include "lsem/tiling.hpp"

namespace lsem {

enum class OptimizerKind { adam, soap };
enum class RegKind { eigen, energy, none };

struct TrainConfig {
  double alpha_ae = 1.0;
  double alpha_ld = 1.0;
  double alpha_reg = 0.0;
  double beta = 0.1;  // reparameterization noise gain
  double learning_rate = 3e-3;
  int epochs = 1;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  RegKind reg_kind = RegKind::eigen;
  Formulation formulation = Formulation::one_way;
  int checkpoint_interval = 0;  // epochs between checkpoints; 0 disables
};

/// One training simulation: its element layout and the per-subdomain
/// restrictions of the snapshot matrix.
struct TrainingSimulation {
  ElementLayout layout;
  std::vector<Eigen::MatrixXd> subdomain_snapshots;  // one N_m x N_t block per element
  double dt = 0.0;

  int n_times() const {
    return subdomain_snapshots.empty()
               ? 0
               : static_cast<int>(subdomain_snapshots[0].cols());
  }
};
using TrainingSet = std::vector<TrainingSimulation>;

TrainingSimulation make_training_simulation(const SnapshotSet& snapshots,
                                            const ElementLayout& layout);

/// Second-order finite-difference time derivative along columns: central in
/// the interior, one-sided three-point stencils at the first/last columns.
Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& Z, double dt);

/// Stacked latent trajectories Z^(n), one (n_elements*N_z) x N_t matrix per
/// simulation, elements in layout order.
std::vector<Eigen::MatrixXd> encode_training_set(
    const std::vector<ElementAutoencoder>& aes, const TrainingSet& set);

/// Time-dependent noise level eps(t_k) = beta * k * RMS(D_t Z - Xi Phi(Z)),
/// one scalar RMS over all entries of the latent-ODE residual.
Eigen::VectorXd noise_std(const Eigen::MatrixXd& Z, const GlobalSystem& system,
                          double beta, double dt);

/// delta-Z draws, one N_z x N_t matrix per (simulation, element), with
/// column k drawn i.i.d. Normal(0, eps_n(t_k)^2).
using NoiseDraws = std::vector<std::vector<Eigen::MatrixXd>>;
NoiseDraws draw_noise(const std::vector<Eigen::MatrixXd>& Zs,
                      const std::vector<GlobalSystem>& systems,
                      const TrainingSet& set, double beta, std::uint64_t seed);

/// Mean over simulations of the per-subdomain reconstruction MSE under the
/// given latent perturbations.
double loss_ae(const std::vector<ElementAutoencoder>& aes, const TrainingSet& set,
               const NoiseDraws& noise);

/// Mean over simulations of MSE(D_t Z, Xi Phi(Z)).
double loss_ld(const std::vector<Eigen::MatrixXd>& Zs,
               const std::vector<GlobalSystem>& systems, const TrainingSet& set);

/// Sum over eigenvalues of ReLU(Re lambda)^2 of the assembled linear operator.
double reg_eigen(const Eigen::MatrixXd& op);
/// Same penalty plus d(penalty)/d(op) via the eigenvalue adjoint; falls back
/// to finite differences when the eigenvector basis is ill-conditioned.
double reg_eigen_with_gradient(const Eigen::MatrixXd& op, Eigen::MatrixXd& d_op);

/// Per simulation, (1/N_t) sum_k ReLU(z_k^T Xi Phi(z_k)), summed over sims.
double reg_energy(const std::vector<Eigen::MatrixXd>& Zs,
                  const std::vector<GlobalSystem>& systems);

struct LossBreakdown {
  double total = 0.0;
  double ae = 0.0;
  double ld = 0.0;
  double reg = 0.0;
};

/// Gradients of the total loss with respect to every trainable tensor.
struct ModelGradients {
  std::vector<GradientTape> encoder_tapes;  // per element type
  std::vector<GradientTape> decoder_tapes;
  Eigen::MatrixXd d_xi_internal;
  std::map<Direction, Eigen::MatrixXd> d_xi_dir;
};

/// Total loss J = a_AE J_AE + a_LD J_LD + a_reg J_reg with exact reverse-mode
/// gradients through the decoders, encoders, and all Xi blocks. The noise
/// draws are treated as fixed inputs. Pass grads = nullptr for loss only.
LossBreakdown total_loss_and_gradients(const std::vector<ElementAutoencoder>& aes,
                                       const InteractionDynamics& dyn,
                                       const TrainingSet& set,
                                       const NoiseDraws& noise,
                                       const TrainConfig& config,
                                       ModelGradients* grads);

struct TrainResult {
  std::vector<ElementAutoencoder> autoencoders;
  InteractionDynamics dynamics;
  std::vector<LossBreakdown> history;
};

using CheckpointFn = std::function<void(int epoch, const std::vector<ElementAutoencoder>&,
                                        const InteractionDynamics&, const LossBreakdown&)>;

/// Full-batch gradient training of all autoencoder parameters and Xi blocks.
/// Fresh noise draws every epoch; deterministic given config.seed.
TrainResult train(const TrainingSet& set, const TrainConfig& config,
                  std::vector<ElementAutoencoder> aes, InteractionDynamics dyn,
                  const CheckpointFn& checkpoint = {});

}  // namespace lsem

#endif
