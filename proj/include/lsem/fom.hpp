#ifndef LSEM_FOM_HPP
#define LSEM_FOM_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsem/grid.hpp"
#include "lsem/tiling.hpp"

namespace lsem {

/// Sum of Gaussian pulses A*exp(-(x-x_k)^2/w^2) sampled at grid nodes.
/// An empty center list yields the zero field.
Eigen::VectorXd burgers_ic(const Grid1D& grid, double amplitude, double width,
                           const std::vector<double>& centers);

/// Advances dq/dt + q dq/dx = 0 with first-order upwind fluxes (side chosen
/// per node from the sign of q) and implicit backward Euler. Each step's
/// nonlinear system is solved by Picard iteration (advection coefficient
/// lagged) to residual inf-norm <= solver_tol. Homogeneous Dirichlet values
/// at both ends; every step is stored as a snapshot column.
SnapshotSet burgers_solve(const Eigen::VectorXd& ic, const Grid1D& grid, double dt,
                          double t_end, double solver_tol = 1e-10,
                          int max_inner_iters = 50);

/// Random soliton arrangement: which cells are on, where their centers are,
/// and the seed that produced the draw.
struct KdvIcSpec {
  std::vector<int> amplitudes;     // 0/1 per cell
  std::vector<double> centers;
  std::uint64_t seed = 0;
};

/// Field sum_k A_k * 6/cosh^2(x - x_k) for a given spec.
Eigen::VectorXd kdv_ic_field(const Grid1D& grid, const KdvIcSpec& spec);

/// Draws A_k ~ Bernoulli(1/2) and x_k ~ Normal(cell-k center, (0.1 L_e)^2)
/// with L_e the nominal cell length (domain length / n_elements). All-zero
/// draws are re-sampled under a derived seed, up to a hard retry cap.
std::pair<Eigen::VectorXd, KdvIcSpec> kdv_ic(const Grid1D& grid,
                                             const ElementLayout& layout,
                                             std::uint64_t seed);

/// Internal time-step control for the KdV integrator. The inner step is
/// dt_inner = min(dt_snapshot, safety * 2.8 / rho) / refine, with rho a
/// spectral-radius estimate of the linearized stencil, rounded so snapshots
/// land exactly on multiples of dt_snapshot.
struct SubstepPolicy {
  double safety = 0.6;
  int refine = 1;
};

/// Advances dq/dt + 6 q dq/dx + d3q/dx3 = 0 on a periodic grid with
/// second-order central stencils and classical RK4, recording snapshots at
/// multiples of dt_snapshot.
SnapshotSet kdv_solve(const Eigen::VectorXd& ic, const Grid1D& grid,
                      double dt_snapshot, double t_end,
                      SubstepPolicy policy = {});

/// Discrete mass dx * sum(q) of a periodic field (trapezoid rule with the
/// wrap-around point identified).
double periodic_mass(const Grid1D& grid, const Eigen::VectorXd& q);

}  // namespace lsem

#endif
