#include "lsem/fom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lsem/rng.hpp"

namespace lsem {

namespace {

int snapshot_count(double dt, double t_end) {
  const int n_steps = static_cast<int>(std::llround(t_end / dt));
  if (n_steps < 1 || std::abs(n_steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("solver: t_end must be a positive multiple of dt");
  return n_steps + 1;
}

}  // namespace

Eigen::VectorXd burgers_ic(const Grid1D& grid, double amplitude, double width,
                           const std::vector<double>& centers) {
  if (!(width > 0.0)) throw std::invalid_argument("burgers_ic: width must be positive");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(grid.n_points);
  for (double xc : centers)
    for (int i = 0; i < grid.n_points; ++i) {
      const double r = (grid.x(i) - xc) / width;
      q[i] += amplitude * std::exp(-r * r);
    }
  return q;
}

SnapshotSet burgers_solve(const Eigen::VectorXd& ic, const Grid1D& grid, double dt,
                          double t_end, double solver_tol, int max_inner_iters) {
  if (grid.periodic)
    throw std::invalid_argument("burgers_solve: grid must be non-periodic");
  if (ic.size() != grid.n_points)
    throw std::invalid_argument("burgers_solve: initial condition length mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("burgers_solve: dt must be positive");

  const int n = grid.n_points;
  const double dx = grid.dx();
  const int n_snap = snapshot_count(dt, t_end);

  Eigen::MatrixXd values(n, n_snap);
  Eigen::VectorXd q = ic;
  q[0] = 0.0;
  q[n - 1] = 0.0;
  values.col(0) = q;

  // Upwind advection residual of the implicit step at state u:
  //   r_i = u_i - q_i + dt * u_i * D(u)_i, side of D chosen by sign(u_i).
  auto residual_inf = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& qn) {
    double worst = 0.0;
    for (int i = 1; i < n - 1; ++i) {
      const double dqdx =
          u[i] >= 0.0 ? (u[i] - u[i - 1]) / dx : (u[i + 1] - u[i]) / dx;
      worst = std::max(worst, std::abs(u[i] - qn[i] + dt * u[i] * dqdx));
    }
    return worst;
  };

  Eigen::VectorXd lower(n), diag(n), upper(n), rhs(n), u(n), cp(n), dp(n);

  for (int step = 1; step < n_snap; ++step) {
    const Eigen::VectorXd qn = q;
    u = qn;  // Picard initial guess

    bool converged = false;
    for (int it = 0; it < max_inner_iters; ++it) {
      // Lag the advection coefficient c = u; each Picard pass solves the
      // linear tridiagonal system (I + dt*c*D_upwind) u_new = qn.
      lower.setZero();
      upper.setZero();
      diag.setOnes();
      rhs = qn;
      for (int i = 1; i < n - 1; ++i) {
        const double c = u[i];
        if (c >= 0.0) {
          diag[i] = 1.0 + dt * c / dx;
          lower[i] = -dt * c / dx;
        } else {
          diag[i] = 1.0 - dt * c / dx;
          upper[i] = dt * c / dx;
        }
      }
      rhs[0] = 0.0;
      rhs[n - 1] = 0.0;

      // Thomas algorithm (diagonally dominant by construction).
      cp[0] = upper[0] / diag[0];
      dp[0] = rhs[0] / diag[0];
      for (int i = 1; i < n; ++i) {
        const double m = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / m;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m;
      }
      u[n - 1] = dp[n - 1];
      for (int i = n - 2; i >= 0; --i) u[i] = dp[i] - cp[i] * u[i + 1];

      if (residual_inf(u, qn) <= solver_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error(
          "burgers_solve: inner iteration stalled at step " + std::to_string(step) +
          ", residual " + std::to_string(residual_inf(u, qn)));
    q = u;
    values.col(step) = q;
  }

  return SnapshotSet(grid, uniform_times(0.0, dt, n_snap), std::move(values));
}

Eigen::VectorXd kdv_ic_field(const Grid1D& grid, const KdvIcSpec& spec) {
  if (spec.amplitudes.size() != spec.centers.size())
    throw std::invalid_argument("kdv_ic_field: amplitude/center count mismatch");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(grid.n_points);
  for (std::size_t k = 0; k < spec.centers.size(); ++k) {
    if (spec.amplitudes[k] == 0) continue;
    for (int i = 0; i < grid.n_points; ++i) {
      const double c = std::cosh(grid.x(i) - spec.centers[k]);
      q[i] += 6.0 / (c * c);
    }
  }
  return q;
}

std::pair<Eigen::VectorXd, KdvIcSpec> kdv_ic(const Grid1D& grid,
                                             const ElementLayout& layout,
                                             std::uint64_t seed) {
  if (layout.grid.n_points != grid.n_points ||
      layout.elements.back().end_index() != grid.n_points)
    throw std::invalid_argument("kdv_ic: layout does not cover the grid");

  const int n_cells = layout.n_elements();
  const double cell = (grid.x_max - grid.x_min) / n_cells;
  constexpr int kMaxAttempts = 32;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t attempt_seed =
        attempt == 0 ? seed : Rng::derive_seed(seed, attempt);
    Rng rng(attempt_seed);
    KdvIcSpec spec;
    spec.seed = attempt_seed;
    bool any_on = false;
    for (int k = 0; k < n_cells; ++k) {
      const int a = rng.bernoulli(0.5) ? 1 : 0;
      const double center = rng.normal(grid.x_min + (k + 0.5) * cell, 0.1 * cell);
      spec.amplitudes.push_back(a);
      spec.centers.push_back(center);
      any_on |= a == 1;
    }
    if (any_on) return {kdv_ic_field(grid, spec), spec};
  }
  throw std::runtime_error("kdv_ic: all draws were trivial after 32 attempts");
}

namespace {

/// Periodic KdV right-hand side: -(6 q q_x + q_xxx) with central stencils
///   q_x   = (q_{i+1} - q_{i-1}) / (2 dx)
///   q_xxx = (q_{i+2} - 2 q_{i+1} + 2 q_{i-1} - q_{i-2}) / (2 dx^3)
void kdv_rhs(const Eigen::VectorXd& q, double dx, Eigen::VectorXd& out) {
  const int n = static_cast<int>(q.size());
  const double inv2dx = 1.0 / (2.0 * dx);
  const double inv2dx3 = 1.0 / (2.0 * dx * dx * dx);
  for (int i = 0; i < n; ++i) {
    const int im2 = i >= 2 ? i - 2 : i - 2 + n;
    const int im1 = i >= 1 ? i - 1 : i - 1 + n;
    const int ip1 = i + 1 < n ? i + 1 : i + 1 - n;
    const int ip2 = i + 2 < n ? i + 2 : i + 2 - n;
    const double qx = (q[ip1] - q[im1]) * inv2dx;
    const double qxxx = (q[ip2] - 2.0 * q[ip1] + 2.0 * q[im1] - q[im2]) * inv2dx3;
    out[i] = -(6.0 * q[i] * qx + qxxx);
  }
}

}  // namespace

SnapshotSet kdv_solve(const Eigen::VectorXd& ic, const Grid1D& grid,
                      double dt_snapshot, double t_end, SubstepPolicy policy) {
  if (!grid.periodic) throw std::invalid_argument("kdv_solve: grid must be periodic");
  if (ic.size() != grid.n_points)
    throw std::invalid_argument("kdv_solve: initial condition length mismatch");
  if (!(dt_snapshot > 0.0))
    throw std::invalid_argument("kdv_solve: dt_snapshot must be positive");
  if (policy.refine < 1) throw std::invalid_argument("kdv_solve: refine must be >= 1");

  const int n = grid.n_points;
  const double dx = grid.dx();
  const int n_snap = snapshot_count(dt_snapshot, t_end);

  // Linearized stencil spectral radius: the dispersive symbol
  // (sin 2k - 2 sin k)/dx^3 peaks at (3*sqrt(3)/2)/dx^3, plus an advective
  // bound 6 max|q| / dx. RK4's imaginary-axis stability limit is ~2.828.
  const double rho = (3.0 * std::sqrt(3.0) / 2.0) / (dx * dx * dx) +
                     6.0 * ic.cwiseAbs().maxCoeff() / dx;
  const double dt_stable = policy.safety * 2.8 / rho;
  const int n_sub =
      std::max(1, static_cast<int>(std::ceil(dt_snapshot / dt_stable))) * policy.refine;
  const double dt = dt_snapshot / n_sub;

  Eigen::MatrixXd values(n, n_snap);
  Eigen::VectorXd q = ic;
  values.col(0) = q;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);

  for (int snap = 1; snap < n_snap; ++snap) {
    for (int s = 0; s < n_sub; ++s) {
      kdv_rhs(q, dx, k1);
      tmp = q + 0.5 * dt * k1;
      kdv_rhs(tmp, dx, k2);
      tmp = q + 0.5 * dt * k2;
      kdv_rhs(tmp, dx, k3);
      tmp = q + dt * k3;
      kdv_rhs(tmp, dx, k4);
      q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!q.allFinite())
      throw std::runtime_error("kdv_solve: non-finite state at snapshot " +
                               std::to_string(snap));
    values.col(snap) = q;
  }

  return SnapshotSet(grid, uniform_times(0.0, dt_snapshot, n_snap), std::move(values));
}

double periodic_mass(const Grid1D& grid, const Eigen::VectorXd& q) {
  return grid.dx() * q.sum();
}

}  // namespace lsem
