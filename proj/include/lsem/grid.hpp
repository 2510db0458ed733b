#ifndef LSEM_GRID_HPP
#define LSEM_GRID_HPP

#include <Eigen/Dense>

namespace lsem {

/// Uniform 1D grid. For periodic grids the point at x_max is identified with
/// the one at x_min and is not stored, so dx = L/n; otherwise dx = L/(n-1).
struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  int n_points = 0;
  bool periodic = false;

  Grid1D() = default;
  Grid1D(double xmin, double xmax, int n, bool is_periodic);

  double dx() const {
    return periodic ? (x_max - x_min) / n_points
                    : (x_max - x_min) / (n_points - 1);
  }
  double x(int i) const { return x_min + i * dx(); }

  bool operator==(const Grid1D&) const = default;
};

/// Space-time solution matrix: one column per time sample, one row per grid
/// point. Times must be uniformly spaced.
struct SnapshotSet {
  Grid1D grid;
  Eigen::VectorXd times;
  Eigen::MatrixXd values;

  SnapshotSet() = default;
  SnapshotSet(Grid1D g, Eigen::VectorXd t, Eigen::MatrixXd v);

  int n_times() const { return static_cast<int>(times.size()); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Uniform time axis t_k = t0 + k*dt for k = 0..n_times-1.
Eigen::VectorXd uniform_times(double t0, double dt, int n_times);

}  // namespace lsem

#endif
