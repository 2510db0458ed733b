#include "lsem/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lsem {

Grid1D::Grid1D(double xmin, double xmax, int n, bool is_periodic)
    : x_min(xmin), x_max(xmax), n_points(n), periodic(is_periodic) {
  if (n_points < 3) {
    throw std::invalid_argument("Grid1D: n_points must be >= 3, got " +
                                std::to_string(n_points));
  }
  if (!(x_max > x_min)) {
    throw std::invalid_argument("Grid1D: x_max must exceed x_min");
  }
}

SnapshotSet::SnapshotSet(Grid1D g, Eigen::VectorXd t, Eigen::MatrixXd v)
    : grid(g), times(std::move(t)), values(std::move(v)) {
  if (values.rows() != grid.n_points) {
    throw std::invalid_argument("SnapshotSet: values must have one row per grid point");
  }
  if (values.cols() != times.size()) {
    throw std::invalid_argument("SnapshotSet: values must have one column per time");
  }
  if (times.size() >= 3) {
    const double step = times[1] - times[0];
    const double scale = std::max(std::abs(times[times.size() - 1]), std::abs(step));
    for (int k = 2; k < times.size(); ++k) {
      if (std::abs(times[k] - times[k - 1] - step) > 1e-12 * scale) {
        throw std::invalid_argument("SnapshotSet: times must be uniformly spaced");
      }
    }
  }
}

Eigen::VectorXd uniform_times(double t0, double dt, int n_times) {
  Eigen::VectorXd t(n_times);
  for (int k = 0; k < n_times; ++k) t[k] = t0 + k * dt;
  return t;
}

}  // namespace lsem
