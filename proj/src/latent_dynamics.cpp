#include "lsem/latent_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lsem {

Eigen::VectorXd eval_features(const FeatureLibrary& lib, const Eigen::VectorXd& z) {
  if (z.size() != lib.n_z)
    throw std::invalid_argument("eval_features: latent dimension mismatch");
  Eigen::VectorXd phi(lib.m_features());
  switch (lib.kind) {
    case LibraryKind::linear:
      phi = z;
      break;
    case LibraryKind::linear_const:
      phi[0] = 1.0;
      phi.tail(lib.n_z) = z;
      break;
    case LibraryKind::poly2: {
      phi[0] = 1.0;
      phi.segment(1, lib.n_z) = z;
      int k = 1 + lib.n_z;
      for (int i = 0; i < lib.n_z; ++i)
        for (int j = i; j < lib.n_z; ++j) phi[k++] = z[i] * z[j];
      break;
    }
  }
  return phi;
}

Eigen::MatrixXd eval_features_batch(const FeatureLibrary& lib, const Eigen::MatrixXd& Z) {
  if (Z.rows() != lib.n_z)
    throw std::invalid_argument("eval_features_batch: latent dimension mismatch");
  switch (lib.kind) {
    case LibraryKind::linear:
      return Z;
    case LibraryKind::linear_const: {
      Eigen::MatrixXd phi(lib.m_features(), Z.cols());
      phi.row(0).setOnes();
      phi.bottomRows(lib.n_z) = Z;
      return phi;
    }
    case LibraryKind::poly2: {
      Eigen::MatrixXd phi(lib.m_features(), Z.cols());
      phi.row(0).setOnes();
      phi.middleRows(1, lib.n_z) = Z;
      int k = 1 + lib.n_z;
      for (int i = 0; i < lib.n_z; ++i)
        for (int j = i; j < lib.n_z; ++j)
          phi.row(k++) = Z.row(i).cwiseProduct(Z.row(j));
      return phi;
    }
  }
  throw std::logic_error("eval_features_batch: unknown library kind");
}

Eigen::MatrixXd feature_jacobian(const FeatureLibrary& lib, const Eigen::VectorXd& z) {
  if (z.size() != lib.n_z)
    throw std::invalid_argument("feature_jacobian: latent dimension mismatch");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(lib.m_features(), lib.n_z);
  switch (lib.kind) {
    case LibraryKind::linear:
      jac.setIdentity();
      break;
    case LibraryKind::linear_const:
      jac.bottomRows(lib.n_z).setIdentity();
      break;
    case LibraryKind::poly2: {
      jac.middleRows(1, lib.n_z).setIdentity();
      int k = 1 + lib.n_z;
      for (int i = 0; i < lib.n_z; ++i)
        for (int j = i; j < lib.n_z; ++j) {
          jac(k, i) += z[j];
          jac(k, j) += z[i];
          ++k;
        }
      break;
    }
  }
  return jac;
}

Direction opposite(Direction d) {
  switch (d) {
    case Direction::tl: return Direction::br;
    case Direction::t: return Direction::b;
    case Direction::tr: return Direction::bl;
    case Direction::l: return Direction::r;
    case Direction::r: return Direction::l;
    case Direction::bl: return Direction::tr;
    case Direction::b: return Direction::t;
    case Direction::br: return Direction::tl;
  }
  throw std::logic_error("opposite: bad direction");
}

std::string direction_name(Direction d) {
  switch (d) {
    case Direction::tl: return "tl";
    case Direction::t: return "t";
    case Direction::tr: return "tr";
    case Direction::l: return "l";
    case Direction::r: return "r";
    case Direction::bl: return "bl";
    case Direction::b: return "b";
    case Direction::br: return "br";
  }
  return "?";
}

InteractionDynamics make_zero_dynamics(const FeatureLibrary& lib,
                                       const std::vector<Direction>& directions,
                                       Formulation formulation) {
  InteractionDynamics dyn;
  dyn.library = lib;
  dyn.formulation = formulation;
  dyn.xi_internal = Eigen::MatrixXd::Zero(lib.n_z, lib.m_features());
  for (Direction d : directions)
    dyn.xi_dir[d] = Eigen::MatrixXd::Zero(lib.n_z, lib.m_features());
  return dyn;
}

ElementAdjacency ElementAdjacency::chain(int n_elements) {
  ElementAdjacency adj;
  adj.neighbors.resize(n_elements);
  for (int e = 0; e < n_elements; ++e) {
    if (e > 0) adj.neighbors[e].push_back({e - 1, Direction::l});
    if (e + 1 < n_elements) adj.neighbors[e].push_back({e + 1, Direction::r});
  }
  return adj;
}

GlobalSystem assemble_global(const InteractionDynamics& dyn,
                             const ElementAdjacency& adjacency) {
  GlobalSystem sys;
  sys.adjacency = adjacency;
  sys.library = dyn.library;
  sys.formulation = dyn.formulation;
  sys.n_z = dyn.n_z();

  auto dir_block = [&](Direction d) -> const Eigen::MatrixXd& {
    auto it = dyn.xi_dir.find(d);
    if (it == dyn.xi_dir.end())
      throw std::invalid_argument("assemble_global: adjacency needs direction '" +
                                  direction_name(d) + "' but no block is defined");
    return it->second;
  };

  // Collect (row, src, tag, matrix) contributions, then merge per position.
  struct Contribution {
    int row, src;
    BlockTag tag;
    const Eigen::MatrixXd* mat;
  };
  std::vector<Contribution> contribs;
  const int n = adjacency.n_elements();
  for (int e = 0; e < n; ++e) {
    contribs.push_back({e, e, BlockTag{true, Direction::l}, &dyn.xi_internal});
    for (const auto& [nbr, dir_of_nbr] : adjacency.neighbors[e]) {
      contribs.push_back({e, nbr, BlockTag{false, dir_of_nbr}, &dir_block(dir_of_nbr)});
      if (dyn.formulation == Formulation::bidirectional) {
        // Center-element term: the direction of e as seen from the neighbor.
        const Direction d = opposite(dir_of_nbr);
        contribs.push_back({e, e, BlockTag{false, d}, &dir_block(d)});
      }
    }
  }

  std::stable_sort(contribs.begin(), contribs.end(),
                   [](const Contribution& a, const Contribution& b) {
                     return std::tie(a.row, a.src) < std::tie(b.row, b.src);
                   });
  for (const auto& c : contribs) {
    sys.placements.push_back({c.row, c.src, c.tag});
    if (!sys.blocks.empty() && sys.blocks.back().row == c.row &&
        sys.blocks.back().src == c.src) {
      sys.blocks.back().block += *c.mat;
    } else {
      sys.blocks.push_back({c.row, c.src, *c.mat});
    }
  }
  return sys;
}

Eigen::MatrixXd GlobalSystem::dense() const {
  const int m = library.m_features();
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n_elements() * n_z, n_elements() * m);
  for (const auto& b : blocks)
    op.block(b.row * n_z, b.src * m, n_z, m) += b.block;
  return op;
}

Eigen::VectorXd global_rhs(const GlobalSystem& system, const Eigen::VectorXd& z_global) {
  if (z_global.size() != system.global_dim())
    throw std::invalid_argument("global_rhs: stacked latent length mismatch");
  const int nz = system.n_z;
  std::vector<Eigen::VectorXd> phi(system.n_elements());
  for (int e = 0; e < system.n_elements(); ++e)
    phi[e] = eval_features(system.library, z_global.segment(e * nz, nz));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(system.global_dim());
  for (const auto& b : system.blocks)
    out.segment(b.row * nz, nz).noalias() += b.block * phi[b.src];
  return out;
}

Eigen::MatrixXd global_rhs_batch(const GlobalSystem& system, const Eigen::MatrixXd& Z) {
  if (Z.rows() != system.global_dim())
    throw std::invalid_argument("global_rhs_batch: stacked latent rows mismatch");
  const int nz = system.n_z;
  std::vector<Eigen::MatrixXd> phi(system.n_elements());
  for (int e = 0; e < system.n_elements(); ++e)
    phi[e] = eval_features_batch(system.library, Z.middleRows(e * nz, nz));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Z.rows(), Z.cols());
  for (const auto& b : system.blocks)
    out.middleRows(b.row * nz, nz).noalias() += b.block * phi[b.src];
  return out;
}

Eigen::MatrixXd integrate_latent(const GlobalSystem& system, const Eigen::VectorXd& z0,
                                 const Eigen::VectorXd& times) {
  if (z0.size() != system.global_dim())
    throw std::invalid_argument("integrate_latent: z0 length mismatch");
  const int n_t = static_cast<int>(times.size());
  Eigen::MatrixXd traj(z0.size(), n_t);
  traj.col(0) = z0;
  Eigen::VectorXd z = z0;
  for (int k = 1; k < n_t; ++k) {
    const double dt = times[k] - times[k - 1];
    const Eigen::VectorXd k1 = global_rhs(system, z);
    const Eigen::VectorXd k2 = global_rhs(system, z + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = global_rhs(system, z + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = global_rhs(system, z + dt * k3);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite())
      throw std::runtime_error("integrate_latent: non-finite state at step " +
                               std::to_string(k));
    traj.col(k) = z;
  }
  return traj;
}

Eigen::VectorXcd spectrum(const Eigen::MatrixXd& op) {
  if (op.rows() != op.cols())
    throw std::invalid_argument("spectrum: operator must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(op, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectrum: QR iteration did not converge");
  return solver.eigenvalues();
}

Eigen::VectorXcd spectrum(const GlobalSystem& system) {
  if (system.library.kind != LibraryKind::linear)
    throw std::invalid_argument("spectrum: requires the linear feature library");
  return spectrum(system.dense());
}

}  // namespace lsem
