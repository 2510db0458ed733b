#ifndef LSEM_LATENT_DYNAMICS_HPP
#define LSEM_LATENT_DYNAMICS_HPP

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lsem {

enum class LibraryKind { linear, linear_const, poly2 };

/// Fixed vector of candidate functions of the latent state.
struct FeatureLibrary {
  LibraryKind kind = LibraryKind::linear;
  int n_z = 0;

  int m_features() const {
    switch (kind) {
      case LibraryKind::linear: return n_z;
      case LibraryKind::linear_const: return n_z + 1;
      case LibraryKind::poly2: return 1 + n_z + n_z * (n_z + 1) / 2;
    }
    return 0;
  }
  bool operator==(const FeatureLibrary&) const = default;
};

Eigen::VectorXd eval_features(const FeatureLibrary& lib, const Eigen::VectorXd& z);
/// Features of each column of Z, stacked as columns.
Eigen::MatrixXd eval_features_batch(const FeatureLibrary& lib, const Eigen::MatrixXd& Z);
/// d(features)/dz at z: m_features x n_z.
Eigen::MatrixXd feature_jacobian(const FeatureLibrary& lib, const Eigen::VectorXd& z);

/// Neighbor directions. 1D chains use {left, right}; the remaining compass
/// labels are reserved for grid adjacencies.
enum class Direction { tl, t, tr, l, r, bl, b, br };
Direction opposite(Direction d);
std::string direction_name(Direction d);

enum class Formulation { one_way, bidirectional };

/// Internal block plus one coefficient block per neighbor direction.
struct InteractionDynamics {
  FeatureLibrary library;
  Eigen::MatrixXd xi_internal;                // N_z x M
  std::map<Direction, Eigen::MatrixXd> xi_dir;  // each N_z x M
  Formulation formulation = Formulation::one_way;

  int n_z() const { return library.n_z; }
  int m_features() const { return library.m_features(); }
};

/// Zero-initialized dynamics with the given directions present.
InteractionDynamics make_zero_dynamics(const FeatureLibrary& lib,
                                       const std::vector<Direction>& directions,
                                       Formulation formulation);

/// Per-element neighbor lists: (neighbor index, direction of the neighbor
/// relative to the element).
struct ElementAdjacency {
  std::vector<std::vector<std::pair<int, Direction>>> neighbors;

  int n_elements() const { return static_cast<int>(neighbors.size()); }
  static ElementAdjacency chain(int n_elements);
};

/// Which learned block a placed block came from (for gradient scatter).
struct BlockTag {
  bool internal = true;
  Direction dir = Direction::l;  // meaningful when !internal
};

/// Assembled block operator for one element configuration. Blocks are stored
/// per (row, src) position; placements record every learned block that was
/// added into each position.
struct GlobalSystem {
  ElementAdjacency adjacency;
  FeatureLibrary library;
  Formulation formulation;
  int n_z = 0;

  struct PlacedBlock {
    int row = 0;
    int src = 0;
    Eigen::MatrixXd block;  // N_z x M, sum of all contributions at (row, src)
  };
  std::vector<PlacedBlock> blocks;  // sorted by (row, src)

  struct Placement {
    int row = 0;
    int src = 0;
    BlockTag tag;
  };
  std::vector<Placement> placements;

  int n_elements() const { return adjacency.n_elements(); }
  int global_dim() const { return n_elements() * n_z; }

  /// Dense operator (n_elements*N_z) x (n_elements*M).
  Eigen::MatrixXd dense() const;
};

/// Arranges the internal and directional blocks into the global coefficient
/// operator for the given adjacency. Throws if a required direction has no
/// block in `dyn`.
GlobalSystem assemble_global(const InteractionDynamics& dyn,
                             const ElementAdjacency& adjacency);

/// zdot = Xi * Phi(z) with per-element feature stacking.
Eigen::VectorXd global_rhs(const GlobalSystem& system, const Eigen::VectorXd& z_global);
/// Column-wise batched right-hand side.
Eigen::MatrixXd global_rhs_batch(const GlobalSystem& system, const Eigen::MatrixXd& Z);

/// Classical RK4 at the snapshot step. The trajectory includes z0 as its
/// first column; times must be uniform.
Eigen::MatrixXd integrate_latent(const GlobalSystem& system, const Eigen::VectorXd& z0,
                                 const Eigen::VectorXd& times);

/// All eigenvalues of the assembled operator (linear library only), via
/// Hessenberg reduction and shifted QR.
Eigen::VectorXcd spectrum(const GlobalSystem& system);
Eigen::VectorXcd spectrum(const Eigen::MatrixXd& op);

}  // namespace lsem

#endif
