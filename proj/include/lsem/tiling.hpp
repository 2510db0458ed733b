#ifndef LSEM_TILING_HPP
#define LSEM_TILING_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lsem/grid.hpp"

namespace lsem {

struct Element {
  int type_id = 0;
  int start_index = 0;
  int n_local = 0;
  std::optional<int> left_neighbor;
  std::optional<int> right_neighbor;

  int end_index() const { return start_index + n_local; }  // exclusive
};

/// Tiling of a 1D grid into an ordered chain of overlapping elements.
/// Consecutive elements share exactly overlap_points grid indices; window
/// weights over the overlaps form a partition of unity.
struct ElementLayout {
  Grid1D grid;
  int overlap_points = 0;
  std::vector<Element> elements;

  int n_elements() const { return static_cast<int>(elements.size()); }
  /// Physical overlap length as reported alongside the layout.
  double overlap_length() const { return overlap_points * grid.dx(); }
  /// Number of distinct element types (max type_id + 1).
  int n_types() const;
  /// Local size of elements of the given type.
  int type_n_local(int type_id) const;
  /// Global index of the midpoint of the overlap between elements m-1 and m
  /// (the effective interface location). Requires m >= 1.
  int interface_index(int m) const;
};

/// Splits [0, n_points) into n_elements overlapping ranges. Widths are
/// ceil((n_points + (n_elements-1)*overlap_points)/n_elements) with any
/// remainder removed from the rightmost elements' interiors, one point each.
/// type_assignment gives each element's type_id (empty means all type 0);
/// elements sharing a type must come out with identical widths.
ElementLayout build_layout(const Grid1D& grid, int n_elements, int overlap_points,
                           const std::vector<int>& type_assignment = {});

/// Slice of the global field owned by element m.
Eigen::VectorXd restrict_to_element(const Eigen::VectorXd& q_global,
                                    const ElementLayout& layout, int m);

/// Row slice of a snapshot matrix (one column per time) for element m.
Eigen::MatrixXd restrict_rows(const Eigen::MatrixXd& q_global,
                              const ElementLayout& layout, int m);

/// Cosine window for element m: 1 on the interior, a C1 half-cosine ramp
/// across each overlap shared with a neighbor, and 1 all the way to the edge
/// on sides without a neighbor (physical boundaries).
Eigen::VectorXd window_weights(const ElementLayout& layout, int m);

/// Blend local fields into a global field by window-weighted superposition.
/// Exact inverse of restriction when the locals are restrictions of one field.
Eigen::VectorXd reconstruct(const std::vector<Eigen::VectorXd>& locals,
                            const ElementLayout& layout);

/// Column-wise reconstruct of per-element snapshot matrices.
Eigen::MatrixXd reconstruct_matrix(const std::vector<Eigen::MatrixXd>& locals,
                                   const ElementLayout& layout);

/// max_i |sum_m W_m(i) - 1| over the grid; <= 1e-12 for any valid layout.
double verify_partition_of_unity(const ElementLayout& layout);

}  // namespace lsem

#endif
