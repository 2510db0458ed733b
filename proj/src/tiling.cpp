#include "lsem/tiling.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lsem {

int ElementLayout::n_types() const {
  int n = 0;
  for (const auto& e : elements) n = std::max(n, e.type_id + 1);
  return n;
}

int ElementLayout::type_n_local(int type_id) const {
  for (const auto& e : elements)
    if (e.type_id == type_id) return e.n_local;
  throw std::out_of_range("ElementLayout: no element of type " + std::to_string(type_id));
}

int ElementLayout::interface_index(int m) const {
  if (m < 1 || m >= n_elements())
    throw std::out_of_range("ElementLayout: interface index requires 1 <= m < n_elements");
  return elements[m].start_index + overlap_points / 2;
}

ElementLayout build_layout(const Grid1D& grid, int n_elements, int overlap_points,
                           const std::vector<int>& type_assignment) {
  if (n_elements < 1) throw std::invalid_argument("build_layout: n_elements must be >= 1");
  if (n_elements > 1 && overlap_points < 2)
    throw std::invalid_argument("build_layout: overlap_points must be >= 2");
  if (!type_assignment.empty() &&
      static_cast<int>(type_assignment.size()) != n_elements)
    throw std::invalid_argument("build_layout: type_assignment size mismatch");

  const long long total =
      static_cast<long long>(grid.n_points) +
      static_cast<long long>(n_elements - 1) * overlap_points;
  const int width = static_cast<int>((total + n_elements - 1) / n_elements);
  const int deficit = static_cast<int>(static_cast<long long>(n_elements) * width - total);

  ElementLayout layout;
  layout.grid = grid;
  layout.overlap_points = n_elements > 1 ? overlap_points : 0;
  layout.elements.resize(n_elements);

  int start = 0;
  for (int m = 0; m < n_elements; ++m) {
    Element& e = layout.elements[m];
    e.type_id = type_assignment.empty() ? 0 : type_assignment[m];
    e.start_index = start;
    // Rightmost `deficit` elements shed one interior point each.
    e.n_local = width - (m >= n_elements - deficit ? 1 : 0);
    const int interior = e.n_local - (m > 0 ? overlap_points : 0) -
                         (m < n_elements - 1 ? overlap_points : 0);
    if (interior < 1)
      throw std::invalid_argument(
          "build_layout: overlap too large, element " + std::to_string(m) +
          " of width " + std::to_string(e.n_local) + " has no interior");
    if (m > 0) e.left_neighbor = m - 1;
    if (m < n_elements - 1) e.right_neighbor = m + 1;
    start += e.n_local - overlap_points;
  }

  const Element& last = layout.elements.back();
  if (last.end_index() != grid.n_points)
    throw std::logic_error("build_layout: tiling does not cover the grid");

  // One autoencoder per type: widths within a type must agree.
  for (int m = 0; m < n_elements; ++m)
    for (int k = 0; k < m; ++k)
      if (layout.elements[k].type_id == layout.elements[m].type_id &&
          layout.elements[k].n_local != layout.elements[m].n_local)
        throw std::invalid_argument(
            "build_layout: elements " + std::to_string(k) + " and " +
            std::to_string(m) + " share type " +
            std::to_string(layout.elements[m].type_id) +
            " but have widths " + std::to_string(layout.elements[k].n_local) +
            " and " + std::to_string(layout.elements[m].n_local) +
            "; pick overlap_points so widths divide evenly or assign types");
  return layout;
}

Eigen::VectorXd restrict_to_element(const Eigen::VectorXd& q_global,
                                    const ElementLayout& layout, int m) {
  if (m < 0 || m >= layout.n_elements())
    throw std::out_of_range("restrict_to_element: element index out of range");
  if (q_global.size() != layout.grid.n_points)
    throw std::invalid_argument("restrict_to_element: field length mismatch");
  const Element& e = layout.elements[m];
  return q_global.segment(e.start_index, e.n_local);
}

Eigen::MatrixXd restrict_rows(const Eigen::MatrixXd& q_global,
                              const ElementLayout& layout, int m) {
  if (m < 0 || m >= layout.n_elements())
    throw std::out_of_range("restrict_rows: element index out of range");
  if (q_global.rows() != layout.grid.n_points)
    throw std::invalid_argument("restrict_rows: row count mismatch");
  const Element& e = layout.elements[m];
  return q_global.middleRows(e.start_index, e.n_local);
}

Eigen::VectorXd window_weights(const ElementLayout& layout, int m) {
  if (m < 0 || m >= layout.n_elements())
    throw std::out_of_range("window_weights: element index out of range");
  const Element& e = layout.elements[m];
  const int ov = layout.overlap_points;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(e.n_local);
  // Half-cosine ramp over the ov shared points; complementary ramps on the
  // two sides of an overlap sum to one exactly.
  if (e.left_neighbor) {
    for (int j = 0; j < ov; ++j) {
      const double s = static_cast<double>(j) / (ov - 1);
      w[j] = 0.5 - 0.5 * std::cos(M_PI * s);
    }
  }
  if (e.right_neighbor) {
    for (int j = 0; j < ov; ++j) {
      const double s = static_cast<double>(j) / (ov - 1);
      w[e.n_local - 1 - j] = 0.5 - 0.5 * std::cos(M_PI * s);
    }
  }
  return w;
}

Eigen::VectorXd reconstruct(const std::vector<Eigen::VectorXd>& locals,
                            const ElementLayout& layout) {
  if (static_cast<int>(locals.size()) != layout.n_elements())
    throw std::invalid_argument("reconstruct: need one local field per element");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(layout.grid.n_points);
  for (int m = 0; m < layout.n_elements(); ++m) {
    const Element& e = layout.elements[m];
    if (locals[m].size() != e.n_local)
      throw std::invalid_argument("reconstruct: local field " + std::to_string(m) +
                                  " has wrong length");
    q.segment(e.start_index, e.n_local) +=
        window_weights(layout, m).cwiseProduct(locals[m]);
  }
  return q;
}

Eigen::MatrixXd reconstruct_matrix(const std::vector<Eigen::MatrixXd>& locals,
                                   const ElementLayout& layout) {
  if (static_cast<int>(locals.size()) != layout.n_elements())
    throw std::invalid_argument("reconstruct_matrix: need one block per element");
  const Eigen::Index n_t = locals.empty() ? 0 : locals[0].cols();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(layout.grid.n_points, n_t);
  for (int m = 0; m < layout.n_elements(); ++m) {
    const Element& e = layout.elements[m];
    if (locals[m].rows() != e.n_local || locals[m].cols() != n_t)
      throw std::invalid_argument("reconstruct_matrix: block " + std::to_string(m) +
                                  " has wrong shape");
    q.middleRows(e.start_index, e.n_local) +=
        window_weights(layout, m).asDiagonal() * locals[m];
  }
  return q;
}

double verify_partition_of_unity(const ElementLayout& layout) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(layout.grid.n_points);
  for (int m = 0; m < layout.n_elements(); ++m) {
    const Element& e = layout.elements[m];
    sum.segment(e.start_index, e.n_local) += window_weights(layout, m);
  }
  return (sum.array() - 1.0).abs().maxCoeff();
}

}  // namespace lsem
