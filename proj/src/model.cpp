#include "lsem/model.hpp"

namespace lsem {

ElementAdjacency adjacency_from_layout(const ElementLayout& layout) {
  ElementAdjacency adj;
  adj.neighbors.resize(layout.n_elements());
  for (int e = 0; e < layout.n_elements(); ++e) {
    const Element& el = layout.elements[e];
    if (el.left_neighbor) adj.neighbors[e].push_back({*el.left_neighbor, Direction::l});
    if (el.right_neighbor) adj.neighbors[e].push_back({*el.right_neighbor, Direction::r});
  }
  return adj;
}

}  // namespace lsem
