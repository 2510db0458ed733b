#ifndef LSEM_MODEL_HPP
#define LSEM_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lsem/grid.hpp"
#include "lsem/latent_dynamics.hpp"
#include "lsem/mlp.hpp"
#include "lsem/tiling.hpp"

namespace lsem {

/// Encoder/decoder pair for one reference element type.
struct ElementAutoencoder {
  MlpParams encoder;
  MlpParams decoder;
};

/// Enough to rebuild an ElementLayout (serialized inside the model file).
struct LayoutSpec {
  Grid1D grid;
  int n_elements = 1;
  int overlap_points = 0;
  std::vector<int> type_assignment;  // empty = all type 0

  ElementLayout build() const {
    return build_layout(grid, n_elements, overlap_points, type_assignment);
  }
};

/// A trained set of reusable element surrogates: per-type autoencoders plus
/// the shared interaction dynamics blocks.
struct LsemModel {
  std::vector<ElementAutoencoder> autoencoders;  // indexed by type_id
  InteractionDynamics dynamics;
  LayoutSpec training_layout;
  std::string config_echo;  // effective configuration at training time
  std::uint64_t seed = 0;
};

ElementAdjacency adjacency_from_layout(const ElementLayout& layout);

}  // namespace lsem

#endif
