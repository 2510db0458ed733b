#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "lsem/rng.hpp"
#include "lsem/tiling.hpp"

using namespace lsem;

TEST_CASE("build_layout splits 10 points into [0,6) and [4,10)") {
  Grid1D grid(0.0, 1.0, 10, false);
  ElementLayout layout = build_layout(grid, 2, 2);
  REQUIRE(layout.n_elements() == 2);
  CHECK(layout.elements[0].start_index == 0);
  CHECK(layout.elements[0].n_local == 6);
  CHECK(layout.elements[1].start_index == 4);
  CHECK(layout.elements[1].n_local == 6);
  CHECK(!layout.elements[0].left_neighbor);
  CHECK(*layout.elements[0].right_neighbor == 1);
  CHECK(*layout.elements[1].left_neighbor == 0);
  CHECK(!layout.elements[1].right_neighbor);
}

TEST_CASE("single element covers the grid with no overlap") {
  Grid1D grid(0.0, 1.0, 17, false);
  ElementLayout layout = build_layout(grid, 1, 4);
  REQUIRE(layout.n_elements() == 1);
  CHECK(layout.elements[0].start_index == 0);
  CHECK(layout.elements[0].n_local == 17);
  CHECK(layout.overlap_points == 0);
  CHECK(verify_partition_of_unity(layout) == 0.0);
}

TEST_CASE("kdv training geometry comes out at 575 points per element") {
  // 2000 points, 4 elements, overlap 100 (physical overlap 2 at dx = 0.02):
  // the only arithmetic consistent with full coverage is 575 per element.
  Grid1D grid(-10.0, 30.0, 2000, true);
  CHECK(grid.dx() == doctest::Approx(0.02).epsilon(1e-14));
  ElementLayout layout = build_layout(grid, 4, 100);
  for (const auto& e : layout.elements) CHECK(e.n_local == 575);
  CHECK(layout.elements[3].end_index() == 2000);
  CHECK(layout.overlap_length() == doctest::Approx(2.0));
  CHECK(verify_partition_of_unity(layout) <= 1e-12);
}

TEST_CASE("layout rejects widths that cannot match a shared type") {
  Grid1D grid(0.0, 1.0, 11, false);
  // total = 11 + 2 = 13, width ceil(13/2) = 7, deficit 1 -> widths 7 and 6.
  CHECK_THROWS_AS(build_layout(grid, 2, 2), std::invalid_argument);
  // With distinct types the same split is allowed.
  ElementLayout layout = build_layout(grid, 2, 2, {0, 1});
  CHECK(layout.elements[0].n_local == 7);
  CHECK(layout.elements[1].n_local == 6);
  CHECK(layout.elements[1].end_index() == 11);
}

TEST_CASE("layout rejects overlaps that leave no interior") {
  Grid1D grid(0.0, 1.0, 10, false);
  CHECK_THROWS_AS(build_layout(grid, 3, 5), std::invalid_argument);
}

TEST_CASE("restrict slices the owned range") {
  Grid1D grid(0.0, 9.0, 10, false);
  ElementLayout layout = build_layout(grid, 2, 2);
  Eigen::VectorXd q(10);
  for (int i = 0; i < 10; ++i) q[i] = i;
  Eigen::VectorXd local = restrict_to_element(q, layout, 1);
  REQUIRE(local.size() == 6);
  for (int j = 0; j < 6; ++j) CHECK(local[j] == doctest::Approx(4.0 + j));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(10, 3.25);
  CHECK(restrict_to_element(c, layout, 0).isApproxToConstant(3.25));
  CHECK_THROWS_AS(restrict_to_element(q, layout, 2), std::out_of_range);
}

TEST_CASE("window weights: midpoint ramp value, interior ones, boundary suppression") {
  Grid1D grid(0.0, 1.0, 41, false);
  ElementLayout layout = build_layout(grid, 2, 11);  // odd overlap has an exact midpoint
  Eigen::VectorXd w0 = window_weights(layout, 0);
  Eigen::VectorXd w1 = window_weights(layout, 1);
  // Leftmost element keeps weight 1 to the physical edge.
  CHECK(w0[0] == 1.0);
  CHECK(w0[5] == 1.0);  // interior
  // Midpoint of the shared overlap.
  const int mid_local0 = w0.size() - 1 - 5;
  CHECK(w0[mid_local0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w1[5] == doctest::Approx(0.5).epsilon(1e-14));
  // Rightmost element keeps weight 1 at the right edge.
  CHECK(w1[w1.size() - 1] == 1.0);
  // Weights lie in [0,1] and ramps are monotone.
  for (int j = 0; j < w0.size(); ++j) {
    CHECK(w0[j] >= 0.0);
    CHECK(w0[j] <= 1.0);
  }
  for (int j = 1; j < 11; ++j) CHECK(w1[j] >= w1[j - 1]);
}

TEST_CASE("complementarity: weights across each overlap sum to one") {
  Grid1D grid(0.0, 1.0, 100, false);
  ElementLayout layout = build_layout(grid, 4, 12);
  for (int m = 0; m + 1 < layout.n_elements(); ++m) {
    Eigen::VectorXd wl = window_weights(layout, m);
    Eigen::VectorXd wr = window_weights(layout, m + 1);
    for (int j = 0; j < layout.overlap_points; ++j) {
      const double left = wl[wl.size() - layout.overlap_points + j];
      const double right = wr[j];
      CHECK(std::abs(left + right - 1.0) <= 1e-15);
    }
  }
}

TEST_CASE("reconstruct: all-ones locals give the constant one field") {
  Grid1D grid(0.0, 1.0, 52, false);
  ElementLayout layout = build_layout(grid, 3, 4);
  std::vector<Eigen::VectorXd> locals;
  for (int m = 0; m < 3; ++m)
    locals.push_back(Eigen::VectorXd::Ones(layout.elements[m].n_local));
  Eigen::VectorXd q = reconstruct(locals, layout);
  CHECK((q.array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("reconstruct is the exact inverse of restriction") {
  Rng rng(42);
  Grid1D grid(-2.0, 5.0, 128, false);
  ElementLayout layout = build_layout(grid, 4, 8);
  Eigen::VectorXd q(128);
  for (int i = 0; i < 128; ++i) q[i] = rng.normal();
  std::vector<Eigen::VectorXd> locals;
  for (int m = 0; m < 4; ++m) locals.push_back(restrict_to_element(q, layout, m));
  Eigen::VectorXd back = reconstruct(locals, layout);
  CHECK((back - q).cwiseAbs().maxCoeff() <= 1e-12);

  // restrict . reconstruct . restrict == restrict
  for (int m = 0; m < 4; ++m) {
    Eigen::VectorXd again = restrict_to_element(back, layout, m);
    CHECK((again - locals[m]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("editing one interior changes only that element's range") {
  Grid1D grid(0.0, 1.0, 60, false);
  ElementLayout layout = build_layout(grid, 3, 6);
  Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(60, 0.0, 1.0);
  std::vector<Eigen::VectorXd> locals;
  for (int m = 0; m < 3; ++m) locals.push_back(restrict_to_element(q, layout, m));
  Eigen::VectorXd base = reconstruct(locals, layout);
  locals[1][layout.elements[1].n_local / 2] += 7.0;
  Eigen::VectorXd bumped = reconstruct(locals, layout);
  const Element& e = layout.elements[1];
  for (int i = 0; i < 60; ++i) {
    if (i < e.start_index || i >= e.end_index())
      CHECK(bumped[i] == base[i]);
  }
  CHECK((bumped - base).cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("partition of unity holds on fuzzed layouts") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_elements = 1 + static_cast<int>(rng.uniform() * 6);
    const int overlap = 2 + static_cast<int>(rng.uniform() * 12);
    // Pick a point count that divides evenly so a single shared type works.
    const int width = overlap * 2 + 1 + static_cast<int>(rng.uniform() * 40);
    const int n_points =
        std::max(3, n_elements * width - (n_elements - 1) * overlap);
    Grid1D grid(0.0, 1.0, n_points, false);
    ElementLayout layout = build_layout(grid, n_elements, overlap);
    CHECK(verify_partition_of_unity(layout) <= 1e-12);

    Eigen::VectorXd q(n_points);
    for (int i = 0; i < n_points; ++i) q[i] = rng.normal();
    std::vector<Eigen::VectorXd> locals;
    for (int m = 0; m < n_elements; ++m)
      locals.push_back(restrict_to_element(q, layout, m));
    CHECK((reconstruct(locals, layout) - q).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
