// Lattice geometry: node/cell counts, face enumeration, and the quasi-1D
// junction shapes.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <tuple>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"

using namespace alloylab;

TEST_CASE("cube domains have the closed-box node count") {
  // d=1: L*n + 1 nodes; d=2: (L*n + 1)^2.
  CHECK(make_cube(9, GridSpec(1, 16)).num_nodes() == 9 * 16 + 1);
  CHECK(make_cube(5, GridSpec(1, 8)).num_nodes() == 41);
  CHECK(make_cube(3, GridSpec(2, 4)).num_nodes() == 13 * 13);
  CHECK(make_cube(3, GridSpec(2, 4)).num_cells() == 9);
  CHECK(make_cube(1, GridSpec(3, 2)).num_nodes() == 27);
}

TEST_CASE("cube edge length must be odd and positive") {
  CHECK_THROWS_AS(make_cube(4, GridSpec(1, 8)), ConfigError);
  CHECK_THROWS_AS(make_cube(-3, GridSpec(1, 8)), ConfigError);
}

TEST_CASE("grid spec rejects odd or tiny meshes and wild dimensions") {
  CHECK_THROWS_AS(GridSpec(1, 7).validate(), ConfigError);
  CHECK_THROWS_AS(GridSpec(1, 0).validate(), ConfigError);
  CHECK_THROWS_AS(GridSpec(4, 8).validate(), ConfigError);
  CHECK(GridSpec(2, 6).h() == 1.0 / 6.0);
}

TEST_CASE("segments span the requested cell range") {
  const GridSpec spec(1, 8);
  const Domain dom = make_segment(IVec{0, 0, 0}, -2, 3, spec);
  CHECK(dom.num_cells() == 6);
  CHECK(dom.num_nodes() == 6 * 8 + 1);
  CHECK(dom.cell_index(IVec{-2, 0, 0}) >= 0);
  CHECK(dom.cell_index(IVec{3, 0, 0}) >= 0);
  CHECK(dom.cell_index(IVec{4, 0, 0}) < 0);
}

TEST_CASE("node and cell indices round-trip") {
  const Domain dom = make_cube(3, GridSpec(2, 4));
  for (int i = 0; i < dom.num_nodes(); ++i)
    CHECK(dom.node_index(dom.nodes()[static_cast<std::size_t>(i)]) == i);
  for (int c = 0; c < dom.num_cells(); ++c)
    CHECK(dom.cell_index(dom.cells()[static_cast<std::size_t>(c)]) == c);
}

TEST_CASE("disconnected cell unions are rejected") {
  const GridSpec spec(1, 4);
  CHECK_THROWS_AS(make_cell_union({IVec{0, 0, 0}, IVec{2, 0, 0}}, spec), ConfigError);
  CHECK_NOTHROW(make_cell_union({IVec{0, 0, 0}, IVec{1, 0, 0}}, spec));
}

TEST_CASE("boundary faces of a unit interval are its two endpoints") {
  const GridSpec spec(1, 8);
  const FaceSet faces = boundary_faces(make_cube(1, spec));
  REQUIRE(faces.boundary.size() == 2);
  CHECK(faces.interface.empty());
  std::set<int> signs;
  for (const BoundaryFace& f : faces.boundary) signs.insert(f.sign);
  CHECK(signs == std::set<int>{-1, 1});
}

TEST_CASE("interface faces pair adjacent cells exactly once per node") {
  const GridSpec spec(2, 2);
  const Domain dom = make_cube(3, spec);
  const FaceSet faces = boundary_faces(dom);
  std::set<std::tuple<int, int, int, int>> seen;
  for (const InterfaceFace& f : faces.interface) {
    CHECK(seen.insert({f.node, f.axis, f.cell_lo, f.cell_hi}).second);
    const IVec lo = dom.cells()[static_cast<std::size_t>(f.cell_lo)];
    const IVec hi = dom.cells()[static_cast<std::size_t>(f.cell_hi)];
    CHECK(shifted(lo, f.axis, +1) == hi);
  }
  // 3x3 cells: 12 internal cell-cell walls, each carrying n+1 = 3 nodes.
  CHECK(faces.interface.size() == 12u * 3u);
  // Outer boundary, deduplicated on (node, axis, sign): each of the four
  // sides carries L*n + 1 = 7 nodes with one outward normal.
  CHECK(faces.boundary.size() == 4u * 7u);
}

TEST_CASE("quasi-1D junction geometry") {
  const GridSpec spec(1, 4);
  const Domain dom = make_quasi1d(3, 5, false, spec);
  // Fixed part: (m-1)/2 cells left of the origin cell; variable part extends
  // to the other side: total (m-1)/2 + (M+1)/2 cells.
  CHECK(dom.num_cells() == 1 + 3);
  const auto fixed = quasi1d_fixed_cells(dom);
  const auto variable = quasi1d_variable_cells(dom);
  CHECK(fixed.size() + variable.size() == static_cast<std::size_t>(dom.num_cells()));
  for (const IVec& c : fixed)
    CHECK(std::find(variable.begin(), variable.end(), c) == variable.end());
  CHECK_THROWS_AS(quasi1d_fixed_cells(make_cube(3, spec)), ConfigError);
}

TEST_CASE("quasi-1D mirror orientation flips the variable side") {
  const GridSpec spec(1, 4);
  const Domain below = make_quasi1d(3, 5, false, spec);
  const Domain above = make_quasi1d(3, 5, true, spec);
  CHECK(below.num_cells() == above.num_cells());
  int min_b = 0, max_a = 0;
  for (const IVec& c : below.cells()) min_b = std::min(min_b, c[0]);
  for (const IVec& c : above.cells()) max_a = std::max(max_a, c[0]);
  CHECK(min_b == -max_a);
}
