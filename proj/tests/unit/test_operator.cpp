// Assembly: closed-form spectra in one dimension, boundary-condition
// equivalences, Robin interface cancellation, and form additivity.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "alloylab/assemble.hpp"
#include "alloylab/core.hpp"
#include "alloylab/eigensolve.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"
#include "alloylab/rng.hpp"
#include "alloylab/spectral_min.hpp"

using namespace alloylab;

namespace {

AssembledOperator free_op(const Domain& dom, const BoundarySpec& bc) {
  return assemble(dom, bc, std::vector<double>(static_cast<std::size_t>(dom.num_nodes()), 0.0));
}

}  // namespace

TEST_CASE("one-dimensional Dirichlet spectrum matches the closed form") {
  const GridSpec spec(1, 16);
  const Domain dom = make_cube(1, spec);
  const Spectrum s = dense_spectrum(free_op(dom, BoundarySpec::dirichlet()));
  const double h = spec.h();
  REQUIRE(static_cast<int>(s.values.size()) == spec.n - 1);
  for (int k = 1; k <= 3; ++k) {
    const double exact = (2.0 - 2.0 * std::cos(k * std::numbers::pi * h)) / (h * h);
    CHECK(s.values[static_cast<std::size_t>(k - 1)] ==
          Catch::Approx(exact).epsilon(1e-10));
  }
  // Continuum limit: lowest mode approaches pi^2 from below at O(h^2).
  CHECK(s.values[0] == Catch::Approx(std::numbers::pi * std::numbers::pi).epsilon(0.02));
}

TEST_CASE("one-dimensional Neumann spectrum has a kernel and cosine modes") {
  const GridSpec spec(1, 16);
  const Spectrum s = dense_spectrum(free_op(make_cube(1, spec), BoundarySpec::neumann()));
  const double h = spec.h();
  REQUIRE(static_cast<int>(s.values.size()) == spec.n + 1);
  CHECK(std::abs(s.values[0]) <= 1e-11);
  for (int k = 1; k <= 3; ++k) {
    const double exact = (2.0 - 2.0 * std::cos(k * std::numbers::pi * h)) / (h * h);
    CHECK(s.values[static_cast<std::size_t>(k)] == Catch::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("periodic closure reproduces the discrete torus spectrum") {
  const GridSpec spec(1, 8);
  const Spectrum s = dense_spectrum(free_op(make_cube(1, spec), BoundarySpec::periodic()));
  const double h = spec.h();
  REQUIRE(static_cast<int>(s.values.size()) == spec.n);
  std::vector<double> exact;
  for (int k = 0; k < spec.n; ++k)
    exact.push_back((2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / spec.n)) / (h * h));
  std::sort(exact.begin(), exact.end());
  for (std::size_t k = 0; k < exact.size(); ++k)
    CHECK(s.values[k] == Catch::Approx(exact[k]).margin(1e-9));
}

TEST_CASE("constant reference state turns the Robin condition into Neumann") {
  const GridSpec spec(2, 4);
  const Domain dom = make_cube(3, spec);
  const UnitCellField ones =
      UnitCellField::from_function(spec, [](const double*) { return 1.0; });
  const std::vector<double> field(static_cast<std::size_t>(dom.num_nodes()), 0.25);
  const AssembledOperator mez = assemble(dom, BoundarySpec::mezincescu(ones), field);
  const AssembledOperator neu = assemble(dom, BoundarySpec::neumann(), field);
  REQUIRE(mez.dim == neu.dim);
  CHECK(Eigen::MatrixXd(mez.form - neu.form).norm() == 0.0);
  CHECK((mez.mass - neu.mass).norm() == 0.0);
}

TEST_CASE("Robin weights from a genuine periodic state cancel across interfaces") {
  const GridSpec spec(1, 8);
  ModelSpec model;
  model.spec = spec;
  model.v0 = make_cosine_potential(spec, 1.0);
  model.u = make_bump_single_site(spec, 1.0);
  model.dist = CouplingDistribution::uniform(0.0, 1.0);
  model.waive_indefiniteness = true;
  model.validate();
  const ReferenceState ref = reference_ground_state(model, 0.0);
  REQUIRE(ref.positive);
  // chi at a shared face, seen from the two neighboring cells, is equal and
  // opposite because the outward normals are.
  const double h = spec.h();
  for (int node : {0, 3, spec.n}) {
    const double from_right = chi_value(ref.phi, ivec(node), 0, -1, h);
    const double from_left = chi_value(ref.phi, ivec(node), 0, +1, h);
    CHECK(from_right + from_left == 0.0);
  }
}

TEST_CASE("global quadratic form equals the sum over cell pieces") {
  const GridSpec spec(2, 4);
  const Domain dom = make_cube(3, spec);
  const PeriodicPotential v0 = make_cosine_potential(spec, 0.5);
  const SingleSitePotential u = make_dipole_single_site(spec, 2.0);
  Configuration cfg;
  DetStream st(5u, 1u);
  for (int c = 0; c < dom.num_cells(); ++c) cfg.omega.push_back(st.uniform());
  const UnitCellField ones =
      UnitCellField::from_function(spec, [](const double*) { return 1.0; });
  const AssembledOperator op =
      assemble(dom, BoundarySpec::mezincescu(ones), alloy_field(v0, u, cfg, dom));
  const auto cells = cell_decompose(op);
  REQUIRE(static_cast<int>(cells.size()) == dom.num_cells());
  DetStream fs(17u, 2u);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd psi(op.dim);
    for (int i = 0; i < psi.size(); ++i) psi[i] = fs.symmetric();
    double sum = 0.0;
    for (const auto& c : cells) {
      Eigen::VectorXd local(c.dim);
      for (int i = 0; i < c.dim; ++i) {
        const IVec node =
            c.dom.nodes()[static_cast<std::size_t>(c.free_nodes[static_cast<std::size_t>(i)])];
        local[i] = psi[op.node_to_free[static_cast<std::size_t>(dom.node_index(node))]];
      }
      sum += form_value(c, local);
    }
    const double whole = form_value(op, psi);
    CHECK(std::abs(sum - whole) <= 1e-12 * (1.0 + std::abs(whole)));
  }
}

TEST_CASE("cell decomposition refuses hard walls") {
  const GridSpec spec(1, 8);
  const Domain dom = make_cube(3, spec);
  const AssembledOperator op = free_op(dom, BoundarySpec::dirichlet());
  CHECK_THROWS_AS(cell_decompose(op), ConfigError);
}

TEST_CASE("adding a nonnegative potential raises the bottom eigenvalue") {
  const GridSpec spec(1, 8);
  const Domain dom = make_cube(3, spec);
  std::vector<double> field(static_cast<std::size_t>(dom.num_nodes()), 0.0);
  const double base = smallest_eigenvalue(assemble(dom, BoundarySpec::neumann(), field));
  for (auto& f : field) f = 0.3;
  const double lifted = smallest_eigenvalue(assemble(dom, BoundarySpec::neumann(), field));
  CHECK(lifted >= base + 0.3 - 1e-10);
}

TEST_CASE("Rayleigh quotients dominate the bottom eigenvalue") {
  const GridSpec spec(1, 8);
  const Domain dom = make_cube(5, spec);
  const PeriodicPotential v0 = make_cosine_potential(spec, 1.0);
  Configuration cfg;
  cfg.omega = {0.1, 0.9, 0.4, 0.6, 0.2};
  const AssembledOperator op = assemble(
      dom, BoundarySpec::neumann(), alloy_field(v0, make_dipole_single_site(spec, 3.0), cfg, dom));
  const double bottom = smallest_eigenvalue(op);
  DetStream st(3u, 9u);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd v(op.dim);
    for (int i = 0; i < v.size(); ++i) v[i] = st.symmetric();
    CHECK(rayleigh_quotient(op, v) >= bottom - 1e-10);
  }
}
