// Counting ensembles, boundary-condition sandwich, subset combinatorics,
// rare-column probability bounds, and tail-shape fitting.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/ids.hpp"
#include "alloylab/potential.hpp"
#include "alloylab/spectral_min.hpp"

using namespace alloylab;

namespace {

ModelSpec small_model() {
  const GridSpec spec(1, 8);
  ModelSpec m;
  m.spec = spec;
  m.v0 = make_zero_potential(spec);
  m.u = make_dipole_single_site(spec, 6.0);
  m.dist = CouplingDistribution::uniform(0.0, 1.0);
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("counting curves are monotone in energy and reproducible across workers") {
  const ModelSpec model = small_model();
  std::vector<double> es;
  for (int i = 0; i < 13; ++i) es.push_back(-1.0 + 3.0 * i);
  const IDSCurve one = estimate_ids(model, 3, BoundarySpec::neumann(), es, 6, 77u, 1);
  const IDSCurve two = estimate_ids(model, 3, BoundarySpec::neumann(), es, 6, 77u, 2);
  CHECK(one.mean_counts == two.mean_counts);
  CHECK(one.raw == two.raw);
  CHECK(one.dropped == 0);
  for (const auto& row : one.raw)
    for (std::size_t e = 1; e < row.size(); ++e) CHECK(row[e] >= row[e - 1]);
}

TEST_CASE("boundary conditions sandwich the counting function per realization") {
  const ModelSpec model = small_model();
  const ReferenceState ref = reference_ground_state(model, model.a());
  std::vector<double> es;
  for (int i = 0; i < 13; ++i) es.push_back(-1.0 + 3.0 * i);
  const IDSCurve dir = estimate_ids(model, 3, BoundarySpec::dirichlet(), es, 6, 77u);
  const IDSCurve mez = estimate_ids(model, 3, BoundarySpec::mezincescu(ref.phi), es, 6, 77u);
  const IDSCurve neu = estimate_ids(model, 3, BoundarySpec::neumann(), es, 6, 77u);
  REQUIRE(dir.raw.size() == neu.raw.size());
  for (std::size_t r = 0; r < dir.raw.size(); ++r)
    for (std::size_t e = 0; e < es.size(); ++e) {
      CHECK(dir.raw[r][e] <= mez.raw[r][e]);
      CHECK(mez.raw[r][e] <= neu.raw[r][e]);
    }
}

TEST_CASE("subset totals without adjacency are Fibonacci numbers") {
  // Frozen oracle: total(L) is the Fibonacci number F_{L+2}, so the list
  // starts at total(1) = 2.
  const std::vector<std::uint64_t> expect = {2,   3,   5,   8,   13,  21,   34,   55,   89,   144,
                                             233, 377, 610, 987, 1597, 2584, 4181, 6765, 10946, 17711};
  for (int L = 0; L < 20; ++L) {
    const NonadjacentCount nc = nonadjacent_count(L + 1);
    CHECK(nc.total == expect[static_cast<std::size_t>(L)]);
    CHECK(nc.total == nc.fib);
    CHECK(nc.total == nc.fib_rounded);
  }
  CHECK(nonadjacent_count(5).total == 13);
  CHECK(nonadjacent_count(10).total == 144);
  std::uint64_t per_size_sum = 0;
  for (std::uint64_t c : nonadjacent_count(10).per_size) per_size_sum += c;
  CHECK(per_size_sum == 144u);
  CHECK_THROWS_AS(nonadjacent_count(61), ConfigError);
}

TEST_CASE("mid-pair probability bound dominates the exact law and enumeration") {
  const CouplingDistribution dist = CouplingDistribution::uniform(0.0, 1.0);
  const int L = 9;
  const RareEventBound b =
      rare_config_probability(RareRegime::MidPairs, dist, 0.25, L, 20000, 7u);
  REQUIRE(b.exact >= 0.0);
  // Direct enumeration over mid/extreme patterns: a site is "extreme" with
  // probability mu; the event is "no two adjacent mids".
  const double mu = b.mu;
  double exact = 0.0;
  for (int pattern = 0; pattern < (1 << L); ++pattern) {
    bool adjacent_mids = false;
    for (int i = 0; i + 1 < L; ++i)
      if (!((pattern >> i) & 1) && !((pattern >> (i + 1)) & 1)) adjacent_mids = true;
    if (adjacent_mids) continue;
    double p = 1.0;
    for (int i = 0; i < L; ++i) p *= ((pattern >> i) & 1) ? mu : 1.0 - mu;
    exact += p;
  }
  CHECK(b.exact == Catch::Approx(exact).margin(1e-13));
  CHECK(b.analytic_bound >= b.exact - 1e-15);
  CHECK(b.analytic_bound >= b.empirical - 3.0 * b.empirical_stderr);
  // At mu = 1/2 and L = 9 the exact law is 89/512, above the naive
  // independent-pairs product 1/16: the corrected bound must cover it.
  CHECK(b.exact == Catch::Approx(89.0 / 512.0).margin(1e-13));
  CHECK(b.analytic_bound >= 89.0 / 512.0 - 1e-15);
  CHECK(b.per_block_display == 0.5);
}

TEST_CASE("quadruple bound applies to fair two-point couplings") {
  const CouplingDistribution dist = CouplingDistribution::bernoulli(0.0, 1.0, 0.5);
  const RareEventBound b =
      rare_config_probability(RareRegime::BernoulliQuadruples, dist, 0.25, 17, 20000, 8u);
  CHECK(b.applicable);
  CHECK(b.per_block_display == 0.75);
  CHECK(b.analytic_bound >= b.empirical - 3.0 * b.empirical_stderr);
}

TEST_CASE("fibonacci tail bound reports inapplicability when the mass is too big") {
  const CouplingDistribution wide = CouplingDistribution::uniform(0.0, 1.0);
  // eps = 0.45 -> extreme-band mass 0.9; rho * mu > 1, no decay.
  const RareEventBound b =
      rare_config_probability(RareRegime::FibonacciTail, wide, 0.45, 12, 1000, 9u);
  CHECK_FALSE(b.applicable);
}

TEST_CASE("tail fits recover synthetic exponents and reject empty windows") {
  std::vector<double> es;
  for (int i = 0; i < 50; ++i) es.push_back(0.02 + 0.5 * i / 49.0);
  for (double beta : {0.5, 1.0}) {
    const LifshitzFit fit =
        lifshitz_fit(es, synthetic_lifshitz_curve(es, 0.0, 0.8, beta), 0.0, 0.0, 0.6);
    REQUIRE(fit.ok);
    CHECK(-fit.slope == Catch::Approx(beta).margin(0.01));
  }
  const LifshitzFit bad = lifshitz_fit(es, synthetic_lifshitz_curve(es, 0.0, 0.8, 0.5), 0.0,
                                       10.0, 11.0);
  CHECK_FALSE(bad.ok);
}

TEST_CASE("flat-band and thin-tail synthetic curves separate in the double log") {
  std::vector<double> es;
  for (int i = 0; i < 30; ++i) es.push_back(1e-3 + 0.4 * i / 29.0);
  const LifshitzFit thin =
      lifshitz_fit(es, synthetic_lifshitz_curve(es, 0.0, 0.5, 1.0), 0.0, 0.0, 0.45);
  const LifshitzFit flat =
      lifshitz_fit(es, synthetic_van_hove_curve(es, 0.0, 1.0, 1), 0.0, 0.0, 0.45);
  REQUIRE(thin.ok);
  REQUIRE(flat.ok);
  CHECK(std::abs(thin.slope - flat.slope) >= 0.4);
}

TEST_CASE("upper comparison machinery finds a feasible constant on a lower-edge model") {
  const GridSpec spec(1, 8);
  ModelSpec model;
  model.spec = spec;
  model.v0 = make_zero_potential(spec);
  model.u = make_bump_single_site(spec, 4.0);
  model.dist = CouplingDistribution::uniform(0.0, 1.0);
  model.waive_indefiniteness = true;
  model.validate();
  const ReferenceState ref = reference_ground_state(model, model.a());
  const double e_ref = e_phi(model, ref.phi, model.a());
  std::vector<double> es;
  for (int i = 0; i < 10; ++i) es.push_back(e_ref - 0.05 + 8.0 * i / 9.0);
  const ComparisonReport rep = comparison_upper_bound_check(model, 3, 12, 3u, es, {}, 9);
  CHECK(rep.hypothesis_ok);
  CHECK(rep.feasible_found);
  CHECK(rep.min_cell_lambda >= -1e-9);
  CHECK(rep.pointwise_ok);
  CHECK(rep.realizationwise_violations == 0);
}

TEST_CASE("lower comparison holds realization-wise") {
  const ModelSpec model = small_model();
  std::vector<double> es;
  for (int i = 0; i < 8; ++i) es.push_back(-1.0 + 3.0 * i);
  const LowerComparisonReport rep = lower_bound_comparison(model, 3, 10, 4u, es);
  CHECK(rep.ok);
  CHECK(rep.max_potential_violation <= 1e-12);
  CHECK(rep.counting_violations == 0);
}

TEST_CASE("designed-model explicit state has tiny Rayleigh quotient and residual") {
  const GridSpec spec(1, 16);
  const KnModel kn = kn_single_site(0.5, spec);
  ModelSpec model;
  model.spec = spec;
  model.v0 = make_zero_potential(spec);
  model.u = kn.u;
  model.dist = CouplingDistribution::bernoulli(0.0, 1.0, 0.5);
  model.validate();
  const Domain dom = make_cube(3, spec);
  Configuration cfg;
  cfg.omega = {1.0, 0.0, 1.0};
  const ExplicitGroundStateReport rep = explicit_ground_state_check(model, kn, dom, cfg);
  CHECK(std::abs(rep.rayleigh) <= 1e-10);
  CHECK(rep.residual <= 1e-10);
  CHECK(std::abs(rep.lambda_min) <= 1e-10);
}
