// Junction geometry analysis: gap families, bracketing, trace inequality,
// boundary response map, tail dichotomy, and column decomposition.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"
#include "alloylab/quasi1d.hpp"
#include "alloylab/rng.hpp"
#include "alloylab/spectral_min.hpp"

using namespace alloylab;

namespace {

ModelSpec bump_model(double amp, CouplingDistribution dist) {
  const GridSpec spec(1, 8);
  ModelSpec m;
  m.spec = spec;
  m.v0 = make_zero_potential(spec);
  m.u = make_bump_single_site(spec, amp);
  m.dist = dist;
  m.waive_indefiniteness = true;
  m.validate();
  return m;
}

Quasi1DInstance bump_instance(double amp) {
  Quasi1DInstance inst;
  inst.model = bump_model(amp, CouplingDistribution::bernoulli(0.0, 1.0, 0.5));
  inst.m = 3;
  inst.attach = Attach::ASide;
  inst.w0 = {1.0};
  return inst;
}

}  // namespace

TEST_CASE("instance validation guards shapes and coupling ranges") {
  Quasi1DInstance inst = bump_instance(4.0);
  CHECK_NOTHROW(inst.validate());
  inst.m = 4;
  CHECK_THROWS_AS(inst.validate(), ConfigError);
  inst.m = 5;  // needs two fixed couplings now
  CHECK_THROWS_AS(inst.validate(), ConfigError);
  inst.w0 = {1.0, 2.0};  // outside [a, b]
  CHECK_THROWS_AS(inst.validate(), ConfigError);
}

TEST_CASE("gap family is positive and bracketed for a pinned junction") {
  const Quasi1DInstance inst = bump_instance(6.0);
  const GseFamilyReport family = gse_family(inst, {3, 5, 7, 9});
  CHECK(family.hypothesis_ok);
  CHECK(family.hypothesis_margin > 0.0);
  for (const GseFamilyPoint& p : family.family) {
    CHECK(p.gap > 0.0);
    CHECK(p.lambda_min >= family.e0);
  }
  // Longer tails cannot raise the ground energy: the domain grows.
  for (std::size_t i = 1; i < family.family.size(); ++i)
    CHECK(family.family[i].lambda_min <= family.family[i - 1].lambda_min + 1e-12);
  const BracketingReport br = bracketing_consistency(inst, 7);
  CHECK(br.ok);
  CHECK(br.lambda_joint >= std::min(br.lambda_fixed, br.lambda_tail) - 1e-10);
}

TEST_CASE("inverse-square fit recovers a synthetic power law") {
  std::vector<int> Ms;
  std::vector<double> ls;
  for (int M = 3; M <= 21; M += 2) {
    Ms.push_back(M);
    ls.push_back(2.0 + 7.0 / (static_cast<double>(M) * M));
  }
  const InverseSquareFit fit = inverse_square_fit(Ms, ls, 2.0);
  REQUIRE(fit.ok);
  CHECK(fit.slope == Catch::Approx(-2.0).margin(1e-6));
  CHECK(fit.c_fit == Catch::Approx(7.0).epsilon(1e-6));
  CHECK(fit.lower_bound_ok);
  // Nonpositive gaps are excluded; too few points refuse to fit.
  const InverseSquareFit refuse = inverse_square_fit({3, 5, 7}, {2.0, 2.0, 2.0}, 2.0);
  CHECK_FALSE(refuse.ok);
}

TEST_CASE("trace inequality closed form at the constant field") {
  const GridSpec spec(1, 8);
  for (int M : {1, 3, 9}) {
    const Domain dom = tail_strip_domain(spec, M);
    std::vector<Eigen::VectorXd> fields{Eigen::VectorXd::Ones(dom.num_nodes())};
    const PoincareReport rep = poincare_check(spec, M, fields);
    CHECK(rep.ok);
    CHECK(rep.lhs[0] == Catch::Approx(4.0 / M).margin(1e-14));
    CHECK(rep.rhs[0] == Catch::Approx(2.0 / M).margin(1e-14));
  }
}

TEST_CASE("trace inequality holds for random fields") {
  const GridSpec spec(1, 8);
  const Domain dom = tail_strip_domain(spec, 5);
  std::vector<Eigen::VectorXd> fields;
  DetStream st(31u, 2u);
  for (int f = 0; f < 25; ++f) {
    Eigen::VectorXd v(dom.num_nodes());
    for (int i = 0; i < v.size(); ++i) v[i] = st.symmetric();
    fields.push_back(std::move(v));
  }
  const PoincareReport rep = poincare_check(spec, 5, fields);
  CHECK(rep.ok);
  CHECK(rep.fields_checked == 25);
  CHECK(rep.min_slack >= -1e-9);
}

TEST_CASE("ground-state transform bounds the quadratic form shift") {
  const ModelSpec model = bump_model(4.0, CouplingDistribution::uniform(0.0, 1.0));
  std::vector<Eigen::VectorXd> fields;
  const Domain dom = tail_strip_domain(model.spec, 5);
  DetStream st(77u, 4u);
  for (int f = 0; f < 6; ++f) {
    Eigen::VectorXd v(dom.num_nodes());
    for (int i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * st.symmetric();
    fields.push_back(std::move(v));
  }
  const TransformReport rep = ground_state_transform_check(model, 5, fields);
  CHECK(rep.fields_checked == 6);
  CHECK(rep.transform_ok);
  CHECK(rep.combined_ok);
  CHECK(rep.max_transform_violation <= 1e-10);
}

TEST_CASE("boundary response map is symmetric, coercive, and matches the closed form") {
  const Quasi1DInstance inst = bump_instance(6.0);
  const GseFamilyReport family = gse_family(inst, {3});
  const double lam = family.e0 + 0.5 * (family.fixed_lambda - family.e0);
  const DtNOperator t = dtn_map(inst, lam);
  CHECK(t.asymmetry <= 1e-10);
  CHECK(t.solvability_margin > 0.0);
  CHECK(dtn_coercivity(t) > 0.0);

  // Free field, one dimension: the single response entry has a closed form.
  Quasi1DInstance free_inst = inst;
  free_inst.model = bump_model(0.0, CouplingDistribution::bernoulli(0.0, 1.0, 0.5));
  const double h = free_inst.model.spec.h();
  const int n = free_inst.model.spec.n;
  for (double lambda : {-0.5, -1.0, -2.0}) {
    const DtNOperator f = dtn_map(free_inst, lambda);
    REQUIRE(f.matrix.rows() == 1);
    const double theta = std::acosh(1.0 - lambda * h * h / 2.0);
    const double closed =
        (1.0 - std::cosh((n - 1) * theta) / std::cosh(n * theta)) / h - lambda * h / 2.0;
    CHECK(f.matrix(0, 0) == Catch::Approx(closed).margin(1e-12));
  }
}

TEST_CASE("tail dichotomy distinguishes inherited and gapped attachments") {
  // Designed flat model attached at the active coupling: the tail inherits
  // the periodic ground energy, nu = 1.
  const GridSpec spec(1, 16);
  const KnModel kn = kn_single_site(0.5, spec);
  ModelSpec designed;
  designed.spec = spec;
  designed.v0 = make_zero_potential(spec);
  designed.u = kn.u;
  designed.dist = CouplingDistribution::bernoulli(0.0, 1.0, 0.5);
  designed.validate();
  const NuDichotomyReport inherited = nu_dichotomy(designed, Attach::BSide, {3, 5});
  CHECK(inherited.result == NuCase::Inherited);
  CHECK(std::abs(inherited.nu - 1.0) <= 1e-6);
  CHECK(inherited.shape_deviation <= 1e-6);

  // Nonnegative site attached at the top coupling: every tail energy sits a
  // uniform gap above the reference.
  const ModelSpec gapped_model = bump_model(6.0, CouplingDistribution::bernoulli(0.0, 1.0, 0.5));
  const NuDichotomyReport gapped = nu_dichotomy(gapped_model, Attach::BSide, {3, 5});
  CHECK(gapped.result == NuCase::Gapped);
  CHECK(gapped.delta > 0.0);
  CHECK(gapped.uniform_gap_ok);
  CHECK(gapped.Ms.size() >= 2u);
}

TEST_CASE("column decomposition recognizes its two entry classes") {
  const double a = 0.0, b = 1.0, eps = 0.25;
  // Mid-range anchor at the center, pure constants elsewhere.
  const ColumnDecomposition mid =
      decompose_column({0.0, 0.0, 0.5, 0.5, 1.0}, a, b, eps, false);
  CHECK(mid.in_class);
  CHECK(mid.cls == ColumnClass::MidPair);
  // Disagreeing pure quadruple at the center of a two-point column.
  const ColumnDecomposition quad =
      decompose_column({0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0}, a, b, eps, true);
  CHECK(quad.in_class);
  CHECK(quad.cls == ColumnClass::DisagreeingQuadruple);
  // Constant columns have no anchor to enter with.
  const ColumnDecomposition flat = decompose_column({0.0, 0.0, 0.0}, a, b, eps, true);
  CHECK_FALSE(flat.in_class);
  CHECK(flat.cls == ColumnClass::NotInClass);
  CHECK_FALSE(flat.reason.empty());
}

TEST_CASE("decomposition segments tile the column without overlap") {
  const double a = 0.0, b = 1.0, eps = 0.25;
  const std::vector<double> column = {0.0, 0.5, 0.5, 1.0, 0.4, 0.0, 0.0, 1.0, 0.6};
  const ColumnDecomposition dec = decompose_column(column, a, b, eps, false);
  REQUIRE(dec.in_class);
  const int L = static_cast<int>(column.size());
  const int shift = (L - 1) / 2;
  std::vector<int> covered(static_cast<std::size_t>(L), 0);
  for (const Subsegment& s : dec.segments) {
    CHECK(s.lo <= s.hi);
    for (int r = s.lo; r <= s.hi; ++r) {
      REQUIRE(r + shift >= 0);
      REQUIRE(r + shift < L);
      covered[static_cast<std::size_t>(r + shift)] += 1;
    }
  }
  for (int c : covered) CHECK(c == 1);
}

TEST_CASE("segment energies bracket the full column energy") {
  const ModelSpec model = bump_model(5.0, CouplingDistribution::uniform(0.0, 1.0));
  const std::vector<double> column = {0.0, 0.5, 0.5, 1.0, 1.0};
  const ConfigEnergyReport rep = configuration_energy_checks(model, 5, column, 0.25);
  CHECK(rep.decomposition.in_class);
  CHECK(rep.gap_positive);
  CHECK(rep.bracketing_ok);
  CHECK(rep.lambda_min >= rep.min_segment_lambda - 1e-10);
  CHECK(rep.l_eff >= 1);
  CHECK(rep.m_equivalent >= 1);
  CHECK(rep.mixed_pair_ok);
}

TEST_CASE("column analysis refuses malformed input") {
  const ModelSpec model = bump_model(5.0, CouplingDistribution::uniform(0.0, 1.0));
  CHECK_THROWS_AS(configuration_energy_checks(model, 4, {0.0, 0.0, 1.0, 1.0}, 0.25),
                  ConfigError);
  CHECK_THROWS_AS(configuration_energy_checks(model, 3, {0.0, 2.0, 1.0}, 0.25), ConfigError);
  CHECK_THROWS_AS(decompose_column({}, 0.0, 1.0, 0.25, false), ConfigError);
  CHECK_THROWS_AS(decompose_column({0.5}, 0.0, 1.0, 0.6, false), ConfigError);
}
