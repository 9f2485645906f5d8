// Spectral minimum machinery: reference states, energy curves, curvature,
// classification, and the brute-force sampler.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"
#include "alloylab/spectral_min.hpp"

using namespace alloylab;

namespace {

ModelSpec model_with(const GridSpec& spec, SingleSitePotential u, bool waive,
                     CouplingDistribution dist) {
  ModelSpec m;
  m.spec = spec;
  m.v0 = make_cosine_potential(spec, 0.5);
  m.u = std::move(u);
  m.dist = dist;
  m.waive_indefiniteness = waive;
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("reference states are positive, normalized, and carry their energy") {
  const GridSpec spec(1, 16);
  const ModelSpec model = model_with(spec, make_dipole_single_site(spec, 4.0), false,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const ReferenceState ref = reference_ground_state(model, 0.3);
  CHECK(ref.positive);
  double mx = 0.0;
  ref.phi.for_each_local([&](const IVec& l) { mx = std::max(mx, ref.phi.at_local(l)); });
  CHECK(mx == Catch::Approx(1.0).margin(1e-12));
  CHECK(ref.phi.periodicity_defect() == 0.0);
  // The reference energy is inherited exactly by the Robin cell operator at
  // the same coupling.
  const double inherited = e_phi(model, ref.phi, 0.3);
  CHECK(std::abs(inherited - ref.energy) <= 1e-12 * (1.0 + std::abs(ref.energy)));
}

TEST_CASE("ground energy curves are concave for a fixed reference state") {
  const GridSpec spec(1, 16);
  const ModelSpec model = model_with(spec, make_dipole_single_site(spec, 6.0), false,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const ReferenceState ref = reference_ground_state(model, model.a());
  const GroundStateCurve curve = ground_state_curve(model, ref.phi, "phi_a", 17);
  REQUIRE(curve.ts.size() == 17u);
  REQUIRE(curve.energies.size() == 17u);
  for (double s : curve.second_differences) CHECK(s <= 1e-9);
  // Midpoint concavity on random coupling pairs.
  for (auto [t1, t2] : {std::pair{0.0, 1.0}, std::pair{0.2, 0.9}, std::pair{0.05, 0.55}}) {
    const double mid = e_phi(model, ref.phi, 0.5 * (t1 + t2));
    const double chord = 0.5 * (e_phi(model, ref.phi, t1) + e_phi(model, ref.phi, t2));
    CHECK(mid >= chord - 1e-10);
  }
}

TEST_CASE("spectral-sum curvature matches finite differences") {
  const GridSpec spec(1, 16);
  const ModelSpec model = model_with(spec, make_dipole_single_site(spec, 5.0), false,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const ReferenceState ref = reference_ground_state(model, model.a());
  for (double t : {0.25, 0.5, 0.85}) {
    const SpectralSumReport ss = second_derivative_spectral_sum(model, ref.phi, t);
    const double fd = second_derivative_fd(model, ref.phi, t);
    CHECK(ss.value < 0.0);
    CHECK(std::abs(ss.value - fd) <= 0.05 * std::abs(ss.value));
  }
}

TEST_CASE("nonnegative sites put the minimum at the lower coupling edge") {
  const GridSpec spec(1, 8);
  const ModelSpec model = model_with(spec, make_bump_single_site(spec, 5.0), true,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const SpectralMinReport rep = classify(model);
  CHECK(rep.min_case == SpectralMinCase::LowerEdge);
  CHECK(std::string(case_name(rep.min_case)) == "lower-edge");
  CHECK(rep.e0_lo <= rep.e0_hi);
  CHECK(rep.e0_lo == Catch::Approx(rep.e_phia_a).margin(1e-12));
}

TEST_CASE("nonpositive sites mirror to the upper coupling edge") {
  const GridSpec spec(1, 8);
  const ModelSpec model = model_with(spec, make_bump_single_site(spec, -5.0), true,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const SpectralMinReport rep = classify(model);
  CHECK(rep.min_case == SpectralMinCase::UpperEdge);
}

TEST_CASE("classification intervals bracket the sampled minimum") {
  const GridSpec spec(1, 8);
  const ModelSpec model = model_with(spec, make_dipole_single_site(spec, 6.0), false,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const SpectralMinReport rep = classify(model);
  const BruteForceReport brute = brute_force_e0(model, 5, 32, 99u);
  CHECK(brute.e0 >= rep.e0_lo - 0.5 * spec.h() * (1.0 + std::abs(brute.e0)));
  CHECK(brute.e0 <= rep.e0_hi + 0.5 * spec.h() * (1.0 + std::abs(brute.e0)));
  CHECK(static_cast<int>(brute.energies.size()) == brute.realizations);
}

TEST_CASE("brute-force sampling is reproducible") {
  const GridSpec spec(1, 8);
  const ModelSpec model = model_with(spec, make_dipole_single_site(spec, 3.0), false,
                                     CouplingDistribution::uniform(0.0, 1.0));
  const BruteForceReport r1 = brute_force_e0(model, 3, 10, 5u);
  const BruteForceReport r2 = brute_force_e0(model, 3, 10, 5u);
  CHECK(r1.e0 == r2.e0);
  CHECK(r1.argmin_index == r2.argmin_index);
  CHECK(r1.energies == r2.energies);
}
