#pragma once

// The single-cell coupling-energy machinery.
//
// For a model (V0, u, coupling law on [a,b]) let E_per(t) be the periodic
// ground energy of the unit-cell operator at constant coupling t, phi_t its
// positive ground state, and E_phi(t) the ground energy of the cell operator
// with Mezincescu(phi) boundary weight. Structure exploited throughout:
//
//   * t -> form is affine at fixed field, so E_phi is concave in t (an
//     infimum of affine functions), strictly when u is non-constant;
//   * bracketing: any positive periodic reference phi gives
//     lambda_min(torus, omega) >= min_i E_phi(omega_i);
//   * inheritance: with phi = phi_t the tiled phi_t is an exact eigenvector
//     of the global Mezincescu operator, so E_phi_t(t) = E_per(t) on this
//     discretization (up to rounding).
//
// Together these pin the almost-sure spectral minimum to one of three
// positions: the lower coupling edge (E_phia(a)), the upper edge
// (E_phib(b)), or an interval bracketed by the four corner energies.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "alloylab/assemble.hpp"
#include "alloylab/core.hpp"
#include "alloylab/eigensolve.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"

namespace alloylab {

struct ModelSpec {
  GridSpec spec;
  PeriodicPotential v0;
  SingleSitePotential u;
  CouplingDistribution dist;
  bool waive_indefiniteness = false;  // sign-definite control models only

  void validate() const {
    spec.validate();
    require(v0.v.spec() == spec, "ModelSpec: background potential grid mismatch");
    require(u.u.spec() == spec, "ModelSpec: single-site potential grid mismatch");
    if (!waive_indefiniteness)
      require(u.has_positive_part && u.has_negative_part,
              "ModelSpec: single-site potential must take both signs "
              "(set waive_indefiniteness for sign-definite controls)");
  }
  double a() const { return dist.a; }
  double b() const { return dist.b; }
};

// Potential field of the constant-coupling model on a single cell.
inline std::vector<double> constant_coupling_field(const ModelSpec& model, const Domain& dom,
                                                   double t) {
  return alloy_field(model.v0, model.u, constant_configuration(dom, t), dom);
}

struct ReferenceState {
  double coupling = 0.0;
  double energy = 0.0;  // periodic cell ground energy E_per(t)
  UnitCellField phi;    // positive periodic ground state, max sample 1
  bool positive = true;
};

// Periodic unit-cell ground state at constant coupling t.
inline ReferenceState reference_ground_state(const ModelSpec& model, double t) {
  model.validate();
  const Domain cell = make_cube(1, model.spec);
  const AssembledOperator op =
      assemble(cell, BoundarySpec::periodic(), constant_coupling_field(model, cell, t));
  const GroundState gs = ground_state(op);
  const std::vector<double> on_nodes = op.prolong_field(gs.vec);

  ReferenceState ref;
  ref.coupling = t;
  ref.energy = gs.e0;
  ref.positive = gs.positive;
  std::vector<double> samples(static_cast<std::size_t>(UnitCellField::num_samples(model.spec)));
  UnitCellField probe(model.spec, samples);  // for local indexing only
  const int n = model.spec.n;
  probe.for_each_local([&](const IVec& l) {
    IVec k{0, 0, 0};
    for (int j = 0; j < model.spec.d; ++j)
      k[static_cast<std::size_t>(j)] = l[static_cast<std::size_t>(j)] - n / 2;
    // periodic rep: far faces carry their near-face value
    const IVec rep = detail::periodic_wrap(cell, k);
    samples[static_cast<std::size_t>(probe.local_index(l))] =
        on_nodes[static_cast<std::size_t>(cell.node_index(rep))];
  });
  UnitCellField phi(model.spec, std::move(samples));
  const double mx = phi.max_sample();
  ensure(mx > 0.0, "reference_ground_state: ground state not positive");
  for (double& s : phi.samples()) s /= mx;
  ref.phi = std::move(phi);
  return ref;
}

// Ground energy of the single-cell operator at coupling t under
// Mezincescu(phi_ref) boundary weight.
inline double e_phi(const ModelSpec& model, const UnitCellField& phi_ref, double t) {
  const Domain cell = make_cube(1, model.spec);
  const AssembledOperator op = assemble(cell, BoundarySpec::mezincescu(phi_ref),
                                        constant_coupling_field(model, cell, t));
  return smallest_eigenvalue(op);
}

struct GroundStateCurve {
  std::string phi_tag;  // "phi_a" | "phi_b" | "custom"
  std::vector<double> ts;
  std::vector<double> energies;
  std::vector<double> second_differences;  // interior points, length ts.size()-2
};

inline GroundStateCurve ground_state_curve(const ModelSpec& model, const UnitCellField& phi_ref,
                                           const std::string& phi_tag, int num_points = 33) {
  require(num_points >= 5, "ground_state_curve: need at least 5 points");
  GroundStateCurve c;
  c.phi_tag = phi_tag;
  const double a = model.a(), b = model.b();
  c.ts.resize(static_cast<std::size_t>(num_points));
  c.energies.resize(static_cast<std::size_t>(num_points));
  for (int i = 0; i < num_points; ++i) {
    const double t = a + (b - a) * i / (num_points - 1);
    c.ts[static_cast<std::size_t>(i)] = t;
    c.energies[static_cast<std::size_t>(i)] = e_phi(model, phi_ref, t);
  }
  c.second_differences.resize(static_cast<std::size_t>(num_points - 2));
  for (int i = 1; i + 1 < num_points; ++i)
    c.second_differences[static_cast<std::size_t>(i - 1)] =
        c.energies[static_cast<std::size_t>(i + 1)] - 2.0 * c.energies[static_cast<std::size_t>(i)] +
        c.energies[static_cast<std::size_t>(i - 1)];
  return c;
}

struct SpectralSumReport {
  double value = 0.0;      // truncated -2 sum_k <u phi0, phi_k>^2 / (E_k - E_0)
  double tail = 0.0;       // magnitude of the last few retained terms
  int terms_used = 0;
};

// Exact finite-dimensional second derivative of E_phi at t: with M(t) affine
// in t and D fixed, E''(t) = -2 sum_{k>=1} (phi0' M' phi_k)^2 / (E_k - E_0)
// over the D-orthonormal eigenbasis. M' is the diagonal u-quadrature, equal
// node-wise to u * mass.
inline SpectralSumReport second_derivative_spectral_sum(const ModelSpec& model,
                                                        const UnitCellField& phi_ref, double t,
                                                        int K = 30) {
  require(K >= 1, "second_derivative_spectral_sum: K >= 1");
  const Domain cell = make_cube(1, model.spec);
  const AssembledOperator op = assemble(cell, BoundarySpec::mezincescu(phi_ref),
                                        constant_coupling_field(model, cell, t));
  const Spectrum sp = dense_spectrum(op);
  const double e0 = sp.values[0];
  ensure(op.dim < 2 || sp.values[1] - e0 > 1e-9 * (1.0 + std::abs(e0)),
         "second_derivative_spectral_sum: degenerate ground state");

  Eigen::VectorXd uq(op.dim);  // diagonal of dM/dt
  for (int i = 0; i < op.dim; ++i) {
    const IVec& k = cell.nodes()[static_cast<std::size_t>(op.free_nodes[static_cast<std::size_t>(i)])];
    uq[i] = model.u.u.at_cell_node(cell, ivec(0, 0, 0), k) * op.mass[i];
  }
  const Eigen::VectorXd u_phi0 = uq.cwiseProduct(sp.vectors.col(0));

  SpectralSumReport rep;
  rep.terms_used = std::min(K, op.dim - 1);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(rep.terms_used));
  for (int k = 1; k <= rep.terms_used; ++k) {
    const double c = u_phi0.dot(sp.vectors.col(k));
    terms.push_back(-2.0 * c * c / (sp.values[k] - e0));
  }
  for (double v : terms) rep.value += v;
  const std::size_t tail_from = terms.size() > 5 ? terms.size() - 5 : 0;
  for (std::size_t i = tail_from; i < terms.size(); ++i) rep.tail += std::abs(terms[i]);
  return rep;
}

inline double second_derivative_fd(const ModelSpec& model, const UnitCellField& phi_ref, double t,
                                   double dt = 1e-3) {
  const double ep = e_phi(model, phi_ref, t + dt);
  const double e0 = e_phi(model, phi_ref, t);
  const double em = e_phi(model, phi_ref, t - dt);
  return (ep - 2.0 * e0 + em) / (dt * dt);
}

enum class SpectralMinCase { LowerEdge, UpperEdge, Bracketed };

inline const char* case_name(SpectralMinCase c) {
  switch (c) {
    case SpectralMinCase::LowerEdge: return "lower-edge";
    case SpectralMinCase::UpperEdge: return "upper-edge";
    case SpectralMinCase::Bracketed: return "bracketed";
  }
  return "?";
}

struct SpectralMinReport {
  double e_phia_a = 0.0, e_phia_b = 0.0;  // E_phi(t) at the curve corners
  double e_phib_a = 0.0, e_phib_b = 0.0;
  SpectralMinCase min_case = SpectralMinCase::LowerEdge;
  double e0_lo = 0.0, e0_hi = 0.0;  // equal in the edge cases
  double tie_margin = 0.0;          // distance to the classification boundary
  std::optional<double> t_a, t_b;   // bracketed-case witnesses (diagnostic)
  ReferenceState ref_a, ref_b;
};

namespace detail {

// Bisect e_phi(t) - target on [lo, hi] given opposite signs at the ends.
inline double bisect_curve(const ModelSpec& model, const UnitCellField& phi_ref, double target,
                           double lo, double hi, double f_lo) {
  double a = lo, b = hi;
  bool lo_nonneg = f_lo >= 0.0;
  for (int it = 0; it < 60 && b - a > 1e-12 * (1.0 + std::abs(a)); ++it) {
    const double mid = 0.5 * (a + b);
    const double f = e_phi(model, phi_ref, mid) - target;
    if ((f >= 0.0) == lo_nonneg)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Classify where the almost-sure spectral minimum sits. Tie rule: corner
// energies within max(1e-8, 10 tol)(1+|E|) are deemed equal and the edge
// case is preferred; tie_margin reports how close the call was.
inline SpectralMinReport classify(const ModelSpec& model, double tol = 1e-10) {
  model.validate();
  SpectralMinReport rep;
  rep.ref_a = reference_ground_state(model, model.a());
  rep.ref_b = reference_ground_state(model, model.b());
  rep.e_phia_a = e_phi(model, rep.ref_a.phi, model.a());
  rep.e_phia_b = e_phi(model, rep.ref_a.phi, model.b());
  rep.e_phib_a = e_phi(model, rep.ref_b.phi, model.a());
  rep.e_phib_b = e_phi(model, rep.ref_b.phi, model.b());

  const auto eq_tol = [&](double e) { return std::max(1e-8, 10.0 * tol) * (1.0 + std::abs(e)); };
  const double lower_gap = rep.e_phia_b - rep.e_phia_a;  // >= 0 (with tie): min at a
  const double upper_gap = rep.e_phib_a - rep.e_phib_b;  // >= 0 (with tie): min at b
  rep.tie_margin = std::min(std::abs(lower_gap), std::abs(upper_gap));

  if (lower_gap >= -eq_tol(rep.e_phia_a)) {
    rep.min_case = SpectralMinCase::LowerEdge;
    rep.e0_lo = rep.e0_hi = rep.e_phia_a;
  } else if (upper_gap >= -eq_tol(rep.e_phib_b)) {
    rep.min_case = SpectralMinCase::UpperEdge;
    rep.e0_lo = rep.e0_hi = rep.e_phib_b;
  } else {
    rep.min_case = SpectralMinCase::Bracketed;
    rep.e0_lo = std::max(rep.e_phia_b, rep.e_phib_a);
    rep.e0_hi = std::min(rep.e_phia_a, rep.e_phib_b);
    const double mid = 0.5 * (rep.e0_lo + rep.e0_hi);
    // E_phia runs from >= mid at a to <= mid at b; E_phib the reverse.
    rep.t_a = detail::bisect_curve(model, rep.ref_a.phi, mid, model.a(), model.b(),
                                   rep.e_phia_a - mid);
    rep.t_b = detail::bisect_curve(model, rep.ref_b.phi, mid, model.a(), model.b(),
                                   rep.e_phib_a - mid);
  }
  return rep;
}

struct BruteForceReport {
  double e0 = 0.0;               // min ground energy over the sampled ensemble
  int argmin_index = 0;          // realization index; -1: omega == a, -2: omega == b
  int realizations = 0;          // sampled (excluding the two constant configs)
  std::vector<double> energies;  // per-realization ground energies (sampled only)
};

// Direct oracle: minimum periodic-box ground energy over sampled coupling
// configurations plus the two constant ones.
inline BruteForceReport brute_force_e0(const ModelSpec& model, int L, int R, std::uint64_t seed) {
  model.validate();
  require(R >= 0, "brute_force_e0: R >= 0");
  const Domain box = make_cube(L, model.spec);
  BruteForceReport rep;
  rep.realizations = R;
  rep.e0 = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Configuration& cfg, int idx) {
    const AssembledOperator op =
        assemble(box, BoundarySpec::periodic(), alloy_field(model.v0, model.u, cfg, box));
    const double e = smallest_eigenvalue(op);
    if (idx >= 0) rep.energies.push_back(e);
    if (e < rep.e0) {
      rep.e0 = e;
      rep.argmin_index = idx;
    }
  };
  consider(constant_configuration(box, model.a()), -1);
  consider(constant_configuration(box, model.b()), -2);
  for (int r = 0; r < R; ++r) consider(sample_configuration(model.dist, box, seed, r), r);
  return rep;
}

}  // namespace alloylab
