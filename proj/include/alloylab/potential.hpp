#pragma once

// Potential data: periodic background V0, single-site bump u, coupling
// distributions, and sampled coupling configurations.
//
// Unit-cell fields are sampled on the closed cell [-1/2,1/2]^d at nodes
// (l - n/2)*h, l = 0..n per axis. Storage keeps both faces; periodic fields
// must carry equal values on opposite faces and evaluate anywhere on Z^d by
// index wrap.

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/rng.hpp"

namespace alloylab {

class UnitCellField {
 public:
  UnitCellField() = default;
  UnitCellField(GridSpec spec, std::vector<double> samples)
      : spec_(spec), samples_(std::move(samples)) {
    spec_.validate();
    require(samples_.size() == static_cast<std::size_t>(num_samples(spec_)),
            "UnitCellField: sample count does not match grid");
  }

  static int num_samples(const GridSpec& spec) {
    int s = 1;
    for (int j = 0; j < spec.d; ++j) s *= spec.n + 1;
    return s;
  }

  static UnitCellField from_function(GridSpec spec,
                                     const std::function<double(const double*)>& f) {
    spec.validate();
    std::vector<double> v(static_cast<std::size_t>(num_samples(spec)));
    const double h = spec.h();
    IVec l{0, 0, 0};
    const int t1 = spec.n, t2 = spec.d > 1 ? spec.n : 0, t3 = spec.d > 2 ? spec.n : 0;
    std::size_t idx = 0;
    for (l[0] = 0; l[0] <= t1; ++l[0])
      for (l[1] = 0; l[1] <= t2; ++l[1])
        for (l[2] = 0; l[2] <= t3; ++l[2]) {
          double x[3] = {0, 0, 0};
          for (int j = 0; j < spec.d; ++j)
            x[j] = (l[static_cast<std::size_t>(j)] - spec.n / 2) * h;
          v[idx++] = f(x);
        }
    // from_function fills in the same lexicographic order as local_index
    return UnitCellField(spec, std::move(v));
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& samples() const { return samples_; }
  std::vector<double>& samples() { return samples_; }

  // Local index of l in [0, n]^d (lexicographic, last axis fastest).
  int local_index(const IVec& l) const {
    int idx = 0;
    for (int j = 0; j < spec_.d; ++j) idx = idx * (spec_.n + 1) + l[static_cast<std::size_t>(j)];
    return idx;
  }

  double at_local(const IVec& l) const {
    return samples_[static_cast<std::size_t>(local_index(l))];
  }

  // Value at a global grid node k (units of h) of cell `cell`.
  double at_cell_node(const Domain& dom, const IVec& cell, const IVec& k) const {
    const IVec base = dom.cell_base(cell);
    IVec l{0, 0, 0};
    for (int j = 0; j < spec_.d; ++j)
      l[static_cast<std::size_t>(j)] = k[static_cast<std::size_t>(j)] - base[static_cast<std::size_t>(j)];
    return at_local(l);
  }

  // Periodic extension over Z^d: wrap k into local index modulo n.
  double at_wrapped(const IVec& k) const {
    IVec l{0, 0, 0};
    for (int j = 0; j < spec_.d; ++j) {
      int v = (k[static_cast<std::size_t>(j)] + spec_.n / 2) % spec_.n;
      if (v < 0) v += spec_.n;
      l[static_cast<std::size_t>(j)] = v;
    }
    return at_local(l);
  }

  double min_sample() const {
    double m = samples_.empty() ? 0.0 : samples_[0];
    for (double s : samples_) m = std::min(m, s);
    return m;
  }
  double max_sample() const {
    double m = samples_.empty() ? 0.0 : samples_[0];
    for (double s : samples_) m = std::max(m, s);
    return m;
  }

  // Max |v(face_lo) - v(face_hi)| over opposite faces: 0 for periodic fields.
  double periodicity_defect() const {
    double dev = 0.0;
    const int n = spec_.n;
    for (int axis = 0; axis < spec_.d; ++axis)
      detail::for_facet_nodes(spec_, axis, false, [&](const IVec& lo) {
        IVec hi = lo;
        hi[static_cast<std::size_t>(axis)] = n;
        dev = std::max(dev, std::abs(at_local(lo) - at_local(hi)));
      });
    return dev;
  }

  bool on_cell_boundary(const IVec& l) const {
    for (int j = 0; j < spec_.d; ++j) {
      const int v = l[static_cast<std::size_t>(j)];
      if (v == 0 || v == spec_.n) return true;
    }
    return false;
  }

  template <class F>
  void for_each_local(F&& f) const {
    IVec l{0, 0, 0};
    const int t1 = spec_.n, t2 = spec_.d > 1 ? spec_.n : 0, t3 = spec_.d > 2 ? spec_.n : 0;
    for (l[0] = 0; l[0] <= t1; ++l[0])
      for (l[1] = 0; l[1] <= t2; ++l[1])
        for (l[2] = 0; l[2] <= t3; ++l[2]) f(l);
  }

 private:
  GridSpec spec_;
  std::vector<double> samples_;
};

// Z^d-periodic background potential.
struct PeriodicPotential {
  UnitCellField v;
  double lower_bound = 0.0;  // min over samples, kept in sync by construction

  PeriodicPotential() = default;
  explicit PeriodicPotential(UnitCellField f) : v(std::move(f)) {
    require(v.periodicity_defect() == 0.0,
            "PeriodicPotential: opposite-face samples differ");
    lower_bound = v.min_sample();
  }
};

// Single-site potential supported in the open unit cell: samples vanish on
// all boundary nodes of C_0, so the alloy sum is unambiguous at interfaces.
struct SingleSitePotential {
  UnitCellField u;
  bool has_positive_part = false;
  bool has_negative_part = false;

  SingleSitePotential() = default;
  explicit SingleSitePotential(UnitCellField f) : u(std::move(f)) {
    u.for_each_local([&](const IVec& l) {
      const double s = u.at_local(l);
      if (u.on_cell_boundary(l)) {
        require(s == 0.0, "SingleSitePotential: nonzero sample on the cell boundary");
      }
      if (s > 0.0) has_positive_part = true;
      if (s < 0.0) has_negative_part = true;
    });
  }
};

// Split u = u_+ - u_- pointwise; both parts vanish on the cell boundary.
inline std::pair<SingleSitePotential, SingleSitePotential> split_signs(
    const SingleSitePotential& u) {
  std::vector<double> up(u.u.samples().size()), um(u.u.samples().size());
  for (std::size_t i = 0; i < u.u.samples().size(); ++i) {
    const double s = u.u.samples()[i];
    up[i] = s > 0.0 ? s : 0.0;
    um[i] = s < 0.0 ? -s : 0.0;
  }
  return {SingleSitePotential(UnitCellField(u.u.spec(), std::move(up))),
          SingleSitePotential(UnitCellField(u.u.spec(), std::move(um)))};
}

// i.i.d. coupling law on [a, b]; a and b are attained.
struct CouplingDistribution {
  enum class Kind { Bernoulli, Uniform, Discrete };
  Kind kind = Kind::Bernoulli;
  double a = 0.0, b = 1.0;
  double p_b = 0.5;                       // Bernoulli: P(omega = b)
  std::vector<double> points, weights;    // Discrete

  static CouplingDistribution bernoulli(double a, double b, double p_b) {
    CouplingDistribution d;
    d.kind = Kind::Bernoulli;
    d.a = a;
    d.b = b;
    d.p_b = p_b;
    d.validate();
    return d;
  }
  static CouplingDistribution uniform(double a, double b) {
    CouplingDistribution d;
    d.kind = Kind::Uniform;
    d.a = a;
    d.b = b;
    d.validate();
    return d;
  }
  static CouplingDistribution discrete(std::vector<double> points, std::vector<double> weights) {
    CouplingDistribution d;
    d.kind = Kind::Discrete;
    d.points = std::move(points);
    d.weights = std::move(weights);
    require(!d.points.empty(), "CouplingDistribution: empty support");
    d.a = *std::min_element(d.points.begin(), d.points.end());
    d.b = *std::max_element(d.points.begin(), d.points.end());
    d.validate();
    return d;
  }

  void validate() const {
    require(a < b, "CouplingDistribution: need a < b (single-point support is degenerate)");
    if (kind == Kind::Bernoulli) {
      require(p_b > 0.0 && p_b < 1.0, "CouplingDistribution: Bernoulli weight must be in (0,1)");
    } else if (kind == Kind::Discrete) {
      require(points.size() >= 2, "CouplingDistribution: need at least two support points");
      require(points.size() == weights.size(), "CouplingDistribution: points/weights mismatch");
      double sum = 0.0;
      for (double w : weights) {
        require(w > 0.0, "CouplingDistribution: weights must be positive");
        sum += w;
      }
      require(std::abs(sum - 1.0) <= 1e-12, "CouplingDistribution: weights must sum to 1");
      for (double p : points)
        require(p >= a && p <= b, "CouplingDistribution: support outside [a,b]");
    }
  }

  // Inverse CDF at unit in [0,1).
  double sample(double unit) const {
    switch (kind) {
      case Kind::Bernoulli:
        return unit < p_b ? b : a;
      case Kind::Uniform:
        return a + unit * (b - a);
      case Kind::Discrete: {
        double acc = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
          acc += weights[i];
          if (unit < acc) return points[i];
        }
        return points.back();
      }
    }
    return a;
  }

  // mu(eps) = P(omega in [a, a+eps) u (b-eps, b]): mass of the extreme bands.
  double gap_probability(double eps) const {
    require(eps > 0.0 && 2.0 * eps < b - a, "gap_probability: need 0 < eps < (b-a)/2");
    switch (kind) {
      case Kind::Bernoulli:
        return 1.0;
      case Kind::Uniform:
        return 2.0 * eps / (b - a);
      case Kind::Discrete: {
        double mu = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
          if (points[i] < a + eps || points[i] > b - eps) mu += weights[i];
        return mu;
      }
    }
    return 0.0;
  }

  bool is_bernoulli() const { return kind == Kind::Bernoulli; }
};

// One sampled coupling field, aligned with Domain::cells().
struct Configuration {
  std::vector<double> omega;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  double at(int cell_idx) const { return omega[static_cast<std::size_t>(cell_idx)]; }
};

// Draw realization `index`: each cell's coupling is a pure function of
// (seed, index, cell), independent of enumeration order.
inline Configuration sample_configuration(const CouplingDistribution& dist, const Domain& dom,
                                          std::uint64_t seed, std::uint64_t index) {
  Configuration c;
  c.seed = seed;
  c.index = index;
  c.omega.reserve(dom.cells().size());
  for (const IVec& cell : dom.cells())
    c.omega.push_back(dist.sample(site_uniform(seed, index, cell, dom.spec.d)));
  return c;
}

inline Configuration constant_configuration(const Domain& dom, double t) {
  Configuration c;
  c.omega.assign(dom.cells().size(), t);
  return c;
}

// ---------------------------------------------------------------------------
// Presets.

// Tensor-product mollifier bump: B(x) = prod_j b(x_j), b supported on
// |s| < 3/8 (collar of width 1/8 next to the cell boundary), b(0) = 1.
inline double mollifier_bump(const double* x, int d) {
  double prod = 1.0;
  for (int j = 0; j < d; ++j) {
    const double s = x[j] / 0.375;
    if (std::abs(s) >= 1.0) return 0.0;
    prod *= std::exp(1.0 - 1.0 / (1.0 - s * s));
  }
  return prod;
}

inline PeriodicPotential make_zero_potential(GridSpec spec) {
  return PeriodicPotential(UnitCellField::from_function(spec, [](const double*) { return 0.0; }));
}

inline PeriodicPotential make_cosine_potential(GridSpec spec, double amplitude = 1.0) {
  return PeriodicPotential(UnitCellField::from_function(spec, [=](const double* x) {
    double v = 0.0;
    for (int j = 0; j < spec.d; ++j) v += amplitude * std::cos(2.0 * std::numbers::pi * x[j]);
    return v;
  }));
}

// Sign-definite bump single-site potential (amplitude may be negative).
inline SingleSitePotential make_bump_single_site(GridSpec spec, double amplitude) {
  return SingleSitePotential(UnitCellField::from_function(
      spec, [=](const double* x) { return amplitude * mollifier_bump(x, spec.d); }));
}

// Generic sign-indefinite single-site potential: a positive lobe on the left
// half of the first axis and a mirrored negative lobe on the right half,
// both strictly inside the open cell. Mean zero by symmetry.
inline SingleSitePotential make_dipole_single_site(GridSpec spec, double amplitude) {
  const auto lobe = [](double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
  };
  return SingleSitePotential(UnitCellField::from_function(spec, [=](const double* x) {
    double transverse = 1.0;
    for (int j = 1; j < spec.d; ++j) transverse *= lobe(x[j] / 0.375);
    const double left = lobe((x[0] + 0.25) / 0.1875);
    const double right = lobe((x[0] - 0.25) / 0.1875);
    return amplitude * (left - right) * transverse;
  }));
}

// Discrete Laplacian on the closed cell; defined at interior nodes only.
inline double discrete_laplacian_at(const UnitCellField& f, const IVec& l) {
  const double h = f.spec().h();
  double acc = 0.0;
  for (int j = 0; j < f.spec().d; ++j)
    acc += f.at_local(shifted(l, j, +1)) + f.at_local(shifted(l, j, -1)) - 2.0 * f.at_local(l);
  return acc / (h * h);
}

struct KnModel {
  UnitCellField psi;      // strictly positive, constant (= 1) on the boundary collar
  SingleSitePotential u;  // u = (Delta_h psi) / psi at interior nodes, 0 on the boundary
};

// Single-site potential with a designed lattice ground state: psi = 1 + amp*B
// with B the mollifier bump, u = Delta_h psi / psi. Then (-Delta_h + u) psi = 0
// exactly on the grid, load-bearing for the flat-minimum model. Requires
// n >= 4 (interior nodes exist) and amplitude > -1 (psi > 0); the collar is
// resolved (psi identically 1 within h of the boundary) once n >= 8.
inline KnModel kn_single_site(double amplitude, GridSpec spec) {
  spec.validate();
  require(spec.n >= 4, "kn_single_site: need n >= 4");
  UnitCellField psi = UnitCellField::from_function(
      spec, [=](const double* x) { return 1.0 + amplitude * mollifier_bump(x, spec.d); });
  require(psi.min_sample() > 0.0, "kn_single_site: psi must stay strictly positive");

  std::vector<double> u(psi.samples().size(), 0.0);
  psi.for_each_local([&](const IVec& l) {
    if (!psi.on_cell_boundary(l))
      u[static_cast<std::size_t>(psi.local_index(l))] =
          discrete_laplacian_at(psi, l) / psi.at_local(l);
  });
  KnModel out;
  out.u = SingleSitePotential(UnitCellField(spec, std::move(u)));
  out.psi = std::move(psi);
  return out;
}

// Alloy potential sampled on the domain's nodes:
//   V(x) = V0(x) + sum_i omega_i u(x - i).
// u vanishes on cell boundaries, so interface nodes are unambiguous.
inline std::vector<double> alloy_field(const PeriodicPotential& v0, const SingleSitePotential& u,
                                       const Configuration& cfg, const Domain& dom) {
  require(cfg.omega.size() == static_cast<std::size_t>(dom.num_cells()),
          "alloy_field: configuration does not match domain cells");
  require(v0.v.spec() == dom.spec && u.u.spec() == dom.spec,
          "alloy_field: grid mismatch");
  std::vector<double> field(static_cast<std::size_t>(dom.num_nodes()), 0.0);
  for (int i = 0; i < dom.num_nodes(); ++i)
    field[static_cast<std::size_t>(i)] = v0.v.at_wrapped(dom.nodes()[static_cast<std::size_t>(i)]);
  for (int ci = 0; ci < dom.num_cells(); ++ci) {
    const IVec cell = dom.cells()[static_cast<std::size_t>(ci)];
    const IVec base = dom.cell_base(cell);
    const double w = cfg.at(ci);
    u.u.for_each_local([&](const IVec& l) {
      const double s = u.u.at_local(l);
      if (s == 0.0) return;  // boundary samples are zero; interior of other cells untouched
      const IVec k{base[0] + l[0], base[1] + l[1], base[2] + l[2]};
      field[static_cast<std::size_t>(dom.node_index(k))] += w * s;
    });
  }
  return field;
}

}  // namespace alloylab
