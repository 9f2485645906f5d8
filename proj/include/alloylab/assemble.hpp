#pragma once

// Quadratic-form assembly of lattice Schrodinger operators on cell unions.
//
// The discrete form of -Laplace + V with boundary weight chi is
//
//   Q(phi) = sum_links  w_t * h^(d-2) * (phi(x+he) - phi(x))^2
//          + sum_bnd    chi(x) * w_t * h^(d-1) * phi(x)^2
//          + sum_nodes  V(x) * w * h^d * phi(x)^2,
//
// with tensor trapezoid weights w (1/2 per extremal axis). Assembly walks
// cells and accumulates each cell's closed-cell trapezoid contribution, so
// the global form equals the sum of cell-local forms identically: interface
// link/potential/mass weights add to the interior weights, and interface
// boundary terms of adjacent cells are exact negations of each other.
//
// Eigenvalues are those of the pencil (form, mass): mass is the diagonal
// trapezoid quadrature of the L2 norm, making Rayleigh quotients approximate
// continuum energies. The centered-difference Mezincescu weight
//
//   chi(x; j, s) = -s * (phi(x + h e_j) - phi(x - h e_j)) / (2h * phi(x))
//
// sampled from a positive periodic reference phi makes the periodic cell
// ground state an exact eigenvector of the assembled operator (the interface
// terms cancel and the boundary rows close via the periodic stencil), so
// energy inheritance holds to rounding on this grid.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <vector>

#include "alloylab/core.hpp"
#include "alloylab/grid.hpp"
#include "alloylab/potential.hpp"

namespace alloylab {

enum class BC { Dirichlet, Neumann, Mezincescu, Periodic };

inline const char* bc_name(BC bc) {
  switch (bc) {
    case BC::Dirichlet: return "dirichlet";
    case BC::Neumann: return "neumann";
    case BC::Mezincescu: return "mezincescu";
    case BC::Periodic: return "periodic";
  }
  return "?";
}

struct BoundarySpec {
  BC bc = BC::Neumann;
  UnitCellField phi_ref;  // Mezincescu only: strictly positive periodic reference

  static BoundarySpec dirichlet() { return BoundarySpec{BC::Dirichlet, {}}; }
  static BoundarySpec neumann() { return BoundarySpec{BC::Neumann, {}}; }
  static BoundarySpec periodic() { return BoundarySpec{BC::Periodic, {}}; }
  static BoundarySpec mezincescu(UnitCellField phi) {
    require(phi.min_sample() > 0.0, "BoundarySpec: Mezincescu reference must be positive");
    require(phi.periodicity_defect() == 0.0,
            "BoundarySpec: Mezincescu reference must be periodic");
    return BoundarySpec{BC::Mezincescu, std::move(phi)};
  }
};

// Robin weight from the periodic reference, centered difference, outward
// normal s*e_j. Opposite signs at the same node are exact negations.
inline double chi_value(const UnitCellField& phi, const IVec& k, int axis, int sign, double h) {
  const double num = phi.at_wrapped(shifted(k, axis, +1)) - phi.at_wrapped(shifted(k, axis, -1));
  return -sign * num / (2.0 * h * phi.at_wrapped(k));
}

// chi evaluated on a domain's boundary and interface faces.
struct BoundaryData {
  FaceSet faces;
  std::vector<double> chi_boundary;  // aligned with faces.boundary
  std::vector<double> chi_lo;        // interface, outward from the low cell (+axis)
  std::vector<double> chi_hi;        // interface, outward from the high cell (-axis)
};

inline BoundaryData chi_from_phi(const UnitCellField& phi, const Domain& dom) {
  require(phi.min_sample() > 0.0, "chi_from_phi: reference must be positive");
  require(phi.spec() == dom.spec, "chi_from_phi: grid mismatch");
  BoundaryData bd;
  bd.faces = boundary_faces(dom);
  const double h = dom.spec.h();
  bd.chi_boundary.reserve(bd.faces.boundary.size());
  for (const BoundaryFace& f : bd.faces.boundary)
    bd.chi_boundary.push_back(
        chi_value(phi, dom.nodes()[static_cast<std::size_t>(f.node)], f.axis, f.sign, h));
  bd.chi_lo.reserve(bd.faces.interface.size());
  bd.chi_hi.reserve(bd.faces.interface.size());
  for (const InterfaceFace& f : bd.faces.interface) {
    const IVec& k = dom.nodes()[static_cast<std::size_t>(f.node)];
    bd.chi_lo.push_back(chi_value(phi, k, f.axis, +1, h));
    bd.chi_hi.push_back(chi_value(phi, k, f.axis, -1, h));
  }
  return bd;
}

// Exact per-cell contribution of the assembly, in node-index space. The
// chi list covers the cell's FULL boundary (interface faces included), which
// is what the cell-local bracketing operators use; the global form only
// receives the outer-boundary subset.
struct CellTerms {
  struct Link { int a, b; double w; };
  struct Diag { int node; double w; };
  std::vector<Link> links;
  std::vector<Diag> pot;
  std::vector<Diag> chi;
  std::vector<Diag> mass;
};

// Optionally suppress Mezincescu boundary terms on one grid plane (used to
// carve out the Dirichlet-data interface of the half-space problem).
struct AssembleOptions {
  std::optional<int> skip_chi_axis;
  int skip_chi_coord = 0;  // node units: plane x_axis = coord * h
};

struct AssembledOperator {
  Domain dom;
  BC bc = BC::Neumann;
  UnitCellField phi_ref;  // Mezincescu only

  Eigen::SparseMatrix<double> form;  // dim x dim, symmetric, both triangles stored
  Eigen::VectorXd mass;              // positive diagonal of the mass quadrature
  std::vector<int> free_nodes;       // free index -> node index
  std::vector<int> node_to_free;     // node index -> free index (-1: eliminated)
  std::vector<CellTerms> cell_terms; // Neumann/Mezincescu only
  int dim = 0;
  double h = 0.0;

  // Restrict a per-node field to the free-node vector.
  Eigen::VectorXd restrict_field(const std::vector<double>& node_values) const {
    require(node_values.size() == static_cast<std::size_t>(dom.num_nodes()),
            "restrict_field: field size mismatch");
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i)
      v[i] = node_values[static_cast<std::size_t>(free_nodes[static_cast<std::size_t>(i)])];
    return v;
  }

  // Expand a free vector to all nodes (eliminated nodes get 0, identified
  // periodic nodes their representative's value).
  std::vector<double> prolong_field(const Eigen::VectorXd& v) const {
    require(v.size() == dim, "prolong_field: vector size mismatch");
    std::vector<double> out(static_cast<std::size_t>(dom.num_nodes()), 0.0);
    for (int i = 0; i < dom.num_nodes(); ++i) {
      const int fi = node_to_free[static_cast<std::size_t>(i)];
      if (fi >= 0) out[static_cast<std::size_t>(i)] = v[fi];
    }
    return out;
  }
};

inline double form_value(const AssembledOperator& op, const Eigen::VectorXd& v) {
  require(v.size() == op.dim, "form_value: vector size mismatch");
  return v.dot(op.form * v);
}

inline double mass_value(const AssembledOperator& op, const Eigen::VectorXd& v) {
  require(v.size() == op.dim, "mass_value: vector size mismatch");
  return v.dot(op.mass.cwiseProduct(v));
}

inline double rayleigh_quotient(const AssembledOperator& op, const Eigen::VectorXd& v) {
  const double m = mass_value(op, v);
  ensure(m > 0.0, "rayleigh_quotient: zero field");
  return form_value(op, v) / m;
}

namespace detail {

// Periodic image of a node of a cube domain: far faces fold onto near faces.
inline IVec periodic_wrap(const Domain& dom, IVec k) {
  const int half = dom.L * dom.spec.n / 2;
  for (int j = 0; j < dom.spec.d; ++j) {
    auto& c = k[static_cast<std::size_t>(j)];
    if (c == half) c = -half;
  }
  return k;
}

}  // namespace detail

// Assemble with per-cell potential samples: value(ci, k) is the potential of
// cell ci at global node k. For ordinary alloy fields this is independent of
// ci on shared nodes; cell-dependent values let comparison models weight a
// cell indicator by the trapezoid rule so cell additivity stays exact.
template <class CellValue>
AssembledOperator assemble_cellwise(const Domain& dom, const BoundarySpec& bspec,
                                    CellValue&& value, const AssembleOptions& opt = {}) {
  const GridSpec& spec = dom.spec;
  const int d = spec.d, n = spec.n;
  const double h = spec.h();
  const double hd = int_pow(h, d), hd1 = int_pow(h, d - 1), hd2 = int_pow(h, d - 2);
  const BC bc = bspec.bc;
  if (bc == BC::Periodic)
    require(dom.kind == DomainKind::Cube, "assemble: periodic bc needs a cube domain");
  if (bc == BC::Mezincescu)
    require(bspec.phi_ref.spec() == spec, "assemble: reference grid mismatch");

  AssembledOperator op;
  op.dom = dom;
  op.bc = bc;
  op.h = h;
  if (bc == BC::Mezincescu) op.phi_ref = bspec.phi_ref;

  // Free-node numbering.
  const int N = dom.num_nodes();
  op.node_to_free.assign(static_cast<std::size_t>(N), -1);
  if (bc == BC::Dirichlet) {
    std::vector<char> on_boundary(static_cast<std::size_t>(N), 0);
    for (const BoundaryFace& f : boundary_faces(dom).boundary)
      on_boundary[static_cast<std::size_t>(f.node)] = 1;
    for (int i = 0; i < N; ++i)
      if (!on_boundary[static_cast<std::size_t>(i)]) {
        op.node_to_free[static_cast<std::size_t>(i)] = static_cast<int>(op.free_nodes.size());
        op.free_nodes.push_back(i);
      }
    require(!op.free_nodes.empty(), "assemble: Dirichlet domain has no interior nodes");
  } else if (bc == BC::Periodic) {
    for (int i = 0; i < N; ++i) {
      const IVec& k = dom.nodes()[static_cast<std::size_t>(i)];
      if (detail::periodic_wrap(dom, k) == k) {
        op.node_to_free[static_cast<std::size_t>(i)] = static_cast<int>(op.free_nodes.size());
        op.free_nodes.push_back(i);
      }
    }
    for (int i = 0; i < N; ++i)
      if (op.node_to_free[static_cast<std::size_t>(i)] < 0) {
        const int rep = dom.node_index(detail::periodic_wrap(dom, dom.nodes()[static_cast<std::size_t>(i)]));
        op.node_to_free[static_cast<std::size_t>(i)] = op.node_to_free[static_cast<std::size_t>(rep)];
      }
  } else {
    op.free_nodes.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      op.free_nodes[static_cast<std::size_t>(i)] = i;
      op.node_to_free[static_cast<std::size_t>(i)] = i;
    }
  }
  op.dim = static_cast<int>(op.free_nodes.size());
  op.mass = Eigen::VectorXd::Zero(op.dim);

  const bool keep_cell_terms = (bc == BC::Neumann || bc == BC::Mezincescu);
  if (keep_cell_terms) op.cell_terms.resize(static_cast<std::size_t>(dom.num_cells()));

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(dom.num_cells()) *
                static_cast<std::size_t>(UnitCellField::num_samples(spec)) * 6u);

  const auto free_of = [&](const IVec& k) {
    return op.node_to_free[static_cast<std::size_t>(dom.node_index(k))];
  };
  const auto add_link = [&](int fa, int fb, double w) {
    if (fa >= 0 && fb >= 0) {
      trips.emplace_back(fa, fa, w);
      trips.emplace_back(fb, fb, w);
      trips.emplace_back(fa, fb, -w);
      trips.emplace_back(fb, fa, -w);
    } else if (fa >= 0) {
      trips.emplace_back(fa, fa, w);  // (phi_a - 0)^2 against an eliminated node
    } else if (fb >= 0) {
      trips.emplace_back(fb, fb, w);
    }
  };

  IVec l{0, 0, 0};
  const int t1 = n, t2 = d > 1 ? n : 0, t3 = d > 2 ? n : 0;
  for (int ci = 0; ci < dom.num_cells(); ++ci) {
    const IVec cell = dom.cells()[static_cast<std::size_t>(ci)];
    const IVec base = dom.cell_base(cell);
    CellTerms* terms = keep_cell_terms ? &op.cell_terms[static_cast<std::size_t>(ci)] : nullptr;

    // Volume terms: potential and mass with tensor trapezoid weights.
    for (l[0] = 0; l[0] <= t1; ++l[0])
      for (l[1] = 0; l[1] <= t2; ++l[1])
        for (l[2] = 0; l[2] <= t3; ++l[2]) {
          double w = 1.0;
          for (int j = 0; j < d; ++j)
            if (l[static_cast<std::size_t>(j)] == 0 || l[static_cast<std::size_t>(j)] == n) w *= 0.5;
          const IVec k{base[0] + l[0], base[1] + l[1], base[2] + l[2]};
          const int ni = dom.node_index(k);
          const int fi = op.node_to_free[static_cast<std::size_t>(ni)];
          const double vterm = value(ci, k) * w * hd;
          const double mterm = w * hd;
          if (fi >= 0) {
            trips.emplace_back(fi, fi, vterm);
            op.mass[fi] += mterm;
          }
          if (terms) {
            terms->pot.push_back({ni, vterm});
            terms->mass.push_back({ni, mterm});
          }
        }

    // Gradient links along each axis, transverse trapezoid weights.
    for (int axis = 0; axis < d; ++axis) {
      const int a1 = axis == 0 ? n - 1 : t1, a2 = axis == 1 ? n - 1 : t2,
                a3 = axis == 2 ? n - 1 : t3;
      for (l[0] = 0; l[0] <= a1; ++l[0])
        for (l[1] = 0; l[1] <= a2; ++l[1])
          for (l[2] = 0; l[2] <= a3; ++l[2]) {
            double wt = 1.0;
            for (int j = 0; j < d; ++j)
              if (j != axis &&
                  (l[static_cast<std::size_t>(j)] == 0 || l[static_cast<std::size_t>(j)] == n))
                wt *= 0.5;
            const IVec ka{base[0] + l[0], base[1] + l[1], base[2] + l[2]};
            const IVec kb = shifted(ka, axis, +1);
            const double w = wt * hd2;
            add_link(free_of(ka), free_of(kb), w);
            if (terms) terms->links.push_back({dom.node_index(ka), dom.node_index(kb), w});
          }
    }

    // Boundary terms. The global matrix receives them on outer facets only;
    // cell_terms records the full cell boundary for exact bracketing.
    if (bc == BC::Neumann || bc == BC::Mezincescu) {
      for (int axis = 0; axis < d; ++axis)
        for (int sign : {-1, +1}) {
          const bool outer = !dom.has_cell(shifted(cell, axis, sign));
          detail::for_facet_nodes(spec, axis, sign > 0, [&](const IVec& lf) {
            const IVec k{base[0] + lf[0], base[1] + lf[1], base[2] + lf[2]};
            double chi = 0.0;
            if (bc == BC::Mezincescu) chi = chi_value(bspec.phi_ref, k, axis, sign, h);
            if (chi == 0.0) return;
            double wt = 1.0;
            for (int j = 0; j < d; ++j)
              if (j != axis &&
                  (lf[static_cast<std::size_t>(j)] == 0 || lf[static_cast<std::size_t>(j)] == n))
                wt *= 0.5;
            const double term = chi * wt * hd1;
            const bool skipped = opt.skip_chi_axis && *opt.skip_chi_axis == axis &&
                                 k[static_cast<std::size_t>(axis)] == opt.skip_chi_coord;
            if (outer && !skipped) {
              const int ni = dom.node_index(k);
              trips.emplace_back(op.node_to_free[static_cast<std::size_t>(ni)],
                                 op.node_to_free[static_cast<std::size_t>(ni)], term);
            }
            if (terms) terms->chi.push_back({dom.node_index(k), term});
          });
        }
    }
  }

  op.form.resize(op.dim, op.dim);
  op.form.setFromTriplets(trips.begin(), trips.end());
  op.form.makeCompressed();
  return op;
}

// Standard assembly from one per-node potential field.
inline AssembledOperator assemble(const Domain& dom, const BoundarySpec& bspec,
                                  const std::vector<double>& potential,
                                  const AssembleOptions& opt = {}) {
  require(potential.size() == static_cast<std::size_t>(dom.num_nodes()),
          "assemble: potential field size mismatch");
  return assemble_cellwise(
      dom, bspec,
      [&](int, const IVec& k) { return potential[static_cast<std::size_t>(dom.node_index(k))]; },
      opt);
}

// Cell-local Mezincescu operators rebuilt from the recorded terms: same
// floats as the global assembly, chi on the full cell boundary. The sum of
// their forms reproduces the global form exactly (interface chi cancels in
// pairs), which is the bracketing identity.
inline std::vector<AssembledOperator> cell_decompose(const AssembledOperator& op) {
  require(op.bc == BC::Neumann || op.bc == BC::Mezincescu,
          "cell_decompose: requires Neumann or Mezincescu boundary");
  std::vector<AssembledOperator> cells;
  cells.reserve(op.cell_terms.size());
  for (int ci = 0; ci < op.dom.num_cells(); ++ci) {
    const CellTerms& terms = op.cell_terms[static_cast<std::size_t>(ci)];
    Domain cdom = make_cell_union({op.dom.cells()[static_cast<std::size_t>(ci)]}, op.dom.spec);
    AssembledOperator c;
    c.dom = cdom;
    c.bc = op.bc;
    c.phi_ref = op.phi_ref;
    c.h = op.h;
    c.dim = cdom.num_nodes();
    c.free_nodes.resize(static_cast<std::size_t>(c.dim));
    c.node_to_free.resize(static_cast<std::size_t>(c.dim));
    for (int i = 0; i < c.dim; ++i) {
      c.free_nodes[static_cast<std::size_t>(i)] = i;
      c.node_to_free[static_cast<std::size_t>(i)] = i;
    }
    const auto local_of = [&](int global_node) {
      return cdom.node_index(op.dom.nodes()[static_cast<std::size_t>(global_node)]);
    };
    c.mass = Eigen::VectorXd::Zero(c.dim);
    std::vector<Eigen::Triplet<double>> trips;
    for (const CellTerms::Diag& t : terms.mass) c.mass[local_of(t.node)] += t.w;
    for (const CellTerms::Diag& t : terms.pot) trips.emplace_back(local_of(t.node), local_of(t.node), t.w);
    for (const CellTerms::Diag& t : terms.chi) trips.emplace_back(local_of(t.node), local_of(t.node), t.w);
    for (const CellTerms::Link& t : terms.links) {
      const int a = local_of(t.a), b = local_of(t.b);
      trips.emplace_back(a, a, t.w);
      trips.emplace_back(b, b, t.w);
      trips.emplace_back(a, b, -t.w);
      trips.emplace_back(b, a, -t.w);
    }
    c.form.resize(c.dim, c.dim);
    c.form.setFromTriplets(trips.begin(), trips.end());
    c.form.makeCompressed();
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace alloylab
