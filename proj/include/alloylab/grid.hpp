#pragma once

// Lattice geometry: finite unions of closed unit cells i + [-1/2,1/2]^d,
// i in Z^d, sampled by a uniform grid of step h = 1/n.
//
// n is even, so every cell face x_j = m + 1/2 lies in a grid plane and every
// grid node has exact integer coordinates k (units of h, x = k*h). All
// geometry below works in these integer coordinates; floating point enters
// only when potentials are sampled.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "alloylab/core.hpp"

namespace alloylab {

struct GridSpec {
  int d = 1;  // spatial dimension, 1..3
  int n = 8;  // nodes per unit length

  GridSpec() = default;
  GridSpec(int d_, int n_) : d(d_), n(n_) { validate(); }

  void validate() const {
    require(d >= 1 && d <= 3, "GridSpec: d must be 1, 2 or 3");
    require(n >= 2, "GridSpec: n must be >= 2");
    require(n % 2 == 0, "GridSpec: n must be even so cell faces lie on grid planes");
  }
  double h() const { return 1.0 / n; }
  bool operator==(const GridSpec& o) const { return d == o.d && n == o.n; }
};

enum class DomainKind { Cube, Quasi1D, Segment, CellUnion };

// A finite, edge-connected union of unit cells plus its enumerated grid nodes.
class Domain {
 public:
  GridSpec spec;
  DomainKind kind = DomainKind::CellUnion;
  int L = 0;           // Cube edge length (odd)
  int m = 0, M = 0;    // Quasi1D: fixed-part and variable-part lengths (odd)
  bool above = false;  // Quasi1D orientation: variable part on the negative side

  Domain() = default;

  const std::vector<IVec>& cells() const { return cells_; }
  const std::vector<IVec>& nodes() const { return nodes_; }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  int node_index(const IVec& k) const { return find(nodes_, k); }
  int cell_index(const IVec& i) const { return find(cells_, i); }
  bool has_cell(const IVec& i) const { return cell_index(i) >= 0; }

  // Lowest-corner node (integer coords) of cell i: k_j = n*i_j - n/2.
  IVec cell_base(const IVec& i) const {
    IVec b{0, 0, 0};
    for (int j = 0; j < spec.d; ++j)
      b[static_cast<std::size_t>(j)] = spec.n * i[static_cast<std::size_t>(j)] - spec.n / 2;
    return b;
  }

  friend Domain make_cell_union(std::vector<IVec> cells, GridSpec spec, DomainKind kind);

 private:
  std::vector<IVec> cells_;  // sorted lexicographically, unique
  std::vector<IVec> nodes_;  // sorted lexicographically, unique

  static int find(const std::vector<IVec>& v, const IVec& x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) return -1;
    return static_cast<int>(it - v.begin());
  }

  void build_nodes() {
    nodes_.clear();
    const int n = spec.n;
    for (const IVec& c : cells_) {
      const IVec base = cell_base(c);
      IVec l{0, 0, 0};
      const int top1 = n, top2 = spec.d > 1 ? n : 0, top3 = spec.d > 2 ? n : 0;
      for (l[0] = 0; l[0] <= top1; ++l[0])
        for (l[1] = 0; l[1] <= top2; ++l[1])
          for (l[2] = 0; l[2] <= top3; ++l[2])
            nodes_.push_back(IVec{base[0] + l[0], base[1] + l[1], base[2] + l[2]});
    }
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  }

  void check_connected() const {
    if (cells_.empty()) throw ConfigError("Domain: no cells");
    std::vector<char> seen(cells_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const IVec c = cells_[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      for (int j = 0; j < spec.d; ++j)
        for (int s : {-1, +1}) {
          const int idx = find(cells_, shifted(c, j, s));
          if (idx >= 0 && !seen[static_cast<std::size_t>(idx)]) {
            seen[static_cast<std::size_t>(idx)] = 1;
            ++reached;
            stack.push_back(idx);
          }
        }
    }
    require(reached == cells_.size(), "Domain: cell set is not edge-connected");
  }

  friend Domain finish_domain(Domain d);
};

inline Domain finish_domain(Domain d) {
  std::sort(d.cells_.begin(), d.cells_.end());
  const auto dup = std::unique(d.cells_.begin(), d.cells_.end());
  require(dup == d.cells_.end(), "Domain: duplicate cells");
  d.check_connected();
  d.build_nodes();
  return d;
}

inline Domain make_cell_union(std::vector<IVec> cells, GridSpec spec,
                              DomainKind kind = DomainKind::CellUnion) {
  spec.validate();
  for (IVec& c : cells)
    for (int j = spec.d; j < 3; ++j) {
      require(c[static_cast<std::size_t>(j)] == 0, "Domain: cell coordinate beyond dimension d");
    }
  Domain d;
  d.spec = spec;
  d.kind = kind;
  d.cells_ = std::move(cells);
  return finish_domain(std::move(d));
}

// Centered cube Lambda_L = (-L/2, L/2)^d, L odd: cells {-(L-1)/2,..,(L-1)/2}^d.
inline Domain make_cube(int L, GridSpec spec) {
  spec.validate();
  require(L >= 1 && L % 2 == 1, "make_cube: L must be odd and >= 1");
  const int r = (L - 1) / 2;
  std::vector<IVec> cells;
  IVec c{0, 0, 0};
  const int lo2 = spec.d > 1 ? -r : 0, hi2 = spec.d > 1 ? r : 0;
  const int lo3 = spec.d > 2 ? -r : 0, hi3 = spec.d > 2 ? r : 0;
  for (c[0] = -r; c[0] <= r; ++c[0])
    for (c[1] = lo2; c[1] <= hi2; ++c[1])
      for (c[2] = lo3; c[2] <= hi3; ++c[2]) cells.push_back(c);
  Domain d = make_cell_union(std::move(cells), spec, DomainKind::Cube);
  d.L = L;
  return d;
}

// Column of cells (q, r) for r in [r_lo, r_hi] along the last axis; q is the
// transverse cell position (ignored for d = 1).
inline Domain make_segment(const IVec& q, int r_lo, int r_hi, GridSpec spec) {
  spec.validate();
  require(r_lo <= r_hi, "make_segment: empty range");
  const int ax = spec.d - 1;
  std::vector<IVec> cells;
  for (int r = r_lo; r <= r_hi; ++r) {
    IVec c{0, 0, 0};
    for (int j = 0; j < spec.d - 1; ++j) c[static_cast<std::size_t>(j)] = q[static_cast<std::size_t>(j)];
    c[static_cast<std::size_t>(ax)] = r;
    cells.push_back(c);
  }
  return make_cell_union(std::move(cells), spec, DomainKind::Segment);
}

// Waveguide junction: fixed part Omega_0 of length (m-1)/2 cells and variable
// part Omega_M of length (M+1)/2 cells, joined across the plane x_d = -1/2
// (mirrored when above = true). Transverse cross-section is one cell.
//
//   below: Omega_0 cells r in {-(m-1)/2,..,-1},  Omega_M cells r in {0,..,(M-1)/2}
inline Domain make_quasi1d(int m, int M, bool above, GridSpec spec) {
  spec.validate();
  require(m >= 3 && m % 2 == 1, "make_quasi1d: m must be odd and >= 3");
  require(M >= 1 && M % 2 == 1, "make_quasi1d: M must be odd and >= 1");
  const int sgn = above ? -1 : +1;
  std::vector<IVec> cells;
  const int ax = spec.d - 1;
  for (int r = -(m - 1) / 2; r <= (M - 1) / 2; ++r) {
    IVec c{0, 0, 0};
    c[static_cast<std::size_t>(ax)] = sgn * r;
    cells.push_back(c);
  }
  Domain d = make_cell_union(std::move(cells), spec, DomainKind::Quasi1D);
  d.m = m;
  d.M = M;
  d.above = above;
  return d;
}

// Cells of the fixed / variable part of a quasi-1D domain, for sub-solves.
inline std::vector<IVec> quasi1d_fixed_cells(const Domain& dom) {
  require(dom.kind == DomainKind::Quasi1D, "quasi1d_fixed_cells: wrong domain kind");
  const int ax = dom.spec.d - 1, sgn = dom.above ? -1 : +1;
  std::vector<IVec> out;
  for (const IVec& c : dom.cells())
    if (sgn * c[static_cast<std::size_t>(ax)] < 0) out.push_back(c);
  return out;
}
inline std::vector<IVec> quasi1d_variable_cells(const Domain& dom) {
  require(dom.kind == DomainKind::Quasi1D, "quasi1d_variable_cells: wrong domain kind");
  const int ax = dom.spec.d - 1, sgn = dom.above ? -1 : +1;
  std::vector<IVec> out;
  for (const IVec& c : dom.cells())
    if (sgn * c[static_cast<std::size_t>(ax)] >= 0) out.push_back(c);
  return out;
}

// One outward face direction of one boundary node. Corner nodes appear once
// per outward axis.
struct BoundaryFace {
  int node;  // node index in Domain::nodes()
  int axis;
  int sign;  // +1 / -1: outward normal is sign * e_axis
  bool operator==(const BoundaryFace& o) const {
    return node == o.node && axis == o.axis && sign == o.sign;
  }
  bool operator<(const BoundaryFace& o) const {
    if (node != o.node) return node < o.node;
    if (axis != o.axis) return axis < o.axis;
    return sign < o.sign;
  }
};

// One node of one internal cell-cell interface: the pair (cell_lo, cell_hi)
// is adjacent along `axis`, cell_lo on the negative side. The outward normal
// of cell_lo at the node is +e_axis, of cell_hi it is -e_axis.
struct InterfaceFace {
  int node;
  int axis;
  int cell_lo, cell_hi;  // cell indices in Domain::cells()
  bool operator<(const InterfaceFace& o) const {
    if (node != o.node) return node < o.node;
    if (axis != o.axis) return axis < o.axis;
    if (cell_lo != o.cell_lo) return cell_lo < o.cell_lo;
    return cell_hi < o.cell_hi;
  }
};

struct FaceSet {
  std::vector<BoundaryFace> boundary;    // deduplicated on (node, axis, sign)
  std::vector<InterfaceFace> interface;  // one entry per node per adjacent pair
};

namespace detail {
// Visit local face-node offsets of one cell facet: l ranges over the facet
// (l[axis] fixed), callback gets the node's local offset.
template <class F>
void for_facet_nodes(const GridSpec& spec, int axis, int side_hi, F&& f) {
  const int n = spec.n;
  IVec l{0, 0, 0};
  l[static_cast<std::size_t>(axis)] = side_hi ? n : 0;
  int t[2] = {0, 0};
  int nt = 0;
  for (int j = 0; j < spec.d; ++j)
    if (j != axis) t[nt++] = j;
  const int top0 = nt > 0 ? n : 0, top1 = nt > 1 ? n : 0;
  for (int a = 0; a <= top0; ++a)
    for (int b = 0; b <= top1; ++b) {
      if (nt > 0) l[static_cast<std::size_t>(t[0])] = a;
      if (nt > 1) l[static_cast<std::size_t>(t[1])] = b;
      f(l);
    }
}
}  // namespace detail

inline FaceSet boundary_faces(const Domain& dom) {
  FaceSet fs;
  const GridSpec& spec = dom.spec;
  for (int ci = 0; ci < dom.num_cells(); ++ci) {
    const IVec cell = dom.cells()[static_cast<std::size_t>(ci)];
    const IVec base = dom.cell_base(cell);
    for (int axis = 0; axis < spec.d; ++axis)
      for (int sign : {-1, +1}) {
        const IVec nb = shifted(cell, axis, sign);
        const int nbi = dom.cell_index(nb);
        detail::for_facet_nodes(spec, axis, sign > 0, [&](const IVec& l) {
          const IVec k{base[0] + l[0], base[1] + l[1], base[2] + l[2]};
          const int node = dom.node_index(k);
          if (nbi < 0) {
            fs.boundary.push_back(BoundaryFace{node, axis, sign});
          } else if (sign > 0) {  // record each interface once, from the low side
            fs.interface.push_back(InterfaceFace{node, axis, ci, nbi});
          }
        });
      }
  }
  std::sort(fs.boundary.begin(), fs.boundary.end());
  fs.boundary.erase(std::unique(fs.boundary.begin(), fs.boundary.end()), fs.boundary.end());
  std::sort(fs.interface.begin(), fs.interface.end());
  return fs;
}

}  // namespace alloylab
