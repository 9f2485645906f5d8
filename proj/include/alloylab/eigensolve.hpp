#pragma once

// Eigenvalue routines for the assembled pencils (form M, diagonal mass D).
// Everything is phrased through the symmetrized operator
//
//   A = D^{-1/2} M D^{-1/2},
//
// whose ordinary eigenpairs (lambda, y) correspond to generalized pairs
// (lambda, v = D^{-1/2} y) with v' D v = 1. Residuals are reported as
// ||A y - lambda y||_2 with ||y|| = 1, i.e. the generalized residual
// measured in the D^{-1/2} metric.
//
// Three routes, used to cross-check each other in the tests:
//   * dense_spectrum     - full dense solve, the oracle at small dimension;
//   * lowest_eigenpairs  - Lanczos with full reorthogonalization, seeded and
//                          deterministic, exact once the basis fills the space;
//   * counting_function  - Sylvester inertia of M - E D via sparse LDLT.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "alloylab/assemble.hpp"
#include "alloylab/core.hpp"
#include "alloylab/rng.hpp"

namespace alloylab {

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // generalized eigenvector, v' D v = 1
  double residual = 0.0;
};

struct Spectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns: generalized eigenvectors, D-orthonormal
};

namespace detail {

inline Eigen::VectorXd inv_sqrt_mass(const AssembledOperator& op) {
  Eigen::VectorXd s(op.dim);
  for (int i = 0; i < op.dim; ++i) {
    ensure(op.mass[i] > 0.0, "eigensolve: mass diagonal must be positive");
    s[i] = 1.0 / std::sqrt(op.mass[i]);
  }
  return s;
}

// Flip sign so the entry of largest magnitude is positive (deterministic).
inline void normalize_sign(Eigen::VectorXd& v) {
  int arg = 0;
  double best = -1.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (v[arg] < 0.0) v = -v;
}

}  // namespace detail

// Full spectrum of the pencil, dense. Oracle for the iterative paths.
inline Spectrum dense_spectrum(const AssembledOperator& op) {
  const Eigen::VectorXd s = detail::inv_sqrt_mass(op);
  Eigen::MatrixXd A = Eigen::MatrixXd(op.form);
  A = s.asDiagonal() * A * s.asDiagonal();
  A = 0.5 * (A + A.transpose().eval());  // scrub rounding asymmetry
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  ensure(es.info() == Eigen::Success, "dense_spectrum: eigensolver failed");
  Spectrum sp;
  sp.values = es.eigenvalues();
  sp.vectors = s.asDiagonal() * es.eigenvectors();
  return sp;
}

// k smallest generalized eigenpairs by Lanczos with full reorthogonalization.
// Deterministic for fixed seed. The Krylov basis grows until the requested
// pairs meet the residual tolerance; on breakdown a fresh seeded direction is
// injected (the exhausted subspace is exactly invariant, so the tridiagonal
// blocks decouple exactly). Once the basis spans the whole space the Ritz
// pairs are exact, so termination is unconditional.
inline std::vector<EigenPair> lowest_eigenpairs(const AssembledOperator& op, int k,
                                                double tol = 1e-10, std::uint64_t seed = 0x5eed) {
  require(k >= 1 && k <= op.dim, "lowest_eigenpairs: need 1 <= k <= dim");
  const int dim = op.dim;
  const Eigen::VectorXd s = detail::inv_sqrt_mass(op);
  const auto apply_A = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return s.asDiagonal() * (op.form * (s.asDiagonal() * x));
  };

  DetStream rng(seed, 0);
  const auto fresh_vector = [&]() {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.symmetric();
    return v;
  };

  std::vector<Eigen::VectorXd> basis;  // orthonormal q_0..q_{m-1}
  basis.reserve(static_cast<std::size_t>(std::min(dim, 2 * k + 64)));
  std::vector<double> alpha, beta;  // T diagonal / subdiagonal (beta[j] couples j,j+1)

  const auto reorthogonalize = [&](Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Eigen::VectorXd& q : basis) w -= q.dot(w) * q;
  };

  // Seed direction: flat component plus seeded noise, robust for our
  // Perron-positive ground states.
  {
    Eigen::VectorXd q = Eigen::VectorXd::Ones(dim) + 0.25 * fresh_vector();
    q.normalize();
    basis.push_back(q);
  }

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(dim);
  double beta_prev = 0.0;
  double best_worst_residual = std::numeric_limits<double>::infinity();

  for (int j = 0; j < dim; ++j) {
    const Eigen::VectorXd& q = basis[static_cast<std::size_t>(j)];
    Eigen::VectorXd w = apply_A(q);
    const double a = q.dot(w);
    alpha.push_back(a);
    w -= a * q;
    if (j > 0) w -= beta_prev * prev;
    reorthogonalize(w);

    const int m = j + 1;
    const bool last_possible = (m == dim);
    const bool check_now = last_possible || (m >= std::min(dim, k + 2) && m % 8 == 0);
    if (check_now) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) T(i, i) = alpha[static_cast<std::size_t>(i)];
      for (int i = 0; i + 1 < m; ++i)
        T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      ensure(es.info() == Eigen::Success, "lowest_eigenpairs: Ritz solve failed");
      const int avail = std::min(k, m);
      double worst = 0.0;
      std::vector<EigenPair> out;
      out.reserve(static_cast<std::size_t>(avail));
      for (int i = 0; i < avail; ++i) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
        for (int b = 0; b < m; ++b) y += es.eigenvectors()(b, i) * basis[static_cast<std::size_t>(b)];
        y.normalize();
        const double theta = es.eigenvalues()[i];
        const double res = (apply_A(y) - theta * y).norm();
        worst = std::max(worst, res / (1.0 + std::abs(theta)));
        EigenPair p;
        p.value = theta;
        p.vector = s.asDiagonal() * y;
        detail::normalize_sign(p.vector);
        p.residual = res;
        out.push_back(std::move(p));
      }
      best_worst_residual = std::min(best_worst_residual, worst);
      if ((avail == k && worst <= tol) || last_possible) {
        if (!(avail == k && worst <= tol) && !(last_possible && avail == k && worst <= 1e3 * tol))
          throw SolverError("lowest_eigenpairs: stagnated, best residual " +
                            std::to_string(best_worst_residual));
        return out;
      }
    }

    double b = w.norm();
    if (b <= 1e-14 * (1.0 + std::abs(a))) {
      // Exhausted an invariant subspace: inject a fresh direction.
      Eigen::VectorXd v = fresh_vector();
      for (int pass = 0; pass < 2; ++pass)
        for (const Eigen::VectorXd& qq : basis) v -= qq.dot(v) * qq;
      const double nv = v.norm();
      ensure(nv > 1e-12, "lowest_eigenpairs: could not extend basis");
      w = v / nv;
      b = 0.0;
    } else {
      w /= b;
    }
    beta.push_back(b);
    prev = q;
    beta_prev = b;
    basis.push_back(std::move(w));
  }
  throw SolverError("lowest_eigenpairs: failed to converge, best residual " +
                    std::to_string(best_worst_residual));
}

struct GroundState {
  double e0 = 0.0;
  double e1 = std::numeric_limits<double>::infinity();  // finite when dim > 1
  Eigen::VectorXd vec;  // v' D v = 1, sign-normalized
  double residual = 0.0;
  bool degenerate = false;  // e1 - e0 <= 1e-9 (1 + |e0|)
  bool positive = false;    // strictly positive after sign normalization
};

inline GroundState ground_state(const AssembledOperator& op, double tol = 1e-10,
                                std::uint64_t seed = 0x5eed) {
  const int k = std::min(2, op.dim);
  GroundState g;
  if (op.dim <= 200) {
    const Spectrum sp = dense_spectrum(op);
    g.e0 = sp.values[0];
    if (op.dim > 1) g.e1 = sp.values[1];
    g.vec = sp.vectors.col(0);
    detail::normalize_sign(g.vec);
    const Eigen::VectorXd r = op.form * g.vec - g.e0 * op.mass.cwiseProduct(g.vec);
    g.residual = (detail::inv_sqrt_mass(op).cwiseProduct(r)).norm();
  } else {
    const std::vector<EigenPair> pairs = lowest_eigenpairs(op, k, tol, seed);
    g.e0 = pairs[0].value;
    if (k > 1) g.e1 = pairs[1].value;
    g.vec = pairs[0].vector;
    g.residual = pairs[0].residual;
  }
  g.degenerate = (op.dim > 1) && (g.e1 - g.e0 <= 1e-9 * (1.0 + std::abs(g.e0)));
  g.positive = (g.vec.array() > 0.0).all();
  return g;
}

inline double smallest_eigenvalue(const AssembledOperator& op, double tol = 1e-10) {
  if (op.dim <= 200) {
    const Eigen::VectorXd s = detail::inv_sqrt_mass(op);
    Eigen::MatrixXd A = Eigen::MatrixXd(op.form);
    A = s.asDiagonal() * A * s.asDiagonal();
    A = 0.5 * (A + A.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    ensure(es.info() == Eigen::Success, "smallest_eigenvalue: eigensolver failed");
    return es.eigenvalues()[0];
  }
  return lowest_eigenpairs(op, 1, tol)[0].value;
}

// Number of pencil eigenvalues strictly below E: the negative-inertia count
// of M - E D (Sylvester). A pivot judged too small triggers one retry at a
// nudged energy; `nudged`, when non-null, records whether that happened.
inline int counting_function(const AssembledOperator& op, double E, bool* nudged = nullptr) {
  if (nudged) *nudged = false;
  const auto attempt = [&](double shift) -> std::pair<bool, int> {
    Eigen::SparseMatrix<double> S = op.form;
    for (int i = 0; i < op.dim; ++i) S.coeffRef(i, i) -= shift * op.mass[i];
    S.makeCompressed();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
    if (ldlt.info() != Eigen::Success) return {false, 0};
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!d.allFinite()) return {false, 0};
    const double dmax = d.cwiseAbs().maxCoeff();
    int neg = 0;
    bool healthy = dmax > 0.0;
    for (int i = 0; i < op.dim; ++i) {
      if (std::abs(d[i]) <= 1e-12 * dmax) healthy = false;
      if (d[i] < 0.0) ++neg;
    }
    return {healthy, neg};
  };
  auto [ok, neg] = attempt(E);
  if (ok) return neg;
  const double E2 = E + 1e-10 * (1.0 + std::abs(E));
  if (nudged) *nudged = true;
  auto [ok2, neg2] = attempt(E2);
  ensure(ok2, "counting_function: indefinite factorization failed near E = " + std::to_string(E));
  return neg2;
}

struct CountReport {
  double energy = 0.0;
  int count = 0;
  const char* method = "inertia";
  bool nudged = false;  // shift was perturbed to escape a singular pivot
};

// counting_function plus the small-dimension oracle: for dim <= 200 the
// inertia count is checked against a dense eigendecomposition and any
// disagreement is a hard failure.
inline CountReport count_report(const AssembledOperator& op, double E) {
  CountReport r;
  r.energy = E;
  r.count = counting_function(op, E, &r.nudged);
  if (op.dim <= 200) {
    const Spectrum sp = dense_spectrum(op);
    int dense = 0;
    while (dense < sp.values.size() && sp.values[dense] < E) ++dense;
    ensure(dense == r.count, "count_report: inertia and dense counts disagree at E = " +
                                 std::to_string(E));
    r.method = "inertia+dense";
  }
  return r;
}

// Counting function on a grid of energies. Small problems reuse one dense
// spectrum; larger ones factorize per energy.
inline std::vector<int> counting_batch(const AssembledOperator& op, const std::vector<double>& Es) {
  std::vector<int> out;
  out.reserve(Es.size());
  if (op.dim <= 600) {
    const Spectrum sp = dense_spectrum(op);
    for (double E : Es) {
      const auto it = std::lower_bound(sp.values.data(), sp.values.data() + sp.values.size(), E);
      out.push_back(static_cast<int>(it - sp.values.data()));
    }
  } else {
    for (double E : Es) out.push_back(counting_function(op, E));
  }
  return out;
}

}  // namespace alloylab
