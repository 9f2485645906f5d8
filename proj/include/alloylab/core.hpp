#pragma once

// Shared primitives: error types, integer vectors, small helpers.

#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace alloylab {

// Invalid input / configuration. The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (non-convergence, factorization breakdown, cross-check
// mismatch). The CLI maps this to exit code 1.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

inline void ensure(bool cond, const std::string& msg) {
  if (!cond) throw SolverError(msg);
}

// Integer lattice vector. The spatial dimension d <= 3 is carried by GridSpec;
// unused trailing components stay zero so that comparisons are dimension-safe.
using IVec = std::array<int, 3>;

inline IVec ivec(int x, int y = 0, int z = 0) { return IVec{x, y, z}; }

inline IVec shifted(IVec v, int axis, int delta) {
  v[static_cast<std::size_t>(axis)] += delta;
  return v;
}

inline std::string to_string(const IVec& v, int d) {
  std::string s = "(";
  for (int j = 0; j < d; ++j) s += (j ? "," : "") + std::to_string(v[static_cast<std::size_t>(j)]);
  return s + ")";
}

// h^k for integer k that may be negative (d-2 reaches -1 when d = 1).
inline double int_pow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < (k < 0 ? -k : k); ++i) r *= x;
  return k < 0 ? 1.0 / r : r;
}

// Run fn(i) for i in [0, count) on up to `workers` threads. Results must be
// written to slot i only, so the outcome is identical for any worker count;
// the first exception, if any, is rethrown after all threads join.
template <class F>
void parallel_for(int count, int workers, F&& fn) {
  if (count <= 0) return;
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace alloylab
