#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "jpath/network.hpp"

// Deterministic samplers for property tests and the self-check command.
// Uniform variates are derived from raw engine output so the streams do not
// depend on the standard library's distribution implementations.

namespace jpath {

inline double runif(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double runif(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * runif(eng);
}

/// Substochastic matrix with spectral radius below one: uniform entries,
/// each row rescaled to a random row sum in (0, max_row_sum].
inline Matrix random_substochastic(std::mt19937_64& eng, int n,
                                   double max_row_sum = 0.95,
                                   double zero_prob = 0.3) {
  Matrix p(n, n);
  for (int k = 0; k < n; ++k) {
    double sum = 0;
    for (int l = 0; l < n; ++l) {
      double v = runif(eng) < zero_prob ? 0.0 : runif(eng);
      p(k, l) = v;
      sum += v;
    }
    double target = runif(eng, 0.05, max_row_sum);
    if (sum > 0)
      for (int l = 0; l < n; ++l) p(k, l) *= target / sum;
  }
  return p;
}

/// Ergodic network: random routing as above, random arrival rates, and
/// service rates backed out from target loads in (rho_lo, rho_hi).
inline NetworkSpec random_ergodic_spec(std::mt19937_64& eng, int K,
                                       double rho_lo = 0.15,
                                       double rho_hi = 0.85) {
  NetworkSpec s;
  s.K = K;
  s.P = random_substochastic(eng, K);
  s.lambda.resize(K);
  s.mu.resize(K);
  for (int k = 0; k < K; ++k) s.lambda[k] = runif(eng, 0.2, 2.0);
  Vec nu = solve(Matrix::identity(K) - s.P.transpose(), s.lambda);
  for (int k = 0; k < K; ++k)
    s.mu[k] = nu[k] / runif(eng, rho_lo, rho_hi);
  return s;
}

/// Square matrix with entries in [-1, 1], resampled until the determinant
/// and all principal minors are safely away from zero.
inline Matrix random_matrix_nonzero_minors(std::mt19937_64& eng, int n) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = runif(eng, -1.0, 1.0);
    bool ok = std::abs(determinant(b)) > 0.02;
    for (int l = 0; ok && l < n; ++l)
      ok = std::abs(determinant(delete_rc(b, {l}, {l}))) > 0.02;
    if (ok) return b;
  }
  throw NoConvergence("random_matrix_nonzero_minors: rejection cap hit");
}

/// Nonnegative target point; coordinates vanish with probability zero_prob.
inline Vec random_target(std::mt19937_64& eng, int K, double zero_prob = 0.3) {
  Vec r(K, 0.0);
  bool any = false;
  for (int k = 0; k < K; ++k) {
    if (runif(eng) >= zero_prob) {
      r[k] = runif(eng, 0.1, 2.0);
      any = true;
    }
  }
  if (!any) r[eng() % K] = runif(eng, 0.1, 2.0);
  return r;
}

}  // namespace jpath
