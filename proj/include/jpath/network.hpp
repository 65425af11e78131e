#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "jpath/linalg.hpp"

namespace jpath {

/// An open network of K exponential single-server nodes: exogenous Poisson
/// arrival rates lambda, service rates mu, and a substochastic routing
/// matrix P (row k: probabilities of moving from node k to node l; the
/// deficit 1 - sum_l p_kl is the departure probability).
struct NetworkSpec {
  int K = 0;
  Vec lambda;
  Vec mu;
  Matrix P;
};

/// Traffic solution: throughputs nu solving nu = lambda + P^T nu, loads
/// rho = nu / mu, the resolvent C = (I - P^T)^{-1}, and the row-normalized
/// ratios a(m,l) = c_ml / c_mm.
struct TrafficSolution {
  Vec nu;
  Vec rho;
  Matrix C;
  Matrix a;
};

/// Time-reversed network: same service rates, flows reversed.
/// nu_k pbar_kl = nu_l p_lk and lambda_bar_k = nu_k (1 - sum_l p_kl).
/// lambda_bar components may be zero even when the primal lambda is
/// strictly positive.
struct DualNetwork {
  Vec lambda_bar;
  Vec mu;
  Matrix P_bar;
};

struct ValidateOptions {
  double lambda_floor = 1e-300;  // guards against denormal arrival rates
  int power_iterations = 200;
  double power_tolerance = 1e-12;
};

namespace detail {

// Spectral radius estimate of a nonnegative matrix by power iteration with
// sup-norm renormalization, starting from the all-ones vector.
inline double spectral_radius_estimate(const Matrix& p, int iterations,
                                       double tolerance) {
  const int n = p.rows();
  if (n == 0) return 0.0;
  Vec x(n, 1.0);
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec y = p * x;
    double m = norm_inf(y);
    if (m == 0.0) return 0.0;
    double prev = est;
    est = m;
    for (int i = 0; i < n; ++i) y[i] /= m;
    x = std::move(y);
    if (it > 0 && std::abs(est - prev) <= tolerance) break;
  }
  return est;
}

inline TrafficSolution solve_traffic_unchecked(const NetworkSpec& s) {
  const int K = s.K;
  Matrix imp = Matrix::identity(K) - s.P.transpose();  // I - P^T
  TrafficSolution t;
  t.nu = solve(imp, s.lambda);
  t.C = inverse(imp);
  t.rho.resize(K);
  for (int k = 0; k < K; ++k) t.rho[k] = t.nu[k] / s.mu[k];
  t.a = Matrix(K, K);
  for (int m = 0; m < K; ++m) {
    double cmm = t.C(m, m);
    if (!(cmm > 0.0))
      throw SingularSystem("traffic: nonpositive diagonal resolvent entry");
    for (int l = 0; l < K; ++l) t.a(m, l) = t.C(m, l) / cmm;
    t.a(m, m) = 1.0;
  }
  // Residual of the flow-balance equations, relative to the throughput scale.
  Vec ptnu = s.P.transpose() * t.nu;
  double res = 0;
  for (int k = 0; k < K; ++k)
    res = std::max(res, std::abs(t.nu[k] - s.lambda[k] - ptnu[k]));
  if (res > 1e-10 * std::max(1.0, norm_inf(t.nu)))
    throw SingularSystem("traffic: flow-balance residual above 1e-10");
  return t;
}

}  // namespace detail

/// A NetworkSpec that passed validation. Constructed only via validate().
class ValidatedNetwork {
 public:
  const NetworkSpec& spec() const { return spec_; }
  operator const NetworkSpec&() const { return spec_; }
  int K() const { return spec_.K; }

 private:
  friend ValidatedNetwork validate(const NetworkSpec&, const ValidateOptions&);
  explicit ValidatedNetwork(NetworkSpec s) : spec_(std::move(s)) {}
  NetworkSpec spec_;
};

/// Checks shapes, strict rate positivity, substochastic rows, spectral
/// radius of P below one (power iteration), and stability of every node
/// (rho_k < 1). Throws on the first violation.
inline ValidatedNetwork validate(const NetworkSpec& s,
                                 const ValidateOptions& opt = {}) {
  if (s.K <= 0) throw DimensionMismatch("validate: K must be positive");
  if (static_cast<int>(s.lambda.size()) != s.K ||
      static_cast<int>(s.mu.size()) != s.K)
    throw DimensionMismatch("validate: lambda/mu size does not match K");
  if (s.P.rows() != s.K || s.P.cols() != s.K)
    throw DimensionMismatch("validate: P must be K x K");
  for (int k = 0; k < s.K; ++k) {
    if (!std::isfinite(s.lambda[k]) || !(s.lambda[k] >= opt.lambda_floor))
      throw NegativeRate("validate: lambda[" + std::to_string(k + 1) +
                         "] must be a positive finite rate");
    if (!std::isfinite(s.mu[k]) || !(s.mu[k] > 0.0))
      throw NegativeRate("validate: mu[" + std::to_string(k + 1) +
                         "] must be a positive finite rate");
  }
  for (int k = 0; k < s.K; ++k) {
    double row_sum = 0;
    for (int l = 0; l < s.K; ++l) {
      double p = s.P(k, l);
      if (!std::isfinite(p) || p < 0.0)
        throw NegativeRate("validate: routing probability P(" +
                           std::to_string(k + 1) + "," + std::to_string(l + 1) +
                           ") must be finite and nonnegative");
      row_sum += p;
    }
    if (row_sum > 1.0 + 1e-12)
      throw RowSumExceedsOne("validate: row " + std::to_string(k + 1) +
                             " of P sums to " + std::to_string(row_sum));
  }
  double sr = detail::spectral_radius_estimate(s.P, opt.power_iterations,
                                               opt.power_tolerance);
  if (sr >= 1.0 - 1e-12)
    throw NonErgodic("validate: spectral radius of P is not below one (" +
                     std::to_string(sr) + ")");
  TrafficSolution t = detail::solve_traffic_unchecked(s);
  for (int k = 0; k < s.K; ++k) {
    if (!(t.rho[k] < 1.0 - 1e-12))
      throw NonErgodic("validate: node " + std::to_string(k + 1) +
                       " is overloaded (rho = " + std::to_string(t.rho[k]) + ")");
    if (!(t.nu[k] > 0.0))
      throw NonErgodic("validate: nonpositive throughput at node " +
                       std::to_string(k + 1));
  }
  return ValidatedNetwork(s);
}

inline TrafficSolution solve_traffic(const ValidatedNetwork& net) {
  return detail::solve_traffic_unchecked(net.spec());
}

namespace detail {

inline DualNetwork build_dual_impl(const NetworkSpec& s,
                                   const TrafficSolution& traffic) {
  const int K = s.K;
  DualNetwork d;
  d.mu = s.mu;
  d.lambda_bar.resize(K);
  d.P_bar = Matrix(K, K);
  for (int k = 0; k < K; ++k) {
    double row_sum = 0;
    for (int l = 0; l < K; ++l) row_sum += s.P(k, l);
    d.lambda_bar[k] = traffic.nu[k] * (1.0 - row_sum);
    if (d.lambda_bar[k] < 0.0) d.lambda_bar[k] = 0.0;  // clip rounding
    for (int l = 0; l < K; ++l)
      d.P_bar(k, l) = traffic.nu[l] * s.P(l, k) / traffic.nu[k];
  }
  for (int k = 0; k < K; ++k) {
    double row_sum = 0;
    for (int l = 0; l < K; ++l) row_sum += d.P_bar(k, l);
    if (row_sum > 1.0 + 1e-10)
      throw SingularSystem("build_dual: dual row sum exceeds one");
  }
  return d;
}

}  // namespace detail

/// Builds the time-reversed network. The dual of the dual is the original.
inline DualNetwork build_dual(const ValidatedNetwork& net,
                              const TrafficSolution& traffic) {
  return detail::build_dual_impl(net.spec(), traffic);
}

/// The dual network viewed as a plain spec (lambda_bar may contain zeros,
/// so it does not in general pass validate()).
inline NetworkSpec dual_as_spec(const DualNetwork& d) {
  NetworkSpec s;
  s.K = static_cast<int>(d.mu.size());
  s.lambda = d.lambda_bar;
  s.mu = d.mu;
  s.P = d.P_bar;
  return s;
}

}  // namespace jpath
