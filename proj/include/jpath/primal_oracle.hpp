#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "jpath/face.hpp"
#include "jpath/network.hpp"

// Slow verification oracle for the face costs: minimizes the relative-entropy
// functional
//   psi_J(a, d, rho) = sum_k pi(a_k/lambda_k) lambda_k
//                    + sum_{k not in J} pi(d_k/mu_k) mu_k
//                    + sum_{k in J} pi(d_k/mu_k) 1{d_k > mu_k} mu_k
//                    + sum_k d_k [ sum_l pi(rho_kl/p_kl) p_kl
//                                 + pi((1-sum_l rho_kl)/(1-sum_l p_kl))
//                                   (1-sum_l p_kl) ]
// over a >= 0, d >= 0, substochastic rho, subject to y = a + (rho^T - I) d,
// with pi(u) = u ln u - u + 1, pi(0) = 1, and weight-zero terms dropped.
// The indicator makes psi discontinuous at d_k = mu_k for k in J, so both
// branches are searched per such node and the minimum taken. Intended for
// desk-scale K (<= 3); complexity grows as 2^|J| branch enumerations times
// the multi-start budget.

namespace jpath {

struct PrimalOracleOptions {
  int starts = 20;           // random starts per indicator branch
  std::uint64_t seed = 0x9E3779B97F4A7C15ull;
  int eval_budget = 4000;    // Nelder-Mead evaluations per start
  double dmax_factor = 10.0; // d_k ranges over [0, dmax_factor * max(mu)]
};

namespace detail {

inline double pi_fn(double u) {
  if (u <= 0.0) return 1.0;  // pi(0) = 1, and u < 0 cannot occur here
  return u * std::log(u) - u + 1.0;
}

// weight * pi(num / weight) with the convention that zero weight kills the
// term regardless of the (possibly infinite) argument, and 0/0 = 0.
inline double pi_weighted(double num, double weight) {
  if (weight <= 0.0) return 0.0;
  return weight * pi_fn(num / weight);
}

// Euclidean projection of v onto the simplex { x >= 0, sum x = cap }.
inline void project_simplex_eq(Vec& v, double cap) {
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double csum = 0, tau = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    csum += u[j];
    double t = (csum - cap) / static_cast<double>(j + 1);
    if (u[j] - t > 0) tau = t;
  }
  for (double& x : v) x = std::max(x - tau, 0.0);
}

// Euclidean projection of v onto { x >= 0, sum x <= cap }.
inline void project_capped_simplex(Vec& v, double cap) {
  double sum = 0;
  for (double& x : v) {
    if (x < 0) x = 0;
    sum += x;
  }
  if (sum <= cap) return;
  project_simplex_eq(v, cap);
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct MixRng {
  std::uint64_t state;
  explicit MixRng(std::uint64_t seed) : state(seed) {}
  double uniform() {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
};

// Compact Nelder-Mead minimizer; boxes and simplex constraints are enforced
// inside the objective, which also adds a pull-back penalty so the search
// never sees a flat plateau outside the feasible set.
template <typename F>
double nelder_mead(F&& f, Vec& x, const Vec& scale, int eval_budget) {
  const int n = static_cast<int>(x.size());
  std::vector<Vec> pts(n + 1, x);
  Vec fv(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += scale[i];
  int evals = 0;
  for (int i = 0; i <= n; ++i) fv[i] = (++evals, f(pts[i]));
  std::vector<int> order(n + 1);
  while (evals < eval_budget) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    int best = order[0], worst = order[n], second = order[n - 1];
    if (fv[worst] - fv[best] < 1e-13 * (1.0 + std::abs(fv[best]))) break;
    Vec centroid(n, 0.0);
    for (int i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (int k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    }
    auto blend = [&](double c) {
      Vec p(n);
      for (int k = 0; k < n; ++k)
        p[k] = centroid[k] + c * (centroid[k] - pts[worst][k]);
      return p;
    };
    Vec refl = blend(1.0);
    double f_refl = (++evals, f(refl));
    if (f_refl < fv[best]) {
      Vec exp_pt = blend(2.0);
      double f_exp = (++evals, f(exp_pt));
      if (f_exp < f_refl) {
        pts[worst] = exp_pt; fv[worst] = f_exp;
      } else {
        pts[worst] = refl; fv[worst] = f_refl;
      }
    } else if (f_refl < fv[second]) {
      pts[worst] = refl; fv[worst] = f_refl;
    } else {
      Vec contr = blend(f_refl < fv[worst] ? 0.5 : -0.5);
      double f_contr = (++evals, f(contr));
      if (f_contr < std::min(f_refl, fv[worst])) {
        pts[worst] = contr; fv[worst] = f_contr;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (int k = 0; k < n; ++k)
            pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          fv[i] = (++evals, f(pts[i]));
        }
      }
    }
  }
  int arg = 0;
  for (int i = 1; i <= n; ++i)
    if (fv[i] < fv[arg]) arg = i;
  x = pts[arg];
  return fv[arg];
}

}  // namespace detail

/// L_J(y) by direct constrained minimization of psi_J. Returns the best
/// feasible value found; throws NoConvergence when no start reaches
/// feasibility of a = y - (rho^T - I) d >= 0.
inline double L_face_primal_oracle(const Vec& y, FaceLabel J,
                                   const NetworkSpec& s,
                                   const PrimalOracleOptions& opt = {}) {
  const int K = s.K;
  if (static_cast<int>(y.size()) != K)
    throw DimensionMismatch("L_face_primal_oracle: y size");
  const double dmax = opt.dmax_factor * *std::max_element(s.mu.begin(), s.mu.end());
  const auto J_idx = J.indices();
  Vec p_row_sum(K, 0.0);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) p_row_sum[k] += s.P(k, l);
  // The routing perturbation must stay absolutely continuous with respect
  // to P: mass on a link with p_kl = 0 (or a departure share where row k of
  // P sums to one) sits outside the effective domain, matching the sigma ->
  // infinity exclusion in the minimax between the two cost routes.
  std::vector<std::vector<int>> support(K);
  std::vector<bool> row_saturated(K, false);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l)
      if (s.P(k, l) > 0.0) support[k].push_back(l);
    row_saturated[k] = p_row_sum[k] >= 1.0 - 1e-14;
  }

  // x layout: d (K entries) then rho rows (K*K entries).
  const int dim = K + K * K;
  const double kPenalty = 1e8;

  double best = std::numeric_limits<double>::infinity();

  for (std::uint32_t branch = 0; branch < (1u << J_idx.size()); ++branch) {
    Vec d_lo(K, 0.0), d_hi(K, dmax);
    std::vector<bool> indicator_on(K, false);
    for (std::size_t i = 0; i < J_idx.size(); ++i) {
      int k = J_idx[i];
      indicator_on[k] = (branch >> i) & 1u;
      if (indicator_on[k])
        d_lo[k] = s.mu[k];   // closure of (mu_k, inf); boundary value matches
      else
        d_hi[k] = s.mu[k];
    }

    auto objective = [&](const Vec& x) {
      Vec d(K);
      double pull = 0;
      for (int k = 0; k < K; ++k) {
        double clamped = std::clamp(x[k], d_lo[k], d_hi[k]);
        pull += (x[k] - clamped) * (x[k] - clamped);
        d[k] = clamped;
      }
      Matrix rho(K, K);
      for (int k = 0; k < K; ++k) {
        Vec row(support[k].size());
        for (std::size_t i = 0; i < support[k].size(); ++i)
          row[i] = x[K + k * K + support[k][i]];
        Vec proj = row;
        if (row_saturated[k])
          detail::project_simplex_eq(proj, 1.0);
        else
          detail::project_capped_simplex(proj, 1.0);
        for (std::size_t i = 0; i < support[k].size(); ++i) {
          pull += (row[i] - proj[i]) * (row[i] - proj[i]);
          rho(k, support[k][i]) = proj[i];
        }
        for (int l = 0; l < K; ++l)
          if (s.P(k, l) == 0.0) {
            double off = x[K + k * K + l];
            pull += off * off;  // off-support coordinates are pinned at zero
          }
      }
      double value = 0;
      double infeas = 0;
      for (int k = 0; k < K; ++k) {
        double a_k = y[k] + d[k];
        for (int l = 0; l < K; ++l) a_k -= rho(l, k) * d[l];
        if (a_k < 0) {
          infeas += a_k * a_k;
          a_k = 0;
        }
        value += detail::pi_weighted(a_k, s.lambda[k]);
      }
      for (int k = 0; k < K; ++k) {
        if (!J.contains(k) || indicator_on[k])
          value += detail::pi_weighted(d[k], s.mu[k]);
        double bracket = 0;
        double rho_sum = 0;
        for (int l = 0; l < K; ++l) {
          bracket += detail::pi_weighted(rho(k, l), s.P(k, l));
          rho_sum += rho(k, l);
        }
        bracket += detail::pi_weighted(1.0 - rho_sum, 1.0 - p_row_sum[k]);
        value += d[k] * bracket;
      }
      return value + kPenalty * infeas + 1e3 * pull;
    };

    detail::MixRng rng(opt.seed ^ (0xABCDull * (branch + 1)));
    for (int start = 0; start <= opt.starts; ++start) {
      Vec x(dim);
      if (start == 0) {
        // nominal operating point: d = mu (clamped), rho = P
        for (int k = 0; k < K; ++k) x[k] = std::clamp(s.mu[k], d_lo[k], d_hi[k]);
        for (int k = 0; k < K; ++k)
          for (int l = 0; l < K; ++l) x[K + k * K + l] = s.P(k, l);
      } else {
        for (int k = 0; k < K; ++k)
          x[k] = d_lo[k] + (d_hi[k] - d_lo[k]) * rng.uniform();
        for (int k = 0; k < K; ++k) {
          double budget = row_saturated[k] ? 1.0 : rng.uniform();
          Vec row(support[k].size());
          double sum = 0;
          for (double& v : row) {
            v = rng.uniform();
            sum += v;
          }
          for (std::size_t i = 0; i < support[k].size(); ++i)
            x[K + k * K + support[k][i]] =
                sum > 0 ? budget * row[i] / sum : 0.0;
        }
      }
      Vec scale(dim);
      for (int k = 0; k < K; ++k)
        scale[k] = 0.1 * std::max(1e-3, d_hi[k] - d_lo[k]);
      for (int i = K; i < dim; ++i) scale[i] = 0.15;
      double v = detail::nelder_mead(objective, x, scale, opt.eval_budget);
      // polish from the found point with a tighter simplex
      for (double& sc : scale) sc *= 0.05;
      v = std::min(v, detail::nelder_mead(objective, x, scale, opt.eval_budget / 2));
      best = std::min(best, v);
    }
  }

  if (!(best < 1e6))
    throw NoConvergence("L_face_primal_oracle: no feasible point found");
  return best;
}

}  // namespace jpath
