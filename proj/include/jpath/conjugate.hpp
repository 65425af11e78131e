#pragma once

#include <cmath>
#include <limits>

#include "jpath/hamiltonian.hpp"

// Numerical Legendre transform: L_J(y) = sup_theta ( theta . y - H_J(theta) ).
// The objective is concave with kinks where some h_k (k in J) crosses zero,
// so the maximization runs in three stages: a coarse start selection
// (full grid for K <= 3, otherwise 0 and theta*), Polyak-style subgradient
// ascent, and a coordinatewise golden-section polish. Robustness is favored
// over speed; every evaluation is desk scale.

namespace jpath {

struct ConjugateOptions {
  double grid_lo = -4.0;
  double grid_hi = 4.0;
  int grid_res = 9;              // points per axis, used for K <= 3
  int ascent_iterations = 300;
  int polish_max_passes = 200;
  double polish_tol = 1e-10;     // stop when a full pass improves less
  double divergence_norm = 50.0; // |theta|_inf beyond this with growth => +inf
  std::vector<Vec> hint_starts;  // extra start points (e.g. face momenta)
};

struct ConjugateResult {
  double value = 0;
  Vec maximizer;
  bool diverged = false;
};

namespace detail {

struct ConjugateObjective {
  const Vec& y;
  FaceLabel J;
  const NetworkSpec& s;

  double operator()(const Vec& theta) const {
    return dot(theta, y) - H_face(theta, J, s);
  }

  // Any valid supergradient: at kinks of h_k^+ the weight 1/2 is chosen.
  Vec supergradient(const Vec& theta) const {
    Vec h = h_values(theta, s);
    Vec e = exp_checked(theta);
    Matrix jac = h_jacobian(theta, s);
    Vec g(s.K);
    for (int k = 0; k < s.K; ++k) {
      double acc = e[k] * s.lambda[k];
      for (int l = 0; l < s.K; ++l) {
        double w = 1.0;
        if (J.contains(l)) w = h[l] > 0 ? 1.0 : (h[l] < 0 ? 0.0 : 0.5);
        acc += w * jac(l, k) * s.mu[l];
      }
      g[k] = y[k] - acc;
    }
    return g;
  }
};

// Golden-section maximization of a concave 1-d slice. The bracket is grown
// from the current point until the maximum is interior.
template <typename F>
double golden_max_1d(F&& f, double x0, double span, double tol, double lim) {
  double lo = x0 - span, hi = x0 + span;
  double flo = f(lo), fhi = f(hi), fx0 = f(x0);
  int guard = 0;
  while (flo > fx0 && lo > -lim && guard++ < 60) {
    hi = x0; fhi = fx0; x0 = lo; fx0 = flo;
    lo -= 2 * span; span *= 2; flo = f(lo);
  }
  while (fhi > fx0 && hi < lim && guard++ < 60) {
    lo = x0; flo = fx0; x0 = hi; fx0 = fhi;
    hi += 2 * span; span *= 2; fhi = f(hi);
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a); fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace detail

inline ConjugateResult conjugate_face_cost(const Vec& y, FaceLabel J,
                                           const NetworkSpec& s,
                                           const ConjugateOptions& opt = {}) {
  if (static_cast<int>(y.size()) != s.K)
    throw DimensionMismatch("conjugate_face_cost: y size");
  detail::ConjugateObjective obj{y, J, s};
  const int K = s.K;

  Vec best(K, 0.0);
  double f_best = obj(best);  // theta = 0 gives exactly -H_J(0) = 0

  auto consider = [&](const Vec& theta) {
    double f = obj(theta);
    if (f > f_best) {
      f_best = f;
      best = theta;
    }
  };

  if (K <= 3) {
    const int R = opt.grid_res;
    Vec theta(K);
    const long total = static_cast<long>(std::pow(R, K));
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      for (int k = 0; k < K; ++k) {
        int step = static_cast<int>(rest % R);
        rest /= R;
        theta[k] = opt.grid_lo + (opt.grid_hi - opt.grid_lo) * step / (R - 1);
      }
      consider(theta);
    }
  } else {
    // theta* = (-ln rho_k) is the natural interior start at larger K.
    try {
      TrafficSolution t = detail::solve_traffic_unchecked(s);
      Vec ts(K);
      bool ok = true;
      for (int k = 0; k < K; ++k) {
        if (!(t.rho[k] > 0)) { ok = false; break; }
        ts[k] = -std::log(t.rho[k]);
      }
      if (ok) consider(ts);
    } catch (const Error&) {
      // fall back to the remaining starts
    }
  }
  for (const Vec& hint : opt.hint_starts)
    if (static_cast<int>(hint.size()) == K) consider(hint);

  // Polyak-style subgradient ascent from the best start.
  Vec theta = best;
  double f_theta = f_best;
  for (int it = 0; it < opt.ascent_iterations; ++it) {
    Vec g = obj.supergradient(theta);
    double gnorm2 = dot(g, g);
    if (gnorm2 < 1e-28) break;
    double target = f_best + 0.5 / (1.0 + it / 10.0);
    double step = (target - f_theta) / gnorm2;
    step = std::min(std::max(step, 1e-12), 10.0 / std::sqrt(gnorm2));
    bool out_of_range = false;
    for (int k = 0; k < K; ++k) {
      theta[k] += step * g[k];
      if (std::abs(theta[k]) > opt.divergence_norm) out_of_range = true;
    }
    double f_prev = f_theta;
    f_theta = obj(theta);
    if (f_theta > f_best) {
      f_best = f_theta;
      best = theta;
    }
    if (out_of_range) {
      if (f_theta >= f_prev)  // still climbing with unbounded iterates
        return {std::numeric_limits<double>::infinity(), theta, true};
      break;
    }
  }

  // Coordinatewise golden-section polish.
  theta = best;
  for (int pass = 0; pass < opt.polish_max_passes; ++pass) {
    double f_before = f_best;
    for (int k = 0; k < K; ++k) {
      auto slice = [&](double xk) {
        Vec t = theta;
        t[k] = xk;
        return obj(t);
      };
      double xk = detail::golden_max_1d(slice, theta[k], 0.5, 1e-12,
                                        opt.divergence_norm + 4.0);
      Vec cand = theta;
      cand[k] = xk;
      double f = obj(cand);
      if (f > f_best) {
        f_best = f;
        theta = cand;
        best = cand;
      }
    }
    if (norm_inf(best) > opt.divergence_norm && f_best > f_before + 1e-8)
      return {std::numeric_limits<double>::infinity(), best, true};
    if (f_best - f_before < opt.polish_tol) break;
    if (pass == opt.polish_max_passes - 1 && f_best - f_before > 1e-6)
      throw NoConvergence("conjugate_face_cost: polish did not stabilize");
  }

  return {f_best, best, false};
}

/// L_J(y) by the dual (Legendre) route; +infinity when the sup diverges.
inline double L_face_dual(const Vec& y, FaceLabel J, const NetworkSpec& s,
                          const ConjugateOptions& opt = {}) {
  return conjugate_face_cost(y, J, s, opt).value;
}

}  // namespace jpath
