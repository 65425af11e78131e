#pragma once

#include <cmath>

#include "jpath/face.hpp"
#include "jpath/network.hpp"

// Momentum-space building blocks. For a momentum vector theta,
//   h_k(theta) = e^{-theta_k} ( sum_l (e^{theta_l} - 1) p_kl + 1 ) - 1,
// and the face Hamiltonian on F_J is
//   H_J(theta) = sum_k (e^{theta_k} - 1) lambda_k
//              + sum_{k in J} max(h_k, 0) mu_k + sum_{k not in J} h_k mu_k.
// H_0 denotes H with J empty. These are evaluated on plain NetworkSpec so
// they also apply to dual networks, whose exogenous rates may vanish.

namespace jpath {

namespace detail {

inline Vec exp_checked(const Vec& theta) {
  Vec e(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    e[k] = std::exp(theta[k]);
    if (!std::isfinite(e[k]) || !std::isfinite(std::exp(-theta[k])))
      throw OverflowError("momentum component out of representable range");
  }
  return e;
}

}  // namespace detail

inline Vec h_values(const Vec& theta, const NetworkSpec& s) {
  if (static_cast<int>(theta.size()) != s.K)
    throw DimensionMismatch("h_values: momentum size");
  Vec e = detail::exp_checked(theta);
  Vec h(s.K);
  for (int k = 0; k < s.K; ++k) {
    double acc = 1.0;
    for (int l = 0; l < s.K; ++l) acc += (e[l] - 1.0) * s.P(k, l);
    h[k] = acc / e[k] - 1.0;
    if (!std::isfinite(h[k])) throw OverflowError("h_k overflow");
  }
  return h;
}

/// Jacobian of h: entry (k, l) is the derivative of h_k in theta_l.
/// Off-diagonal entries are nonnegative, diagonal entries negative.
inline Matrix h_jacobian(const Vec& theta, const NetworkSpec& s) {
  if (static_cast<int>(theta.size()) != s.K)
    throw DimensionMismatch("h_jacobian: momentum size");
  Vec e = detail::exp_checked(theta);
  Matrix jac(s.K, s.K);
  for (int k = 0; k < s.K; ++k) {
    double diag = 1.0;
    for (int l = 0; l < s.K; ++l) {
      diag -= s.P(k, l);
      if (l != k) {
        jac(k, l) = e[l] * s.P(k, l) / e[k];
        diag += e[l] * s.P(k, l);
      }
    }
    jac(k, k) = -diag / e[k];
    for (int l = 0; l < s.K; ++l)
      if (!std::isfinite(jac(k, l))) throw OverflowError("h jacobian overflow");
  }
  return jac;
}

inline double H_face(const Vec& theta, FaceLabel J, const NetworkSpec& s) {
  Vec e = detail::exp_checked(theta);
  Vec h = h_values(theta, s);
  double val = 0;
  for (int k = 0; k < s.K; ++k) {
    val += (e[k] - 1.0) * s.lambda[k];
    val += (J.contains(k) ? std::max(h[k], 0.0) : h[k]) * s.mu[k];
  }
  if (!std::isfinite(val)) throw OverflowError("H_J overflow");
  return val;
}

inline double H0(const Vec& theta, const NetworkSpec& s) {
  return H_face(theta, FaceLabel::empty_face(), s);
}

/// Gradient of H_0 (smooth everywhere).
inline Vec grad_H0(const Vec& theta, const NetworkSpec& s) {
  Vec e = detail::exp_checked(theta);
  Matrix jac = h_jacobian(theta, s);
  Vec g(s.K);
  for (int k = 0; k < s.K; ++k) {
    double acc = e[k] * s.lambda[k];
    for (int l = 0; l < s.K; ++l) acc += jac(l, k) * s.mu[l];
    g[k] = acc;
  }
  return g;
}

/// Selected element of the subdifferential of H_J at theta. alpha carries
/// one weight in [0,1] per index of J (ascending node order) and is only
/// free where h_l(theta) sits on its kink: the positive part forces
/// alpha_l = 1 where h_l > 0 and alpha_l = 0 where h_l < 0.
inline Vec subgrad_H_face(const Vec& theta, FaceLabel J, const Vec& alpha,
                          const NetworkSpec& s) {
  const auto J_idx = J.indices();
  if (alpha.size() != J_idx.size())
    throw DimensionMismatch("subgrad_H_face: alpha size must match |J|");
  Vec h = h_values(theta, s);
  constexpr double kink_tol = 1e-10;
  Vec full_alpha(s.K, 1.0);  // weight for l not in J is 1 (plain h term)
  for (std::size_t i = 0; i < J_idx.size(); ++i) {
    int l = J_idx[i];
    double a = alpha[i];
    if (!(a >= 0.0 && a <= 1.0))
      throw InvalidAlpha("subgrad_H_face: alpha outside [0,1]");
    if (h[l] > kink_tol && a != 1.0)
      throw InvalidAlpha("subgrad_H_face: h_l > 0 forces alpha_l = 1");
    if (h[l] < -kink_tol && a != 0.0)
      throw InvalidAlpha("subgrad_H_face: h_l < 0 forces alpha_l = 0");
    full_alpha[l] = a;
  }
  Vec e = detail::exp_checked(theta);
  Matrix jac = h_jacobian(theta, s);
  Vec g(s.K);
  for (int k = 0; k < s.K; ++k) {
    double acc = e[k] * s.lambda[k];
    for (int l = 0; l < s.K; ++l) acc += full_alpha[l] * jac(l, k) * s.mu[l];
    g[k] = acc;
  }
  return g;
}

}  // namespace jpath
