#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jpath/conjugate.hpp"
#include "jpath/momenta.hpp"

// Fluid dynamics of the time-reversed network and the optimal-path
// construction on top of it. The dual fluid started at the target point r
// drains to the origin through faces that grow by inclusion; reversing it in
// time and attaching the face momenta yields the unique least-cost path from
// the origin to r, whose cost is theta* . r.

namespace jpath {

struct FaceVelocity {
  Vec v;                  // forward (reversed-time) velocity, zero on the face
  bool essential = true;  // false iff some reflection intensity is negative
};

struct FluidSegment {
  double t_start = 0, t_end = 0;  // dual clock
  FaceLabel face;
  Vec start_point;
  Vec velocity;  // dual velocity (the negative of the forward one)
};

struct FluidTrajectory {
  std::vector<FluidSegment> segments;
  double T_star = 0;
  Vec source;  // = target point r of the forward problem
};

struct PathSegment {
  double duration = 0;
  FaceLabel face;
  Vec displacement;
  Vec velocity;
  Vec momentum;  // face momentum attached to the segment
};

struct OptimalPath {
  std::vector<PathSegment> segments;
  double T_star = 0;
  Vec target;
  double cost = 0;  // theta* . r by construction
};

namespace detail {

inline int reduced_rank(const std::vector<int>& sorted_idx, int l) {
  for (std::size_t i = 0; i < sorted_idx.size(); ++i)
    if (sorted_idx[i] == l) return static_cast<int>(i);
  throw IndexOutOfRange("reduced_rank: index not in face");
}

}  // namespace detail

/// Forward velocity on face F_J: zero on J; off J it is the gradient of H_0
/// at theta* corrected by the face reflection intensities. Cross-checked
/// against the dual-network flow form lambda_bar + (P_bar^T - I) d_bar with
/// d_bar_l = mu_l off the face and nu_l / rho~_l on it.
inline FaceVelocity face_velocity(FaceLabel J, const MomentaTable& table,
                                  const DualNetwork& dual) {
  const NetworkSpec& s = table.spec;
  const int K = s.K;
  FaceMomenta fm = table.face(J);
  FaceVelocity out;
  out.essential = fm.essential;
  out.v.assign(K, 0.0);
  const auto J_idx = J.indices();
  for (int k = 0; k < K; ++k) {
    if (J.contains(k)) continue;
    double acc = s.mu[k];
    double weight = 1.0;
    for (int l = 0; l < K; ++l) {
      double inv_load = J.contains(l)
                            ? 1.0 / fm.rho_tilde[detail::reduced_rank(J_idx, l)]
                            : 1.0 / table.traffic.rho[l];
      weight += (inv_load - 1.0) * s.P(k, l);
    }
    acc -= weight * table.traffic.nu[k];
    out.v[k] = acc;
  }

  // independent route through the dual network
  Vec d_bar(K);
  for (int k = 0; k < K; ++k) d_bar[k] = s.mu[k];
  for (std::size_t i = 0; i < J_idx.size(); ++i)
    d_bar[J_idx[i]] = table.traffic.nu[J_idx[i]] / fm.rho_tilde[i];
  Vec dual_flow = dual.P_bar.transpose() * d_bar;
  double scale = std::max(1.0, norm_inf(out.v));
  for (int k = 0; k < K; ++k) {
    double alt = -(dual.lambda_bar[k] + dual_flow[k] - d_bar[k]);
    if (std::abs(alt - out.v[k]) > 1e-10 * scale)
      throw SingularSubsystem("face_velocity: flow forms disagree");
  }
  return out;
}

/// The face governing the dual fluid at point x: the unique J contained in
/// the zero set Z(x) that absorbs (all reflection intensities nonnegative)
/// while every zero coordinate left out of J immediately lifts off. Ties
/// within tolerance resolve toward the larger face; genuinely distinct valid
/// faces abort the solve rather than guessing.
inline FaceLabel resolve_face(const Vec& x, const MomentaTable& table,
                              const DualNetwork& dual, double snap_tol) {
  const int K = table.K();
  FaceLabel zero_set;
  for (int k = 0; k < K; ++k)
    if (x[k] <= snap_tol) zero_set = zero_set.with(k);

  struct Candidate {
    FaceLabel J;
    Vec dual_velocity;
  };
  std::vector<Candidate> valid;
  for_each_subset(zero_set, [&](FaceLabel J) {
    FaceVelocity fv = face_velocity(J, table, dual);
    if (!fv.essential) return;
    for (int k = 0; k < K; ++k)
      if (zero_set.contains(k) && !J.contains(k) && !(-fv.v[k] > 1e-12))
        return;  // coordinate would stay glued to the boundary
    Vec dual_v(K);
    for (int k = 0; k < K; ++k) dual_v[k] = -fv.v[k];
    valid.push_back({J, std::move(dual_v)});
  });
  if (valid.empty())
    throw NoValidFace("resolve_face: no absorbing face at the point");

  std::size_t pick = 0;
  for (std::size_t i = 1; i < valid.size(); ++i)
    if (valid[i].J.count() > valid[pick].J.count() ||
        (valid[i].J.count() == valid[pick].J.count() &&
         valid[i].J.bits < valid[pick].J.bits))
      pick = i;
  double vel_scale = std::max(1.0, norm_inf(valid[pick].dual_velocity));
  for (const auto& cand : valid) {
    if (cand.J == valid[pick].J) continue;
    if (dist_inf(cand.dual_velocity, valid[pick].dual_velocity) >
        1e-8 * vel_scale)
      throw NoValidFace(
          "resolve_face: two distinct absorbing faces (theory breach?) at " +
          cand.J.label() + " vs " + valid[pick].J.label());
  }
  return valid[pick].J;
}

/// Piecewise-linear dual fluid path from r to the origin. Event times are
/// solved exactly per segment (the dynamics are piecewise constant), so
/// there is no integration error between events.
inline FluidTrajectory solve_dual_fluid(const Vec& r, const MomentaTable& table,
                                        const DualNetwork& dual) {
  const int K = table.K();
  if (static_cast<int>(r.size()) != K)
    throw DimensionMismatch("solve_dual_fluid: target size");
  for (double rk : r)
    if (!(rk >= 0.0) || !std::isfinite(rk))
      throw DimensionMismatch("solve_dual_fluid: target must be finite, >= 0");
  FluidTrajectory traj;
  traj.source = r;
  double r_norm = norm_inf(r);
  if (r_norm == 0.0) return traj;  // empty path, T* = 0

  const double snap = 1e-12 * r_norm;
  const double stop = 1e-9 * r_norm;
  const std::size_t max_segments = (1u << K) + static_cast<std::size_t>(K);

  Vec x = r;
  for (int k = 0; k < K; ++k)
    if (x[k] <= snap) x[k] = 0.0;
  double t = 0;
  while (norm_inf(x) > stop) {
    if (traj.segments.size() >= max_segments)
      throw NonConvergent("solve_dual_fluid: segment budget exhausted");
    FaceLabel J = resolve_face(x, table, dual, snap);
    FaceVelocity fv = face_velocity(J, table, dual);
    Vec dual_v(K);
    for (int k = 0; k < K; ++k) dual_v[k] = -fv.v[k];

    double duration = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      if (J.contains(k)) continue;
      if (dual_v[k] < -1e-14)
        duration = std::min(duration, x[k] / (-dual_v[k]));
    }
    if (!std::isfinite(duration))
      throw NonConvergent("solve_dual_fluid: fluid stalled off the origin");

    FluidSegment seg;
    seg.t_start = t;
    seg.t_end = t + duration;
    seg.face = J;
    seg.start_point = x;
    seg.velocity = dual_v;
    if (!traj.segments.empty() &&
        !traj.segments.back().face.subset_of(J))
      throw NonConvergent("solve_dual_fluid: faces not growing by inclusion");
    traj.segments.push_back(seg);

    for (int k = 0; k < K; ++k) {
      x[k] += dual_v[k] * duration;
      if (J.contains(k) || std::abs(x[k]) <= snap) x[k] = 0.0;
      if (x[k] < 0.0)
        throw NonConvergent("solve_dual_fluid: coordinate left the orthant");
    }
    t += duration;
  }
  traj.T_star = t;
  return traj;
}

/// Reverses the dual fluid path in time, attaches the face momenta, and
/// verifies per segment that the forward velocity is the subdifferential
/// selection with the canonical kink weights alpha_l = nu_l / (rho~_l mu_l).
inline OptimalPath reverse_to_optimal(const FluidTrajectory& traj,
                                      const MomentaTable& table) {
  const NetworkSpec& s = table.spec;
  const int K = s.K;
  OptimalPath path;
  path.T_star = traj.T_star;
  path.target = traj.source;
  path.cost = dot(table.theta, traj.source);
  for (auto it = traj.segments.rbegin(); it != traj.segments.rend(); ++it) {
    const FluidSegment& seg = *it;
    PathSegment ps;
    ps.duration = seg.t_end - seg.t_start;
    ps.face = seg.face;
    FaceMomenta fm = table.face(seg.face);
    ps.momentum = fm.theta_tilde;
    ps.velocity.resize(K);
    ps.displacement.resize(K);
    for (int k = 0; k < K; ++k) {
      ps.velocity[k] = -seg.velocity[k];
      ps.displacement[k] = ps.velocity[k] * ps.duration;
    }

    const auto J_idx = seg.face.indices();
    Vec alpha(J_idx.size());
    for (std::size_t i = 0; i < J_idx.size(); ++i) {
      int l = J_idx[i];
      alpha[i] = std::clamp(
          table.traffic.nu[l] / (fm.rho_tilde[i] * s.mu[l]), 0.0, 1.0);
    }
    Vec sel = subgrad_H_face(fm.theta_tilde, seg.face, alpha, s);
    if (dist_inf(sel, ps.velocity) > 1e-8 * std::max(1.0, norm_inf(sel)))
      throw NonConvergent(
          "reverse_to_optimal: velocity is not the expected subdifferential "
          "selection on " + seg.face.label());
    if (!path.segments.empty() &&
        !seg.face.subset_of(path.segments.back().face))
      throw NonConvergent("reverse_to_optimal: faces not shrinking");
    path.segments.push_back(std::move(ps));
  }
  return path;
}

/// Independent cost evaluation: sum of duration * L_J(velocity) with the
/// face costs obtained through the Legendre route. Equals theta* . r up to
/// the conjugate solver tolerance.
inline double path_cost(const OptimalPath& path, const MomentaTable& table) {
  double total = 0;
  for (const PathSegment& seg : path.segments) {
    if (seg.duration <= 0) continue;
    ConjugateOptions opt;
    opt.hint_starts = {seg.momentum, table.theta};
    total += seg.duration *
             L_face_dual(seg.velocity, seg.face, table.spec, opt);
  }
  return total;
}

/// Max over segments of the dual-network face cost of the dual velocity;
/// vanishes along relaxing fluid paths.
inline double dual_rate_vanishes(const FluidTrajectory& traj,
                                 const DualNetwork& dual) {
  NetworkSpec dual_spec = dual_as_spec(dual);
  double worst = 0;
  for (const FluidSegment& seg : traj.segments) {
    ConjugateOptions opt;
    opt.hint_starts = {Vec(dual_spec.K, 0.0)};
    double val = L_face_dual(seg.velocity, seg.face, dual_spec, opt);
    worst = std::max(worst, std::abs(val));
  }
  return worst;
}

/// Two-node geometry: the sign of the off-axis derivative of H_0 at each
/// node momentum decides whether the corresponding coordinate axis is
/// essential; this must agree with the face-momenta classification.
struct TwoNodeClassification {
  double d2_H0_at_theta1 = 0;  // derivative in theta_2 at theta^(1)
  double d1_H0_at_theta2 = 0;  // derivative in theta_1 at theta^(2)
  bool x_axis_essential_sign = false;   // axis {q_2 = 0}
  bool y_axis_essential_sign = false;   // axis {q_1 = 0}
  bool x_axis_essential_face = false;
  bool y_axis_essential_face = false;
  bool consistent = false;
  Vec grad_H0_theta_star;
};

inline TwoNodeClassification classify_two_node(const MomentaTable& table) {
  if (table.K() != 2)
    throw WrongDimension("classify_two_node: requires K = 2");
  const NetworkSpec& s = table.spec;
  TwoNodeClassification c;
  c.d2_H0_at_theta1 = grad_H0(table.nodes[0].theta, s)[1];
  c.d1_H0_at_theta2 = grad_H0(table.nodes[1].theta, s)[0];
  constexpr double tol = 1e-12;
  c.x_axis_essential_sign = c.d2_H0_at_theta1 <= tol;
  c.y_axis_essential_sign = c.d1_H0_at_theta2 <= tol;
  c.x_axis_essential_face = table.face(FaceLabel{0b10}).essential;
  c.y_axis_essential_face = table.face(FaceLabel{0b01}).essential;
  c.consistent = (c.x_axis_essential_sign == c.x_axis_essential_face) &&
                 (c.y_axis_essential_sign == c.y_axis_essential_face);
  c.grad_H0_theta_star = grad_H0(table.theta, s);
  return c;
}

}  // namespace jpath
