#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "jpath/hamiltonian.hpp"

// Per-node and per-face momenta. The node momentum theta^(m) is the nonzero
// solution of h_k(theta) = 0 (k != m), H_0(theta) = 0, obtained purely by
// linear algebra: the ratio row a(m, .) solves a linear system against
// column m of P, exp(theta_m) follows from the zero-level condition, and the
// remaining components from exp(theta_l) - 1 = a_ml (exp(theta_m) - 1).
// The face momentum of F_J agrees with theta^(k) componentwise off J and
// keeps the h_k zero level on J; its loads come from one linear solve on the
// J-block of I - P. The nonlinear zero levels are verified post hoc, never
// used as equations.

namespace jpath {

struct NodeMomentum {
  int m = 0;       // node index (0-based)
  Vec theta;       // theta^(m)
  Vec a_row;       // a(m, l), with a(m, m) = 1
};

struct FaceMomenta {
  FaceLabel J;
  Vec theta_tilde;       // full K components
  Vec rho_tilde;         // indexed by J.indices(), values in (0, 1]
  Vec phi;               // reflection intensities, zero off J
  bool essential = false;
  bool marginal = false; // some component sits on the essentiality boundary
};

namespace detail {

constexpr double kMomentumTol = 1e-10;
constexpr double kEssentialTol = 1e-12;

inline void verify_zero_levels(const Vec& theta, FaceLabel J,
                               const NetworkSpec& s, const char* what) {
  Vec h = h_values(theta, s);
  for (int k : J.indices())
    if (std::abs(h[k]) > kMomentumTol)
      throw SingularSubsystem(std::string(what) +
                              ": h zero level violated at node " +
                              std::to_string(k + 1));
  if (std::abs(H0(theta, s)) > kMomentumTol)
    throw SingularSubsystem(std::string(what) + ": H0 zero level violated");
}

}  // namespace detail

inline NodeMomentum node_momentum(int m, const TrafficSolution& traffic,
                                  const NetworkSpec& s) {
  const int K = s.K;
  if (m < 0 || m >= K) throw IndexOutOfRange("node_momentum: node index");
  NodeMomentum nm;
  nm.m = m;
  nm.a_row.assign(K, 0.0);
  nm.a_row[m] = 1.0;
  if (K > 1) {
    Matrix imp = Matrix::identity(K) - s.P;             // I - P
    Matrix block = delete_rc(imp, {m}, {m});
    Vec p_col;                                          // column m without row m
    p_col.reserve(K - 1);
    for (int k = 0; k < K; ++k)
      if (k != m) p_col.push_back(s.P(k, m));
    Vec a = solve(block, p_col);
    int pos = 0;
    for (int l = 0; l < K; ++l)
      if (l != m) nm.a_row[l] = a[pos++];
  }
  // cross-check against the resolvent ratios c_ml / c_mm
  for (int l = 0; l < K; ++l) {
    double alt = traffic.C(m, l) / traffic.C(m, m);
    if (std::abs(nm.a_row[l] - alt) > 1e-8 * std::max(1.0, std::abs(alt)))
      throw SingularSubsystem("node_momentum: ratio row disagrees with resolvent");
    if (nm.a_row[l] < -1e-12)
      throw SingularSubsystem("node_momentum: negative ratio");
  }

  double numer = 1.0, denom = 0.0;
  for (int l = 0; l < K; ++l) {
    numer -= nm.a_row[l] * s.P(m, l);
    denom += nm.a_row[l] * s.lambda[l];
  }
  if (!(numer > 0.0) || !(denom > 0.0))
    throw SingularSubsystem("node_momentum: degenerate zero-level quotient");
  double exp_m = numer / denom * s.mu[m];
  double theta_m = std::log(exp_m);

  nm.theta.assign(K, 0.0);
  double growth = std::expm1(theta_m);  // exp(theta_m) - 1
  for (int l = 0; l < K; ++l)
    nm.theta[l] = std::log1p(nm.a_row[l] * growth);
  nm.theta[m] = theta_m;

  detail::verify_zero_levels(nm.theta, FaceLabel::full_face(K).without(m), s,
                             "node_momentum");
  if (std::abs(std::exp(-theta_m) - traffic.rho[m]) > detail::kMomentumTol)
    throw SingularSubsystem("node_momentum: exp(-theta_m) != rho_m");
  return nm;
}

/// theta* stacks the m-th component of each node momentum; equivalently
/// theta*_m = -ln(rho_m), which is cross-checked.
inline Vec theta_star(const TrafficSolution& traffic, const NetworkSpec& s) {
  const int K = s.K;
  Vec ts(K);
  for (int m = 0; m < K; ++m) {
    if (!(traffic.rho[m] > 0.0 && traffic.rho[m] < 1.0))
      throw NonErgodic("theta_star: loads must lie in (0, 1)");
    ts[m] = -std::log(traffic.rho[m]);
  }
  if (std::abs(H0(ts, s)) > detail::kMomentumTol)
    throw SingularSubsystem("theta_star: H0 zero level violated");
  return ts;
}

inline FaceMomenta face_momenta(FaceLabel J, const TrafficSolution& traffic,
                                const NetworkSpec& s) {
  const int K = s.K;
  FaceMomenta fm;
  fm.J = J;
  fm.phi.assign(K, 0.0);
  if (J.empty()) {
    fm.theta_tilde = theta_star(traffic, s);
    fm.essential = true;
    return fm;
  }
  const auto J_idx = J.indices();
  const auto Jc_idx = J.complement(K).indices();

  // ((I - P) restricted to J x J) u = (P restricted to J x J^c) rhs,
  // where u_l = 1/rho~_l - 1 and rhs_l = 1/rho_l - 1 off the face.
  Matrix imp = Matrix::identity(K) - s.P;
  Matrix block = delete_rc(imp, Jc_idx, Jc_idx);
  Matrix coupling = delete_rc(s.P, Jc_idx, J_idx);
  Vec rhs_off(Jc_idx.size());
  for (std::size_t i = 0; i < Jc_idx.size(); ++i)
    rhs_off[i] = 1.0 / traffic.rho[Jc_idx[i]] - 1.0;
  Vec u = solve(block, coupling * rhs_off);

  fm.rho_tilde.resize(J_idx.size());
  fm.theta_tilde.assign(K, 0.0);
  for (int k : Jc_idx) fm.theta_tilde[k] = -std::log(traffic.rho[k]);
  fm.essential = true;
  for (std::size_t i = 0; i < J_idx.size(); ++i) {
    int l = J_idx[i];
    if (u[i] < -detail::kEssentialTol)
      throw SingularSubsystem(
          "face_momenta: negative inverse-load excess on the face");
    double u_l = std::max(u[i], 0.0);
    fm.rho_tilde[i] = 1.0 / (1.0 + u_l);
    fm.theta_tilde[l] = std::log1p(u_l);
    double slack = (1.0 / traffic.rho[l] - 1.0) - u_l;  // >= 0 iff essential
    fm.phi[l] = slack * traffic.nu[l];
    if (slack < -detail::kEssentialTol) fm.essential = false;
    if (std::abs(slack) <= detail::kEssentialTol) fm.marginal = true;
  }
  detail::verify_zero_levels(fm.theta_tilde, J, s, "face_momenta");
  return fm;
}

/// Essentiality of the half-axis of node m (the face pinning every other
/// node), checked through the ratio row alone.
inline bool half_axis_essential(int m, const TrafficSolution& traffic,
                                const NetworkSpec& s) {
  NodeMomentum nm = node_momentum(m, traffic, s);
  double excess_m = 1.0 / traffic.rho[m] - 1.0;
  for (int l = 0; l < s.K; ++l) {
    if (l == m) continue;
    if (1.0 / traffic.rho[l] - 1.0 <
        nm.a_row[l] * excess_m - detail::kEssentialTol)
      return false;
  }
  return true;
}

/// Aggregated momenta for one network. Faces are materialized for K <= 16
/// and computed on demand beyond that.
struct MomentaTable {
  NetworkSpec spec;
  TrafficSolution traffic;
  Vec theta;                       // theta*
  std::vector<NodeMomentum> nodes;
  std::vector<FaceMomenta> faces;  // indexed by face bitmask when materialized
  bool materialized = false;

  int K() const { return spec.K; }

  FaceMomenta face(FaceLabel J) const {
    if (materialized) return faces[J.bits];
    return face_momenta(J, traffic, spec);
  }
};

inline MomentaTable build_momenta_table(const TrafficSolution& traffic,
                                        const NetworkSpec& s) {
  MomentaTable table;
  table.spec = s;
  table.traffic = traffic;
  table.theta = theta_star(traffic, s);
  table.nodes.reserve(s.K);
  for (int m = 0; m < s.K; ++m)
    table.nodes.push_back(node_momentum(m, traffic, s));
  for (int m = 0; m < s.K; ++m)
    if (std::abs(table.nodes[m].theta[m] - table.theta[m]) >
        detail::kMomentumTol)
      throw SingularSubsystem("momenta table: theta* disagrees with theta^(m)");
  if (s.K <= 16) {
    const std::uint32_t n_faces = 1u << s.K;
    table.faces.resize(n_faces);
    for (std::uint32_t bits = 0; bits < n_faces; ++bits)
      table.faces[bits] = face_momenta(FaceLabel{bits}, traffic, s);
    table.materialized = true;
  }
  return table;
}

}  // namespace jpath
