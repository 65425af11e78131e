#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jpath/conjugate.hpp"
#include "jpath/fluid.hpp"
#include "jpath/matrix_identities.hpp"
#include "jpath/momenta.hpp"
#include "jpath/primal_oracle.hpp"
#include "jpath/sampling.hpp"

// Self-check runner: evaluates the library's structural identities on one
// concrete network and reports a named pass/fail per identity. The hooks
// exist so tests can inject corrupted intermediates and assert that the
// right check trips.

namespace jpath {

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0;
  double tolerance = 0;
  std::string note;
};

struct CheckReport {
  std::vector<CheckResult> results;
  bool all_pass = true;

  void add(const std::string& name, double residual, double tolerance,
           const std::string& note = "") {
    bool ok = residual <= tolerance;
    results.push_back({name, ok, residual, tolerance, note});
    all_pass = all_pass && ok;
  }
  void add_flag(const std::string& name, bool ok, const std::string& note = "") {
    results.push_back({name, ok, ok ? 0.0 : 1.0, 0.5, note});
    all_pass = all_pass && ok;
  }
  void add_error(const std::string& name, const std::string& what) {
    results.push_back({name, false, 1.0, 0.0, what});
    all_pass = false;
  }
};

struct CheckHooks {
  // applied to the traffic solution right after it is computed
  std::function<void(TrafficSolution&)> corrupt_traffic;
};

enum class CheckLevel { fast, full };

inline CheckReport run_checks(const ValidatedNetwork& net,
                              CheckLevel level = CheckLevel::fast,
                              std::uint64_t seed = 2024,
                              const CheckHooks& hooks = {}) {
  const NetworkSpec& s = net.spec();
  const int K = s.K;
  CheckReport report;

  TrafficSolution traffic = solve_traffic(net);
  if (hooks.corrupt_traffic) hooks.corrupt_traffic(traffic);

  {  // flow balance
    Vec ptnu = s.P.transpose() * traffic.nu;
    double res = 0;
    for (int k = 0; k < K; ++k)
      res = std::max(res, std::abs(traffic.nu[k] - s.lambda[k] - ptnu[k]));
    report.add("traffic_residual", res, 1e-10 * std::max(1.0, norm_inf(traffic.nu)));
  }
  {  // C = I + P^T C
    Matrix lhs = traffic.C - (Matrix::identity(K) + s.P.transpose() * traffic.C);
    report.add("resolvent_identity", lhs.max_abs(), 1e-10 * std::max(1.0, traffic.C.max_abs()));
  }

  DualNetwork dual;
  try {
    dual = build_dual(net, traffic);
    double worst_row = 0;
    for (int k = 0; k < K; ++k) {
      double sum = 0;
      for (int l = 0; l < K; ++l) sum += dual.P_bar(k, l);
      worst_row = std::max(worst_row, sum - 1.0);
    }
    report.add("dual_row_sums", worst_row, 1e-12);

    NetworkSpec dspec = dual_as_spec(dual);
    TrafficSolution dtraffic = detail::solve_traffic_unchecked(dspec);
    report.add("dual_throughput", dist_inf(dtraffic.nu, traffic.nu),
               1e-10 * std::max(1.0, norm_inf(traffic.nu)));
    DualNetwork ddual = detail::build_dual_impl(dspec, dtraffic);
    double inv_res = dist_inf(ddual.lambda_bar, s.lambda);
    inv_res = std::max(inv_res, (ddual.P_bar - s.P).max_abs());
    report.add("dual_involution", inv_res, 1e-12 * std::max(1.0, norm_inf(s.lambda)));
  } catch (const Error& e) {
    report.add_error("dual_construction", e.what());
    return report;
  }

  MomentaTable table;
  try {
    table = build_momenta_table(traffic, s);
    double h0 = std::abs(H0(table.theta, s));
    double rho_res = 0;
    for (int m = 0; m < K; ++m)
      rho_res = std::max(rho_res, std::abs(std::exp(-table.nodes[m].theta[m]) -
                                           traffic.rho[m]));
    report.add("theta_star_zero_level", h0, 1e-10);
    report.add("node_momentum_loads", rho_res, 1e-10);
  } catch (const Error& e) {
    report.add_error("momenta_construction", e.what());
    return report;
  }

  if (K <= 12) {  // all faces
    double worst = 0;
    bool half_axis_ok = true;
    for (std::uint32_t bits = 0; bits < (1u << K); ++bits) {
      FaceLabel J{bits};
      FaceMomenta fm = table.face(J);
      worst = std::max(worst, std::abs(H0(fm.theta_tilde, s)));
      if (J.count() == K - 1) {
        int m = J.complement(K).indices()[0];
        if (half_axis_essential(m, traffic, s) != fm.essential)
          half_axis_ok = false;
      }
    }
    report.add("face_zero_levels", worst, 1e-10);
    report.add_flag("half_axis_consistency", half_axis_ok);
  }

  {  // determinant identities on I - P, dominance of C
    Matrix b = Matrix::identity(K) - s.P;
    double worst = 0;
    for (int l = 0; l < K; ++l) {
      worst = std::max(worst, check_det_identity(b, l));
      for (int m = 0; m < K; ++m)
        if (m != l) worst = std::max(worst, check_adj_identity(b, m, l));
    }
    if (K >= 2) {
      for (int m = 0; m < K; ++m) {
        worst = std::max(worst, check_tozd(b, m));
        for (int l = 0; l < K; ++l)
          if (l != m) worst = std::max(worst, check_tozd(b, m, l));
      }
    }
    report.add("matrix_identities", worst,
               1e-8 * std::max(1.0, std::pow(b.norm_inf(), K)));
    report.add("c_dominance", K >= 2 ? check_c_dominance(traffic.C) : 0.0, 1e-12);
  }

  {  // cost identity on a handful of deterministic targets
    double worst_cost = 0, worst_rate = 0;
    std::vector<Vec> targets;
    for (int k = 0; k < K; ++k) {
      Vec unit(K, 0.0);
      unit[k] = 1.0;
      targets.push_back(unit);
    }
    targets.push_back(Vec(K, 0.5));
    for (const Vec& r : targets) {
      FluidTrajectory traj = solve_dual_fluid(r, table, dual);
      OptimalPath path = reverse_to_optimal(traj, table);
      double expect = dot(table.theta, r);
      worst_cost = std::max(worst_cost, std::abs(path_cost(path, table) - expect) /
                                            (1.0 + std::abs(expect)));
      worst_rate = std::max(worst_rate, dual_rate_vanishes(traj, dual));
    }
    report.add("cost_identity", worst_cost, 1e-6);
    report.add("dual_rate_vanishes", worst_rate, 1e-5);
  }

  if (level == CheckLevel::full && K <= 3) {
    std::mt19937_64 eng(seed);
    double worst = 0;
    for (int c = 0; c < 4; ++c) {
      FaceLabel J{static_cast<std::uint32_t>(eng() % (1u << K))};
      Vec d(K), a(K);
      Matrix rho(K, K);
      for (int k = 0; k < K; ++k) {
        a[k] = runif(eng, 0.0, 2.0 * s.lambda[k]);
        d[k] = runif(eng, 0.0, 1.5 * s.mu[k]);
        double scale = runif(eng, 0.5, 1.0);
        for (int l = 0; l < K; ++l) rho(k, l) = s.P(k, l) * scale;
      }
      Vec y(K);
      for (int k = 0; k < K; ++k) {
        y[k] = a[k] - d[k];
        for (int l = 0; l < K; ++l) y[k] += rho(l, k) * d[l];
      }
      double via_dual = L_face_dual(y, J, s);
      double via_primal = L_face_primal_oracle(y, J, s);
      double gap = std::abs(via_primal - via_dual) /
                   (1.0 + std::abs(via_dual));
      worst = std::max(worst, gap);
    }
    report.add("duality_oracle", worst, 1e-3, "relative gap, 4 samples");
  }

  return report;
}

}  // namespace jpath
