// Command-line front end: traffic analysis, momenta, face tables, optimal
// trajectories, simulation, and self checks for ergodic open queueing
// networks. Exit codes: 0 success, 1 computation/invariant failure,
// 2 input or usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jpath/checks.hpp"
#include "jpath/io.hpp"
#include "jpath/primal_oracle.hpp"
#include "jpath/simulate.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::string fmt(const jpath::Vec& v) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out + ")";
}

void print_matrix(const std::string& name, const jpath::Matrix& m) {
  std::cout << name << ":\n";
  for (int i = 0; i < m.rows(); ++i) {
    std::cout << "  ";
    for (int j = 0; j < m.cols(); ++j)
      std::cout << (j ? "  " : "") << fmt(m(i, j));
    std::cout << "\n";
  }
}

jpath::Vec parse_target(const std::string& text) {
  jpath::Vec r;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      r.push_back(v);
    } catch (const std::exception&) {
      throw jpath::ParseError("--target: cannot parse component \"" + item + "\"");
    }
  }
  if (r.empty()) throw jpath::ParseError("--target: empty target");
  for (double v : r)
    if (v < 0.0 || !std::isfinite(v))
      throw jpath::ParseError("--target: components must be finite and >= 0");
  return r;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw jpath::Error("cannot write output file: " + path);
  out << body;
  if (body.empty() || body.back() != '\n') out << '\n';
}

struct Loaded {
  jpath::NetworkSpec spec;
  jpath::ValidatedNetwork net;
  jpath::TrafficSolution traffic;
};

Loaded load(const std::string& path) {
  jpath::NetworkSpec spec = jpath::load_network(path);
  jpath::ValidatedNetwork net = jpath::validate(spec);
  jpath::TrafficSolution traffic = jpath::solve_traffic(net);
  return {std::move(spec), std::move(net), std::move(traffic)};
}

int cmd_analyze(const std::string& path, const std::string& out_path) {
  Loaded in = load(path);
  const auto& s = in.net.spec();
  jpath::DualNetwork dual = jpath::build_dual(in.net, in.traffic);
  jpath::Vec theta = jpath::theta_star(in.traffic, s);
  double h0_res = std::abs(jpath::H0(theta, s));

  std::cout << "nodes:      " << s.K << "\n";
  std::cout << "nu:         " << fmt(in.traffic.nu) << "\n";
  std::cout << "rho:        " << fmt(in.traffic.rho) << "\n";
  std::cout << "theta_star: " << fmt(theta) << "\n";
  std::cout << "H0(theta_star) residual: " << fmt(h0_res) << "\n";
  print_matrix("C = (I - P^T)^{-1}", in.traffic.C);
  std::cout << "dual lambda_bar: " << fmt(dual.lambda_bar) << "\n";
  print_matrix("dual P_bar", dual.P_bar);

  if (!out_path.empty()) {
    jpath::json j{{"K", s.K},
                  {"nu", jpath::to_json(in.traffic.nu)},
                  {"rho", jpath::to_json(in.traffic.rho)},
                  {"C", jpath::to_json(in.traffic.C)},
                  {"a", jpath::to_json(in.traffic.a)},
                  {"theta_star", jpath::to_json(theta)},
                  {"H0_residual", h0_res},
                  {"dual", jpath::to_json(dual)}};
    write_file(out_path, j.dump(2));
  }
  return 0;
}

int cmd_momenta(const std::string& path, const std::string& out_path) {
  Loaded in = load(path);
  const auto& s = in.net.spec();
  jpath::MomentaTable table = jpath::build_momenta_table(in.traffic, s);
  std::cout << "theta_star: " << fmt(table.theta) << "\n";
  for (const auto& nm : table.nodes) {
    std::cout << "theta^(" << nm.m + 1 << "): " << fmt(nm.theta)
              << "   a-row: " << fmt(nm.a_row) << "\n";
  }
  if (!out_path.empty()) {
    jpath::json nodes = jpath::json::array();
    for (const auto& nm : table.nodes)
      nodes.push_back(jpath::json{{"m", nm.m + 1},
                                  {"theta", jpath::to_json(nm.theta)},
                                  {"a_row", jpath::to_json(nm.a_row)}});
    jpath::json j{{"theta_star", jpath::to_json(table.theta)}, {"nodes", nodes}};
    write_file(out_path, j.dump(2));
  }
  return 0;
}

int cmd_faces(const std::string& path, int faces_limit,
              const std::string& out_path) {
  Loaded in = load(path);
  const auto& s = in.net.spec();
  if (s.K > 16 && faces_limit <= 0)
    throw jpath::TooManyFaces(
        "faces: 2^K faces with K > 16; pass --faces-limit to cap the listing");
  jpath::MomentaTable table = jpath::build_momenta_table(in.traffic, s);
  std::uint64_t total = s.K >= 63 ? ~0ull : (1ull << s.K);
  std::uint64_t limit =
      faces_limit > 0 ? std::min<std::uint64_t>(total, faces_limit) : total;
  jpath::json rows = jpath::json::array();
  for (std::uint64_t bits = 0; bits < limit; ++bits) {
    jpath::FaceMomenta fm = table.face(jpath::FaceLabel{static_cast<std::uint32_t>(bits)});
    std::cout << fm.J.label() << (fm.J.empty() ? " (interior)" : "")
              << "  essential=" << (fm.essential ? "yes" : "no")
              << (fm.marginal ? " (marginal)" : "")
              << "  rho_tilde=" << fmt(fm.rho_tilde)
              << "  phi=" << fmt(fm.phi) << "\n";
    if (!out_path.empty()) rows.push_back(jpath::to_json(fm));
  }
  if (!out_path.empty())
    write_file(out_path, jpath::json{{"faces", rows}}.dump(2));
  return 0;
}

int cmd_trajectory(const std::string& path, const std::string& target_text,
                   const std::string& out_path, const std::string& format) {
  Loaded in = load(path);
  const auto& s = in.net.spec();
  jpath::Vec r = parse_target(target_text);
  if (static_cast<int>(r.size()) != s.K)
    throw jpath::ParseError("--target: expected " + std::to_string(s.K) +
                            " components");
  jpath::MomentaTable table = jpath::build_momenta_table(in.traffic, s);
  jpath::DualNetwork dual = jpath::build_dual(in.net, in.traffic);
  jpath::FluidTrajectory traj = jpath::solve_dual_fluid(r, table, dual);
  jpath::OptimalPath path_fwd = jpath::reverse_to_optimal(traj, table);
  double cost = path_fwd.cost;
  double recomputed = jpath::path_cost(path_fwd, table);
  double residual = std::abs(recomputed - cost) / (1.0 + std::abs(cost));

  std::cout << "target:    " << fmt(r) << "\n";
  std::cout << "T_star:    " << fmt(path_fwd.T_star) << "\n";
  std::cout << "cost:      " << fmt(cost) << "  (theta_star . r)\n";
  std::cout << "path_cost: " << fmt(recomputed)
            << "  relative residual " << fmt(residual) << "\n";
  double t_acc = 0;
  for (std::size_t i = 0; i < path_fwd.segments.size(); ++i) {
    const auto& seg = path_fwd.segments[i];
    std::cout << "  segment " << i << ": t=[" << fmt(t_acc) << ", "
              << fmt(t_acc + seg.duration) << "]  " << seg.face.label()
              << "  velocity=" << fmt(seg.velocity) << "\n";
    t_acc += seg.duration;
  }
  if (residual > 1e-6) {
    std::cerr << "trajectory: cost identity violated beyond 1e-6\n";
    return kExitFailure;
  }

  if (!out_path.empty()) {
    if (format == "json") {
      jpath::json j{{"optimal_path", jpath::to_json(path_fwd)},
                    {"dual_fluid", jpath::to_json(traj)},
                    {"cost", cost},
                    {"path_cost", recomputed}};
      write_file(out_path, j.dump(2));
    } else {
      std::ostringstream fwd, bwd;
      jpath::write_path_csv(fwd, path_fwd);
      jpath::write_fluid_csv(bwd, traj, table);
      write_file(out_path, fwd.str());
      std::string dual_path = out_path;
      auto pos = dual_path.rfind(".csv");
      if (pos != std::string::npos && pos == dual_path.size() - 4)
        dual_path = dual_path.substr(0, pos);
      dual_path += ".dual.csv";
      write_file(dual_path, bwd.str());
      std::cout << "wrote " << out_path << " and " << dual_path << "\n";
    }
  }
  return 0;
}

int cmd_simulate(const std::string& path, std::uint64_t seed, int n,
                 int replicas, double horizon, int samples,
                 const std::string& out_path, const std::string& paths_csv) {
  Loaded in = load(path);
  jpath::SimConfig cfg;
  cfg.seed = seed;
  cfg.n = n;
  cfg.replicas = replicas;
  cfg.horizon = horizon;
  cfg.path_sample_points = samples;
  jpath::SimResult res = jpath::simulate_ctmc(in.net.spec(), cfg);
  for (int rep = 0; rep < replicas; ++rep) {
    std::cout << "replica " << rep << ": events=" << res.event_counts[rep]
              << " final=[";
    for (std::size_t k = 0; k < res.final_states[rep].size(); ++k)
      std::cout << (k ? "," : "") << res.final_states[rep][k];
    std::cout << "] completions=[";
    for (std::size_t k = 0; k < res.service_completions[rep].size(); ++k)
      std::cout << (k ? "," : "") << res.service_completions[rep][k];
    std::cout << "]\n";
  }
  if (!out_path.empty()) write_file(out_path, jpath::to_json(res).dump(2));
  if (!paths_csv.empty()) {
    std::ostringstream os;
    jpath::write_sim_paths_csv(os, res);
    write_file(paths_csv, os.str());
  }
  return 0;
}

int cmd_check(const std::string& path, const std::string& level,
              std::uint64_t seed, const std::string& out_path) {
  Loaded in = load(path);
  jpath::CheckLevel lvl =
      level == "full" ? jpath::CheckLevel::full : jpath::CheckLevel::fast;
  jpath::CheckReport report = jpath::run_checks(in.net, lvl, seed);
  jpath::json rows = jpath::json::array();
  for (const auto& res : report.results) {
    std::cout << (res.pass ? "[PASS] " : "[FAIL] ") << res.name
              << "  residual=" << fmt(res.residual)
              << "  tol=" << fmt(res.tolerance);
    if (!res.note.empty()) std::cout << "  (" << res.note << ")";
    std::cout << "\n";
    rows.push_back(jpath::json{{"name", res.name},
                               {"pass", res.pass},
                               {"residual", res.residual},
                               {"tolerance", res.tolerance},
                               {"note", res.note}});
  }
  if (!out_path.empty())
    write_file(out_path,
               jpath::json{{"checks", rows}, {"all_pass", report.all_pass}}.dump(2));
  std::cout << (report.all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return report.all_pass ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal buildup trajectories for ergodic open queueing networks"};
  app.require_subcommand(1);

  std::string network_path, out_path, format = "csv", target_text, level = "fast";
  std::string paths_csv;
  std::uint64_t seed = 1;
  int n = 100, replicas = 1, faces_limit = 0, samples = 0;
  double horizon = 100.0;

  auto* analyze = app.add_subcommand("analyze", "traffic solution, theta*, dual network");
  analyze->add_option("network", network_path, "network JSON file")->required();
  analyze->add_option("--out", out_path, "write a JSON report");

  auto* momenta = app.add_subcommand("momenta", "per-node momenta and theta*");
  momenta->add_option("network", network_path)->required();
  momenta->add_option("--out", out_path);

  auto* faces = app.add_subcommand("faces", "per-face momenta, reflection intensities, essentiality");
  faces->add_option("network", network_path)->required();
  faces->add_option("--faces-limit", faces_limit, "cap the number of listed faces");
  faces->add_option("--out", out_path);

  auto* trajectory = app.add_subcommand("trajectory", "most probable path to a target point");
  trajectory->add_option("network", network_path)->required();
  trajectory->add_option("--target", target_text, "comma-separated target, e.g. 1,0.5")->required();
  trajectory->add_option("--out", out_path, "output file (csv writes a .dual.csv sibling)");
  trajectory->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  auto* simulate = app.add_subcommand("simulate", "event-driven simulation of the network");
  simulate->add_option("network", network_path)->required();
  simulate->add_option("--seed", seed);
  simulate->add_option("--n", n, "fluid scaling for exported paths");
  simulate->add_option("--replicas", replicas);
  simulate->add_option("--horizon", horizon, "model-time horizon");
  simulate->add_option("--samples", samples, "downsampled path points per replica");
  simulate->add_option("--out", out_path, "JSON results");
  simulate->add_option("--paths-csv", paths_csv, "scaled path samples CSV");

  auto* check = app.add_subcommand("check", "run the structural self checks");
  check->add_option("network", network_path)->required();
  check->add_option("--level", level)->check(CLI::IsMember({"fast", "full"}));
  check->add_option("--seed", seed);
  check->add_option("--out", out_path, "machine-readable summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(network_path, out_path);
    if (app.got_subcommand(momenta)) return cmd_momenta(network_path, out_path);
    if (app.got_subcommand(faces)) return cmd_faces(network_path, faces_limit, out_path);
    if (app.got_subcommand(trajectory))
      return cmd_trajectory(network_path, target_text, out_path, format);
    if (app.got_subcommand(simulate))
      return cmd_simulate(network_path, seed, n, replicas, horizon, samples,
                          out_path, paths_csv);
    if (app.got_subcommand(check)) return cmd_check(network_path, level, seed, out_path);
  } catch (const jpath::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::DimensionMismatch& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::NegativeRate& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::RowSumExceedsOne& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::NonErgodic& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::TooManyFaces& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const jpath::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInput;
}
