#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "jpath/fluid.hpp"
#include "jpath/momenta.hpp"
#include "jpath/network.hpp"
#include "jpath/simulate.hpp"

namespace jpath {

using json = nlohmann::json;

namespace detail {

inline Vec parse_rate_vector(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array())
    throw ParseError("network file: missing array \"" + key + "\"");
  Vec out;
  for (const auto& v : j[key]) {
    if (!v.is_number())
      throw ParseError("network file: \"" + key + "\" must contain numbers");
    double x = v.get<double>();
    if (!std::isfinite(x))
      throw ParseError("network file: non-finite entry in \"" + key + "\"");
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Parses {"lambda": [...], "mu": [...], "P": [[...], ...]}. Rejects
/// non-finite numbers and ragged arrays; validation is a separate step.
inline NetworkSpec network_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("network file: expected a JSON object");
  NetworkSpec s;
  s.lambda = detail::parse_rate_vector(j, "lambda");
  s.mu = detail::parse_rate_vector(j, "mu");
  s.K = static_cast<int>(s.lambda.size());
  if (!j.contains("P") || !j["P"].is_array())
    throw ParseError("network file: missing matrix \"P\"");
  const auto& rows = j["P"];
  s.P = Matrix(static_cast<int>(rows.size()), s.K);
  int i = 0;
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != s.K)
      throw ParseError("network file: \"P\" must be a K x K matrix");
    int jcol = 0;
    for (const auto& v : row) {
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw ParseError("network file: \"P\" must contain finite numbers");
      s.P(i, jcol++) = v.get<double>();
    }
    ++i;
  }
  return s;
}

inline NetworkSpec load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("network file " + path + ": " + e.what());
  }
  return network_from_json(j);
}

inline json to_json(const Vec& v) { return json(v); }

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const NetworkSpec& s) {
  return json{{"lambda", to_json(s.lambda)},
              {"mu", to_json(s.mu)},
              {"P", to_json(s.P)}};
}

inline json to_json(const DualNetwork& d) {
  return json{{"lambda_bar", to_json(d.lambda_bar)},
              {"mu", to_json(d.mu)},
              {"P_bar", to_json(d.P_bar)}};
}

inline json to_json(const FaceMomenta& fm) {
  json idx = json::array();
  for (int k : fm.J.indices()) idx.push_back(k + 1);
  return json{{"J", idx},
              {"label", fm.J.label()},
              {"theta_tilde", to_json(fm.theta_tilde)},
              {"rho_tilde", to_json(fm.rho_tilde)},
              {"phi", to_json(fm.phi)},
              {"essential", fm.essential},
              {"marginal", fm.marginal}};
}

inline json to_json(const OptimalPath& path) {
  json segs = json::array();
  double t = 0;
  int index = 0;
  for (const PathSegment& seg : path.segments) {
    segs.push_back(json{{"index", index++},
                        {"t_start", t},
                        {"duration", seg.duration},
                        {"face", seg.face.label()},
                        {"displacement", to_json(seg.displacement)},
                        {"velocity", to_json(seg.velocity)},
                        {"momentum", to_json(seg.momentum)}});
    t += seg.duration;
  }
  return json{{"target", to_json(path.target)},
              {"T_star", path.T_star},
              {"cost", path.cost},
              {"segments", segs}};
}

inline json to_json(const FluidTrajectory& traj) {
  json segs = json::array();
  int index = 0;
  for (const FluidSegment& seg : traj.segments) {
    segs.push_back(json{{"index", index++},
                        {"t_start", seg.t_start},
                        {"t_end", seg.t_end},
                        {"face", seg.face.label()},
                        {"start", to_json(seg.start_point)},
                        {"velocity", to_json(seg.velocity)}});
  }
  return json{{"source", to_json(traj.source)},
              {"T_star", traj.T_star},
              {"segments", segs}};
}

namespace detail {

inline void csv_point(std::ostream& os, double t, const Vec& q,
                      const std::string& face, const Vec& theta, int index) {
  os << t;
  for (double x : q) os << ',' << x;
  os << ',' << face;
  for (double x : theta) os << ',' << x;
  os << ',' << index << '\n';
}

inline void csv_header(std::ostream& os, int K) {
  os << 't';
  for (int k = 1; k <= K; ++k) os << ",q_" << k;
  os << ",face";
  for (int k = 1; k <= K; ++k) os << ",theta_" << k;
  os << ",segment_index\n";
}

}  // namespace detail

/// Plot-ready forward path: one row per segment start plus the terminal
/// point. Columns: t, q_1..q_K, face, theta_1..theta_K, segment_index.
inline void write_path_csv(std::ostream& os, const OptimalPath& path) {
  const int K = static_cast<int>(path.target.size());
  os.precision(15);
  detail::csv_header(os, K);
  Vec q(K, 0.0);
  double t = 0;
  int index = 0;
  for (const PathSegment& seg : path.segments) {
    detail::csv_point(os, t, q, seg.face.label(), seg.momentum, index);
    for (int k = 0; k < K; ++k) q[k] += seg.displacement[k];
    t += seg.duration;
    ++index;
  }
  if (!path.segments.empty()) {
    const PathSegment& last = path.segments.back();
    detail::csv_point(os, t, q, last.face.label(), last.momentum, index - 1);
  }
}

inline void write_fluid_csv(std::ostream& os, const FluidTrajectory& traj,
                            const MomentaTable& table) {
  const int K = static_cast<int>(traj.source.size());
  os.precision(15);
  detail::csv_header(os, K);
  int index = 0;
  for (const FluidSegment& seg : traj.segments) {
    detail::csv_point(os, seg.t_start, seg.start_point, seg.face.label(),
                      table.face(seg.face).theta_tilde, index);
    ++index;
  }
  if (!traj.segments.empty()) {
    const FluidSegment& last = traj.segments.back();
    Vec end(K);
    for (int k = 0; k < K; ++k)
      end[k] = last.start_point[k] +
               last.velocity[k] * (last.t_end - last.t_start);
    detail::csv_point(os, last.t_end, end, last.face.label(),
                      table.face(last.face).theta_tilde, index - 1);
  }
}

inline json to_json(const SimResult& res) {
  json reps = json::array();
  for (std::size_t i = 0; i < res.final_states.size(); ++i) {
    json rec{{"replica", i},
             {"final_state", res.final_states[i]},
             {"service_completions", res.service_completions[i]},
             {"events", res.event_counts[i]}};
    if (i < res.sup_distances.size())
      rec["sup_distance"] = res.sup_distances[i];
    reps.push_back(rec);
  }
  return json{{"replicas", reps}};
}

inline void write_sim_paths_csv(std::ostream& os, const SimResult& res) {
  if (res.path_samples.empty()) return;
  const int K = static_cast<int>(res.path_samples.front().scaled_states.empty()
                                     ? 0
                                     : res.path_samples.front().scaled_states.front().size());
  os.precision(15);
  os << 't';
  for (int k = 1; k <= K; ++k) os << ",q_" << k;
  os << ",replica\n";
  for (const PathSample& ps : res.path_samples) {
    for (std::size_t i = 0; i < ps.times.size(); ++i) {
      os << ps.times[i];
      for (double x : ps.scaled_states[i]) os << ',' << x;
      os << ',' << ps.replica << '\n';
    }
  }
}

}  // namespace jpath
