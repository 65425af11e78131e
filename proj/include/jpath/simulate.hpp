#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "jpath/fluid.hpp"
#include "jpath/network.hpp"

// Event-driven simulation of the queue-length Markov chain. One exponential
// clock with the total event rate plus categorical thinning keeps the chain
// exact. Randomness is counter-based -- every draw is a pure function of
// (seed, replica, draw index) -- so results are reproducible regardless of
// scheduling and replicas are independent streams.

namespace jpath {

struct SimConfig {
  std::uint64_t seed = 1;
  double horizon = 0;       // model time per replica
  int n = 1;                // fluid scaling parameter (used by lln_check)
  int replicas = 1;
  std::vector<long long> initial_state;
  std::uint64_t max_events = 200'000'000;  // safety cap per replica
  int path_sample_points = 0;              // downsampled scaled path export
};

struct PathSample {
  int replica = 0;
  Vec times;
  std::vector<Vec> scaled_states;  // state / n at the sampled times
};

struct SimResult {
  std::vector<std::vector<long long>> final_states;
  std::vector<std::vector<long long>> service_completions;
  std::vector<std::uint64_t> event_counts;
  std::vector<double> sup_distances;     // filled by lln_check
  std::vector<PathSample> path_samples;  // when path_sample_points > 0
  std::vector<double> logprob_estimates;
};

/// Counter-based generator: draw i of replica r under seed s is
/// mix(key(s, r) + i * gamma), a splitmix64 output function.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t replica)
      : key_(mix(seed ^ mix(replica * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull))) {}

  double uniform() {  // in (0, 1)
    std::uint64_t bits = mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull);
    double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return u > 0 ? u : 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Called after every transition with the pre-jump interval [t_prev, t_now)
// spent in `state_before` and the post-jump state.
using SimObserver = std::function<void(int replica, double t_prev, double t_now,
                                       const std::vector<long long>& state_before,
                                       const std::vector<long long>& state_after)>;

inline SimResult simulate_ctmc(const NetworkSpec& s, const SimConfig& cfg,
                               const SimObserver& observer = {}) {
  const int K = s.K;
  if (!cfg.initial_state.empty() &&
      static_cast<int>(cfg.initial_state.size()) != K)
    throw DimensionMismatch("simulate_ctmc: initial state size");
  SimResult result;
  result.final_states.resize(cfg.replicas);
  result.service_completions.resize(cfg.replicas);
  result.event_counts.resize(cfg.replicas, 0);

  double total_lambda = 0;
  for (double l : s.lambda) total_lambda += l;

  for (int rep = 0; rep < cfg.replicas; ++rep) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(rep));
    std::vector<long long> x =
        cfg.initial_state.empty() ? std::vector<long long>(K, 0)
                                  : cfg.initial_state;
    std::vector<long long> completions(K, 0);
    double t = 0;
    std::uint64_t events = 0;

    PathSample sample;
    int next_sample = 0;
    if (cfg.path_sample_points > 0) sample.replica = rep;
    auto emit_samples_until = [&](double now) {
      while (next_sample < cfg.path_sample_points) {
        double ts = cfg.horizon * next_sample /
                    std::max(1, cfg.path_sample_points - 1);
        if (ts >= now) break;
        Vec scaled(K);
        for (int k = 0; k < K; ++k)
          scaled[k] = static_cast<double>(x[k]) / cfg.n;
        sample.times.push_back(ts);
        sample.scaled_states.push_back(std::move(scaled));
        ++next_sample;
      }
    };

    while (t < cfg.horizon && events < cfg.max_events) {
      double rate = total_lambda;
      for (int k = 0; k < K; ++k)
        if (x[k] > 0) rate += s.mu[k];
      if (rate <= 0) break;
      double dt = rng.exponential(rate);
      if (t + dt >= cfg.horizon) {
        emit_samples_until(cfg.horizon);
        t = cfg.horizon;
        break;
      }
      double t_next = t + dt;
      emit_samples_until(t_next);

      std::vector<long long> before;
      if (observer) before = x;
      double pick = rng.uniform() * rate;
      bool applied = false;
      for (int k = 0; k < K && !applied; ++k) {
        if (pick < s.lambda[k]) {
          ++x[k];
          applied = true;
          break;
        }
        pick -= s.lambda[k];
      }
      if (!applied) {
        for (int k = 0; k < K; ++k) {
          if (x[k] == 0) continue;
          if (pick < s.mu[k]) {
            --x[k];
            ++completions[k];
            double route = rng.uniform();
            double acc = 0;
            for (int l = 0; l < K; ++l) {
              acc += s.P(k, l);
              if (route < acc) {
                ++x[l];
                break;
              }
            }
            applied = true;
            break;
          }
          pick -= s.mu[k];
        }
      }
      if (!applied) {
        // numerical leftovers at the top of the rate stack: treat as arrival
        // at the last node (probability ~ machine epsilon)
        ++x[K - 1];
      }
      ++events;
      if (observer) observer(rep, t, t_next, before, x);
      t = t_next;
    }
    emit_samples_until(cfg.horizon + 1.0);

    result.final_states[rep] = std::move(x);
    result.service_completions[rep] = std::move(completions);
    result.event_counts[rep] = events;
    if (cfg.path_sample_points > 0)
      result.path_samples.push_back(std::move(sample));
  }
  return result;
}

/// Exact log of the product-form stationary probability of an integer state.
inline double stationary_logprob(const TrafficSolution& traffic,
                                 const std::vector<long long>& state) {
  if (state.size() != traffic.rho.size())
    throw DimensionMismatch("stationary_logprob: state size");
  double lp = 0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k] < 0) throw DimensionMismatch("stationary_logprob: negative count");
    lp += std::log1p(-traffic.rho[k]) +
          static_cast<double>(state[k]) * std::log(traffic.rho[k]);
  }
  return lp;
}

/// Evaluates the reference fluid trajectory at dual time t (piecewise
/// linear, frozen at the origin after T*).
inline Vec fluid_position(const FluidTrajectory& traj, double t) {
  const int K = static_cast<int>(traj.source.size());
  if (traj.segments.empty()) return Vec(K, 0.0);
  if (t <= 0) return traj.source;
  for (const FluidSegment& seg : traj.segments) {
    if (t <= seg.t_end) {
      Vec x(K);
      for (int k = 0; k < K; ++k)
        x[k] = seg.start_point[k] + seg.velocity[k] * (t - seg.t_start);
      return x;
    }
  }
  return Vec(K, 0.0);
}

/// Law-of-large-numbers check for the dual fluid: simulates the dual chain
/// from floor(n r), scales by 1/n, and reports the per-replica sup distance
/// to the reference trajectory over [0, T*].
inline SimResult lln_check(const DualNetwork& dual, const Vec& r,
                           const SimConfig& cfg,
                           const FluidTrajectory& reference) {
  NetworkSpec spec = dual_as_spec(dual);
  const int K = spec.K;
  SimConfig run = cfg;
  run.horizon = cfg.n * reference.T_star;
  run.initial_state.resize(K);
  for (int k = 0; k < K; ++k)
    run.initial_state[k] = static_cast<long long>(std::floor(cfg.n * r[k]));

  std::vector<double> sup(cfg.replicas, 0.0);
  auto observer = [&](int rep, double t_prev, double t_now,
                      const std::vector<long long>& before,
                      const std::vector<long long>& after) {
    // state is constant on [t_prev, t_now); the fluid is linear, so the
    // distance on the interval peaks at one of the two ends
    Vec f0 = fluid_position(reference, t_prev / cfg.n);
    Vec f1 = fluid_position(reference, t_now / cfg.n);
    double d = 0;
    for (int k = 0; k < K; ++k) {
      double sb = static_cast<double>(before[k]) / cfg.n;
      double sa = static_cast<double>(after[k]) / cfg.n;
      d = std::max(d, std::abs(sb - f0[k]));
      d = std::max(d, std::abs(sb - f1[k]));
      d = std::max(d, std::abs(sa - f1[k]));
    }
    sup[rep] = std::max(sup[rep], d);
  };
  SimResult result = simulate_ctmc(spec, run, observer);
  // trailing stretch after the last event: the state holds to the horizon
  for (int rep = 0; rep < cfg.replicas; ++rep) {
    Vec fend = fluid_position(reference, reference.T_star);
    for (int k = 0; k < K; ++k) {
      double scaled = static_cast<double>(result.final_states[rep][k]) / cfg.n;
      sup[rep] = std::max(sup[rep], std::abs(scaled - fend[k]));
    }
  }
  result.sup_distances = std::move(sup);
  return result;
}

struct OverflowCheck {
  double value = 0;  // -(1/n) ln P(sum_k Q_k >= n A) under stationarity
  double limit = 0;  // A * min_k theta*_k
  double gap = 0;
  bool tie = false;  // several components of theta* attain the minimum
};

/// Exact tail of the total queue under the product-form stationary law,
/// computed by convolving geometric tails (no simulation, no cancellation).
inline OverflowCheck overflow_logprob_check(const TrafficSolution& traffic,
                                            const Vec& theta_star_vec,
                                            double A, int n) {
  const int K = static_cast<int>(traffic.rho.size());
  OverflowCheck out;
  double min_theta = theta_star_vec[0];
  for (double th : theta_star_vec) min_theta = std::min(min_theta, th);
  int ties = 0;
  for (double th : theta_star_vec)
    if (std::abs(th - min_theta) <= 1e-12) ++ties;
  out.tie = ties > 1;
  out.limit = A * min_theta;

  const int M = static_cast<int>(std::ceil(n * A - 1e-9));
  if (M <= 0) {
    out.value = 0;
    out.gap = out.value - out.limit;
    return out;
  }
  // tail[m] = P(Q_1 + .. + Q_j >= m); start with j = 0
  std::vector<double> tail(M + 1, 0.0);
  tail[0] = 1.0;
  for (int k = 0; k < K; ++k) {
    double rho = traffic.rho[k];
    std::vector<double> next(M + 1, 0.0);
    next[0] = 1.0;
    for (int m = 1; m <= M; ++m) {
      // condition on Q_k = i: i < m leaves m - i for the rest, i >= m is in
      double acc = std::pow(rho, m);  // P(Q_k >= m)
      double geo = 1.0 - rho;         // P(Q_k = i), starting at i = 0
      for (int i = 0; i < m; ++i) {
        acc += geo * tail[m - i];
        geo *= rho;
      }
      next[m] = acc;
    }
    tail = std::move(next);
  }
  out.value = -std::log(tail[M]) / n;
  out.gap = out.value - out.limit;
  return out;
}

}  // namespace jpath
