#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "jpath/fluid.hpp"
#include "jpath/sampling.hpp"

using namespace jpath;
using Catch::Approx;

namespace {

NetworkSpec mm1() {
  NetworkSpec s;
  s.K = 1;
  s.lambda = {1.0};
  s.mu = {2.0};
  s.P = Matrix(1, 1, 0.0);
  return s;
}

NetworkSpec tandem() {
  NetworkSpec s;
  s.K = 2;
  s.lambda = {1.0, 0.5};
  s.mu = {3.0, 4.0};
  s.P = Matrix{{0.0, 0.5}, {0.0, 0.0}};
  return s;
}

// two nodes, heavy feedback from node 2 into a fast node 1; the x1 axis is
// inessential for these rates
NetworkSpec feedback() {
  NetworkSpec s;
  s.K = 2;
  s.lambda = {0.1, 1.0};
  s.mu = {9.0, 1.25};
  s.P = Matrix{{0.0, 0.0}, {0.8, 0.0}};
  return s;
}

struct Built {
  NetworkSpec spec;
  TrafficSolution traffic;
  MomentaTable table;
  DualNetwork dual;
};

Built build(const NetworkSpec& spec) {
  auto net = validate(spec);
  auto traffic = solve_traffic(net);
  auto table = build_momenta_table(traffic, spec);
  auto dual = build_dual(net, traffic);
  return {spec, traffic, table, dual};
}

// cost of an arbitrary piecewise-linear comparison path through the orthant;
// each open segment lies in the face spanned by the common zero coordinates
// of its endpoints
double comparison_path_cost(const std::vector<Vec>& waypoints,
                            const std::vector<double>& durations,
                            const Built& b) {
  double total = 0;
  const int K = b.spec.K;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    FaceLabel J;
    for (int k = 0; k < K; ++k)
      if (waypoints[i][k] == 0.0 && waypoints[i + 1][k] == 0.0)
        J = J.with(k);
    Vec v(K);
    for (int k = 0; k < K; ++k)
      v[k] = (waypoints[i + 1][k] - waypoints[i][k]) / durations[i];
    ConjugateOptions opt;
    opt.hint_starts = {b.table.face(J).theta_tilde, b.table.theta};
    total += durations[i] * L_face_dual(v, J, b.spec, opt);
  }
  return total;
}

}  // namespace

TEST_CASE("face velocities of the single queue") {
  Built b = build(mm1());
  FaceVelocity interior = face_velocity(FaceLabel::empty_face(), b.table, b.dual);
  REQUIRE(interior.v[0] == Approx(1.0));  // mu - lambda
  FaceVelocity pinned = face_velocity(FaceLabel{0b1}, b.table, b.dual);
  REQUIRE(pinned.v[0] == 0.0);
  REQUIRE(pinned.essential);
}

TEST_CASE("interior velocity equals the reversed dual drift") {
  std::mt19937_64 eng(101);
  for (int rep = 0; rep < 30; ++rep) {
    int K = 1 + static_cast<int>(eng() % 5);
    Built b = build(random_ergodic_spec(eng, K));
    Vec g = grad_H0(b.table.theta, b.spec);
    // -grad H_0(theta*) = lambda_bar - (I - P_bar^T) mu, the dual LLN drift
    Vec flow = b.dual.P_bar.transpose() * b.spec.mu;
    for (int k = 0; k < K; ++k) {
      double rhs = b.dual.lambda_bar[k] + flow[k] - b.spec.mu[k];
      REQUIRE(-g[k] == Approx(rhs).margin(1e-10 * std::max(1.0, std::abs(rhs))));
    }
    // face_velocity on the empty face is that same gradient
    FaceVelocity fv = face_velocity(FaceLabel::empty_face(), b.table, b.dual);
    REQUIRE(dist_inf(fv.v, g) <= 1e-10 * std::max(1.0, norm_inf(g)));
  }
}

TEST_CASE("tandem face velocity on the x1 axis") {
  Built b = build(tandem());
  FaceVelocity fv = face_velocity(FaceLabel{0b10}, b.table, b.dual);
  REQUIRE(fv.v[0] == Approx(2.0).epsilon(1e-12));
  REQUIRE(fv.v[1] == 0.0);
}

TEST_CASE("face resolution") {
  Built b = build(tandem());
  const double snap = 1e-12;
  REQUIRE(resolve_face({0.5, 0.7}, b.table, b.dual, snap) ==
          FaceLabel::empty_face());
  REQUIRE(resolve_face({0.0, 0.0}, b.table, b.dual, snap) ==
          FaceLabel::full_face(2));
  REQUIRE(resolve_face({0.0, 1.0}, b.table, b.dual, snap) == FaceLabel{0b01});
  REQUIRE(resolve_face({1.0, 0.0}, b.table, b.dual, snap) == FaceLabel{0b10});

  // on an inessential face the resolved label is a strict subset of the
  // zero set: the trajectory leaves immediately
  Built f = build(feedback());
  REQUIRE_FALSE(f.table.face(FaceLabel{0b10}).essential);
  FaceLabel resolved = resolve_face({1.0, 0.0}, f.table, f.dual, snap);
  REQUIRE(resolved == FaceLabel::empty_face());
}

TEST_CASE("dual fluid of the single queue drains at unit rate") {
  Built b = build(mm1());
  FluidTrajectory traj = solve_dual_fluid({1.0}, b.table, b.dual);
  REQUIRE(traj.segments.size() == 1);
  REQUIRE(traj.T_star == Approx(1.0));
  REQUIRE(traj.segments[0].velocity[0] == Approx(-1.0));
  REQUIRE(traj.segments[0].face.empty());
}

TEST_CASE("dual fluid of the tandem") {
  Built b = build(tandem());

  FluidTrajectory axis = solve_dual_fluid({1.0, 0.0}, b.table, b.dual);
  REQUIRE(axis.segments.size() == 1);
  REQUIRE(axis.segments[0].face == FaceLabel{0b10});
  REQUIRE(axis.T_star == Approx(0.5));

  FluidTrajectory inner = solve_dual_fluid({1.0, 0.5}, b.table, b.dual);
  REQUIRE(inner.segments.size() == 2);
  REQUIRE(inner.segments[0].face.empty());
  REQUIRE(inner.segments[1].face == FaceLabel{0b10});
  REQUIRE(inner.T_star == Approx(1.0 / 6.0 + (1.0 - 0.5 / 6.0) / 2.0));

  FluidTrajectory zero = solve_dual_fluid({0.0, 0.0}, b.table, b.dual);
  REQUIRE(zero.segments.empty());
  REQUIRE(zero.T_star == 0.0);
}

TEST_CASE("dual fluid faces grow by inclusion on random networks") {
  std::mt19937_64 eng(103);
  for (int rep = 0; rep < 40; ++rep) {
    int K = 1 + static_cast<int>(eng() % 4);
    Built b = build(random_ergodic_spec(eng, K));
    Vec r = random_target(eng, K);
    FluidTrajectory traj = solve_dual_fluid(r, b.table, b.dual);
    REQUIRE(traj.segments.size() <= (1u << K));
    for (std::size_t i = 0; i + 1 < traj.segments.size(); ++i)
      REQUIRE(traj.segments[i].face.subset_of(traj.segments[i + 1].face));
    // endpoint reaches the origin
    const FluidSegment& last = traj.segments.back();
    Vec end(K);
    for (int k = 0; k < K; ++k)
      end[k] = last.start_point[k] +
               last.velocity[k] * (last.t_end - last.t_start);
    REQUIRE(norm_inf(end) <= 1e-9 * norm_inf(r));
  }
}

TEST_CASE("reversal attaches momenta and reproduces the cost") {
  Built b = build(mm1());
  FluidTrajectory traj = solve_dual_fluid({1.0}, b.table, b.dual);
  OptimalPath path = reverse_to_optimal(traj, b.table);
  REQUIRE(path.segments.size() == 1);
  REQUIRE(path.segments[0].velocity[0] == Approx(1.0));
  REQUIRE(path.segments[0].duration == Approx(1.0));
  REQUIRE(path.segments[0].momentum[0] == Approx(std::log(2.0)));
  REQUIRE(path.cost == Approx(std::log(2.0)));
  REQUIRE(path_cost(path, b.table) == Approx(std::log(2.0)).margin(1e-9));
}

TEST_CASE("tandem path to the x1 axis") {
  Built b = build(tandem());
  FluidTrajectory traj = solve_dual_fluid({1.0, 0.0}, b.table, b.dual);
  OptimalPath path = reverse_to_optimal(traj, b.table);
  REQUIRE(path.cost == Approx(std::log(3.0)));
  REQUIRE(path.segments[0].momentum[0] == Approx(std::log(3.0)));
  REQUIRE(path.segments[0].momentum[1] == Approx(0.0).margin(1e-14));
  REQUIRE(path_cost(path, b.table) == Approx(std::log(3.0)).margin(1e-6));
}

TEST_CASE("cost identity holds on random networks and targets") {
  std::mt19937_64 eng(107);
  for (int rep = 0; rep < 20; ++rep) {
    int K = 1 + static_cast<int>(eng() % 4);
    Built b = build(random_ergodic_spec(eng, K));
    Vec r = random_target(eng, K);
    FluidTrajectory traj = solve_dual_fluid(r, b.table, b.dual);
    OptimalPath path = reverse_to_optimal(traj, b.table);
    double expect = dot(b.table.theta, r);
    REQUIRE(path.cost == Approx(expect).margin(1e-12 * (1 + std::abs(expect))));
    double recomputed = path_cost(path, b.table);
    REQUIRE(std::abs(recomputed - expect) <= 1e-6 * (1.0 + std::abs(expect)));
    // scaling: T* and the path scale linearly in r, the cost with it
    Vec r2(K);
    for (int k = 0; k < K; ++k) r2[k] = 2.0 * r[k];
    OptimalPath path2 =
        reverse_to_optimal(solve_dual_fluid(r2, b.table, b.dual), b.table);
    REQUIRE(path2.cost == Approx(2.0 * expect).epsilon(1e-10));
  }
}

TEST_CASE("the zero target yields the empty path at zero cost") {
  Built b = build(tandem());
  OptimalPath path =
      reverse_to_optimal(solve_dual_fluid({0.0, 0.0}, b.table, b.dual), b.table);
  REQUIRE(path.segments.empty());
  REQUIRE(path.cost == 0.0);
  REQUIRE(path_cost(path, b.table) == 0.0);
}

TEST_CASE("dual rate vanishes along relaxing trajectories") {
  Built one = build(mm1());
  FluidTrajectory t1 = solve_dual_fluid({1.0}, one.table, one.dual);
  REQUIRE(dual_rate_vanishes(t1, one.dual) <= 1e-8);

  Built b = build(tandem());
  FluidTrajectory t2 = solve_dual_fluid({1.0, 0.5}, b.table, b.dual);
  REQUIRE(dual_rate_vanishes(t2, b.dual) <= 1e-6);

  std::mt19937_64 eng(109);
  for (int rep = 0; rep < 10; ++rep) {
    int K = 1 + static_cast<int>(eng() % 4);
    Built rb = build(random_ergodic_spec(eng, K));
    FluidTrajectory traj =
        solve_dual_fluid(random_target(eng, K), rb.table, rb.dual);
    REQUIRE(dual_rate_vanishes(traj, rb.dual) <= 1e-5);
  }
}

TEST_CASE("comparison paths never beat the optimal cost") {
  std::mt19937_64 eng(113);
  for (int spec_rep = 0; spec_rep < 5; ++spec_rep) {
    int K = 1 + static_cast<int>(eng() % 3);
    Built b = build(random_ergodic_spec(eng, K));
    Vec r = random_target(eng, K);
    double optimal = dot(b.table.theta, r);
    for (int path_rep = 0; path_rep < 10; ++path_rep) {
      int waypoint_count = 2 + static_cast<int>(eng() % 3);
      std::vector<Vec> pts;
      pts.push_back(Vec(K, 0.0));
      for (int i = 0; i < waypoint_count - 2; ++i) {
        Vec w(K, 0.0);
        for (int k = 0; k < K; ++k)
          if (runif(eng) >= 0.4) w[k] = runif(eng, 0.05, 2.5);
        pts.push_back(w);
      }
      pts.push_back(r);
      std::vector<double> durations(pts.size() - 1);
      for (double& d : durations) d = runif(eng, 0.2, 2.0);
      double cost = comparison_path_cost(pts, durations, b);
      REQUIRE(cost >= optimal - 1e-6 * (1.0 + std::abs(optimal)));
    }
  }
}

TEST_CASE("two-node classification") {
  SECTION("tandem: both axes essential, signs nonpositive") {
    Built b = build(tandem());
    TwoNodeClassification c = classify_two_node(b.table);
    REQUIRE(c.consistent);
    REQUIRE(c.x_axis_essential_face);
    REQUIRE(c.y_axis_essential_face);
    REQUIRE(c.d2_H0_at_theta1 <= 1e-12);
    REQUIRE(c.d1_H0_at_theta2 <= 1e-12);
  }
  SECTION("feedback witness: the x1 axis is inessential") {
    Built b = build(feedback());
    TwoNodeClassification c = classify_two_node(b.table);
    REQUIRE(c.consistent);
    REQUIRE_FALSE(c.x_axis_essential_face);
    REQUIRE(c.d2_H0_at_theta1 > 0.0);
    REQUIRE(c.y_axis_essential_face);

    // the optimal path to a point on the inessential axis runs up the other
    // axis first and then crosses the interior
    FluidTrajectory traj = solve_dual_fluid({1.0, 0.0}, b.table, b.dual);
    OptimalPath path = reverse_to_optimal(traj, b.table);
    REQUIRE(path.segments.size() == 2);
    REQUIRE(path.segments[0].face == FaceLabel{0b01});
    REQUIRE(path.segments[1].face.empty());
  }
  SECTION("a symmetric network classifies symmetrically") {
    NetworkSpec s;
    s.K = 2;
    s.lambda = {0.8, 0.8};
    s.mu = {3.0, 3.0};
    s.P = Matrix{{0.0, 0.3}, {0.3, 0.0}};
    Built b = build(s);
    TwoNodeClassification c = classify_two_node(b.table);
    REQUIRE(c.consistent);
    REQUIRE(c.d2_H0_at_theta1 == Approx(c.d1_H0_at_theta2).margin(1e-10));
    REQUIRE(c.x_axis_essential_face == c.y_axis_essential_face);
  }
  SECTION("wrong dimension is rejected") {
    Built b = build(mm1());
    REQUIRE_THROWS_AS(classify_two_node(b.table), WrongDimension);
  }
  SECTION("sign test agrees with the face test over a random family") {
    std::mt19937_64 eng(127);
    int inessential_seen = 0;
    for (int rep = 0; rep < 60; ++rep) {
      NetworkSpec s;
      if (rep % 2 == 0) {
        s = random_ergodic_spec(eng, 2);
      } else {
        // biased family with heavy feedback and skewed loads, which
        // produces inessential axes regularly
        s.K = 2;
        s.P = Matrix{{0.0, runif(eng, 0.0, 0.15)},
                     {runif(eng, 0.5, 0.95), 0.0}};
        s.lambda = {runif(eng, 0.05, 0.3), runif(eng, 0.8, 1.5)};
        Vec nu = solve(Matrix::identity(2) - s.P.transpose(), s.lambda);
        s.mu = {nu[0] / runif(eng, 0.05, 0.3), nu[1] / runif(eng, 0.7, 0.95)};
      }
      Built b = build(s);
      TwoNodeClassification c = classify_two_node(b.table);
      REQUIRE(c.consistent);
      if (!c.x_axis_essential_face || !c.y_axis_essential_face)
        ++inessential_seen;
    }
    REQUIRE(inessential_seen >= 5);  // the family genuinely exercises both
  }
}
