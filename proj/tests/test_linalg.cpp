#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "jpath/linalg.hpp"
#include "jpath/matrix_identities.hpp"
#include "jpath/network.hpp"
#include "jpath/sampling.hpp"

using namespace jpath;
using Catch::Approx;

namespace {

Matrix tandem_i_minus_p() {
  // I - P for the two-node tandem with p_12 = 0.5
  return Matrix{{1.0, -0.5}, {0.0, 1.0}};
}

}  // namespace

TEST_CASE("delete_rc removes the listed rows and columns") {
  Matrix id3 = Matrix::identity(3);
  Matrix sub = delete_rc(id3, {1}, {1});
  REQUIRE(sub.rows() == 2);
  REQUIRE(sub(0, 0) == 1.0);
  REQUIRE(sub(0, 1) == 0.0);
  REQUIRE(sub(1, 1) == 1.0);

  Matrix b{{1, 2}, {3, 4}};
  Matrix s2 = delete_rc(b, {0}, {1});
  REQUIRE(s2.rows() == 1);
  REQUIRE(s2.cols() == 1);
  REQUIRE(s2(0, 0) == 3.0);

  Matrix t = delete_rc(tandem_i_minus_p(), {1}, {1});
  REQUIRE(t(0, 0) == 1.0);

  // rectangular deletions are allowed
  Matrix rect = delete_rc(b, {}, {0});
  REQUIRE(rect.rows() == 2);
  REQUIRE(rect.cols() == 1);
  REQUIRE(rect(1, 0) == 4.0);

  REQUIRE_THROWS_AS(delete_rc(b, {2}, {}), IndexOutOfRange);
}

TEST_CASE("adjugate matches the closed forms") {
  Matrix b{{2.0, 3.0}, {-1.0, 5.0}};
  Matrix adj = adjugate(b);
  REQUIRE(adj(0, 0) == Approx(5.0));
  REQUIRE(adj(0, 1) == Approx(-3.0));
  REQUIRE(adj(1, 0) == Approx(1.0));
  REQUIRE(adj(1, 1) == Approx(2.0));

  for (int n : {1, 3, 5}) {
    Matrix id = Matrix::identity(n);
    Matrix a = adjugate(id);
    REQUIRE((a - id).max_abs() == 0.0);
  }
}

TEST_CASE("adjugate equals det times the independent inverse") {
  std::mt19937_64 eng(7);
  Matrix b = random_matrix_nonzero_minors(eng, 4);
  double det = determinant(b);
  Matrix inv = inverse(b);
  Matrix adj = adjugate(b);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      REQUIRE(adj(i, j) == Approx(det * inv(i, j)).margin(1e-9));
}

TEST_CASE("adjugate consistency over random matrices") {
  std::mt19937_64 eng(11);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(eng() % 5);
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = runif(eng, -2.0, 2.0);
    Matrix lhs = b * adjugate(b);
    double det = determinant(b);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        lhs(i, j) -= (i == j) ? det : 0.0;
    REQUIRE(lhs.max_abs() <=
            1e-9 * std::max(1.0, std::pow(b.norm_inf(), n)));
  }
}

TEST_CASE("determinant by LU agrees with cofactor expansion") {
  std::mt19937_64 eng(3);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 2 + static_cast<int>(eng() % 3);
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = runif(eng, -1.0, 1.0);
    // cofactor expansion along the first row as an independent oracle
    std::function<double(const Matrix&)> cof = [&](const Matrix& m) -> double {
      if (m.rows() == 1) return m(0, 0);
      double acc = 0;
      for (int j = 0; j < m.cols(); ++j) {
        double term = m(0, j) * cof(delete_rc(m, {0}, {j}));
        acc += (j % 2 == 0) ? term : -term;
      }
      return acc;
    };
    REQUIRE(determinant(b) == Approx(cof(b)).margin(1e-10));
  }
}

TEST_CASE("adjugate column identity") {
  SECTION("identity matrix has zero on both sides") {
    Matrix id = Matrix::identity(4);
    for (int l = 0; l < 4; ++l)
      for (int m = 0; m < 4; ++m)
        if (m != l) REQUIRE(check_adj_identity(id, m, l) == 0.0);
  }
  SECTION("random 3x3, all index pairs") {
    std::mt19937_64 eng(5);
    for (int rep = 0; rep < 30; ++rep) {
      Matrix b(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b(i, j) = runif(eng, -1.0, 1.0);
      for (int m = 0; m < 3; ++m)
        for (int l = 0; l < 3; ++l)
          if (m != l)
            REQUIRE(check_adj_identity(b, m, l) <=
                    1e-9 * std::max(1.0, std::pow(b.norm_inf(), 3)));
    }
  }
  SECTION("tandem block") {
    REQUIRE(check_adj_identity(tandem_i_minus_p(), 0, 1) <= 1e-12);
  }
}

TEST_CASE("bordered determinant identity") {
  Matrix id = Matrix::identity(3);
  for (int l = 0; l < 3; ++l) REQUIRE(check_det_identity(id, l) == 0.0);

  std::mt19937_64 eng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix b(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) b(i, j) = runif(eng, -1.0, 1.0);
    for (int l = 0; l < 5; ++l)
      REQUIRE(check_det_identity(b, l) <=
              1e-8 * std::abs(determinant(b)) +
                  1e-9 * std::max(1.0, std::pow(b.norm_inf(), 5)));
  }
  REQUIRE(check_det_identity(tandem_i_minus_p(), 0) <= 1e-12);
}

TEST_CASE("rational quotient identities") {
  SECTION("I - P for random substochastic P") {
    std::mt19937_64 eng(13);
    for (int rep = 0; rep < 25; ++rep) {
      int n = 2 + static_cast<int>(eng() % 5);
      Matrix b = Matrix::identity(n) - random_substochastic(eng, n);
      for (int m = 0; m < n; ++m) {
        REQUIRE(check_tozd(b, m) <= 1e-8);
        for (int l = 0; l < n; ++l)
          if (l != m) REQUIRE(check_tozd(b, m, l) <= 1e-8);
      }
    }
  }
  SECTION("diagonal matrices sit at zero on both sides") {
    Matrix d{{2.0, 0.0, 0.0}, {0.0, -3.0, 0.0}, {0.0, 0.0, 0.5}};
    for (int m = 0; m < 3; ++m) REQUIRE(check_tozd(d, m) == 0.0);
  }
  SECTION("tandem block") {
    REQUIRE(check_tozd(tandem_i_minus_p(), 1, std::optional<int>(0)) <= 1e-12);
  }
  SECTION("degenerate principal minor is rejected") {
    Matrix bad{{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    REQUIRE_THROWS_AS(check_tozd(bad, 0), DegenerateMinor);
  }
}

TEST_CASE("row dominance of the resolvent") {
  Matrix tandem_c{{1.0, 0.0}, {0.5, 1.0}};
  REQUIRE(check_c_dominance(tandem_c) == Approx(-0.5));
  REQUIRE(check_c_dominance(Matrix::identity(3)) == Approx(-1.0));

  std::mt19937_64 eng(17);
  for (int rep = 0; rep < 100; ++rep) {
    int K = 1 + static_cast<int>(eng() % 8);
    NetworkSpec s = random_ergodic_spec(eng, K);
    TrafficSolution t = solve_traffic(validate(s));
    if (K >= 2) REQUIRE(check_c_dominance(t.C) <= 1e-12);
  }
}

TEST_CASE("all three identities on matrices with nonzero minors") {
  std::mt19937_64 eng(23);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(eng() % 5);
    Matrix b = random_matrix_nonzero_minors(eng, n);
    double scale = std::max(1.0, std::pow(b.norm_inf(), n));
    for (int l = 0; l < n; ++l) {
      REQUIRE(check_det_identity(b, l) <= 1e-8 * scale);
      for (int m = 0; m < n; ++m)
        if (m != l) REQUIRE(check_adj_identity(b, m, l) <= 1e-8 * scale);
    }
    for (int m = 0; m < n; ++m) {
      REQUIRE(check_tozd(b, m) <= 1e-8 * scale);
      for (int l = 0; l < n; ++l)
        if (l != m) REQUIRE(check_tozd(b, m, l) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("solve and inverse reject singular systems") {
  Matrix sing{{1.0, 2.0}, {2.0, 4.0}};
  REQUIRE_THROWS_AS(solve(sing, Vec{1.0, 1.0}), SingularSystem);
  REQUIRE(determinant(sing) == 0.0);
}
