#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <armadillo>

#include <vector>

using namespace msprr;

namespace {

// vec(V1' A) assembled entry by entry for A = [I_r; A0].
arma::vec embedded_vec(arma::uword q, const arma::mat& a0) {
  const arma::uword r = a0.n_cols;
  arma::mat full(q, r, arma::fill::zeros);
  for (arma::uword l = 0; l < r; ++l) full(l, l) = 1.0;
  for (arma::uword i = 0; i < a0.n_rows; ++i)
    for (arma::uword l = 0; l < r; ++l) full(r + i, l) = a0(i, l);
  return arma::vectorise(full);
}

}  // namespace

TEST_CASE("commutation matrix: trivial and 2x2 cases") {
  CHECK(arma::approx_equal(linalg::commutation_matrix(1, 1), arma::mat(1, 1, arma::fill::ones), "absdiff", 0.0));
  const arma::mat m{{1, 2}, {3, 4}};
  const arma::vec got = linalg::commutation_matrix(2, 2) * arma::vectorise(m);
  CHECK(arma::approx_equal(got, arma::vectorise(m.t()), "absdiff", 0.0));
  CHECK(arma::approx_equal(got, arma::vec{1, 2, 3, 4}, "absdiff", 0.0));
}

TEST_CASE("commutation matrix transposes random 3x2 matrices") {
  arma::arma_rng::set_seed(3);
  const arma::mat k = linalg::commutation_matrix(3, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const arma::mat m(3, 2, arma::fill::randn);
    CHECK(arma::approx_equal(k * arma::vectorise(m), arma::vectorise(m.t()), "absdiff", 0.0));
  }
}

TEST_CASE("commutation matrices are permutations and K_mn K_nm = I") {
  for (arma::uword m = 1; m <= 6; ++m) {
    for (arma::uword n = 1; n <= 6; ++n) {
      const arma::mat k = linalg::commutation_matrix(m, n);
      CHECK(arma::all(arma::sum(k, 0) == 1.0));
      CHECK(arma::all(arma::sum(k, 1) == 1.0));
      CHECK(arma::approx_equal(k * linalg::commutation_matrix(n, m), arma::eye(m * n, m * n), "absdiff", 0.0));
    }
  }
}

TEST_CASE("selection pair stacks to the identity") {
  const auto sel = linalg::selection_pair(5, 3);
  CHECK(sel.v1.n_rows == 3);
  CHECK(sel.v2.n_rows == 2);
  CHECK(arma::approx_equal(arma::join_cols(sel.v1, sel.v2), arma::eye(5, 5), "absdiff", 0.0));
  CHECK(arma::approx_equal(sel.v1.cols(0, 2), arma::eye(3, 3), "absdiff", 0.0));
}

TEST_CASE("restrictions for q=3, q_gamma=2, r=1") {
  const auto rp = linalg::build_restrictions(3, 2, 1);
  CHECK(arma::approx_equal(rp.g_vec, arma::vec{1, 0, 0}, "absdiff", 0.0));
  REQUIRE(rp.g_mat.n_rows == 3);
  REQUIRE(rp.g_mat.n_cols == 1);
  CHECK(arma::approx_equal(rp.g_mat, arma::mat(arma::vec{0.0, 1.0, 0.0}), "absdiff", 0.0));
}

TEST_CASE("restrictions for q=5, q_gamma=4, r=2 place ones at 1-based 1 and 7") {
  const auto rp = linalg::build_restrictions(5, 4, 2);
  const arma::uvec ones = arma::find(rp.g_vec == 1.0);
  REQUIRE(ones.n_elem == 2);
  CHECK(ones[0] + 1 == 1);
  CHECK(ones[1] + 1 == 7);
  CHECK(arma::accu(rp.g_vec) == 2.0);
}

TEST_CASE("restriction identity and orthonormal columns for all small shapes") {
  arma::arma_rng::set_seed(11);
  for (arma::uword q = 3; q <= 6; ++q) {
    for (arma::uword qg = 2; qg < q; ++qg) {
      for (arma::uword r = 1; r < qg; ++r) {
        const auto rp = linalg::build_restrictions(q, qg, r);
        CHECK(rp.g_mat.n_rows == q * r);
        CHECK(rp.g_mat.n_cols == r * (qg - r));
        CHECK(arma::approx_equal(rp.g_mat.t() * rp.g_mat, arma::eye(rp.g_mat.n_cols, rp.g_mat.n_cols), "absdiff", 0.0));
        for (arma::uword l = 0; l < r; ++l) CHECK(rp.g_vec[l * (q + 1)] == 1.0);
        for (int rep = 0; rep < 100; ++rep) {
          const arma::mat a0(qg - r, r, arma::fill::randn);
          const arma::vec lhs = rp.g_mat * arma::vectorise(a0) + rp.g_vec;
          CHECK(arma::approx_equal(lhs, embedded_vec(q, a0), "absdiff", 0.0));
        }
      }
    }
  }
}

TEST_CASE("restrictions reject r >= q_gamma") {
  CHECK_THROWS_AS(linalg::build_restrictions(4, 2, 2), DimensionError);
  CHECK_THROWS_AS(linalg::build_restrictions(4, 3, 0), DimensionError);
}

TEST_CASE("scatter_sigma: single period and identity blocks") {
  const arma::mat s{{2.0, 0.5, 0.1}, {0.5, 1.0, 0.2}, {0.1, 0.2, 3.0}};
  const auto one = linalg::scatter_sigma({s}, 1);
  CHECK(arma::approx_equal(one.dense(), s, "absdiff", 0.0));
  const std::vector<arma::mat> eyes(4, arma::eye(3, 3));
  CHECK(arma::approx_equal(linalg::scatter_sigma(eyes, 4).dense(), arma::eye(12, 12), "absdiff", 0.0));
}

TEST_CASE("scatter_sigma: q=2, T=2 index pattern by enumeration") {
  const arma::mat s1{{2.0, 0.3}, {0.3, 1.0}};
  const arma::mat s2{{1.5, -0.4}, {-0.4, 0.8}};
  const arma::mat d = linalg::scatter_sigma({s1, s2}, 2).dense();
  // Response-major layout: row t + i T.
  arma::mat expect(4, 4, arma::fill::zeros);
  const std::vector<arma::mat> blocks{s1, s2};
  for (arma::uword t = 0; t < 2; ++t)
    for (arma::uword i = 0; i < 2; ++i)
      for (arma::uword j = 0; j < 2; ++j) expect(t + i * 2, t + j * 2) = blocks[t](i, j);
  CHECK(arma::approx_equal(d, expect, "absdiff", 0.0));
  CHECK(arma::accu(d != 0.0) == 8);
  CHECK(d.is_symmetric());
}

TEST_CASE("scatter_sigma: inverse, determinant and product agree with dense algebra") {
  arma::arma_rng::set_seed(5);
  std::vector<arma::mat> blocks;
  for (int t = 0; t < 6; ++t) {
    const arma::mat a(3, 3, arma::fill::randn);
    blocks.push_back(a * a.t() + arma::eye(3, 3));
  }
  const auto sc = linalg::scatter_sigma(blocks, 6);
  const arma::mat d = sc.dense();
  CHECK(arma::approx_equal(sc.inverse().dense(), arma::inv_sympd(d), "absdiff", 1e-10));
  CHECK(sc.log_det() == doctest::Approx(arma::log_det_sympd(d)).epsilon(1e-12));
  const arma::vec v(18, arma::fill::randn);
  CHECK(arma::approx_equal(sc.multiply(v), d * v, "absdiff", 1e-12));
}

TEST_CASE("scatter_sigma of identical diagonal blocks commutes with inversion") {
  const arma::mat s = arma::diagmat(arma::vec{0.5, 2.0, 4.0});
  const std::vector<arma::mat> same(5, s);
  const std::vector<arma::mat> inv(5, arma::inv(s));
  const arma::mat lhs = arma::inv(linalg::scatter_sigma(same, 5).dense());
  const arma::mat rhs = linalg::scatter_sigma(inv, 5).dense();
  CHECK(arma::approx_equal(lhs, rhs, "absdiff", 1e-14));
}

TEST_CASE("scatter_sigma rejects indefinite or misshapen blocks") {
  const arma::mat bad{{1.0, 2.0}, {2.0, 1.0}};
  CHECK_THROWS_AS(linalg::scatter_sigma({bad}, 1), NumericalError);
  CHECK_THROWS_AS(linalg::scatter_sigma({arma::eye(2, 2)}, 2), DimensionError);
}

TEST_CASE("log-sum-exp and normalization are shift invariant") {
  const arma::vec x{-1000.0, -1001.0, -1003.5};
  const double lse = linalg::log_sum_exp(x);
  CHECK(lse == doctest::Approx(-1000.0 + std::log(1.0 + std::exp(-1.0) + std::exp(-3.5))).epsilon(1e-14));
  // |x| ~ 1e3 carries ~1e-13 absolute rounding into the shift.
  const arma::vec w = linalg::normalize_log_weights(x);
  CHECK(arma::accu(w) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(arma::approx_equal(w, linalg::normalize_log_weights(x + 1234.5), "absdiff", 1e-12));
  CHECK(std::isinf(linalg::log_sum_exp(arma::vec{-arma::datum::inf, -arma::datum::inf})));
}

TEST_CASE("jittered Cholesky escalates on singular input") {
  const arma::mat ones(3, 3, arma::fill::ones);
  double used = 0.0;
  const arma::mat l = linalg::chol_lower_jittered(ones, 1.0, 1e-8, 1e-4, &used);
  CHECK(used >= 1e-8);
  CHECK(used <= 1e-4);
  CHECK(arma::approx_equal(l * l.t(), ones + used * arma::eye(3, 3), "absdiff", 1e-12));
  const arma::mat neg = -arma::eye(2, 2);
  CHECK_THROWS_AS(linalg::chol_lower_jittered(neg, 1.0, 1e-8, 1e-4), NumericalError);
}

TEST_CASE("spd_solve: exact on well-conditioned systems, ridge on singular ones") {
  arma::arma_rng::set_seed(9);
  for (arma::uword n : {3u, 12u, 40u}) {
    const arma::mat a0(n, n, arma::fill::randn);
    const arma::mat a = a0 * a0.t() + arma::eye(n, n);
    const arma::vec b(n, arma::fill::randn);
    bool ridged = true;
    const arma::vec x = linalg::spd_solve(a, b, &ridged);
    CHECK_FALSE(ridged);
    CHECK(arma::norm(a * x - b) <= 1e-10 * arma::norm(b));
  }
  const arma::mat sing{{1.0, 1.0}, {1.0, 1.0}};
  bool ridged = false;
  const arma::vec x = linalg::spd_solve(sing, arma::vec{1.0, 1.0}, &ridged);
  CHECK(ridged);
  CHECK(x.is_finite());
}
