#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msprr/errors.hpp"
#include "msprr/simulation.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace msprr;

TEST_CASE("scenario 1: one switch after period 60") {
  const auto [data, truth] = sim::generate(sim::scenario(1), 1);
  CHECK(data.periods() == 100);
  CHECK(data.responses() == 5);
  CHECK(data.covariates() == 5);
  CHECK(arma::all(truth.s.head(60) == 0));
  CHECK(arma::all(truth.s.tail(40) == 1));
  CHECK(arma::accu(truth.gamma[0]) == 4);
  CHECK(arma::accu(truth.gamma[1]) == 2);
  CHECK(truth.rank == std::vector<arma::uword>{2, 1});
}

TEST_CASE("scenario 2: random switching with enough periods per state, larger state first") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [data, truth] = sim::generate(sim::scenario(2), seed);
    const arma::uword n0 = arma::accu(truth.s == 0), n1 = arma::accu(truth.s == 1);
    CHECK(n0 + n1 == 100);
    CHECK(n1 >= 7);
    CHECK(n0 >= n1);
  }
}

TEST_CASE("scenario 3: a single state with q_gamma = 3 and rank 1") {
  const auto [data, truth] = sim::generate(sim::scenario(3), 2);
  CHECK(arma::all(truth.s == 0));
  REQUIRE(truth.gamma.size() == 1);
  CHECK(arma::accu(truth.gamma[0]) == 3);
  CHECK(truth.rank[0] == 1);
}

TEST_CASE("presets 4-6 repeat 1-3 with stochastic-volatility estimation") {
  for (int id = 1; id <= 3; ++id) {
    const auto a = sim::scenario(id), b = sim::scenario(id + 3);
    CHECK(a.k_true == b.k_true);
    CHECK(a.q_gamma == b.q_gamma);
    CHECK(a.rank == b.rank);
    CHECK(a.pattern == b.pattern);
    CHECK_FALSE(a.sv_in_estimation);
    CHECK(b.sv_in_estimation);
    CHECK(sim::estimation_variant(a) == "constant-volatility");
  }
  CHECK(sim::estimation_variant(sim::scenario(4)) == "ms-prr");
  CHECK(sim::estimation_variant(sim::scenario(5)) == "ms-prr");
  CHECK(sim::estimation_variant(sim::scenario(6)) == "prr-gp");
  CHECK_THROWS_AS(sim::scenario(0), ValidationError);
  CHECK_THROWS_AS(sim::scenario(7), ValidationError);
}

TEST_CASE("true coefficient matrices have exactly the stated rank") {
  for (int id = 1; id <= 3; ++id) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto truth = sim::generate(sim::scenario(id), seed).second;
      for (std::size_t k = 0; k < truth.c.size(); ++k) {
        CHECK(truth.c[k].n_cols == arma::accu(truth.gamma[k]));
        CHECK(arma::rank(truth.c[k]) == truth.rank[k]);
        const arma::vec sv = arma::svd(truth.c[k]);
        CHECK(sv[truth.rank[k] - 1] > 1e-3 * sv[0]);
      }
    }
  }
}

TEST_CASE("sine component values") {
  CHECK(sim::sine_term(0, 0, 100, 5, 2.0) == doctest::Approx(2.0 * std::sin(2.0 * std::numbers::pi / 100.0)).epsilon(1e-15));
  CHECK(sim::sine_term(24, 0, 100, 5, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sim::sine_term(9, 2, 20, 4, 2.0) == doctest::Approx(2.0 * std::sin(std::numbers::pi + std::numbers::pi)).epsilon(1e-12));
  CHECK(sim::covariate_sine(0.0, 0, 5, 2.0) == 0.0);
  CHECK(sim::covariate_sine(std::numbers::pi / 2.0, 0, 5, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  // phase pi/2 for j = 1 of q = 4: 2 cos(x)
  CHECK(sim::covariate_sine(0.3, 1, 4, 2.0) == doctest::Approx(2.0 * std::cos(0.3)).epsilon(1e-14));
}

TEST_CASE("noise-free mean: X C on low-rank responses, sines elsewhere") {
  const auto [data, truth] = sim::generate(sim::scenario(1), 3);
  for (arma::uword t = 0; t < 100; ++t) {
    const arma::uword k = truth.s[t];
    const arma::uvec low = arma::find(truth.gamma[k] == 1);
    const arma::rowvec xc = data.x.row(t) * truth.c[k];
    for (arma::uword l = 0; l < low.n_elem; ++l) CHECK(truth.m(t, low[l]) == doctest::Approx(xc[l]).epsilon(1e-12));
    const arma::uvec flex = arma::find(truth.gamma[k] == 0);
    for (arma::uword j : flex) CHECK(truth.m(t, j) == sim::covariate_sine(data.x(t, j % 5), j, 5, 2.0));
  }
}

TEST_CASE("the time reading of the sine ignores the covariates") {
  auto spec = sim::scenario(3);
  spec.sine_input = sim::SineInput::time;
  const auto [data, truth] = sim::generate(spec, 4);
  const arma::uvec flex = arma::find(truth.gamma[0] == 0);
  for (arma::uword t = 0; t < 100; ++t)
    for (arma::uword j : flex) CHECK(truth.m(t, j) == sim::sine_term(t, j, 100, 5, 2.0));
}

TEST_CASE("generation is reproducible from the seed") {
  const auto a = sim::generate(sim::scenario(2), 42);
  const auto b = sim::generate(sim::scenario(2), 42);
  const auto c = sim::generate(sim::scenario(2), 43);
  CHECK(arma::approx_equal(a.first.y, b.first.y, "absdiff", 0.0));
  CHECK(arma::approx_equal(a.first.x, b.first.x, "absdiff", 0.0));
  CHECK(arma::all(a.second.s == b.second.s));
  CHECK_FALSE(arma::approx_equal(a.first.y, c.first.y, "absdiff", 1e-6));
}

TEST_CASE("error variances lie in (0.1, 1) and match the residual spread") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto truth = sim::generate(sim::scenario(1), seed).second;
    CHECK(truth.error_var.min() > 0.1);
    CHECK(truth.error_var.max() < 1.0);
  }
  auto spec = sim::scenario(1);
  spec.periods = 20000;
  spec.switch_at = 12000;
  const auto [data, truth] = sim::generate(spec, 5);
  const arma::mat resid = data.y - truth.m;
  for (arma::uword j = 0; j < 5; ++j) {
    const double v = truth.error_var[j];
    CHECK(oracle::mean_within(resid.col(j), 0.0, std::sqrt(v)));
    CHECK(oracle::variance_within(resid.col(j), v, 3.0 * v * v));
  }
}

TEST_CASE("invalid state specifications are rejected") {
  auto spec = sim::scenario(1);
  spec.rank = {2, 2};  // rank must stay below q_gamma = 2
  CHECK_THROWS_AS(sim::generate(spec, 1), ValidationError);
  spec = sim::scenario(1);
  spec.q_gamma = {5, 2};
  CHECK_THROWS_AS(sim::generate(spec, 1), ValidationError);
  spec = sim::scenario(1);
  spec.rank = {2};
  CHECK_THROWS_AS(sim::generate(spec, 1), ValidationError);
}

TEST_CASE("ground truth JSON round trip") {
  const auto truth = sim::generate(sim::scenario(2), 7).second;
  const auto path = std::filesystem::temp_directory_path() / "msprr_truth_test.json";
  sim::save_truth(truth, path);
  const auto back = sim::load_truth(path);
  std::filesystem::remove(path);
  CHECK(arma::all(back.s == truth.s));
  CHECK(back.rank == truth.rank);
  for (std::size_t k = 0; k < truth.gamma.size(); ++k) {
    CHECK(arma::all(back.gamma[k] == truth.gamma[k]));
    CHECK(arma::approx_equal(back.c[k], truth.c[k], "absdiff", 0.0));
  }
  CHECK(arma::approx_equal(back.m, truth.m, "absdiff", 0.0));
  CHECK(arma::approx_equal(back.error_var, truth.error_var, "absdiff", 0.0));
  CHECK(sim::to_json(truth)["s"][0].get<arma::uword>() == truth.s[0] + 1);  // labels stored 1-based
}
