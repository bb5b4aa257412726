#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msprr/errors.hpp"
#include "msprr/model.hpp"
#include "msprr/simulation.hpp"

#include <algorithm>
#include <filesystem>
#include <string>

using namespace msprr;

namespace {

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

Dataset scenario_one() { return sim::generate(sim::scenario(1), 17).first; }

// Fills every field of an initial state with arbitrary non-round values.
ChainState busy_state(const Dataset& data, std::uint64_t seed) {
  PriorConfig cfg;
  ChainState st = init_state(cfg, data, seed);
  arma::arma_rng::set_seed(seed);
  for (auto& reg : st.regimes) {
    reg.gamma = arma::uvec{1, 1, 1, 0, 1};
    reg.rank = 2;
    reg.a0.randn(2, 2);
    reg.b.randn(data.covariates(), 2);
    reg.c = reg.b * reg.a_full().t();
    reg.f.randn(reg.f_times.n_elem, 1);
    reg.rho = 0.1 + 0.8 * arma::randu();
    reg.sigma2_f = std::exp(arma::randn());
    reg.zeta = 1.0 / 3.0;
  }
  st.xi = arma::mat{{0.9, 0.1}, {1.0 / 7.0, 6.0 / 7.0}};
  st.w = arma::trimatl(arma::mat(5, 5, arma::fill::randn), -1);
  st.w.diag().ones();
  st.h.randn(data.periods(), data.responses());
  st.h0.randn(data.responses());
  st.sigma2_sv = arma::exp(arma::vec(data.responses(), arma::fill::randn));
  return st;
}

void check_same(const ChainState& a, const ChainState& b) {
  CHECK(arma::all(a.s == b.s));
  REQUIRE(a.regimes.size() == b.regimes.size());
  for (std::size_t k = 0; k < a.regimes.size(); ++k) {
    const auto& x = a.regimes[k];
    const auto& y = b.regimes[k];
    CHECK(arma::all(x.gamma == y.gamma));
    CHECK(x.rank == y.rank);
    CHECK(arma::approx_equal(x.a0, y.a0, "absdiff", 0.0));
    CHECK(arma::approx_equal(x.b, y.b, "absdiff", 0.0));
    CHECK(arma::approx_equal(x.c, y.c, "absdiff", 0.0));
    CHECK(arma::approx_equal(x.f, y.f, "absdiff", 0.0));
    CHECK(arma::all(x.f_times == y.f_times));
    CHECK(x.rho == y.rho);
    CHECK(x.sigma2_f == y.sigma2_f);
    CHECK(x.zeta == y.zeta);
  }
  CHECK(arma::approx_equal(a.xi, b.xi, "absdiff", 0.0));
  CHECK(arma::approx_equal(a.w, b.w, "absdiff", 0.0));
  CHECK(arma::approx_equal(a.h, b.h, "absdiff", 0.0));
  CHECK(arma::approx_equal(a.h0, b.h0, "absdiff", 0.0));
  CHECK(arma::approx_equal(a.sigma2_sv, b.sigma2_sv, "absdiff", 0.0));
}

}  // namespace

TEST_CASE("validate accepts the default config on scenario-1 data") {
  const Dataset data = scenario_one();
  CHECK(validation_problems(PriorConfig{}, data).empty());
  CHECK_NOTHROW(validate(PriorConfig{}, data));
}

TEST_CASE("validate reports a_rho = 0 by field name") {
  PriorConfig cfg;
  cfg.a_rho = 0.0;
  const auto problems = validation_problems(cfg, scenario_one());
  CHECK(mentions(problems, "a_rho must be positive"));
  CHECK_THROWS_AS(validate(cfg, scenario_one()), ValidationError);
}

TEST_CASE("validate rejects K = 0 and reports every violation at once") {
  PriorConfig cfg;
  cfg.K = 0;
  cfg.b_zeta = -1.0;
  cfg.zeta_max = cfg.zeta_min;
  const auto problems = validation_problems(cfg, scenario_one());
  CHECK(mentions(problems, "K must be at least 1"));
  CHECK(mentions(problems, "b_zeta"));
  CHECK(mentions(problems, "zeta grid range"));
  try {
    validate(cfg, scenario_one());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.problems().size() == problems.size());
  }
}

TEST_CASE("validate checks the data invariants") {
  Dataset d;
  d.y.randn(4, 5);
  d.x.randn(4, 2);
  CHECK(mentions(validation_problems(PriorConfig{}, d), "T must exceed q"));
  d.y.randn(10, 3);
  d.x.randn(10, 2);
  d.y(3, 1) = arma::datum::nan;
  CHECK(mentions(validation_problems(PriorConfig{}, d), "missing"));
  PriorConfig cfg;
  cfg.dirichlet_d = {1.0, 0.0};
  d.y(3, 1) = 0.0;
  CHECK(mentions(validation_problems(cfg, d), "dirichlet_d entries must be positive"));
}

TEST_CASE("init_state with K = 1 puts every period in the single state") {
  PriorConfig cfg;
  cfg.K = 1;
  const ChainState st = init_state(cfg, scenario_one(), 4);
  CHECK(st.s.n_elem == 100);
  CHECK(arma::all(st.s == 0));
}

TEST_CASE("init_state is deterministic and structurally valid") {
  const Dataset data = scenario_one();
  PriorConfig cfg;
  const ChainState a = init_state(cfg, data, 99);
  const ChainState b = init_state(cfg, data, 99);
  check_same(a, b);
  const arma::uword need = min_state_size(data);
  CHECK(need == 7);
  for (arma::uword k = 0; k < 2; ++k) {
    CHECK(a.state_times(k).n_elem >= need);
    const auto& reg = a.regimes[k];
    CHECK(reg.q_gamma() == 4);
    CHECK(reg.rank == 1);
    CHECK(arma::all(arma::vectorise(reg.a0) == 0.0));
    CHECK(arma::all(arma::vectorise(reg.b) == 0.0));
    CHECK(reg.f.n_rows == a.state_times(k).n_elem);
    CHECK(arma::all(arma::vectorise(reg.f) == 0.0));
  }
  CHECK(arma::approx_equal(a.w, arma::eye(5, 5), "absdiff", 0.0));
  CHECK(arma::all(arma::vectorise(a.h) == 0.0));
  CHECK(arma::approx_equal(arma::sum(a.xi, 1), arma::vec{1.0, 1.0}, "absdiff", 1e-15));
  CHECK(arma::approx_equal(a.xi, arma::mat(2, 2, arma::fill::value(0.5)), "absdiff", 0.0));
}

TEST_CASE("init_state reports infeasible sizes") {
  Dataset d;
  d.y.randn(10, 5);
  d.x.randn(10, 5);
  CHECK_THROWS_AS(init_state(PriorConfig{}, d, 1), ValidationError);
}

TEST_CASE("A = [I_r; A0]") {
  RegimeParams reg;
  reg.rank = 2;
  reg.a0 = arma::mat{{0.5, -1.0}};
  const arma::mat a = reg.a_full();
  CHECK(arma::approx_equal(a, arma::mat{{1, 0}, {0, 1}, {0.5, -1.0}}, "absdiff", 0.0));
}

TEST_CASE("ChainState JSON round trip is bit exact") {
  const Dataset data = scenario_one();
  const ChainState st = busy_state(data, 21);
  const std::string text = to_json(st).dump();
  check_same(st, state_from_json(nlohmann::json::parse(text)));
}

TEST_CASE("DrawStore NDJSON round trip is bit exact") {
  const Dataset data = scenario_one();
  StoreMeta meta;
  meta.variant = "ms-prr";
  meta.seed = 123456789012345ULL;
  meta.iterations = 30;
  meta.burn_in = 10;
  meta.thin = 2;
  meta.periods = 100;
  meta.responses = 5;
  meta.covariates = 5;
  DrawStore store(meta);
  store.append(11, busy_state(data, 1));
  store.append(13, busy_state(data, 2));
  const DrawStore back = DrawStore::from_ndjson(store.to_ndjson());
  CHECK(back.size() == 2);
  CHECK(back.meta().seed == meta.seed);
  CHECK(back.meta().thin == 2);
  CHECK(back.meta().variant == "ms-prr");
  CHECK(back.draws()[1].iteration == 13);
  for (std::size_t i = 0; i < 2; ++i) check_same(store.draws()[i].state, back.draws()[i].state);
  CHECK(back.to_ndjson() == store.to_ndjson());

  const auto path = std::filesystem::temp_directory_path() / "msprr_test_store.ndjson";
  store.save(path);
  CHECK(DrawStore::load(path).to_ndjson() == store.to_ndjson());
  std::filesystem::remove(path);
}

TEST_CASE("config text round trip and unknown keys") {
  PriorConfig cfg;
  cfg.K = 3;
  cfg.a_rho = 0.7;
  cfg.dirichlet_d = {1.0, 2.0, 3.5};
  cfg.d_val = -0.25;
  cfg.grid_size = 40;
  const PriorConfig back = parse_config(format_config(cfg));
  CHECK(back.K == 3);
  CHECK(back.a_rho == 0.7);
  CHECK(back.dirichlet_d == cfg.dirichlet_d);
  CHECK(back.d_val == -0.25);
  CHECK(back.grid_size == 40);
  const PriorConfig parsed = parse_config("# comment\nK = 1\n  b_rho=3 # trailing\n");
  CHECK(parsed.K == 1);
  CHECK(parsed.b_rho == 3.0);
  CHECK_THROWS(parse_config("not_a_key = 1\n"));
  CHECK_THROWS(parse_config("K = two\n"));
}

TEST_CASE("dataset CSV round trip is exact") {
  Dataset d = scenario_one();
  d.time_labels.clear();
  for (arma::uword t = 0; t < d.periods(); ++t) d.time_labels.push_back("t" + std::to_string(t));
  const Dataset back = parse_dataset_csv(format_dataset_csv(d));
  CHECK(arma::approx_equal(back.y, d.y, "absdiff", 0.0));
  CHECK(arma::approx_equal(back.x, d.x, "absdiff", 0.0));
  CHECK(back.time_labels == d.time_labels);
  const Dataset plain = parse_dataset_csv("y1,y2,y3,x1,x2\n1,2,3,4,5\n6,7,8,9,10\n");
  CHECK(plain.responses() == 3);
  CHECK(plain.covariates() == 2);
  CHECK(plain.x(1, 1) == 10.0);
  CHECK_THROWS(parse_dataset_csv("y1,y2,x1\n1,2\n"));
}
