#include "msprr/simulation.hpp"

#include "msprr/errors.hpp"
#include "msprr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace msprr::sim {

ScenarioSpec scenario(int id) {
  if (id < 1 || id > 6) throw ValidationError({"scenario must be between 1 and 6"});
  ScenarioSpec s;
  s.id = id;
  const int base = id > 3 ? id - 3 : id;
  s.sv_in_estimation = id > 3;
  if (base == 2) s.pattern = SwitchPattern::random;
  if (base == 3) {
    s.k_true = 1;
    s.q_gamma = {3};
    s.rank = {1};
    s.pattern = SwitchPattern::none;
  }
  return s;
}

std::string estimation_variant(const ScenarioSpec& spec) {
  if (!spec.sv_in_estimation) return "constant-volatility";
  return spec.k_true == 1 ? "prr-gp" : "ms-prr";
}

double sine_term(arma::uword t, arma::uword j, arma::uword periods, arma::uword q, double amplitude) {
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(q);
  const double arg = 2.0 * std::numbers::pi * static_cast<double>(t + 1) / static_cast<double>(periods);
  return amplitude * std::sin(arg + phase);
}

double covariate_sine(double x, arma::uword j, arma::uword q, double amplitude) {
  return amplitude * std::sin(x + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(q));
}

namespace {

arma::uvec draw_states(const ScenarioSpec& spec, Rng& rng) {
  arma::uvec s(spec.periods, arma::fill::zeros);
  if (spec.k_true == 1 || spec.pattern == SwitchPattern::none) return s;
  if (spec.pattern == SwitchPattern::single_switch) {
    s.tail(spec.periods - spec.switch_at).fill(1);
    return s;
  }
  const arma::uword need = std::max(spec.p, spec.q) + 2;
  for (;;) {
    s[0] = 0;
    for (arma::uword t = 1; t < spec.periods; ++t) {
      if (rng.uniform() < spec.persistence) {
        s[t] = s[t - 1];
      } else {
        arma::uword next = rng.uniform_index(spec.k_true - 1);
        s[t] = next >= s[t - 1] ? next + 1 : next;
      }
    }
    arma::uvec counts(spec.k_true, arma::fill::zeros);
    for (auto v : s) ++counts[v];
    if (counts.min() >= need) break;
  }
  // Label regimes by decreasing size, matching the estimator's convention.
  arma::uvec counts(spec.k_true, arma::fill::zeros);
  for (auto v : s) ++counts[v];
  const arma::uvec order = arma::stable_sort_index(counts, "descend");
  arma::uvec inv(spec.k_true);
  for (arma::uword a = 0; a < spec.k_true; ++a) inv[order[a]] = a;
  for (auto& v : s) v = inv[v];
  return s;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.q_gamma.size() != spec.k_true || spec.rank.size() != spec.k_true) {
    throw ValidationError({"scenario: q_gamma and rank need one entry per state"});
  }
  Rng rng(seed);
  const arma::uword n = spec.periods, p = spec.p, q = spec.q;
  Dataset data;
  data.x.set_size(n, p);
  for (auto& v : data.x) v = rng.normal();
  GroundTruth truth;
  truth.error_var.set_size(q);
  for (auto& v : truth.error_var) v = 0.1 + 0.9 * rng.uniform();
  truth.s = draw_states(spec, rng);
  truth.f.set_size(n, q);
  for (arma::uword t = 0; t < n; ++t) {
    for (arma::uword j = 0; j < q; ++j) {
      truth.f(t, j) = spec.sine_input == SineInput::covariate
                          ? covariate_sine(data.x(t, j % p), j, q, spec.amplitude)
                          : sine_term(t, j, n, q, spec.amplitude);
    }
  }
  std::vector<arma::mat> means;
  for (arma::uword k = 0; k < spec.k_true; ++k) {
    const arma::uword qg = spec.q_gamma[k], r = spec.rank[k];
    if (qg <= 1 || qg >= q || r < 1 || r >= std::min(p, qg)) throw ValidationError({"scenario: invalid (q_gamma, rank)"});
    std::vector<arma::uword> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    for (arma::uword i = q - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    arma::uvec gamma(q, arma::fill::zeros);
    for (arma::uword i = 0; i < qg; ++i) gamma[perm[i]] = 1;
    arma::mat c(p, qg);
    for (auto& v : c) {
      const double mag = 1.5 + 1.5 * rng.uniform();
      v = rng.uniform() < 0.5 ? -mag : mag;
    }
    arma::mat u, v;
    arma::vec sv;
    arma::svd(u, sv, v, c);
    sv.tail(sv.n_elem - r).zeros();
    c = u.head_cols(sv.n_elem) * arma::diagmat(sv) * v.head_cols(sv.n_elem).t();
    arma::mat mean(n, q);
    const arma::uvec low = arma::find(gamma == 1);
    const arma::mat xc = data.x * c;
    for (arma::uword j = 0; j < q; ++j) mean.col(j) = truth.f.col(j);
    for (arma::uword l = 0; l < low.n_elem; ++l) mean.col(low[l]) = xc.col(l);
    truth.gamma.push_back(gamma);
    truth.rank.push_back(r);
    truth.c.push_back(c);
    means.push_back(mean);
  }
  truth.m.set_size(n, q);
  for (arma::uword t = 0; t < n; ++t) truth.m.row(t) = means[truth.s[t]].row(t);
  data.y = truth.m;
  const arma::vec sd = arma::sqrt(truth.error_var);
  for (arma::uword t = 0; t < n; ++t) {
    for (arma::uword j = 0; j < q; ++j) data.y(t, j) += sd[j] * rng.normal();
  }
  return {std::move(data), std::move(truth)};
}

nlohmann::json to_json(const GroundTruth& t) {
  nlohmann::json j;
  auto s = nlohmann::json::array();
  for (auto v : t.s) s.push_back(v + 1);
  j["s"] = s;
  auto g = nlohmann::json::array();
  for (const auto& gk : t.gamma) g.push_back(std::vector<arma::uword>(gk.begin(), gk.end()));
  j["gamma"] = g;
  j["rank"] = t.rank;
  auto c = nlohmann::json::array();
  for (const auto& ck : t.c) c.push_back(matrix_to_json(ck));
  j["c"] = c;
  j["m"] = matrix_to_json(t.m);
  j["f"] = matrix_to_json(t.f);
  j["error_var"] = std::vector<double>(t.error_var.begin(), t.error_var.end());
  return j;
}

GroundTruth truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  const auto s = j.at("s").get<std::vector<arma::uword>>();
  t.s.set_size(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t.s[i] = s[i] - 1;
  for (const auto& g : j.at("gamma")) t.gamma.push_back(arma::uvec(g.get<std::vector<arma::uword>>()));
  t.rank = j.at("rank").get<std::vector<arma::uword>>();
  for (const auto& c : j.at("c")) t.c.push_back(matrix_from_json(c));
  t.m = matrix_from_json(j.at("m"));
  if (j.contains("f")) t.f = matrix_from_json(j.at("f"));
  t.error_var = arma::vec(j.at("error_var").get<std::vector<double>>());
  return t;
}

void save_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError({"cannot write " + path.string()});
  out << to_json(truth).dump(1) << "\n";
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return truth_from_json(nlohmann::json::parse(ss.str()));
}

}  // namespace msprr::sim
