#include "msprr/metrics.hpp"

#include "msprr/errors.hpp"
#include "msprr/hmm.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace msprr::metrics {

namespace {

template <typename Key>
Key mode_of(const std::vector<Key>& values) {
  std::map<Key, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  Key best = counts.begin()->first;
  std::size_t best_n = 0;
  for (const auto& [k, n] : counts) {  // ascending keys, strict > keeps the smallest on ties
    if (n > best_n) {
      best = k;
      best_n = n;
    }
  }
  return best;
}

}  // namespace

MapEstimates map_estimates(const DrawStore& store) {
  if (store.empty()) throw ValidationError({"map_estimates: the draw store is empty"});
  const auto& draws = store.draws();
  const ChainState& first = draws.front().state;
  const arma::uword n = first.s.n_elem, kk = first.states();
  MapEstimates out;
  out.s.set_size(n);
  for (arma::uword t = 0; t < n; ++t) {
    std::vector<arma::uword> v;
    v.reserve(draws.size());
    for (const auto& d : draws) v.push_back(d.state.s[t]);
    out.s[t] = mode_of(v);
  }
  for (arma::uword k = 0; k < kk; ++k) {
    std::vector<std::vector<arma::uword>> gammas;
    std::vector<arma::uword> ranks, qg;
    for (const auto& d : draws) {
      const auto& g = d.state.regimes[k].gamma;
      gammas.emplace_back(g.begin(), g.end());
      ranks.push_back(d.state.regimes[k].rank);
      qg.push_back(d.state.regimes[k].q_gamma());
    }
    out.gamma.push_back(arma::uvec(mode_of(gammas)));
    out.rank.push_back(mode_of(ranks));
    out.q_gamma.push_back(mode_of(qg));
  }
  return out;
}

arma::mat posterior_mean_fit(const DrawStore& store, const Dataset& data) {
  if (store.empty()) throw ValidationError({"posterior_mean_fit: the draw store is empty"});
  const PriorConfig& config = store.meta().config;
  arma::mat acc(data.periods(), data.responses(), arma::fill::zeros);
  for (const auto& d : store.draws()) {
    std::vector<arma::mat> means;
    for (const auto& reg : d.state.regimes) means.push_back(hmm::state_mean(data, reg, config));
    for (arma::uword t = 0; t < data.periods(); ++t) acc.row(t) += means[d.state.s[t]].row(t);
  }
  return acc / static_cast<double>(store.size());
}

double mean_squared(const arma::mat& a, const arma::mat& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols) throw DimensionError("mean_squared: shape mismatch");
  if (a.n_elem == 0) return 0.0;
  return arma::accu(arma::square(a - b)) / static_cast<double>(a.n_elem);
}

Scores classification_scores(const arma::uvec& est, const arma::uvec& truth) {
  if (est.n_elem != truth.n_elem) throw DimensionError("classification_scores: length mismatch");
  Scores s;
  if (est.n_elem == 0) return s;
  double tp = 0, fp = 0, fn = 0, agree = 0;
  for (arma::uword i = 0; i < est.n_elem; ++i) {
    const bool e = est[i] != 0, t = truth[i] != 0;
    agree += (e == t) ? 1.0 : 0.0;
    tp += (e && t) ? 1.0 : 0.0;
    fp += (e && !t) ? 1.0 : 0.0;
    fn += (!e && t) ? 1.0 : 0.0;
  }
  s.accuracy = agree / static_cast<double>(est.n_elem);
  s.f1 = tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  return s;
}

Report evaluate(const DrawStore& store, const Dataset& data, const sim::GroundTruth& truth) {
  Report rep;
  rep.map = map_estimates(store);
  const arma::mat m_hat = posterior_mean_fit(store, data);
  rep.mse = mse(m_hat, data.y);
  rep.mspe = mspe(m_hat, truth.m);
  const arma::uword k_est = rep.map.gamma.size();
  for (arma::uword k = 0; k < truth.gamma.size(); ++k) {
    // A one-state fit is scored against every true allocation.
    const arma::uword ke = k_est == 1 ? 0 : k;
    if (ke >= k_est) break;
    const Scores sc = classification_scores(rep.map.gamma[ke], truth.gamma[k]);
    rep.accuracy_gamma.push_back(sc.accuracy);
    rep.f1_gamma.push_back(sc.f1);
  }
  const arma::uvec est_bin = arma::conv_to<arma::uvec>::from(rep.map.s == 1);
  const arma::uvec true_bin = arma::conv_to<arma::uvec>::from(truth.s == 1);
  const Scores ss = classification_scores(est_bin, true_bin);
  rep.accuracy_s = ss.accuracy;
  rep.f1_s = ss.f1;
  rep.q_gamma_hat = rep.map.q_gamma;
  rep.r_hat = rep.map.rank;
  return rep;
}

nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["mse"] = r.mse;
  j["mspe"] = r.mspe;
  j["accuracy_gamma"] = r.accuracy_gamma;
  j["f1_gamma"] = r.f1_gamma;
  j["accuracy_s"] = r.accuracy_s;
  j["f1_s"] = r.f1_s;
  j["q_gamma_hat"] = r.q_gamma_hat;
  j["r_hat"] = r.r_hat;
  auto s = nlohmann::json::array();
  for (auto v : r.map.s) s.push_back(v + 1);
  j["s_hat"] = s;
  auto g = nlohmann::json::array();
  for (const auto& gk : r.map.gamma) g.push_back(std::vector<arma::uword>(gk.begin(), gk.end()));
  j["gamma_hat"] = g;
  return j;
}

std::string csv_header(arma::uword states) {
  std::ostringstream os;
  os << "replication,mse,mspe,accuracy_s,f1_s";
  for (arma::uword k = 1; k <= states; ++k) {
    os << ",q_gamma_hat_" << k << ",r_hat_" << k << ",accuracy_gamma_" << k << ",f1_gamma_" << k;
  }
  return os.str();
}

std::string csv_row(const Report& r, int replication) {
  std::ostringstream os;
  os.precision(10);
  os << replication << ',' << r.mse << ',' << r.mspe << ',' << r.accuracy_s << ',' << r.f1_s;
  const std::size_t kk = std::max(r.q_gamma_hat.size(), r.accuracy_gamma.size());
  for (std::size_t k = 0; k < kk; ++k) {
    const std::size_t ke = std::min(k, r.q_gamma_hat.size() - 1);
    os << ',' << r.q_gamma_hat[ke] << ',' << r.r_hat[ke] << ','
       << (k < r.accuracy_gamma.size() ? r.accuracy_gamma[k] : 0.0) << ','
       << (k < r.f1_gamma.size() ? r.f1_gamma[k] : 0.0);
  }
  return os.str();
}

}  // namespace msprr::metrics
