#include "msprr/discrete.hpp"

#include "msprr/linalg.hpp"

#include <cmath>

namespace msprr::discrete {

bool admissible(const arma::uvec& gamma) {
  const arma::uword qg = static_cast<arma::uword>(arma::accu(gamma));
  return qg > 1 && qg < gamma.n_elem;
}

std::vector<arma::uvec> neighborhood(const arma::uvec& gamma) {
  std::vector<arma::uvec> out;
  for (arma::uword j = 0; j < gamma.n_elem; ++j) {
    arma::uvec g = gamma;
    g[j] = 1 - g[j];
    if (admissible(g)) out.push_back(std::move(g));
  }
  return out;
}

double log_prior_gamma(const arma::uvec& gamma, double rho) {
  const double qg = static_cast<double>(arma::accu(gamma));
  const double q = static_cast<double>(gamma.n_elem);
  return qg * std::log(rho) + (q - qg) * std::log1p(-rho);
}

MsssResult msss_step(const arma::uvec& gamma, const std::function<double(const arma::uvec&)>& log_target, Rng& rng) {
  MsssResult res{gamma, false, false, 0.0};
  const auto nbd = neighborhood(gamma);
  if (nbd.empty()) return res;
  arma::vec lw(nbd.size());
  for (std::size_t i = 0; i < nbd.size(); ++i) lw[i] = log_target(nbd[i]);
  const std::size_t pick = rng.categorical_log(lw);
  const arma::uvec& cand = nbd[pick];
  const auto back = neighborhood(cand);
  arma::vec lb(back.size());
  for (std::size_t i = 0; i < back.size(); ++i) lb[i] = log_target(back[i]);
  const double log_ratio = linalg::log_sum_exp(lw) - linalg::log_sum_exp(lb);
  res.proposed = true;
  res.accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    res.gamma = cand;
    res.accepted = true;
  }
  return res;
}

double sample_rho(const arma::uvec& gamma, const PriorConfig& config, Rng& rng) {
  const double qg = static_cast<double>(arma::accu(gamma));
  const double q = static_cast<double>(gamma.n_elem);
  return rng.beta(config.a_rho + qg, config.b_rho + q - qg);
}

arma::mat transition_counts(const arma::uvec& s, arma::uword k_states) {
  arma::mat n(k_states, k_states, arma::fill::zeros);
  for (arma::uword t = 1; t < s.n_elem; ++t) n(s[t - 1], s[t]) += 1.0;
  return n;
}

arma::rowvec sample_xi_row(const arma::uvec& s, arma::uword k, const PriorConfig& config, Rng& rng) {
  const arma::vec d = config.dirichlet();
  const arma::uword kk = d.n_elem;
  arma::vec alpha = d;
  for (arma::uword t = 1; t < s.n_elem; ++t) {
    if (s[t - 1] == k) alpha[s[t]] += 1.0;
  }
  if (kk == 1) return arma::rowvec{1.0};
  return rng.dirichlet(alpha).t();
}

arma::mat sample_xi(const arma::uvec& s, const PriorConfig& config, Rng& rng) {
  const arma::uword kk = config.dirichlet().n_elem;
  arma::mat xi(kk, kk);
  for (arma::uword k = 0; k < kk; ++k) xi.row(k) = sample_xi_row(s, k, config, rng);
  return xi;
}

}  // namespace msprr::discrete
