#include "msprr/laplace.hpp"

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace msprr::laplace {

double free_parameters(arma::uword p, arma::uword q_gamma, arma::uword r) {
  return static_cast<double>(p * r + (q_gamma - r) * r);
}

arma::uword max_rank(arma::uword p, arma::uword q_gamma) {
  const arma::uword lo = std::min(p, q_gamma);
  return lo > 0 ? lo - 1 : 0;
}

RankEvidence log_laplace_r(const GlsMoments& m, arma::uword p, arma::uword q_gamma, arma::uword r,
                           arma::uword periods, double tol, int max_iter) {
  if (r < 1 || r > std::min(p, q_gamma - 1)) throw DimensionError("log_laplace_r: rank out of range");
  RankEvidence ev;
  if (periods == 0) return ev;
  ev.mle = grrr::solve(m, p, q_gamma, r, tol, max_iter);
  ev.log_evidence =
      ev.mle.loglik - 0.5 * free_parameters(p, q_gamma, r) * std::log(static_cast<double>(periods));
  return ev;
}

const EvidenceTable& EvidenceCache::ranks(const arma::uvec& gamma) {
  const std::vector<arma::uword> key(gamma.begin(), gamma.end());
  if (auto it = table_.find(key); it != table_.end()) return it->second;
  const arma::uword p = ctx_.covariates();
  const arma::uword qg = static_cast<arma::uword>(arma::accu(gamma));
  const arma::uword rmax = max_rank(p, qg);
  if (rmax == 0) throw DimensionError("evidence: no admissible rank for this allocation");
  EvidenceTable t;
  t.log_evidence.zeros(rmax);
  if (ctx_.periods() > 0) {
    const GlsMoments m = ctx_.marginal_moments(gamma);
    for (arma::uword r = 1; r <= rmax; ++r) {
      RankEvidence ev = log_laplace_r(m, p, qg, r, ctx_.periods(), tol_, max_iter_);
      t.log_evidence[r - 1] = ev.log_evidence;
      t.mle.push_back(std::move(ev.mle));
    }
  }
  t.weights = linalg::normalize_log_weights(t.log_evidence);
  return table_.emplace(key, std::move(t)).first->second;
}

double EvidenceCache::gamma_log_marginal(const arma::uvec& gamma) {
  const EvidenceTable& t = ranks(gamma);
  if (ctx_.periods() == 0) return 0.0;
  return linalg::log_sum_exp(t.log_evidence) - std::log(static_cast<double>(t.log_evidence.n_elem));
}

}  // namespace msprr::laplace
