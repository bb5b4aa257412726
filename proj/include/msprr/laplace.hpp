#pragma once

#include "msprr/grrr.hpp"
#include "msprr/marginal_covariance.hpp"

#include <armadillo>

#include <map>
#include <vector>

namespace msprr::laplace {

/// Number of free parameters in (A0, B): p r + (q_gamma - r) r.
double free_parameters(arma::uword p, arma::uword q_gamma, arma::uword r);

/// Largest admissible rank, min(p, q_gamma) - 1 (0 when none).
arma::uword max_rank(arma::uword p, arma::uword q_gamma);

struct RankEvidence {
  double log_evidence = 0.0;
  grrr::Solution mle;
};

/// loglik at the constrained MLE minus free_parameters / 2 * log(n). Accepts
/// 1 <= r <= min(p, q_gamma - 1).
RankEvidence log_laplace_r(const GlsMoments& m, arma::uword p, arma::uword q_gamma, arma::uword r,
                           arma::uword periods, double tol = 1e-6, int max_iter = 200);

/// Evidence table over ranks 1..max_rank with normalized weights.
struct EvidenceTable {
  arma::vec log_evidence;
  arma::vec weights;
  std::vector<grrr::Solution> mle;
};

/// Caches marginal evidence per allocation for one state within one sweep.
class EvidenceCache {
 public:
  EvidenceCache(const StateContext& ctx, double tol, int max_iter) : ctx_(ctx), tol_(tol), max_iter_(max_iter) {}

  /// Per-rank Laplace evidence for gamma (ranks 1..max_rank).
  const EvidenceTable& ranks(const arma::uvec& gamma);
  /// log-sum-exp over ranks minus log(max_rank).
  double gamma_log_marginal(const arma::uvec& gamma);
  /// Normalized exp of the per-rank evidence.
  arma::vec rank_posterior(const arma::uvec& gamma) { return ranks(gamma).weights; }
  std::size_t evaluations() const { return table_.size(); }

 private:
  const StateContext& ctx_;
  double tol_;
  int max_iter_;
  std::map<std::vector<arma::uword>, EvidenceTable> table_;
};

}  // namespace msprr::laplace
