#pragma once

#include "msprr/model.hpp"
#include "msprr/rng.hpp"

#include <armadillo>

#include <functional>
#include <vector>

namespace msprr::discrete {

/// True when 1 < sum(gamma) < q.
bool admissible(const arma::uvec& gamma);

/// Single-flip neighbours of gamma that stay admissible, in flip order.
std::vector<arma::uvec> neighborhood(const arma::uvec& gamma);

/// log p(gamma | rho) = q_gamma log rho + (q - q_gamma) log(1 - rho).
double log_prior_gamma(const arma::uvec& gamma, double rho);

struct MsssResult {
  arma::uvec gamma;
  bool accepted = false;
  bool proposed = false;  // false when the neighbourhood was empty
  double accept_prob = 0.0;
};

/// One Metropolized shotgun stochastic search step. `log_target` returns the
/// unnormalized log posterior of an allocation. The proposal is drawn from
/// the neighbourhood with probability proportional to the target; the move is
/// accepted with the ratio of neighbourhood sums, old over new.
MsssResult msss_step(const arma::uvec& gamma, const std::function<double(const arma::uvec&)>& log_target, Rng& rng);

/// Beta(a_rho + q_gamma, b_rho + q - q_gamma).
double sample_rho(const arma::uvec& gamma, const PriorConfig& config, Rng& rng);

/// N(k, l) = number of t >= 1 with s_{t-1} = k and s_t = l (0-based labels).
arma::mat transition_counts(const arma::uvec& s, arma::uword k_states);

/// Row k of Xi from Dirichlet(d_k + N_k).
arma::rowvec sample_xi_row(const arma::uvec& s, arma::uword k, const PriorConfig& config, Rng& rng);
arma::mat sample_xi(const arma::uvec& s, const PriorConfig& config, Rng& rng);

}  // namespace msprr::discrete
