#pragma once

#include "msprr/gp_kernel.hpp"
#include "msprr/model.hpp"
#include "msprr/rng.hpp"

#include <armadillo>

#include <vector>

namespace msprr::hmm {

/// Mean of state k's emission at every period (T x q). Flexible responses use
/// the stored GP values where available and the posterior-predictive mean
/// elsewhere.
arma::mat state_mean(const Dataset& data, const RegimeParams& reg, const PriorConfig& config);

/// log N(e | 0, W^-1 diag(exp(h)) W^-T) for one period.
double gaussian_loglik(const arma::rowvec& e, const arma::mat& w, const arma::rowvec& h);

/// T x K log emission densities.
arma::mat emission_loglik(const Dataset& data, const ChainState& state, const PriorConfig& config);
/// Same, from precomputed state means.
arma::mat emission_loglik(const Dataset& data, const std::vector<arma::mat>& means, const ChainState& state);

struct FfbsResult {
  arma::uvec s;
  arma::mat filtered;  // T x K filtered probabilities
};

/// Forward filtering with a uniform initial law, then backward sampling.
FfbsResult ffbs(const arma::mat& log_emission, const arma::mat& xi, Rng& rng);

/// D(u, v) = Hamming distance between current gamma u and previous gamma v.
arma::mat hamming_matrix(const std::vector<arma::uvec>& current, const std::vector<arma::uvec>& previous);
/// Row-wise softmax of -D.
arma::mat softmax_rows_neg(const arma::mat& d);

/// perm[a] is the current label that becomes label a.
arma::uvec relabel_permutation(const ChainState& state, const std::vector<arma::uvec>& previous_gammas, double d_val);
void apply_permutation(ChainState& state, const arma::uvec& perm);
/// Applies the ordering rule in place and returns the permutation used.
arma::uvec relabel(ChainState& state, const std::vector<arma::uvec>& previous_gammas, double d_val);

}  // namespace msprr::hmm
