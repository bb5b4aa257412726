#pragma once

#include "msprr/model.hpp"
#include "msprr/rng.hpp"

#include <armadillo>

namespace msprr::gp {

/// sigma2_f (1 + sqrt(3) d / zeta) exp(-sqrt(3) d / zeta), d = ||x_i - x_l||.
double matern32(const arma::rowvec& xi, const arma::rowvec& xl, double sigma2_f, double zeta);

/// Euclidean distances between the rows of xa and xb.
arma::mat pairwise_distance(const arma::mat& xa, const arma::mat& xb);
arma::mat correlation_from_distance(const arma::mat& d, double zeta);

/// Unit-variance Matern 3/2 cross-correlation between the rows of xa and xb.
arma::mat correlation(const arma::mat& xa, const arma::mat& xb, double zeta);

struct KernelMatrix {
  arma::mat omega;  // sigma2_f * (R + rel_jitter I)
  arma::mat chol;   // lower factor of omega
  double sigma2_f = 1.0;
  double zeta = 1.0;
  double jitter = 0.0;  // absolute nugget on the diagonal
  double log_det() const { return 2.0 * arma::accu(arma::log(chol.diag())); }
};

/// Gram matrix over the rows of x_k plus a nugget. The nugget starts at
/// rel_jitter * sigma2_f and grows tenfold until the factorization succeeds
/// or rel_jitter_max * sigma2_f is exceeded (NumericalError).
KernelMatrix build_kernel(const arma::mat& x_k, double sigma2_f, double zeta, double rel_jitter,
                          double rel_jitter_max);

/// Posterior-predictive mean of the GP at the rows of x_new given values f
/// (one column per function) at the rows of x_train.
arma::mat predictive_mean(const arma::mat& x_new, const arma::mat& x_train, const arma::mat& f,
                          const KernelMatrix& kernel);

/// n log-spaced points from lo to hi (n = 1 gives lo).
arma::vec log_grid(double lo, double hi, int n);

/// Gamma(shape, rate) log density up to a constant.
inline double gamma_log_prior(double x, double shape, double rate) {
  return (shape - 1.0) * std::log(x) - rate * x;
}

struct HyperDraw {
  double sigma2_f = 1.0;
  double zeta = 1.0;
  bool zeta_retained = false;   // all grid weights underflowed
  bool sigma_retained = false;
};

/// Discretized full-conditional log weights for zeta over `grid`, sigma2_f
/// held fixed.
arma::vec zeta_log_weights(const arma::mat& f_k, const arma::mat& x_k, double sigma2_f, const arma::vec& grid,
                           const PriorConfig& config);
/// Same for sigma2_f with zeta held fixed.
arma::vec sigma2_log_weights(const arma::mat& f_k, const arma::mat& x_k, double zeta, const arma::vec& grid,
                             const PriorConfig& config);

/// Griddy Gibbs: zeta first, then sigma2_f given the new zeta.
HyperDraw griddy_update_hypers(const arma::mat& f_k, const arma::mat& x_k, double sigma2_f, double zeta,
                               const PriorConfig& config, Rng& rng);

}  // namespace msprr::gp
