#pragma once

#include "msprr/marginal_covariance.hpp"
#include "msprr/model.hpp"
#include "msprr/rng.hpp"

#include <armadillo>

#include <array>

namespace msprr::continuous {

/// N(precision^-1 rhs, precision^-1), kept in factored form.
struct GaussianConditional {
  arma::vec mean;
  arma::mat precision;
  arma::mat chol;  // upper factor R with precision = R' R
};
GaussianConditional make_conditional(const arma::mat& precision, const arma::vec& rhs);
arma::vec draw(const GaussianConditional& cond, Rng& rng);

/// First `cols` columns of c_prev, zero-padded when c_prev is narrower.
arma::mat bridge_columns(const arma::mat& c_prev, arma::uword rows, arma::uword cols);

/// Conditional of alpha = vec(A0') given B, prior N(0, a_coef I).
GaussianConditional alpha_conditional(const GlsMoments& noise, const arma::mat& b, arma::uword q_gamma, double a_coef);
/// A0 ((q_gamma - r) x r) from a draw of alpha.
arma::mat alpha_to_a0(const arma::vec& alpha, arma::uword q_gamma, arma::uword r);

/// Conditional of beta = vec(B) given A, prior N(0, b_coef I).
GaussianConditional beta_conditional(const GlsMoments& noise, const arma::mat& a, double b_coef);

/// Conditional of the free entries W(j, 0..j-1) for j >= 1 given residuals
/// (T x q) and log-variances h (T x q).
GaussianConditional w_row_conditional(const arma::mat& resid, const arma::mat& h, arma::uword j, double omega_w);
arma::mat sample_w(const arma::mat& resid, const arma::mat& h, const PriorConfig& config, Rng& rng);

/// Ten-component normal mixture approximating the log chi-square(1) law.
struct MixtureTable {
  std::array<double, 10> prob;
  std::array<double, 10> mean;
  std::array<double, 10> var;
};
const MixtureTable& log_chi2_mixture();

/// Offset added to squared shocks before taking logs.
inline constexpr double kLogSquareOffset = 1e-10;

/// Component probabilities for one observation y* = log(e^2 + c) at level h.
arma::vec mixture_posterior(double y_star, double h);

/// Joint draw of the log-variance path for one structural shock series:
/// mixture indicators given the current path, then forward filtering and
/// backward sampling of the random walk started at h0.
arma::vec sample_h(const arma::vec& shocks, const arma::vec& h_current, double sigma2, double h0, Rng& rng);
double sample_h0(double h1, double sigma2, double upsilon0_sq, Rng& rng);
/// IG(a_sv + T/2, b_sv + sum of squared increments / 2), with h_0 = h0.
double sample_sigma2_sv(const arma::vec& h, double h0, const PriorConfig& config, Rng& rng);

/// Sigma ~ IW(nu, psi) via the Bartlett decomposition of its inverse.
arma::mat sample_inv_wishart(double nu, const arma::mat& psi, Rng& rng);
/// Constant-volatility conditional: IW(nu + T, psi + resid' resid).
arma::mat sample_sigma_iw(const arma::mat& resid, const PriorConfig& config, Rng& rng);
/// Sigma = W^-1 diag(exp(log_d)) W^-T with W unit lower-triangular.
void ldl_from_sigma(const arma::mat& sigma, arma::mat& w, arma::vec& log_d);

}  // namespace msprr::continuous
