#pragma once

#include "msprr/gp_kernel.hpp"
#include "msprr/rng.hpp"

#include <armadillo>

namespace msprr {

/// Sufficient statistics of a Gaussian regression vec(Y) ~ N(U1 c, Sigma):
/// g = U1' Sigma^-1 U1, b = U1' Sigma^-1 vec(Y), yy = vec(Y)' Sigma^-1 vec(Y).
struct GlsMoments {
  arma::mat g;
  arma::vec b;
  double yy = 0.0;
  double log_det = 0.0;  // log |Sigma|
  double n_obs = 0.0;    // length of vec(Y)
};

/// Per-state precomputation for one sweep. Observations of state k are
/// vectorized response-major (index t + i n). The error covariance is
/// Sigma_t = W^-1 diag(exp(h_t)) W^-T; the GP block is I_m (x) Omega with
/// Omega = L L'. Everything that does not depend on the allocation gamma is
/// computed once here so that the marginal likelihood of each candidate
/// gamma costs one factorization of I + Z' Sigma~^-1 Z (size n m).
class StateContext {
 public:
  /// `kernel` may be null when the state has no observations.
  StateContext(const arma::mat& y_k, const arma::mat& x_k, const arma::mat& w, const arma::mat& h_k,
               const gp::KernelMatrix* kernel);

  arma::uword periods() const { return y_.n_rows; }
  arma::uword responses() const { return y_.n_cols; }
  arma::uword covariates() const { return x_.n_cols; }

  /// Moments of the low-rank coefficients under Sigma_y = Sigma~ + U2 (I (x) Omega) U2'.
  GlsMoments marginal_moments(const arma::uvec& gamma) const;

  /// Moments under Sigma~ alone with the GP values f (n x m) subtracted
  /// from the flexible responses.
  GlsMoments noise_moments(const arma::uvec& gamma, const arma::mat& f) const;

  struct FDraw {
    arma::mat f;     // n x m draw
    arma::mat mean;  // n x m posterior mean
  };
  /// Draw of the GP values given low-rank coefficients c_star (p x q_gamma).
  FDraw sample_f(const arma::uvec& gamma, const arma::mat& c_star, Rng& rng) const;

 private:
  struct Woodbury {
    arma::mat r;    // upper Cholesky of S = I + Z' Sigma~^-1 Z
    arma::mat zu;   // Z' Sigma~^-1 U1
    arma::vec zy;   // Z' Sigma~^-1 y
  };
  Woodbury woodbury(const arma::uvec& low, const arma::uvec& flex) const;
  GlsMoments noise_part(const arma::uvec& low) const;

  arma::mat y_, x_, w_;
  arma::mat eh_;     // exp(-h), n x q
  arma::mat yw_;     // y W', structural responses
  double sum_h_ = 0.0;
  bool has_gp_ = false;
  arma::mat l_;      // kernel factor
  arma::cube p_;     // L' diag(eh_j) L, one slice per j
  arma::cube rx_;    // L' diag(eh_j) X
  arma::mat ry_;     // L' (eh_j % yw_j), column j
  arma::cube qx_;    // X' diag(eh_j) X
  arma::mat xu_;     // X' (eh_j % yw_j), column j
  double uu_ = 0.0;
};

}  // namespace msprr
