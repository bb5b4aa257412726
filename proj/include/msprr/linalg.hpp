#pragma once

#include <armadillo>

#include <vector>

// Dense helpers shared by every module. Index conventions are 0-based
// throughout; where a formula is usually written 1-based the conversion is
// made at the point of construction and noted there.
namespace msprr::linalg {

/// K_{m,n}: the mn x mn permutation with K * vec(M) = vec(M') for M (m x n).
arma::mat commutation_matrix(arma::uword m, arma::uword n);

/// V1 = [I_{q_gamma} | 0] and V2 = [0 | I_{q - q_gamma}].
struct SelectionPair {
  arma::mat v1;
  arma::mat v2;
};
SelectionPair selection_pair(arma::uword q, arma::uword q_gamma);

/// Linear restriction vec(V1' A) = G vec(A0) + g for A = [I_r; A0].
struct RestrictionPair {
  arma::mat g_mat;  // (q r) x (r (q_gamma - r))
  arma::vec g_vec;  // length q r
};
RestrictionPair build_restrictions(arma::uword q, arma::uword q_gamma, arma::uword r);

/// Symmetric block-sparse matrix of size (q T) x (q T) whose only nonzero
/// entries are (t + i T, t + j T) = block_t(i, j). This is the layout of the
/// stacked error covariance when observations are vectorized response-major.
class ScatteredCovariance {
 public:
  ScatteredCovariance() = default;
  explicit ScatteredCovariance(arma::cube blocks);

  arma::uword dim() const { return blocks_.n_rows; }
  arma::uword periods() const { return blocks_.n_slices; }
  const arma::mat& block(arma::uword t) const { return blocks_.slice(t); }
  const arma::cube& blocks() const { return blocks_; }

  arma::mat dense() const;
  ScatteredCovariance inverse() const;
  double log_det() const;
  /// Product with a response-major vector of length q T.
  arma::vec multiply(const arma::vec& v) const;

 private:
  arma::cube blocks_;
};

/// Builds the scattered matrix from per-period covariances; every block must
/// be symmetric positive definite.
ScatteredCovariance scatter_sigma(const std::vector<arma::mat>& per_time, arma::uword t_k);

double log_sum_exp(const arma::vec& x);
/// exp(x - logsumexp(x)); all-(-inf) input yields an empty-mass vector of NaN.
arma::vec normalize_log_weights(const arma::vec& x);

/// Lower Cholesky factor of a + jitter * I. Starts at rel_start * scale and
/// multiplies the jitter by 10 until rel_max * scale. Throws NumericalError
/// when every attempt fails.
arma::mat chol_lower_jittered(const arma::mat& a, double scale, double rel_start, double rel_max,
                              double* jitter_used = nullptr);

/// Solves a x = b for symmetric positive (semi)definite a, falling back to a
/// small ridge when a is numerically singular. Sets *ridged when it did.
arma::mat spd_solve(const arma::mat& a, const arma::mat& b, bool* ridged = nullptr);

}  // namespace msprr::linalg
