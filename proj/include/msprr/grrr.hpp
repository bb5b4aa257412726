#pragma once

#include "msprr/marginal_covariance.hpp"

#include <armadillo>

#include <vector>

// Constrained ML estimation of C = B A' with A = [I_r; A0] under a general
// error covariance. The working parameterization is c = vec(C) (p x q_gamma)
// and alpha = vec(A0'), so that vec(A') = [vec(I_r); alpha].
namespace msprr::grrr {

/// Gaussian log-density of vec(Y) at mean U1 c from GLS moments.
double log_likelihood(const GlsMoments& m, const arma::vec& c);

/// Conditional maximizer of A given B (p x r). Returns A (q_gamma x r) with
/// top block I_r.
arma::mat update_alpha(const GlsMoments& m, const arma::mat& b, arma::uword q_gamma, bool* ridged = nullptr);
/// Conditional maximizer of B given A (q_gamma x r).
arma::mat update_beta(const GlsMoments& m, const arma::mat& a, bool* ridged = nullptr);

/// Identity-top factorization of the rank-r SVD truncation of c (p x q_gamma).
void identity_top_factor(const arma::mat& c, arma::uword r, arma::mat& a, arma::mat& b);

struct Solution {
  arma::mat a;  // q_gamma x r
  arma::mat b;  // p x r
  arma::mat c;  // p x q_gamma
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ridged = false;
  std::vector<double> trace;  // loglik after every half step
};

/// Alternating maximization seeded by the truncated GLS estimate.
Solution solve(const GlsMoments& m, arma::uword p, arma::uword q_gamma, arma::uword r, double tol = 1e-6,
               int max_iter = 200);
/// Same, from a supplied starting A.
Solution solve_from(const GlsMoments& m, const arma::mat& a_start, double tol = 1e-6, int max_iter = 200);

// Literal Kronecker construction, kept as an independent route for checks.
// Responses are in canonical order (low-rank group first) and observations
// are vectorized response-major, exactly as the dense covariance is laid out.
namespace kron {

struct Problem {
  arma::mat y;        // n x q
  arma::mat x;        // n x p
  arma::mat sigma_y;  // (n q) x (n q), response-major
  arma::uword q_gamma = 0;
  arma::uword r = 0;
};

/// U1 = S_L (x) X where S_L selects the responses with gamma = 1.
arma::mat u1(const arma::uvec& gamma, const arma::mat& x);
/// U2 = S_Q (x) I_n.
arma::mat u2(const arma::uvec& gamma, arma::uword n);
/// Moments from a dense covariance and an arbitrary allocation.
GlsMoments moments(const arma::mat& y, const arma::mat& x, const arma::mat& sigma, const arma::uvec& gamma);

/// A from the restricted GLS formula with M_B, n_B built from Kronecker
/// products and the restriction pair.
arma::mat update_alpha(const Problem& pr, const arma::mat& b);
/// B from M_A^-1 n_A with the commutation matrix K_{p,r}.
arma::mat update_beta(const Problem& pr, const arma::mat& a);

}  // namespace kron

}  // namespace msprr::grrr
