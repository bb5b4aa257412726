#pragma once

// Small statistical helpers shared by the unit and acceptance tests.

#include <armadillo>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <map>
#include <vector>

namespace oracle {

/// Upper-tail probability of a chi-square(dof) statistic.
inline double chi2_pvalue(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

/// Pearson statistic and p-value for observed counts against probabilities.
/// Cells with expected count below `min_expected` are pooled into one.
struct GoodnessOfFit {
  double stat = 0.0;
  double dof = 0.0;
  double pvalue = 1.0;
};

inline GoodnessOfFit pearson(const arma::vec& counts, const arma::vec& probs, double min_expected = 5.0) {
  const double n = arma::accu(counts);
  GoodnessOfFit out;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (arma::uword i = 0; i < counts.n_elem; ++i) {
    const double e = n * probs[i];
    if (e < min_expected) {
      pooled_obs += counts[i];
      pooled_exp += e;
      continue;
    }
    out.stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    out.stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  out.dof = std::max(cells - 1, 1);
  out.pvalue = chi2_pvalue(out.stat, out.dof);
  return out;
}

/// |mean(x) - mu| <= k * sd / sqrt(n), with sd the true standard deviation.
inline bool mean_within(const arma::vec& x, double mu, double sd, double k = 3.0) {
  return std::abs(arma::mean(x) - mu) <= k * sd / std::sqrt(static_cast<double>(x.n_elem));
}

/// Sample variance against the true variance, using the fourth central
/// moment for the standard error of the sample variance.
inline bool variance_within(const arma::vec& x, double var, double mu4, double k = 3.0) {
  const double n = static_cast<double>(x.n_elem);
  const double se = std::sqrt(std::max(mu4 - var * var, 0.0) / n);
  return std::abs(arma::var(x) - var) <= k * se;
}

/// Every cell frequency within k binomial standard errors of its probability.
inline bool multinomial_within(const arma::vec& counts, const arma::vec& probs, double k = 3.0) {
  const double n = arma::accu(counts);
  for (arma::uword i = 0; i < counts.n_elem; ++i) {
    const double se = std::sqrt(probs[i] * (1.0 - probs[i]) / n);
    if (std::abs(counts[i] / n - probs[i]) > k * se + 1e-12) return false;
  }
  return true;
}

/// Relative residual ||a x - b|| / max(||b||, ||a|| ||x||).
inline double relative_residual(const arma::mat& a, const arma::vec& x, const arma::vec& b) {
  const double scale = std::max(arma::norm(b), arma::norm(a) * arma::norm(x));
  return arma::norm(a * x - b) / std::max(scale, 1e-300);
}

/// Dense multivariate normal log density.
inline double mvn_logpdf(const arma::vec& x, const arma::vec& mu, const arma::mat& sigma) {
  double ld = 0.0, sign = 0.0;
  arma::log_det(ld, sign, sigma);
  const arma::vec d = x - mu;
  return -0.5 * (static_cast<double>(x.n_elem) * std::log(2.0 * arma::datum::pi) + ld +
                 arma::as_scalar(d.t() * arma::solve(sigma, d)));
}

}  // namespace oracle
