#include "msprr/gp_kernel.hpp"

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <cmath>

namespace msprr::gp {

namespace {

const double kSqrt3 = std::sqrt(3.0);


// Lower Cholesky of R + rel I, escalating rel; returns the factor and the
// nugget actually used.
arma::mat chol_correlation(const arma::mat& r, double rel_start, double rel_max, double* used) {
  return linalg::chol_lower_jittered(r, 1.0, rel_start, rel_max, used);
}

}  // namespace

double matern32(const arma::rowvec& xi, const arma::rowvec& xl, double sigma2_f, double zeta) {
  const double u = kSqrt3 * arma::norm(xi - xl) / zeta;
  return sigma2_f * (1.0 + u) * std::exp(-u);
}

arma::mat pairwise_distance(const arma::mat& xa, const arma::mat& xb) {
  // Columns of the transposes are contiguous.
  const arma::mat at = xa.t(), bt = xb.t();
  const arma::uword p = at.n_rows;
  arma::mat d(xa.n_rows, xb.n_rows);
  for (arma::uword l = 0; l < bt.n_cols; ++l) {
    const double* b = bt.colptr(l);
    for (arma::uword i = 0; i < at.n_cols; ++i) {
      const double* a = at.colptr(i);
      double acc = 0.0;
      for (arma::uword c = 0; c < p; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
      d(i, l) = std::sqrt(acc);
    }
  }
  return d;
}

arma::mat correlation_from_distance(const arma::mat& d, double zeta) {
  const arma::mat u = d * (kSqrt3 / zeta);
  return (1.0 + u) % arma::exp(-u);
}

arma::mat correlation(const arma::mat& xa, const arma::mat& xb, double zeta) {
  return correlation_from_distance(pairwise_distance(xa, xb), zeta);
}

KernelMatrix build_kernel(const arma::mat& x_k, double sigma2_f, double zeta, double rel_jitter,
                          double rel_jitter_max) {
  if (x_k.n_rows == 0) throw DimensionError("build_kernel: no rows");
  KernelMatrix k;
  k.sigma2_f = sigma2_f;
  k.zeta = zeta;
  const arma::mat r = correlation(x_k, x_k, zeta);
  double rel = 0.0;
  const arma::mat lr = chol_correlation(r, rel_jitter, rel_jitter_max, &rel);
  k.jitter = rel * sigma2_f;
  k.omega = sigma2_f * r;
  k.omega.diag() += k.jitter;
  k.chol = std::sqrt(sigma2_f) * lr;
  return k;
}

arma::mat predictive_mean(const arma::mat& x_new, const arma::mat& x_train, const arma::mat& f,
                          const KernelMatrix& kernel) {
  if (x_new.n_rows == 0) return arma::mat(0, f.n_cols);
  const arma::mat cross = kernel.sigma2_f * correlation(x_new, x_train, kernel.zeta);
  const arma::mat tmp = arma::solve(arma::trimatl(kernel.chol), f, arma::solve_opts::fast);
  const arma::mat alpha = arma::solve(arma::trimatu(kernel.chol.t()), tmp, arma::solve_opts::fast);
  return cross * alpha;
}

arma::vec log_grid(double lo, double hi, int n) {
  if (n <= 1) return arma::vec{lo};
  return arma::exp(arma::linspace<arma::vec>(std::log(lo), std::log(hi), static_cast<arma::uword>(n)));
}

arma::vec zeta_log_weights(const arma::mat& f_k, const arma::mat& x_k, double sigma2_f, const arma::vec& grid,
                           const PriorConfig& config) {
  arma::vec lw(grid.n_elem);
  const double n = static_cast<double>(f_k.n_rows);
  const double m = static_cast<double>(f_k.n_cols);
  const bool empty = f_k.n_rows == 0 || f_k.n_cols == 0;
  const arma::mat dist = empty ? arma::mat() : pairwise_distance(x_k, x_k);
  for (arma::uword g = 0; g < grid.n_elem; ++g) {
    lw[g] = gamma_log_prior(grid[g], config.a_zeta, config.b_zeta);
    if (empty) continue;
    // Symmetric: evaluate the lower triangle and mirror.
    arma::mat r(dist.n_rows, dist.n_cols);
    const double scale = kSqrt3 / grid[g];
    for (arma::uword j = 0; j < dist.n_cols; ++j) {
      r(j, j) = 1.0;
      for (arma::uword i = j + 1; i < dist.n_rows; ++i) {
        const double u = dist(i, j) * scale;
        r(i, j) = (1.0 + u) * std::exp(-u);
      }
    }
    r = arma::symmatl(r);
    const arma::mat l = chol_correlation(r, config.jitter, config.jitter_max, nullptr);
    const double logdet_r = 2.0 * arma::accu(arma::log(l.diag()));
    const arma::mat z = arma::solve(arma::trimatl(l), f_k, arma::solve_opts::fast);
    const double quad = arma::accu(arma::square(z));
    lw[g] += -0.5 * m * (n * std::log(sigma2_f) + logdet_r) - 0.5 * quad / sigma2_f;
  }
  return lw;
}

arma::vec sigma2_log_weights(const arma::mat& f_k, const arma::mat& x_k, double zeta, const arma::vec& grid,
                             const PriorConfig& config) {
  arma::vec lw(grid.n_elem);
  for (arma::uword g = 0; g < grid.n_elem; ++g) lw[g] = gamma_log_prior(grid[g], config.a_sigma_f, config.b_sigma_f);
  if (f_k.n_rows == 0 || f_k.n_cols == 0) return lw;
  // Omega = sigma2 (R + eps I): the determinant and quadratic form separate.
  const arma::mat r = correlation(x_k, x_k, zeta);
  const arma::mat l = chol_correlation(r, config.jitter, config.jitter_max, nullptr);
  const arma::mat z = arma::solve(arma::trimatl(l), f_k, arma::solve_opts::fast);
  const double quad = arma::accu(arma::square(z));
  const double nm = static_cast<double>(f_k.n_rows * f_k.n_cols);
  lw += -0.5 * nm * arma::log(grid) - 0.5 * quad / grid;
  return lw;
}

HyperDraw griddy_update_hypers(const arma::mat& f_k, const arma::mat& x_k, double sigma2_f, double zeta,
                               const PriorConfig& config, Rng& rng) {
  HyperDraw out{sigma2_f, zeta, false, false};
  const arma::vec zgrid = log_grid(config.zeta_min, config.zeta_max, config.grid_size);
  const arma::vec zw = zeta_log_weights(f_k, x_k, sigma2_f, zgrid, config);
  if (std::isfinite(zw.max())) {
    out.zeta = zgrid[rng.categorical_log(zw)];
  } else {
    out.zeta_retained = true;
  }
  const arma::vec sgrid = log_grid(config.sigma2_f_min, config.sigma2_f_max, config.grid_size);
  const arma::vec sw = sigma2_log_weights(f_k, x_k, out.zeta, sgrid, config);
  if (std::isfinite(sw.max())) {
    out.sigma2_f = sgrid[rng.categorical_log(sw)];
  } else {
    out.sigma_retained = true;
  }
  return out;
}

}  // namespace msprr::gp
