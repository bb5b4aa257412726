#include "msprr/continuous.hpp"

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <cmath>
#include <numbers>

namespace msprr::continuous {

GaussianConditional make_conditional(const arma::mat& precision, const arma::vec& rhs) {
  GaussianConditional c;
  c.precision = arma::symmatu(precision);
  if (c.precision.n_rows == 0) {
    c.mean.reset();
    return c;
  }
  if (!arma::chol(c.chol, c.precision)) {
    const arma::mat l = linalg::chol_lower_jittered(c.precision, arma::mean(c.precision.diag()), 1e-10, 1e-4);
    c.chol = l.t();
  }
  c.mean = arma::solve(arma::trimatu(c.chol), arma::solve(arma::trimatl(c.chol.t()), rhs, arma::solve_opts::fast), arma::solve_opts::fast);
  return c;
}

arma::vec draw(const GaussianConditional& cond, Rng& rng) {
  if (cond.mean.n_elem == 0) return {};
  return cond.mean + arma::solve(arma::trimatu(cond.chol), rng.normal_vec(cond.mean.n_elem), arma::solve_opts::fast);
}

arma::mat bridge_columns(const arma::mat& c_prev, arma::uword rows, arma::uword cols) {
  arma::mat out(rows, cols, arma::fill::zeros);
  const arma::uword keep = std::min<arma::uword>(cols, c_prev.n_cols);
  if (keep > 0 && c_prev.n_rows == rows) out.head_cols(keep) = c_prev.head_cols(keep);
  return out;
}

GaussianConditional alpha_conditional(const GlsMoments& noise, const arma::mat& b, arma::uword q_gamma, double a_coef) {
  const arma::uword r = b.n_cols;
  const arma::mat kb = arma::kron(arma::eye(q_gamma, q_gamma), b);
  const arma::mat h = kb.t() * noise.g * kb;
  const arma::vec m = kb.t() * noise.b;
  const arma::uword nfix = r * r, nfree = q_gamma * r - nfix;
  const arma::vec v = arma::vectorise(arma::eye(r, r));
  arma::mat prec = h.submat(nfix, nfix, nfix + nfree - 1, nfix + nfree - 1);
  prec.diag() += 1.0 / a_coef;
  const arma::vec rhs = m.subvec(nfix, nfix + nfree - 1) - h.submat(nfix, 0, nfix + nfree - 1, nfix - 1) * v;
  return make_conditional(prec, rhs);
}

arma::mat alpha_to_a0(const arma::vec& alpha, arma::uword q_gamma, arma::uword r) {
  return arma::reshape(alpha, r, q_gamma - r).t();
}

GaussianConditional beta_conditional(const GlsMoments& noise, const arma::mat& a, double b_coef) {
  const arma::uword p = noise.g.n_rows / a.n_rows;
  const arma::mat ka = arma::kron(a, arma::eye(p, p));
  arma::mat prec = ka.t() * noise.g * ka;
  prec.diag() += 1.0 / b_coef;
  return make_conditional(prec, ka.t() * noise.b);
}

GaussianConditional w_row_conditional(const arma::mat& resid, const arma::mat& h, arma::uword j, double omega_w) {
  const arma::vec scale = arma::exp(-0.5 * h.col(j));
  const arma::vec z = resid.col(j) % scale;
  arma::mat xw = resid.head_cols(j);
  xw.each_col() %= -scale;
  arma::mat prec = xw.t() * xw;
  prec.diag() += 1.0 / omega_w;
  return make_conditional(prec, xw.t() * z);
}

arma::mat sample_w(const arma::mat& resid, const arma::mat& h, const PriorConfig& config, Rng& rng) {
  const arma::uword q = resid.n_cols;
  arma::mat w(q, q, arma::fill::eye);
  for (arma::uword j = 1; j < q; ++j) {
    const auto cond = w_row_conditional(resid, h, j, config.omega_w);
    w.row(j).head(j) = draw(cond, rng).t();
  }
  return w;
}

// Omori, Chib, Shephard and Nakajima (2007), ten-component table.
const MixtureTable& log_chi2_mixture() {
  static const MixtureTable table{
      {0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115},
      {1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000},
      {0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342}};
  return table;
}

arma::vec mixture_posterior(double y_star, double h) {
  const auto& mx = log_chi2_mixture();
  arma::vec lw(10);
  for (int i = 0; i < 10; ++i) {
    const double e = y_star - h - mx.mean[i];
    lw[i] = std::log(mx.prob[i]) - 0.5 * std::log(mx.var[i]) - 0.5 * e * e / mx.var[i];
  }
  return linalg::normalize_log_weights(lw);
}

arma::vec sample_h(const arma::vec& shocks, const arma::vec& h_current, double sigma2, double h0, Rng& rng) {
  const arma::uword n = shocks.n_elem;
  if (h_current.n_elem != n) throw DimensionError("sample_h: path length mismatch");
  const auto& mx = log_chi2_mixture();
  arma::vec y_star = arma::log(arma::square(shocks) + kLogSquareOffset);
  arma::vec obs_mean(n), obs_var(n);
  for (arma::uword t = 0; t < n; ++t) {
    const arma::vec pr = mixture_posterior(y_star[t], h_current[t]);
    double u = rng.uniform(), acc = 0.0;
    int z = 9;
    for (int i = 0; i < 10; ++i) {
      acc += pr[i];
      if (u <= acc) {
        z = i;
        break;
      }
    }
    obs_mean[t] = mx.mean[z];
    obs_var[t] = mx.var[z];
  }
  // Kalman filter for h_t = h_{t-1} + eta_t, h_0 fixed.
  arma::vec m(n), c(n);
  double a = h0, pvar = sigma2;
  for (arma::uword t = 0; t < n; ++t) {
    const double gain = pvar / (pvar + obs_var[t]);
    m[t] = a + gain * (y_star[t] - obs_mean[t] - a);
    c[t] = pvar * (1.0 - gain);
    a = m[t];
    pvar = c[t] + sigma2;
  }
  arma::vec h(n);
  if (n == 0) return h;
  h[n - 1] = m[n - 1] + std::sqrt(c[n - 1]) * rng.normal();
  for (arma::uword t = n - 1; t-- > 0;) {
    const double k = c[t] / (c[t] + sigma2);
    const double mean = m[t] + k * (h[t + 1] - m[t]);
    const double var = c[t] * (1.0 - k);
    h[t] = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
  }
  return h;
}

double sample_h0(double h1, double sigma2, double upsilon0_sq, Rng& rng) {
  const double var = 1.0 / (1.0 / upsilon0_sq + 1.0 / sigma2);
  const double mean = var * h1 / sigma2;
  return mean + std::sqrt(var) * rng.normal();
}

double sample_sigma2_sv(const arma::vec& h, double h0, const PriorConfig& config, Rng& rng) {
  double ss = 0.0, prev = h0;
  for (double v : h) {
    ss += (v - prev) * (v - prev);
    prev = v;
  }
  return rng.inv_gamma(config.a_sv + 0.5 * static_cast<double>(h.n_elem), config.b_sv + 0.5 * ss);
}

arma::mat sample_inv_wishart(double nu, const arma::mat& psi, Rng& rng) {
  const arma::uword q = psi.n_rows;
  if (!(nu > static_cast<double>(q) - 1.0)) throw DimensionError("sample_inv_wishart: nu must exceed q - 1");
  arma::mat lpsi_inv;
  if (!arma::chol(lpsi_inv, arma::inv_sympd(psi), "lower")) throw NumericalError("inverse-Wishart scale is not SPD");
  arma::mat bart(q, q, arma::fill::zeros);
  for (arma::uword i = 0; i < q; ++i) {
    bart(i, i) = std::sqrt(2.0 * rng.gamma(0.5 * (nu - static_cast<double>(i)), 1.0));
    for (arma::uword j = 0; j < i; ++j) bart(i, j) = rng.normal();
  }
  const arma::mat la = lpsi_inv * bart;  // Sigma^-1 = la la'
  const arma::mat la_inv = arma::inv(arma::trimatl(la));
  return arma::symmatu(la_inv.t() * la_inv);
}

arma::mat sample_sigma_iw(const arma::mat& resid, const PriorConfig& config, Rng& rng) {
  const arma::uword q = resid.n_cols;
  const arma::mat psi = config.iw_psi * arma::eye(q, q) + resid.t() * resid;
  return sample_inv_wishart(config.iw_dof(q) + static_cast<double>(resid.n_rows), psi, rng);
}

void ldl_from_sigma(const arma::mat& sigma, arma::mat& w, arma::vec& log_d) {
  arma::mat l;
  if (!arma::chol(l, sigma, "lower")) throw NumericalError("ldl_from_sigma: matrix is not SPD");
  const arma::vec d = l.diag();
  const arma::mat unit = l.each_row() / d.t();
  w = arma::inv(arma::trimatl(unit));
  w.diag().ones();
  w = arma::trimatl(w);
  log_d = 2.0 * arma::log(d);
}

}  // namespace msprr::continuous
