#include "msprr/marginal_covariance.hpp"

#include "msprr/errors.hpp"

#include <cmath>
#include <numbers>

namespace msprr {

StateContext::StateContext(const arma::mat& y_k, const arma::mat& x_k, const arma::mat& w, const arma::mat& h_k,
                           const gp::KernelMatrix* kernel)
    : y_(y_k), x_(x_k), w_(w) {
  const arma::uword n = y_.n_rows, q = y_.n_cols, p = x_.n_cols;
  if (x_.n_rows != n || h_k.n_rows != n || h_k.n_cols != q || w.n_rows != q || w.n_cols != q) {
    throw DimensionError("StateContext: inconsistent dimensions");
  }
  eh_ = arma::exp(-h_k);
  yw_ = y_ * w_.t();
  sum_h_ = arma::accu(h_k);
  uu_ = arma::accu(eh_ % arma::square(yw_));
  qx_.set_size(p, p, q);
  xu_.set_size(p, q);
  for (arma::uword j = 0; j < q; ++j) {
    const arma::mat wx = x_.each_col() % eh_.col(j);
    qx_.slice(j) = x_.t() * wx;
    xu_.col(j) = x_.t() * (eh_.col(j) % yw_.col(j));
  }
  has_gp_ = kernel != nullptr && n > 0;
  if (has_gp_) {
    l_ = kernel->chol;
    p_.set_size(n, n, q);
    rx_.set_size(n, p, q);
    ry_.set_size(n, q);
    const arma::mat lt = l_.t();
    for (arma::uword j = 0; j < q; ++j) {
      const arma::mat dl = l_.each_col() % eh_.col(j);
      p_.slice(j) = lt * dl;
      rx_.slice(j) = lt * (x_.each_col() % eh_.col(j));
      ry_.col(j) = lt * (eh_.col(j) % yw_.col(j));
    }
  }
}

GlsMoments StateContext::noise_part(const arma::uvec& low) const {
  const arma::uword p = x_.n_cols, q = y_.n_cols, ql = low.n_elem;
  GlsMoments m;
  m.g.zeros(p * ql, p * ql);
  m.b.zeros(p * ql);
  for (arma::uword a = 0; a < ql; ++a) {
    const arma::uword la = low[a];
    for (arma::uword j = la; j < q; ++j) m.b.subvec(a * p, a * p + p - 1) += w_(j, la) * xu_.col(j);
    for (arma::uword b = a; b < ql; ++b) {
      const arma::uword lb = low[b];
      arma::mat blk(p, p, arma::fill::zeros);
      for (arma::uword j = std::max(la, lb); j < q; ++j) blk += (w_(j, la) * w_(j, lb)) * qx_.slice(j);
      m.g.submat(a * p, b * p, a * p + p - 1, b * p + p - 1) = blk;
      if (b != a) m.g.submat(b * p, a * p, b * p + p - 1, a * p + p - 1) = blk.t();
    }
  }
  m.yy = uu_;
  m.log_det = sum_h_;
  m.n_obs = static_cast<double>(y_.n_rows * q);
  return m;
}

StateContext::Woodbury StateContext::woodbury(const arma::uvec& low, const arma::uvec& flex) const {
  const arma::uword n = y_.n_rows, p = x_.n_cols, q = y_.n_cols;
  const arma::uword m = flex.n_elem, ql = low.n_elem;
  arma::mat s(n * m, n * m);
  Woodbury wb;
  wb.zu.zeros(n * m, p * ql);
  wb.zy.zeros(n * m);
  for (arma::uword a = 0; a < m; ++a) {
    const arma::uword fa = flex[a];
    for (arma::uword b = a; b < m; ++b) {
      const arma::uword fb = flex[b];
      arma::mat blk(n, n, arma::fill::zeros);
      for (arma::uword j = std::max(fa, fb); j < q; ++j) blk += (w_(j, fa) * w_(j, fb)) * p_.slice(j);
      if (a == b) blk.diag() += 1.0;
      s.submat(a * n, b * n, a * n + n - 1, b * n + n - 1) = blk;
      if (b != a) s.submat(b * n, a * n, b * n + n - 1, a * n + n - 1) = blk.t();
    }
    for (arma::uword l = 0; l < ql; ++l) {
      const arma::uword ll = low[l];
      arma::mat blk(n, p, arma::fill::zeros);
      for (arma::uword j = std::max(fa, ll); j < q; ++j) blk += (w_(j, fa) * w_(j, ll)) * rx_.slice(j);
      wb.zu.submat(a * n, l * p, a * n + n - 1, l * p + p - 1) = blk;
    }
    for (arma::uword j = fa; j < q; ++j) wb.zy.subvec(a * n, a * n + n - 1) += w_(j, fa) * ry_.col(j);
  }
  if (!arma::chol(wb.r, s)) throw NumericalError("Woodbury capacitance matrix is not positive definite");
  return wb;
}

GlsMoments StateContext::marginal_moments(const arma::uvec& gamma) const {
  const arma::uvec low = arma::find(gamma == 1);
  const arma::uvec flex = arma::find(gamma == 0);
  GlsMoments m = noise_part(low);
  if (!has_gp_ || flex.n_elem == 0 || y_.n_rows == 0) return m;
  const Woodbury wb = woodbury(low, flex);
  const arma::mat rt = wb.r.t();
  const arma::mat e = arma::solve(arma::trimatl(rt), wb.zu, arma::solve_opts::fast);
  const arma::vec ey = arma::solve(arma::trimatl(rt), wb.zy, arma::solve_opts::fast);
  m.g -= e.t() * e;
  m.g = arma::symmatu(m.g);
  m.b -= e.t() * ey;
  m.yy -= arma::dot(ey, ey);
  m.log_det += 2.0 * arma::accu(arma::log(wb.r.diag()));
  return m;
}

GlsMoments StateContext::noise_moments(const arma::uvec& gamma, const arma::mat& f) const {
  const arma::uvec low = arma::find(gamma == 1);
  const arma::uvec flex = arma::find(gamma == 0);
  GlsMoments m = noise_part(low);
  const arma::uword p = x_.n_cols;
  if (f.n_rows != y_.n_rows || f.n_cols != flex.n_elem) throw DimensionError("noise_moments: f has the wrong shape");
  arma::mat resid = y_;
  for (arma::uword a = 0; a < flex.n_elem; ++a) resid.col(flex[a]) -= f.col(a);
  const arma::mat rw = resid * w_.t();
  const arma::mat lam = (eh_ % rw) * w_;  // rows are Lambda_t r_t
  for (arma::uword l = 0; l < low.n_elem; ++l) m.b.subvec(l * p, l * p + p - 1) = x_.t() * lam.col(low[l]);
  m.yy = arma::accu(eh_ % arma::square(rw));
  return m;
}

StateContext::FDraw StateContext::sample_f(const arma::uvec& gamma, const arma::mat& c_star, Rng& rng) const {
  const arma::uvec low = arma::find(gamma == 1);
  const arma::uvec flex = arma::find(gamma == 0);
  const arma::uword n = y_.n_rows, m = flex.n_elem;
  FDraw out;
  out.f.zeros(n, m);
  out.mean.zeros(n, m);
  if (n == 0 || m == 0) return out;
  if (!has_gp_) throw NumericalError("sample_f: missing kernel");
  if (c_star.n_rows != x_.n_cols || c_star.n_cols != low.n_elem) throw DimensionError("sample_f: c_star has the wrong shape");
  const Woodbury wb = woodbury(low, flex);
  const arma::vec rhs = wb.zy - wb.zu * arma::vectorise(c_star);
  const arma::vec v = arma::solve(arma::trimatl(wb.r.t()), rhs, arma::solve_opts::fast);
  const arma::vec mean_u = arma::solve(arma::trimatu(wb.r), v, arma::solve_opts::fast);
  const arma::vec u = mean_u + arma::solve(arma::trimatu(wb.r), rng.normal_vec(n * m), arma::solve_opts::fast);
  for (arma::uword a = 0; a < m; ++a) {
    out.f.col(a) = l_ * u.subvec(a * n, a * n + n - 1);
    out.mean.col(a) = l_ * mean_u.subvec(a * n, a * n + n - 1);
  }
  return out;
}

}  // namespace msprr
