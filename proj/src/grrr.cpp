#include "msprr/grrr.hpp"

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <cmath>
#include <numbers>

namespace msprr::grrr {

double log_likelihood(const GlsMoments& m, const arma::vec& c) {
  const double quad = m.yy - 2.0 * arma::dot(m.b, c) + arma::dot(c, m.g * c);
  return -0.5 * (m.n_obs * std::log(2.0 * std::numbers::pi) + m.log_det + quad);
}

namespace {

// H = (I (x) B)' G (I (x) B) and h = (I (x) B)' b, built block by block:
// block (l, l') of H is B' G_{l l'} B.
void alpha_moments(const GlsMoments& m, const arma::mat& b, arma::uword q_gamma, arma::mat& h, arma::vec& hv) {
  const arma::uword p = b.n_rows, r = b.n_cols;
  const arma::uword ld = m.g.n_rows;
  h.set_size(q_gamma * r, q_gamma * r);
  hv.zeros(q_gamma * r);
  // gb = G (I (x) B), (p q_gamma) x (q_gamma r)
  arma::mat gb(ld, q_gamma * r, arma::fill::zeros);
  for (arma::uword l2 = 0; l2 < q_gamma; ++l2)
    for (arma::uword j = 0; j < r; ++j) {
      double* out = gb.colptr(l2 * r + j);
      for (arma::uword c2 = 0; c2 < p; ++c2) {
        const double w = b(c2, j);
        const double* col = m.g.colptr(l2 * p + c2);
        for (arma::uword i = 0; i < ld; ++i) out[i] += w * col[i];
      }
    }
  for (arma::uword l = 0; l < q_gamma; ++l)
    for (arma::uword i = 0; i < r; ++i) {
      const double* bi = b.colptr(i);
      double acc = 0.0;
      for (arma::uword c = 0; c < p; ++c) acc += bi[c] * m.b[l * p + c];
      hv[l * r + i] = acc;
      for (arma::uword col = 0; col < q_gamma * r; ++col) {
        const double* g = gb.colptr(col) + l * p;
        double v = 0.0;
        for (arma::uword c = 0; c < p; ++c) v += bi[c] * g[c];
        h(l * r + i, col) = v;
      }
    }
}

// M = (A (x) I_p)' G (A (x) I_p), n = (A (x) I_p)' b.
void beta_moments(const GlsMoments& m, const arma::mat& a, arma::mat& mm, arma::vec& nn) {
  const arma::uword q_gamma = a.n_rows, r = a.n_cols;
  const arma::uword p = m.g.n_rows / q_gamma;
  mm.zeros(p * r, p * r);
  nn.zeros(p * r);
  const double* g = m.g.memptr();
  const arma::uword ld = m.g.n_rows;
  for (arma::uword i = 0; i < r; ++i) {
    for (arma::uword l = 0; l < q_gamma; ++l) {
      const double ali = a(l, i);
      if (ali == 0.0) continue;
      for (arma::uword c = 0; c < p; ++c) nn[i * p + c] += ali * m.b[l * p + c];
      for (arma::uword j = 0; j < r; ++j) {
        for (arma::uword l2 = 0; l2 < q_gamma; ++l2) {
          const double w = ali * a(l2, j);
          if (w == 0.0) continue;
          for (arma::uword c2 = 0; c2 < p; ++c2) {
            const double* col = g + (l2 * p + c2) * ld + l * p;
            double* out = mm.colptr(j * p + c2) + i * p;
            for (arma::uword c = 0; c < p; ++c) out[c] += w * col[c];
          }
        }
      }
    }
  }
}

}  // namespace

arma::mat update_alpha(const GlsMoments& m, const arma::mat& b, arma::uword q_gamma, bool* ridged) {
  const arma::uword r = b.n_cols;
  if (r >= q_gamma) throw DimensionError("update_alpha: rank must be below q_gamma");
  // c = (I (x) B) vec(A'); the first r^2 entries of vec(A') are fixed at vec(I_r).
  arma::mat h;
  arma::vec hv;
  alpha_moments(m, b, q_gamma, h, hv);
  const arma::uword nfix = r * r;
  const arma::uword nfree = q_gamma * r - nfix;
  const arma::vec v = arma::vectorise(arma::eye(r, r));
  const arma::mat h_jj = h.submat(nfix, nfix, nfix + nfree - 1, nfix + nfree - 1);
  const arma::mat h_ji = h.submat(nfix, 0, nfix + nfree - 1, nfix - 1);
  const arma::vec rhs = hv.subvec(nfix, nfix + nfree - 1) - h_ji * v;
  const arma::vec alpha = linalg::spd_solve(h_jj, rhs, ridged);
  arma::mat a(q_gamma, r);
  a.head_rows(r).eye();
  // alpha is vec(A0'), i.e. A0 read row by row.
  a.tail_rows(q_gamma - r) = arma::reshape(alpha, r, q_gamma - r).t();
  return a;
}

arma::mat update_beta(const GlsMoments& m, const arma::mat& a, bool* ridged) {
  const arma::uword p = m.g.n_rows / a.n_rows;
  arma::mat mm;
  arma::vec nn;
  beta_moments(m, a, mm, nn);
  return arma::reshape(linalg::spd_solve(mm, nn, ridged), p, a.n_cols);
}

void identity_top_factor(const arma::mat& c, arma::uword r, arma::mat& a, arma::mat& b) {
  arma::mat u, v;
  arma::vec s;
  if (!arma::svd(u, s, v, c)) throw NumericalError("identity_top_factor: SVD failed");
  const arma::mat ur = u.head_cols(r);
  const arma::mat vr = v.head_cols(r);
  const arma::mat sr = arma::diagmat(s.head(r));
  arma::mat t = vr.head_rows(r);
  // A near-singular top block means the leading responses carry no signal
  // along the retained directions; nudge it so the factorization exists.
  if (arma::rcond(t) < 1e-10) t += 1e-6 * arma::eye(r, r);
  const arma::mat tinv = arma::inv(t);
  a = vr * tinv;
  a.head_rows(r).eye();
  b = ur * sr * t.t();
}

namespace {

Solution iterate(const GlsMoments& m, arma::mat a, double tol, int max_iter) {
  Solution sol;
  const arma::uword q_gamma = a.n_rows;
  bool ridged = false;
  arma::mat b = update_beta(m, a, &ridged);
  sol.ridged = sol.ridged || ridged;
  arma::mat c = b * a.t();
  sol.trace.push_back(log_likelihood(m, arma::vectorise(c)));
  for (int it = 1; it <= max_iter; ++it) {
    a = update_alpha(m, b, q_gamma, &ridged);
    sol.ridged = sol.ridged || ridged;
    sol.trace.push_back(log_likelihood(m, arma::vectorise(b * a.t())));
    b = update_beta(m, a, &ridged);
    sol.ridged = sol.ridged || ridged;
    const arma::mat c_new = b * a.t();
    sol.trace.push_back(log_likelihood(m, arma::vectorise(c_new)));
    const double denom = std::max(arma::norm(c_new, "fro"), 1e-300);
    const double change = arma::norm(c_new - c, "fro") / denom;
    c = c_new;
    sol.iterations = it;
    if (change < tol) {
      sol.converged = true;
      break;
    }
  }
  sol.a = a;
  sol.b = b;
  sol.c = c;
  sol.loglik = sol.trace.back();
  return sol;
}

}  // namespace

namespace {

// Rank-r truncation of c_ols in the metric of G, with G approximated by a
// Kronecker product S (x) P built from its p x p blocks. Exact reduced-rank
// regression whenever G has that form.
arma::mat weighted_truncation(const GlsMoments& m, const arma::mat& c_ols, arma::uword r) {
  const arma::uword p = c_ols.n_rows, qg = c_ols.n_cols;
  arma::mat pm(p, p, arma::fill::zeros);
  for (arma::uword l = 0; l < qg; ++l) pm += m.g.submat(l * p, l * p, l * p + p - 1, l * p + p - 1);
  pm /= static_cast<double>(qg);
  arma::mat rp;
  if (!arma::chol(rp, pm)) return c_ols;
  const arma::mat pinv = arma::inv_sympd(pm);
  arma::mat sm(qg, qg);
  for (arma::uword l = 0; l < qg; ++l)
    for (arma::uword l2 = 0; l2 < qg; ++l2)
      sm(l, l2) = arma::trace(m.g.submat(l * p, l2 * p, l * p + p - 1, l2 * p + p - 1) * pinv) / static_cast<double>(p);
  sm = arma::symmatu(sm);
  arma::mat rs;
  if (!arma::chol(rs, sm)) return c_ols;
  arma::mat u, v;
  arma::vec d;
  if (!arma::svd(u, d, v, rp * c_ols * rs.t())) return c_ols;
  const arma::mat low = u.head_cols(r) * arma::diagmat(d.head(r)) * v.head_cols(r).t();
  return arma::solve(arma::trimatu(rp), low) * arma::inv(arma::trimatl(rs.t()));
}

}  // namespace

Solution solve(const GlsMoments& m, arma::uword p, arma::uword q_gamma, arma::uword r, double tol, int max_iter) {
  if (r < 1 || r >= q_gamma || r > p) throw DimensionError("grrr::solve: rank out of range");
  if (m.g.n_rows != p * q_gamma) throw DimensionError("grrr::solve: moments do not match p * q_gamma");
  bool ridged = false;
  const arma::mat c_ols = arma::reshape(linalg::spd_solve(m.g, m.b, &ridged), p, q_gamma);
  arma::mat a, b;
  identity_top_factor(weighted_truncation(m, c_ols, r), r, a, b);
  Solution sol = iterate(m, a, tol, max_iter);
  sol.ridged = sol.ridged || ridged;
  return sol;
}

Solution solve_from(const GlsMoments& m, const arma::mat& a_start, double tol, int max_iter) {
  return iterate(m, a_start, tol, max_iter);
}

namespace kron {

namespace {

arma::mat selector(const arma::uvec& gamma, arma::uword value) {
  const arma::uvec idx = arma::find(gamma == value);
  arma::mat s(gamma.n_elem, idx.n_elem, arma::fill::zeros);
  for (arma::uword l = 0; l < idx.n_elem; ++l) s(idx[l], l) = 1.0;
  return s;
}

}  // namespace

arma::mat u1(const arma::uvec& gamma, const arma::mat& x) { return arma::kron(selector(gamma, 1), x); }

arma::mat u2(const arma::uvec& gamma, arma::uword n) { return arma::kron(selector(gamma, 0), arma::eye(n, n)); }

GlsMoments moments(const arma::mat& y, const arma::mat& x, const arma::mat& sigma, const arma::uvec& gamma) {
  const arma::mat u = u1(gamma, x);
  const arma::vec yv = arma::vectorise(y);
  const arma::mat si = arma::inv_sympd(sigma);
  GlsMoments m;
  m.g = u.t() * si * u;
  m.b = u.t() * si * yv;
  m.yy = arma::dot(yv, si * yv);
  double sign = 0.0;
  arma::log_det(m.log_det, sign, sigma);
  m.n_obs = static_cast<double>(yv.n_elem);
  return m;
}

arma::mat update_alpha(const Problem& pr, const arma::mat& b) {
  const arma::uword n = pr.y.n_rows, q = pr.y.n_cols;
  const arma::mat ktq = linalg::commutation_matrix(n, q);
  const arma::mat sig_t = ktq * pr.sigma_y * ktq.t();  // time-major layout
  const arma::mat si = arma::inv_sympd(sig_t);
  const arma::mat xb = arma::kron(pr.x * b, arma::eye(q, q));
  const arma::vec yt = arma::vectorise(pr.y.t());
  const arma::mat mb = xb.t() * si * xb;
  const arma::vec nb = xb.t() * si * yt;
  const auto rp = linalg::build_restrictions(q, pr.q_gamma, pr.r);
  const arma::mat& g = rp.g_mat;
  const arma::vec alpha = g * arma::solve(g.t() * mb * g, g.t() * (nb - mb * rp.g_vec)) + rp.g_vec;
  const arma::mat v1a = arma::reshape(alpha, q, pr.r);  // V1' A
  return v1a.head_rows(pr.q_gamma);
}

arma::mat update_beta(const Problem& pr, const arma::mat& a) {
  const arma::uword n = pr.y.n_rows, q = pr.y.n_cols, p = pr.x.n_cols, r = a.n_cols;
  const arma::mat ktq = linalg::commutation_matrix(n, q);
  const arma::mat sig_t = ktq * pr.sigma_y * ktq.t();
  const arma::mat si = arma::inv_sympd(sig_t);
  arma::mat v1a(q, r, arma::fill::zeros);
  v1a.head_rows(a.n_rows) = a;
  const arma::mat kpr = linalg::commutation_matrix(p, r);
  const arma::mat xa = arma::kron(pr.x, v1a) * kpr;
  const arma::vec yt = arma::vectorise(pr.y.t());
  const arma::mat ma = xa.t() * si * xa;
  const arma::vec na = xa.t() * si * yt;
  return arma::reshape(arma::solve(ma, na), p, r);
}

}  // namespace kron

}  // namespace msprr::grrr
