#include "msprr/linalg.hpp"

#include "msprr/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace msprr::linalg {

arma::mat commutation_matrix(arma::uword m, arma::uword n) {
  arma::mat k(m * n, m * n, arma::fill::zeros);
  for (arma::uword i = 0; i < m; ++i) {
    for (arma::uword j = 0; j < n; ++j) {
      k(j + i * n, i + j * m) = 1.0;
    }
  }
  return k;
}

SelectionPair selection_pair(arma::uword q, arma::uword q_gamma) {
  if (q_gamma > q) throw DimensionError("selection_pair: q_gamma exceeds q");
  SelectionPair sel;
  sel.v1.zeros(q_gamma, q);
  sel.v2.zeros(q - q_gamma, q);
  for (arma::uword i = 0; i < q_gamma; ++i) sel.v1(i, i) = 1.0;
  for (arma::uword i = 0; i < q - q_gamma; ++i) sel.v2(i, q_gamma + i) = 1.0;
  return sel;
}

RestrictionPair build_restrictions(arma::uword q, arma::uword q_gamma, arma::uword r) {
  if (r == 0 || r >= q_gamma || q_gamma > q) {
    throw DimensionError("build_restrictions: need 1 <= r < q_gamma <= q (got q=" +
                         std::to_string(q) + ", q_gamma=" + std::to_string(q_gamma) +
                         ", r=" + std::to_string(r) + ")");
  }
  const arma::uword free_rows = q_gamma - r;
  RestrictionPair out;
  out.g_vec.zeros(q * r);
  out.g_mat.zeros(q * r, r * free_rows);
  for (arma::uword l = 0; l < r; ++l) {
    // 1-based index (l-1)(q+1)+1 becomes l(q+1) for 0-based l.
    out.g_vec[l * (q + 1)] = 1.0;
    for (arma::uword i = 0; i < free_rows; ++i) {
      out.g_mat(q * l + r + i, l * free_rows + i) = 1.0;
    }
  }
  return out;
}

ScatteredCovariance::ScatteredCovariance(arma::cube blocks) : blocks_(std::move(blocks)) {}

arma::mat ScatteredCovariance::dense() const {
  const arma::uword q = dim();
  const arma::uword n = periods();
  arma::mat out(q * n, q * n, arma::fill::zeros);
  for (arma::uword t = 0; t < n; ++t) {
    for (arma::uword i = 0; i < q; ++i) {
      for (arma::uword j = 0; j < q; ++j) out(t + i * n, t + j * n) = blocks_(i, j, t);
    }
  }
  return out;
}

ScatteredCovariance ScatteredCovariance::inverse() const {
  arma::cube inv(arma::size(blocks_));
  for (arma::uword t = 0; t < periods(); ++t) inv.slice(t) = arma::inv_sympd(blocks_.slice(t));
  return ScatteredCovariance(std::move(inv));
}

double ScatteredCovariance::log_det() const {
  double total = 0.0;
  for (arma::uword t = 0; t < periods(); ++t) {
    double val = 0.0;
    double sign = 0.0;
    arma::log_det(val, sign, blocks_.slice(t));
    total += val;
  }
  return total;
}

arma::vec ScatteredCovariance::multiply(const arma::vec& v) const {
  const arma::uword n = periods();
  const arma::mat as_cols = arma::reshape(v, n, dim());
  arma::mat out(n, dim());
  for (arma::uword t = 0; t < n; ++t) out.row(t) = as_cols.row(t) * blocks_.slice(t);
  return arma::vectorise(out);
}

ScatteredCovariance scatter_sigma(const std::vector<arma::mat>& per_time, arma::uword t_k) {
  if (per_time.size() != t_k) throw DimensionError("scatter_sigma: expected one block per period");
  if (t_k == 0) return ScatteredCovariance(arma::cube());
  const arma::uword q = per_time.front().n_rows;
  arma::cube blocks(q, q, t_k);
  for (arma::uword t = 0; t < t_k; ++t) {
    const arma::mat& s = per_time[t];
    if (s.n_rows != q || s.n_cols != q) throw DimensionError("scatter_sigma: block shape mismatch");
    if (!s.is_symmetric(1e-10 * std::max(1.0, arma::abs(s).max()))) {
      throw NumericalError("scatter_sigma: block " + std::to_string(t) + " is not symmetric");
    }
    arma::mat l;
    if (!arma::chol(l, s, "lower")) {
      throw NumericalError("scatter_sigma: block " + std::to_string(t) + " is not positive definite");
    }
    blocks.slice(t) = s;
  }
  return ScatteredCovariance(std::move(blocks));
}

double log_sum_exp(const arma::vec& x) {
  if (x.is_empty()) return -std::numeric_limits<double>::infinity();
  const double m = x.max();
  if (!std::isfinite(m)) return m;
  return m + std::log(arma::accu(arma::exp(x - m)));
}

arma::vec normalize_log_weights(const arma::vec& x) {
  const double lse = log_sum_exp(x);
  if (!std::isfinite(lse)) return arma::vec(x.n_elem, arma::fill::value(arma::datum::nan));
  return arma::exp(x - lse);
}

arma::mat chol_lower_jittered(const arma::mat& a, double scale, double rel_start, double rel_max,
                              double* jitter_used) {
  arma::mat l;
  const arma::mat eye = arma::eye(a.n_rows, a.n_cols);
  for (double rel = rel_start; rel <= rel_max * (1.0 + 1e-12); rel *= 10.0) {
    const double jitter = rel * scale;
    if (arma::chol(l, a + jitter * eye, "lower")) {
      if (jitter_used != nullptr) *jitter_used = jitter;
      return l;
    }
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation to " +
                       std::to_string(rel_max * scale));
}

namespace {

// Unblocked Cholesky solve for tiny systems; LAPACK call overhead dominates there.
// Fails when a pivot is non-positive or below 1e-7 of the largest one.
bool small_spd_solve(const arma::mat& a, const arma::mat& b, arma::mat& x) {
  const arma::uword n = a.n_rows;
  double l[32 * 32];
  double dmax = 0.0;
  for (arma::uword j = 0; j < n; ++j) {
    double d = a(j, j);
    for (arma::uword k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    dmax = std::max(dmax, d);
    l[j * n + j] = d;
    for (arma::uword i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (arma::uword k = 0; k < j; ++k) v -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = v / d;
    }
  }
  for (arma::uword j = 0; j < n; ++j)
    if (l[j * n + j] <= 1e-7 * dmax) return false;
  x = b;
  for (arma::uword c = 0; c < x.n_cols; ++c) {
    double* v = x.colptr(c);
    for (arma::uword i = 0; i < n; ++i) {
      double t = v[i];
      for (arma::uword k = 0; k < i; ++k) t -= l[i * n + k] * v[k];
      v[i] = t / l[i * n + i];
    }
    for (arma::uword i = n; i-- > 0;) {
      double t = v[i];
      for (arma::uword k = i + 1; k < n; ++k) t -= l[k * n + i] * v[k];
      v[i] = t / l[i * n + i];
    }
  }
  return true;
}

}  // namespace

arma::mat spd_solve(const arma::mat& a, const arma::mat& b, bool* ridged) {
  if (ridged != nullptr) *ridged = false;
  if (a.n_rows > 0 && a.n_rows <= 32) {
    arma::mat x;
    if (small_spd_solve(a, b, x)) return x;
  }
  arma::mat r;
  if (a.n_rows > 0 && arma::chol(r, a)) {
    // Reject factorizations that succeeded on a numerically singular matrix.
    const arma::vec d = r.diag();
    if (d.min() > 1e-7 * d.max()) {
      return arma::solve(arma::trimatu(r), arma::solve(arma::trimatl(r.t()), b, arma::solve_opts::fast), arma::solve_opts::fast);
    }
  }
  if (a.n_rows == 0) return arma::mat(0, b.n_cols);
  const double scale = std::max(arma::trace(a) / static_cast<double>(a.n_rows), 1e-300);
  // Ridge 1e-8 * mean diagonal, escalated if the matrix is indefinite.
  for (double rel = 1e-8; rel <= 1.0; rel *= 100.0) {
    if (arma::chol(r, a + rel * scale * arma::eye(arma::size(a)))) {
      if (ridged != nullptr) *ridged = true;
      return arma::solve(arma::trimatu(r), arma::solve(arma::trimatl(r.t()), b, arma::solve_opts::fast), arma::solve_opts::fast);
    }
  }
  throw NumericalError("spd_solve: matrix is not positive semidefinite");
}

}  // namespace msprr::linalg
