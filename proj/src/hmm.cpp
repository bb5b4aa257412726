#include "msprr/hmm.hpp"

#include "msprr/errors.hpp"
#include "msprr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace msprr::hmm {

arma::mat state_mean(const Dataset& data, const RegimeParams& reg, const PriorConfig& config) {
  const arma::uword n = data.periods(), q = data.responses();
  arma::mat mean(n, q, arma::fill::zeros);
  const arma::uvec low = reg.low_rank_indices();
  const arma::uvec flex = reg.flexible_indices();
  if (reg.c.n_cols == low.n_elem && reg.c.n_rows == data.covariates()) {
    const arma::mat xc = data.x * reg.c;
    for (arma::uword l = 0; l < low.n_elem; ++l) mean.col(low[l]) = xc.col(l);
  }
  if (flex.n_elem == 0 || reg.f_times.n_elem == 0 || reg.f.n_cols != flex.n_elem) return mean;
  arma::uvec inside(n, arma::fill::zeros);
  for (arma::uword i = 0; i < reg.f_times.n_elem; ++i) inside[reg.f_times[i]] = i + 1;
  const arma::uvec outside = arma::find(inside == 0);
  arma::mat fout;
  if (outside.n_elem > 0) {
    const arma::mat xtrain = data.x.rows(reg.f_times);
    const auto kernel = gp::build_kernel(xtrain, reg.sigma2_f, reg.zeta, config.jitter, config.jitter_max);
    fout = gp::predictive_mean(data.x.rows(outside), xtrain, reg.f, kernel);
  }
  for (arma::uword a = 0; a < flex.n_elem; ++a) {
    for (arma::uword i = 0; i < reg.f_times.n_elem; ++i) mean(reg.f_times[i], flex[a]) = reg.f(i, a);
    for (arma::uword i = 0; i < outside.n_elem; ++i) mean(outside[i], flex[a]) = fout(i, a);
  }
  return mean;
}

double gaussian_loglik(const arma::rowvec& e, const arma::mat& w, const arma::rowvec& h) {
  const arma::rowvec u = e * w.t();
  const double q = static_cast<double>(e.n_elem);
  return -0.5 * (q * std::log(2.0 * std::numbers::pi) + arma::accu(h) + arma::accu(arma::exp(-h) % arma::square(u)));
}

arma::mat emission_loglik(const Dataset& data, const std::vector<arma::mat>& means, const ChainState& st) {
  const arma::uword n = data.periods(), kk = means.size();
  const double q = static_cast<double>(data.responses());
  const double c0 = q * std::log(2.0 * std::numbers::pi);
  const arma::vec sum_h = arma::sum(st.h, 1);
  const arma::mat eh = arma::exp(-st.h);
  arma::mat out(n, kk);
  for (arma::uword k = 0; k < kk; ++k) {
    const arma::mat u = (data.y - means[k]) * st.w.t();
    out.col(k) = -0.5 * (c0 + sum_h + arma::sum(eh % arma::square(u), 1));
  }
  return out;
}

arma::mat emission_loglik(const Dataset& data, const ChainState& st, const PriorConfig& config) {
  std::vector<arma::mat> means;
  for (const auto& reg : st.regimes) means.push_back(state_mean(data, reg, config));
  return emission_loglik(data, means, st);
}

FfbsResult ffbs(const arma::mat& log_emission, const arma::mat& xi, Rng& rng) {
  const arma::uword n = log_emission.n_rows, kk = log_emission.n_cols;
  FfbsResult res;
  res.s.zeros(n);
  res.filtered.zeros(n, kk);
  if (n == 0) return res;
  const arma::mat log_xi = arma::log(xi);
  arma::vec prev(kk);
  for (arma::uword t = 0; t < n; ++t) {
    arma::vec lp(kk);
    for (arma::uword l = 0; l < kk; ++l) {
      double pred;
      if (t == 0) {
        pred = -std::log(static_cast<double>(kk));
      } else {
        pred = linalg::log_sum_exp(prev + log_xi.col(l));
      }
      lp[l] = pred + log_emission(t, l);
    }
    if (!std::isfinite(lp.max())) {
      throw NumericalError("ffbs: every state has zero probability at period " + std::to_string(t + 1));
    }
    prev = lp - linalg::log_sum_exp(lp);
    res.filtered.row(t) = arma::exp(prev).t();
  }
  res.s[n - 1] = rng.categorical_log(arma::log(res.filtered.row(n - 1).t()));
  for (arma::uword t = n - 1; t-- > 0;) {
    const arma::vec lw = arma::log(res.filtered.row(t).t()) + log_xi.col(res.s[t + 1]);
    if (!std::isfinite(lw.max())) throw NumericalError("ffbs: backward step has no admissible state");
    res.s[t] = rng.categorical_log(lw);
  }
  return res;
}

arma::mat hamming_matrix(const std::vector<arma::uvec>& current, const std::vector<arma::uvec>& previous) {
  arma::mat d(current.size(), previous.size());
  for (std::size_t u = 0; u < current.size(); ++u) {
    for (std::size_t v = 0; v < previous.size(); ++v) {
      d(u, v) = static_cast<double>(arma::accu(current[u] != previous[v]));
    }
  }
  return d;
}

arma::mat softmax_rows_neg(const arma::mat& d) {
  arma::mat out(arma::size(d));
  for (arma::uword u = 0; u < d.n_rows; ++u) out.row(u) = linalg::normalize_log_weights(-d.row(u).t()).t();
  return out;
}

arma::uvec relabel_permutation(const ChainState& st, const std::vector<arma::uvec>& previous, double d_val) {
  const arma::uword kk = st.states();
  arma::uvec counts(kk, arma::fill::zeros);
  for (auto v : st.s) ++counts[v];
  std::vector<arma::uword> order(kk);
  std::iota(order.begin(), order.end(), 0);
  auto key_less = [&](arma::uword a, arma::uword b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return st.regimes[a].q_gamma() > st.regimes[b].q_gamma();
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  const bool use_distance = previous.size() == kk;
  for (arma::uword i = 0; i < kk;) {
    arma::uword j = i + 1;
    while (j < kk && !key_less(order[i], order[j]) && !key_less(order[j], order[i])) ++j;
    const arma::uword len = j - i;
    if (len >= 2 && use_distance) {
      std::vector<arma::uvec> cur, prev;
      for (arma::uword a = i; a < j; ++a) {
        cur.push_back(st.regimes[order[a]].gamma);
        prev.push_back(previous[a]);
      }
      const arma::mat d = hamming_matrix(cur, prev);
      if (len == 2) {
        const arma::mat dn = softmax_rows_neg(d);
        const double dv = dn(0, 1) + dn(1, 0) - dn(0, 0) - dn(1, 1);
        if (dv > d_val) std::swap(order[i], order[i + 1]);
      } else {
        std::vector<arma::uword> perm(len);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<arma::uword> best = perm;
        double best_cost = arma::datum::inf;
        do {
          double cost = 0.0;
          for (arma::uword a = 0; a < len; ++a) cost += d(perm[a], a);
          if (cost < best_cost) {
            best_cost = cost;
            best = perm;
          }
        } while (std::next_permutation(perm.begin(), perm.end()));
        std::vector<arma::uword> grp(order.begin() + i, order.begin() + j);
        for (arma::uword a = 0; a < len; ++a) order[i + a] = grp[best[a]];
      }
    }
    i = j;
  }
  return arma::uvec(order);
}

void apply_permutation(ChainState& st, const arma::uvec& perm) {
  const arma::uword kk = perm.n_elem;
  arma::uvec inv(kk);
  for (arma::uword a = 0; a < kk; ++a) inv[perm[a]] = a;
  std::vector<RegimeParams> regimes(kk);
  for (arma::uword a = 0; a < kk; ++a) regimes[a] = st.regimes[perm[a]];
  st.regimes = std::move(regimes);
  for (auto& v : st.s) v = inv[v];
  if (st.xi.n_rows == kk) st.xi = st.xi.submat(perm, perm);
}

arma::uvec relabel(ChainState& st, const std::vector<arma::uvec>& previous, double d_val) {
  const arma::uvec perm = relabel_permutation(st, previous, d_val);
  apply_permutation(st, perm);
  return perm;
}

}  // namespace msprr::hmm
