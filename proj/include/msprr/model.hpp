#pragma once

#include "msprr/rng.hpp"

#include <armadillo>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace msprr {

/// Responses Y (T x q) and covariates X (T x p), one row per time point.
struct Dataset {
  arma::mat y;
  arma::mat x;
  std::vector<std::string> time_labels;  // optional; empty or length T

  arma::uword periods() const { return y.n_rows; }
  arma::uword responses() const { return y.n_cols; }
  arma::uword covariates() const { return x.n_cols; }
};

/// Fixed hyperparameters. Gamma priors use shape/rate; the inverse-gamma
/// prior on the volatility innovations uses shape/scale.
struct PriorConfig {
  int K = 2;
  double a_rho = 1.0;   // Beta prior on rho_k
  double b_rho = 1.0;
  double a_coef = 2.0;  // prior variance of alpha entries
  double b_coef = 2.0;  // prior variance of beta entries
  double a_sigma_f = 2.0;  // Gamma prior on the GP signal variance
  double b_sigma_f = 1.0;
  double a_zeta = 2.0;  // Gamma prior on the GP length scale
  double b_zeta = 1.0;
  double a_sv = 5.0;  // inverse-gamma prior on volatility innovation variances
  double b_sv = 0.2;
  double upsilon0_sq = 10.0;  // prior variance of h_{j0}
  double omega_w = 10.0;      // prior variance of each free entry of W
  std::vector<double> dirichlet_d;  // K entries; empty means all ones
  int grid_size = 100;
  double sigma2_f_min = 0.01;
  double sigma2_f_max = 10.0;
  double zeta_min = 0.05;
  double zeta_max = 10.0;
  double d_val = 0.0;      // relabeling threshold
  double nu_matern = 1.5;  // only 3/2 is supported
  double iw_nu = 0.0;      // inverse-Wishart degrees of freedom; 0 means q + 1
  double iw_psi = 1.0;     // inverse-Wishart scale matrix is iw_psi * I_q
  double jitter = 1e-8;      // relative kernel nugget
  double jitter_max = 1e-4;  // upper bound for the escalated nugget
  double grrr_tol = 1e-6;
  int grrr_max_iter = 200;

  arma::vec dirichlet() const;
  double iw_dof(arma::uword q) const { return iw_nu > 0.0 ? iw_nu : static_cast<double>(q) + 1.0; }
};

/// Parameters owned by one hidden state k.
struct RegimeParams {
  arma::uvec gamma;  // 0/1 per response, 1 = low-rank group
  arma::uword rank = 1;
  arma::mat a0;  // (q_gamma - r) x r; A = [I_r; A0]
  arma::mat b;   // p x r
  arma::mat c;   // p x q_gamma, C = B A'
  arma::mat f;   // GP values, one row per entry of f_times, one column per flexible response
  arma::uvec f_times;  // time indices (0-based) at which f was drawn
  double rho = 0.5;
  double sigma2_f = 1.0;
  double zeta = 1.0;

  arma::uword q_gamma() const { return static_cast<arma::uword>(arma::accu(gamma)); }
  arma::uvec low_rank_indices() const { return arma::find(gamma == 1); }
  arma::uvec flexible_indices() const { return arma::find(gamma == 0); }
  arma::mat a_full() const;
};

/// One complete draw of all latent quantities. Labels in `s` are 0-based.
struct ChainState {
  arma::uvec s;
  std::vector<RegimeParams> regimes;
  arma::mat xi;         // K x K, row-stochastic
  arma::mat w;          // q x q, unit lower-triangular
  arma::mat h;          // T x q log-variances
  arma::vec h0;         // q
  arma::vec sigma2_sv;  // q

  arma::uword states() const { return regimes.size(); }
  arma::uvec state_times(arma::uword k) const { return arma::find(s == k); }
};

/// Run configuration recorded alongside the draws.
struct StoreMeta {
  std::string variant;
  std::uint64_t seed = 0;
  int iterations = 0;
  int burn_in = 0;
  int thin = 1;
  PriorConfig config;
  arma::uword periods = 0, responses = 0, covariates = 0;
};

struct Draw {
  int iteration = 0;
  ChainState state;
};

/// Append-only record of post-burn-in, thinned draws.
class DrawStore {
 public:
  DrawStore() = default;
  explicit DrawStore(StoreMeta meta) : meta_(std::move(meta)) {}

  void append(int iteration, const ChainState& state);
  const std::vector<Draw>& draws() const { return draws_; }
  std::size_t size() const { return draws_.size(); }
  bool empty() const { return draws_.empty(); }
  const StoreMeta& meta() const { return meta_; }
  StoreMeta& meta() { return meta_; }

  /// Newline-delimited JSON: one meta record followed by one record per draw.
  void save(const std::filesystem::path& path) const;
  static DrawStore load(const std::filesystem::path& path);
  std::string to_ndjson() const;
  static DrawStore from_ndjson(const std::string& text);

 private:
  StoreMeta meta_;
  std::vector<Draw> draws_;
};

/// Returns the violated invariants of (config, data); empty when valid.
std::vector<std::string> validation_problems(const PriorConfig& config, const Dataset& data);
/// Throws ValidationError listing every problem.
void validate(const PriorConfig& config, const Dataset& data);

/// Minimum number of periods each state receives at initialization.
arma::uword min_state_size(const Dataset& data);

/// Deterministic initial state given the seed.
ChainState init_state(const PriorConfig& config, const Dataset& data, std::uint64_t seed);

// --- file formats -----------------------------------------------------------

/// key = value text, '#' starts a comment. Unknown keys are errors.
PriorConfig parse_config(const std::string& text);
PriorConfig load_config(const std::filesystem::path& path);
std::string format_config(const PriorConfig& config);

/// CSV with header y1..yq then x1..xp; an optional leading column named
/// "time" carries labels.
Dataset parse_dataset_csv(const std::string& text);
Dataset load_dataset(const std::filesystem::path& path);
std::string format_dataset_csv(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// --- JSON -------------------------------------------------------------------

nlohmann::json matrix_to_json(const arma::mat& m);
arma::mat matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriorConfig& config);
PriorConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChainState& state);
ChainState state_from_json(const nlohmann::json& j);

}  // namespace msprr
