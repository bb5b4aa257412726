#pragma once

#include "msprr/model.hpp"
#include "msprr/rng.hpp"

#include <armadillo>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace msprr {

enum class Variant { ms_prr, prr_gp, constant_volatility };
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct RunPlan {
  int iterations = 1000;  // total sweeps, burn-in included
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // 0 disables checkpoints
  // The allocation target is raised to a power rising linearly to 1 over this
  // fraction of the burn-in; 0 runs the untempered chain from the start.
  double anneal_fraction = 0.5;
  std::filesystem::path checkpoint_path;
  Variant variant = Variant::ms_prr;
};
std::vector<std::string> plan_problems(const RunPlan& plan);

/// Running totals reported after a run.
struct SamplerStats {
  long gamma_proposals = 0;
  long gamma_accepts = 0;
  long ridge_fallbacks = 0;
  long grid_retained = 0;
  long grrr_unconverged = 0;
};

/// Partially collapsed Gibbs sampler. One call to sweep() performs, in
/// order: for every state k the allocation (MSSS), rank, GP values, alpha,
/// beta, rho, row k of Xi, zeta and sigma2_f; then the state path by FFBS
/// followed by relabeling; then either the volatility paths with their
/// initial values and innovation variances followed by W, or a single
/// inverse-Wishart draw in the constant-volatility variant.
class Sampler {
 public:
  Sampler(Dataset data, PriorConfig config, RunPlan plan);

  void sweep();
  /// Runs until plan.iterations sweeps are complete, appending retained draws.
  void run(DrawStore& store, const std::function<void(int)>& progress = {});

  int iteration() const { return iteration_; }
  const ChainState& state() const { return state_; }
  ChainState& state() { return state_; }
  const PriorConfig& config() const { return config_; }
  const RunPlan& plan() const { return plan_; }
  /// Exponent applied to the allocation target in the coming sweep.
  double gamma_temperature() const;
  const SamplerStats& stats() const { return stats_; }
  const Rng& rng() const { return rng_; }
  StoreMeta meta() const;

  /// Names of the conditional updates in execution order, when enabled.
  void record_steps(std::vector<std::string>* sink) { steps_ = sink; }

  /// Complete sampler state plus the draws retained so far.
  nlohmann::json checkpoint(const DrawStore& store) const;
  static Sampler resume(Dataset data, const nlohmann::json& checkpoint, DrawStore& store);
  void save_checkpoint(const DrawStore& store, const std::filesystem::path& path) const;
  static Sampler load_checkpoint(Dataset data, const std::filesystem::path& path, DrawStore& store);

 private:
  void step(const char* name);
  void update_state(arma::uword k);
  void warm_start();
  void update_path(std::vector<arma::mat>& means);
  void update_volatility(const arma::mat& resid);

  Dataset data_;
  PriorConfig config_;
  RunPlan plan_;
  Rng rng_;
  ChainState state_;
  std::vector<arma::uvec> previous_gammas_;
  int iteration_ = 0;
  SamplerStats stats_;
  std::vector<std::string>* steps_ = nullptr;
};

/// Validates, runs the full plan and returns the store.
DrawStore run_pcg(const Dataset& data, const PriorConfig& config, const RunPlan& plan);

}  // namespace msprr
