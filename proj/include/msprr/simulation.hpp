#pragma once

#include "msprr/model.hpp"

#include <armadillo>
#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace msprr::sim {

enum class SwitchPattern { single_switch, random, none };
// Argument of the sine: covariate x_{t, j mod p}, or the period index.
enum class SineInput { covariate, time };

struct ScenarioSpec {
  int id = 1;
  arma::uword p = 5, q = 5, periods = 100;
  arma::uword k_true = 2;
  std::vector<arma::uword> q_gamma{4, 2};
  std::vector<arma::uword> rank{2, 1};
  SwitchPattern pattern = SwitchPattern::single_switch;
  arma::uword switch_at = 60;  // periods in the first regime
  double persistence = 0.95;   // self-transition probability for random switching
  double amplitude = 2.0;
  SineInput sine_input = SineInput::covariate;
  bool sv_in_estimation = false;
};

/// Presets 1..6. Scenarios 4-6 repeat 1-3 and flag SV estimation.
ScenarioSpec scenario(int id);
/// Estimation variant matching the preset ("constant-volatility", "ms-prr" or "prr-gp").
std::string estimation_variant(const ScenarioSpec& spec);

struct GroundTruth {
  arma::mat m;  // T x q noise-free mean
  arma::uvec s; // 0-based labels
  std::vector<arma::uvec> gamma;
  std::vector<arma::uword> rank;
  std::vector<arma::mat> c;  // p x q_gamma, columns follow the low-rank responses in order
  arma::vec error_var;
  arma::mat f;  // T x q sine values used for flexible responses
};

/// Time reading: amplitude * sin(2 pi (t + 1) / periods + 2 pi j / q), 0-based t and j.
double sine_term(arma::uword t, arma::uword j, arma::uword periods, arma::uword q, double amplitude);
/// Covariate reading: amplitude * sin(x + 2 pi j / q) with x = x_{t, j mod p}.
double covariate_sine(double x, arma::uword j, arma::uword q, double amplitude);

std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
void save_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_truth(const std::filesystem::path& path);

}  // namespace msprr::sim
