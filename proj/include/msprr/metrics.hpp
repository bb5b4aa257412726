#pragma once

#include "msprr/model.hpp"
#include "msprr/simulation.hpp"

#include <armadillo>
#include <json.hpp>

#include <string>
#include <vector>

namespace msprr::metrics {

struct MapEstimates {
  arma::uvec s;                    // per-period mode (0-based)
  std::vector<arma::uvec> gamma;   // joint mode per state
  std::vector<arma::uword> rank;   // mode per state
  std::vector<arma::uword> q_gamma;  // mode of q_gamma per state
};

/// Modes over the stored draws; ties go to the smallest value
/// (lexicographically smallest vector for gamma).
MapEstimates map_estimates(const DrawStore& store);

/// Posterior average of the fitted mean matrix (T x q).
arma::mat posterior_mean_fit(const DrawStore& store, const Dataset& data);

/// ||a - b||_F^2 / (T q).
double mean_squared(const arma::mat& a, const arma::mat& b);
inline double mse(const arma::mat& y_hat, const arma::mat& y) { return mean_squared(y_hat, y); }
inline double mspe(const arma::mat& m_hat, const arma::mat& m) { return mean_squared(m_hat, m); }

struct Scores {
  double accuracy = 0.0;
  double f1 = 0.0;
};
/// Binary scores with 1 as the positive class; F1 is 0 without predicted or
/// actual positives.
Scores classification_scores(const arma::uvec& est, const arma::uvec& truth);

struct Report {
  double mse = 0.0;
  double mspe = 0.0;
  std::vector<double> accuracy_gamma, f1_gamma;  // one entry per true state
  double accuracy_s = 0.0, f1_s = 0.0;
  std::vector<arma::uword> q_gamma_hat, r_hat;
  MapEstimates map;
};

/// Full evaluation against a simulated truth. The state sequence is scored
/// with label 2 (index 1) as the positive class.
Report evaluate(const DrawStore& store, const Dataset& data, const sim::GroundTruth& truth);

nlohmann::json to_json(const Report& report);
std::string csv_header(arma::uword states);
std::string csv_row(const Report& report, int replication);

}  // namespace msprr::metrics
