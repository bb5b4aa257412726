#pragma once

#include <armadillo>

#include <cstdint>
#include <random>
#include <string>

namespace msprr {

/// Seeded random source shared by every sampler. All draws go through this
/// class so that a run is reproducible from (seed, call sequence) and a
/// checkpoint can capture the complete generator state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  double uniform();  ///< U(0,1), never exactly 0.
  double normal();
  arma::vec normal_vec(arma::uword n);

  /// Gamma with shape/rate parameterization.
  double gamma(double shape, double rate);
  double inv_gamma(double shape, double rate);
  double beta(double a, double b);
  arma::vec dirichlet(const arma::vec& alpha);

  std::size_t uniform_index(std::size_t n);
  /// Draws an index with probability proportional to exp(log_weights).
  std::size_t categorical_log(const arma::vec& log_weights);

  std::string serialize() const;
  void deserialize(const std::string& text);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace msprr
