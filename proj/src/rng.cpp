#include "msprr/rng.hpp"

#include "msprr/linalg.hpp"

#include <sstream>

namespace msprr {

Rng::Rng(std::uint64_t seed) : engine_(seed), normal_(0.0, 1.0) {}

double Rng::uniform() {
  double u = 0.0;
  do {
    u = std::generate_canonical<double, 53>(engine_);
  } while (u <= 0.0);
  return u;
}

double Rng::normal() { return normal_(engine_); }

arma::vec Rng::normal_vec(arma::uword n) {
  arma::vec z(n);
  for (arma::uword i = 0; i < n; ++i) z[i] = normal();
  return z;
}

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Rng::inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

arma::vec Rng::dirichlet(const arma::vec& alpha) {
  arma::vec g(alpha.n_elem);
  for (arma::uword i = 0; i < alpha.n_elem; ++i) g[i] = gamma(alpha[i], 1.0);
  return g / arma::accu(g);
}

std::size_t Rng::uniform_index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t Rng::categorical_log(const arma::vec& log_weights) {
  const arma::vec p = linalg::normalize_log_weights(log_weights);
  const double u = uniform();
  double acc = 0.0;
  for (arma::uword i = 0; i < p.n_elem; ++i) {
    acc += p[i];
    if (u <= acc) return i;
  }
  // Rounding left the cumulative sum short of u; fall back to the last
  // index with positive mass.
  for (arma::uword i = p.n_elem; i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.n_elem - 1;
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << normal_;
  return out.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  in >> engine_ >> normal_;
}

bool Rng::operator==(const Rng& other) const {
  return engine_ == other.engine_ && normal_ == other.normal_;
}

}  // namespace msprr
