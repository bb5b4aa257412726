#include "msprr/sampler.hpp"

#include "msprr/continuous.hpp"
#include "msprr/discrete.hpp"
#include "msprr/errors.hpp"
#include "msprr/gp_kernel.hpp"
#include "msprr/hmm.hpp"
#include "msprr/laplace.hpp"
#include "msprr/marginal_covariance.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

namespace msprr {

Variant parse_variant(const std::string& name) {
  if (name == "ms-prr") return Variant::ms_prr;
  if (name == "prr-gp") return Variant::prr_gp;
  if (name == "constant-volatility") return Variant::constant_volatility;
  throw ValidationError({"unknown variant '" + name + "' (expected ms-prr, prr-gp or constant-volatility)"});
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::ms_prr: return "ms-prr";
    case Variant::prr_gp: return "prr-gp";
    case Variant::constant_volatility: return "constant-volatility";
  }
  return "ms-prr";
}

std::vector<std::string> plan_problems(const RunPlan& plan) {
  std::vector<std::string> out;
  if (plan.iterations < 1) out.emplace_back("iterations must be at least 1");
  if (plan.burn_in < 0) out.emplace_back("burn_in must be nonnegative");
  if (plan.burn_in >= plan.iterations) out.emplace_back("burn_in must be smaller than iterations");
  if (plan.thin < 1) out.emplace_back("thin must be at least 1");
  if (plan.checkpoint_every < 0) out.emplace_back("checkpoint_every must be nonnegative");
  if (!(plan.anneal_fraction >= 0.0 && plan.anneal_fraction <= 1.0)) out.emplace_back("anneal_fraction must lie in [0, 1]");
  return out;
}

namespace {

PriorConfig effective_config(PriorConfig config, Variant v) {
  if (v == Variant::prr_gp) {
    config.K = 1;
    if (config.dirichlet_d.size() != 1) config.dirichlet_d.clear();
  }
  return config;
}

}  // namespace

Sampler::Sampler(Dataset data, PriorConfig config, RunPlan plan)
    : data_(std::move(data)), config_(effective_config(std::move(config), plan.variant)), plan_(std::move(plan)),
      rng_(plan_.seed) {
  auto problems = validation_problems(config_, data_);
  const auto pp = plan_problems(plan_);
  problems.insert(problems.end(), pp.begin(), pp.end());
  if (!problems.empty()) throw ValidationError(std::move(problems));
  state_ = init_state(config_, data_, plan_.seed);
  warm_start();
  // Separate the sampler stream from the initialization stream.
  rng_ = Rng(plan_.seed ^ 0x9E3779B97F4A7C15ULL);
}

StoreMeta Sampler::meta() const {
  StoreMeta m;
  m.variant = variant_name(plan_.variant);
  m.seed = plan_.seed;
  m.iterations = plan_.iterations;
  m.burn_in = plan_.burn_in;
  m.thin = plan_.thin;
  m.config = config_;
  m.periods = data_.periods();
  m.responses = data_.responses();
  m.covariates = data_.covariates();
  return m;
}

// Coefficients start at the constrained ML fit for the initial allocation and
// rank. With B = 0 the first alpha draw would come from the prior alone.
void Sampler::warm_start() {
  for (arma::uword k = 0; k < state_.regimes.size(); ++k) {
    RegimeParams& reg = state_.regimes[k];
    const arma::uvec times = state_.state_times(k);
    if (times.n_elem == 0) continue;
    const arma::mat x_k = data_.x.rows(times);
    const gp::KernelMatrix kernel = gp::build_kernel(x_k, reg.sigma2_f, reg.zeta, config_.jitter, config_.jitter_max);
    const StateContext ctx(data_.y.rows(times), x_k, state_.w, state_.h.rows(times), &kernel);
    laplace::EvidenceCache cache(ctx, config_.grrr_tol, config_.grrr_max_iter);
    const auto& table = cache.ranks(reg.gamma);
    if (reg.rank < 1 || reg.rank > table.mle.size()) continue;
    const grrr::Solution& sol = table.mle[reg.rank - 1];
    reg.a0 = sol.a.tail_rows(sol.a.n_rows - reg.rank);
    reg.b = sol.b;
    reg.c = sol.c;
  }
}

double Sampler::gamma_temperature() const {
  const double span = plan_.anneal_fraction * static_cast<double>(plan_.burn_in);
  if (span < 1.0) return 1.0;
  return std::min(1.0, static_cast<double>(iteration_ + 1) / span);
}

void Sampler::step(const char* name) {
  if (steps_ != nullptr) steps_->emplace_back(name);
}

void Sampler::update_state(arma::uword k) {
  RegimeParams& reg = state_.regimes[k];
  const arma::uword p = data_.covariates();
  const arma::uvec times = state_.state_times(k);
  const arma::uword n = times.n_elem;
  const arma::mat y_k = data_.y.rows(times);
  const arma::mat x_k = data_.x.rows(times);
  const arma::mat h_k = state_.h.rows(times);
  std::unique_ptr<gp::KernelMatrix> kernel;
  if (n > 0) {
    kernel = std::make_unique<gp::KernelMatrix>(
        gp::build_kernel(x_k, reg.sigma2_f, reg.zeta, config_.jitter, config_.jitter_max));
  }
  const StateContext ctx(y_k, x_k, state_.w, h_k, kernel.get());
  laplace::EvidenceCache cache(ctx, config_.grrr_tol, config_.grrr_max_iter);

  // Allocation, collapsed over (A, B, f).
  step("gamma");
  const double rho = reg.rho;
  const double beta = gamma_temperature();
  auto log_target = [&](const arma::uvec& g) {
    return beta * (cache.gamma_log_marginal(g) + discrete::log_prior_gamma(g, rho));
  };
  const auto ms = discrete::msss_step(reg.gamma, log_target, rng_);
  if (ms.proposed) ++stats_.gamma_proposals;
  if (ms.accepted) ++stats_.gamma_accepts;
  reg.gamma = ms.gamma;
  const arma::uword qg = reg.q_gamma();

  step("rank");
  const auto& table = cache.ranks(reg.gamma);
  for (const auto& sol : table.mle) {
    if (!sol.converged) ++stats_.grrr_unconverged;
    if (sol.ridged) ++stats_.ridge_fallbacks;
  }
  reg.rank = 1 + rng_.categorical_log(table.log_evidence);
  const arma::uword r = reg.rank;

  step("f");
  const arma::mat c_star = continuous::bridge_columns(reg.c, p, qg);
  auto fd = ctx.sample_f(reg.gamma, c_star, rng_);
  reg.f = std::move(fd.f);
  reg.f_times = times;

  step("alpha");
  const GlsMoments noise = ctx.noise_moments(reg.gamma, reg.f);
  const arma::mat b_star = continuous::bridge_columns(reg.c, p, r);
  const auto ac = continuous::alpha_conditional(noise, b_star, qg, config_.a_coef);
  reg.a0 = continuous::alpha_to_a0(continuous::draw(ac, rng_), qg, r);
  const arma::mat a = reg.a_full();

  step("beta");
  const auto bc = continuous::beta_conditional(noise, a, config_.b_coef);
  reg.b = arma::reshape(continuous::draw(bc, rng_), p, r);
  reg.c = reg.b * a.t();

  step("rho");
  reg.rho = discrete::sample_rho(reg.gamma, config_, rng_);

  step("xi");
  state_.xi.row(k) = discrete::sample_xi_row(state_.s, k, config_, rng_);

  step("zeta");
  step("sigma2_f");
  const auto hd = gp::griddy_update_hypers(reg.f, x_k, reg.sigma2_f, reg.zeta, config_, rng_);
  if (hd.zeta_retained || hd.sigma_retained) ++stats_.grid_retained;
  reg.zeta = hd.zeta;
  reg.sigma2_f = hd.sigma2_f;
}

void Sampler::update_path(std::vector<arma::mat>& means) {
  step("s");
  for (const auto& reg : state_.regimes) means.push_back(hmm::state_mean(data_, reg, config_));
  const arma::mat emis = hmm::emission_loglik(data_, means, state_);
  state_.s = hmm::ffbs(emis, state_.xi, rng_).s;
  step("relabel");
  const arma::uvec perm = hmm::relabel(state_, previous_gammas_, config_.d_val);
  std::vector<arma::mat> permuted;
  for (auto idx : perm) permuted.push_back(means[idx]);
  means = std::move(permuted);
  previous_gammas_.clear();
  for (const auto& reg : state_.regimes) previous_gammas_.push_back(reg.gamma);
}

void Sampler::update_volatility(const arma::mat& resid) {
  const arma::uword q = data_.responses();
  if (plan_.variant == Variant::constant_volatility) {
    step("sigma_iw");
    const arma::mat sigma = continuous::sample_sigma_iw(resid, config_, rng_);
    arma::vec log_d;
    continuous::ldl_from_sigma(sigma, state_.w, log_d);
    state_.h = arma::repmat(log_d.t(), data_.periods(), 1);
    return;
  }
  const arma::mat shocks = resid * state_.w.t();
  for (arma::uword j = 0; j < q; ++j) {
    step("h");
    state_.h.col(j) = continuous::sample_h(shocks.col(j), state_.h.col(j), state_.sigma2_sv[j], state_.h0[j], rng_);
    step("h0");
    state_.h0[j] = continuous::sample_h0(state_.h(0, j), state_.sigma2_sv[j], config_.upsilon0_sq, rng_);
    step("sigma2");
    state_.sigma2_sv[j] = continuous::sample_sigma2_sv(state_.h.col(j), state_.h0[j], config_, rng_);
  }
  step("w");
  state_.w = continuous::sample_w(resid, state_.h, config_, rng_);
}

void Sampler::sweep() {
  for (arma::uword k = 0; k < state_.states(); ++k) update_state(k);
  std::vector<arma::mat> means;
  update_path(means);
  arma::mat resid = data_.y;
  for (arma::uword t = 0; t < data_.periods(); ++t) resid.row(t) -= means[state_.s[t]].row(t);
  update_volatility(resid);
  ++iteration_;
}

void Sampler::run(DrawStore& store, const std::function<void(int)>& progress) {
  if (store.empty() && iteration_ == 0) store.meta() = meta();
  while (iteration_ < plan_.iterations) {
    sweep();
    if (iteration_ > plan_.burn_in && (iteration_ - plan_.burn_in) % plan_.thin == 0) store.append(iteration_, state_);
    if (plan_.checkpoint_every > 0 && iteration_ % plan_.checkpoint_every == 0 && !plan_.checkpoint_path.empty()) {
      save_checkpoint(store, plan_.checkpoint_path);
    }
    if (progress) progress(iteration_);
  }
}

nlohmann::json Sampler::checkpoint(const DrawStore& store) const {
  nlohmann::json j;
  j["iteration"] = iteration_;
  j["rng"] = rng_.serialize();
  j["state"] = to_json(state_);
  auto prev = nlohmann::json::array();
  for (const auto& g : previous_gammas_) prev.push_back(std::vector<arma::uword>(g.begin(), g.end()));
  j["previous_gammas"] = prev;
  j["checkpoint_every"] = plan_.checkpoint_every;
  j["anneal_fraction"] = plan_.anneal_fraction;
  j["draws"] = store.to_ndjson();
  return j;
}

Sampler Sampler::resume(Dataset data, const nlohmann::json& j, DrawStore& store) {
  store = DrawStore::from_ndjson(j.at("draws").get<std::string>());
  const StoreMeta& m = store.meta();
  RunPlan plan;
  plan.iterations = m.iterations;
  plan.burn_in = m.burn_in;
  plan.thin = m.thin;
  plan.seed = m.seed;
  plan.variant = parse_variant(m.variant);
  plan.checkpoint_every = j.value("checkpoint_every", 0);
  plan.anneal_fraction = j.value("anneal_fraction", plan.anneal_fraction);
  Sampler s(std::move(data), m.config, plan);
  s.iteration_ = j.at("iteration").get<int>();
  s.rng_.deserialize(j.at("rng").get<std::string>());
  s.state_ = state_from_json(j.at("state"));
  s.previous_gammas_.clear();
  for (const auto& g : j.at("previous_gammas")) s.previous_gammas_.push_back(arma::uvec(g.get<std::vector<arma::uword>>()));
  return s;
}

void Sampler::save_checkpoint(const DrawStore& store, const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError({"cannot write checkpoint " + tmp});
    out << checkpoint(store).dump() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

Sampler Sampler::load_checkpoint(Dataset data, const std::filesystem::path& path, DrawStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot open checkpoint " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  Sampler s = resume(std::move(data), nlohmann::json::parse(ss.str()), store);
  s.plan_.checkpoint_path = path;
  return s;
}

DrawStore run_pcg(const Dataset& data, const PriorConfig& config, const RunPlan& plan) {
  Sampler sampler(data, config, plan);
  DrawStore store(sampler.meta());
  sampler.run(store);
  return store;
}

}  // namespace msprr
