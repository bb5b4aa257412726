#include "msprr/errors.hpp"
#include "msprr/metrics.hpp"
#include "msprr/model.hpp"
#include "msprr/sampler.hpp"
#include "msprr/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace msprr;

namespace {

struct Options {
  std::string config, data, draws, truth, out = ".", variant;
  std::uint64_t seed = 1;
  int iterations = 10000, burn_in = 5000, thin = 1, scenario = 0, replications = 1, checkpoint_every = 0;
  double anneal_fraction = 0.5;
  bool resume = false, quiet = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError({"cannot write " + path.string()});
  out << text;
}

PriorConfig config_from(const Options& o) { return o.config.empty() ? PriorConfig{} : load_config(o.config); }

RunPlan plan_from(const Options& o, const std::string& default_variant) {
  RunPlan plan;
  plan.iterations = o.iterations;
  plan.burn_in = o.burn_in;
  plan.thin = o.thin;
  plan.seed = o.seed;
  plan.checkpoint_every = o.checkpoint_every;
  plan.anneal_fraction = o.anneal_fraction;
  plan.variant = parse_variant(o.variant.empty() ? default_variant : o.variant);
  return plan;
}

void progress_line(const Options& o, int it, int total) {
  if (o.quiet) return;
  if (it % 500 == 0 || it == total) std::cerr << "  sweep " << it << "/" << total << "\n";
}

int cmd_simulate(const Options& o) {
  if (o.scenario == 0) throw ValidationError({"simulate requires --scenario"});
  const auto spec = sim::scenario(o.scenario);
  fs::create_directories(o.out);
  for (int i = 1; i <= o.replications; ++i) {
    const fs::path dir = o.replications == 1 ? fs::path(o.out) : fs::path(o.out) / ("rep" + std::to_string(i));
    fs::create_directories(dir);
    auto [data, truth] = sim::generate(spec, o.seed + static_cast<std::uint64_t>(i - 1));
    save_dataset(data, dir / "data.csv");
    sim::save_truth(truth, dir / "truth.json");
    std::cout << "wrote " << (dir / "data.csv").string() << " and truth.json\n";
  }
  return 0;
}

int fit_one(const Options& o, const Dataset& data, const PriorConfig& config, RunPlan plan, const fs::path& dir,
            DrawStore& store) {
  fs::create_directories(dir);
  plan.checkpoint_path = dir / "checkpoint.json";
  const auto start = std::chrono::steady_clock::now();
  std::optional<Sampler> sampler;
  if (o.resume) {
    sampler.emplace(Sampler::load_checkpoint(data, plan.checkpoint_path, store));
  } else {
    sampler.emplace(data, config, plan);
    store = DrawStore(sampler->meta());
  }
  const int total = sampler->plan().iterations;
  sampler->run(store, [&](int it) { progress_line(o, it, total); });
  store.save(dir / "draws.ndjson");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& st = sampler->stats();
  std::cout << "fit: " << store.size() << " draws in " << secs << " s; gamma acceptance " << st.gamma_accepts << "/"
            << st.gamma_proposals << "; ridge fallbacks " << st.ridge_fallbacks << "; unconverged GRRR solves "
            << st.grrr_unconverged << "\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const PriorConfig config = config_from(o);
  if (!o.data.empty()) {
    const Dataset data = load_dataset(o.data);
    DrawStore store;
    return fit_one(o, data, config, plan_from(o, "ms-prr"), o.out, store);
  }
  if (o.scenario == 0) throw ValidationError({"fit requires --data or --scenario"});
  // Replication study on simulated data.
  const auto spec = sim::scenario(o.scenario);
  fs::create_directories(o.out);
  std::ofstream csv(fs::path(o.out) / "replications.csv");
  csv << metrics::csv_header(spec.k_true) << "\n";
  for (int i = 1; i <= o.replications; ++i) {
    auto [data, truth] = sim::generate(spec, o.seed + static_cast<std::uint64_t>(i - 1));
    PriorConfig cfg = config;
    cfg.K = static_cast<int>(spec.k_true);
    if (cfg.dirichlet_d.size() != spec.k_true) cfg.dirichlet_d.clear();
    Options oi = o;
    oi.seed = o.seed + static_cast<std::uint64_t>(i - 1);
    const fs::path dir = fs::path(o.out) / ("rep" + std::to_string(i));
    fs::create_directories(dir);
    save_dataset(data, dir / "data.csv");
    sim::save_truth(truth, dir / "truth.json");
    DrawStore store;
    fit_one(oi, data, cfg, plan_from(oi, sim::estimation_variant(spec)), dir, store);
    const auto rep = metrics::evaluate(store, data, truth);
    write_text(dir / "report.json", metrics::to_json(rep).dump(2) + "\n");
    csv << metrics::csv_row(rep, i) << "\n";
    csv.flush();
    std::cout << metrics::to_json(rep).dump() << "\n";
  }
  return 0;
}

fs::path draws_path(const Options& o) {
  if (!o.draws.empty()) return o.draws;
  return fs::path(o.out) / "draws.ndjson";
}

int cmd_report(const Options& o) {
  if (o.data.empty() || o.truth.empty()) throw ValidationError({"report requires --data and --truth"});
  const DrawStore store = DrawStore::load(draws_path(o));
  const Dataset data = load_dataset(o.data);
  const auto truth = sim::load_truth(o.truth);
  const auto rep = metrics::evaluate(store, data, truth);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "report.json", metrics::to_json(rep).dump(2) + "\n");
  const auto states = std::max<arma::uword>(truth.gamma.size(), rep.q_gamma_hat.size());
  write_text(fs::path(o.out) / "report.csv", metrics::csv_header(states) + "\n" + metrics::csv_row(rep, 1) + "\n");
  std::cout << metrics::to_json(rep).dump(2) << "\n";
  return 0;
}

int cmd_traces(const Options& o) {
  const DrawStore store = DrawStore::load(draws_path(o));
  fs::create_directories(o.out);
  std::ofstream out(fs::path(o.out) / "traces.csv");
  if (!out) throw ValidationError({"cannot write traces.csv"});
  out.precision(17);
  out << "iteration,parameter,state,index,value\n";
  for (const auto& d : store.draws()) {
    const auto& st = d.state;
    for (arma::uword t = 0; t < st.s.n_elem; ++t) out << d.iteration << ",s,," << t + 1 << ',' << st.s[t] + 1 << '\n';
    for (arma::uword k = 0; k < st.states(); ++k) {
      const auto& reg = st.regimes[k];
      for (arma::uword j = 0; j < reg.gamma.n_elem; ++j) {
        out << d.iteration << ",gamma," << k + 1 << ',' << j + 1 << ',' << reg.gamma[j] << '\n';
      }
      out << d.iteration << ",q_gamma," << k + 1 << ",," << reg.q_gamma() << '\n';
      out << d.iteration << ",r," << k + 1 << ",," << reg.rank << '\n';
      out << d.iteration << ",sigma2_f," << k + 1 << ",," << reg.sigma2_f << '\n';
      out << d.iteration << ",zeta," << k + 1 << ",," << reg.zeta << '\n';
    }
  }
  std::cout << "wrote " << (fs::path(o.out) / "traces.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Markov-switching partial reduced-rank regression"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_flag("--quiet", o.quiet, "Suppress progress output");
  };
  auto add_run = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Prior configuration file (key = value)");
    sub->add_option("--data", o.data, "Dataset CSV (y1..yq, x1..xp)");
    sub->add_option("--iterations", o.iterations, "Total sweeps including burn-in");
    sub->add_option("--burn-in", o.burn_in, "Sweeps discarded before storing");
    sub->add_option("--thin", o.thin, "Keep every n-th post-burn-in sweep");
    sub->add_option("--variant", o.variant, "ms-prr | prr-gp | constant-volatility");
    sub->add_option("--scenario", o.scenario, "Simulation scenario 1..6")->check(CLI::Range(1, 6));
    sub->add_option("--replications", o.replications, "Number of simulated replications")->check(CLI::PositiveNumber);
    sub->add_option("--checkpoint-every", o.checkpoint_every, "Write a checkpoint every n sweeps");
    sub->add_option("--anneal-fraction", o.anneal_fraction,
                    "Share of the burn-in over which the allocation target is tempered (0 disables)")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--resume", o.resume, "Continue from checkpoint.json in the output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a scenario dataset and its ground truth");
  add_common(simulate);
  simulate->add_option("--scenario", o.scenario, "Scenario 1..6")->required()->check(CLI::Range(1, 6));
  simulate->add_option("--replications", o.replications, "Number of datasets")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Run the sampler and store post-burn-in draws");
  add_common(fit);
  add_run(fit);

  auto* report = app.add_subcommand("report", "Evaluate stored draws against a ground truth");
  add_common(report);
  report->add_option("--draws", o.draws, "Draw store (defaults to OUT/draws.ndjson)");
  report->add_option("--data", o.data, "Dataset CSV")->required();
  report->add_option("--truth", o.truth, "Ground-truth JSON")->required();

  auto* traces = app.add_subcommand("traces", "Export long-format trace CSV");
  add_common(traces);
  traces->add_option("--draws", o.draws, "Draw store (defaults to OUT/draws.ndjson)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*report) return cmd_report(o);
    if (*traces) return cmd_traces(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
