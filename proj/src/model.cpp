#include "msprr/model.hpp"

#include "msprr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace msprr {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid input:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ValidationError({what + ": cannot parse '" + text + "' as a number"});
  return value;
}

int parse_int(const std::string& text, const std::string& what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError({what + ": cannot parse '" + text + "' as an integer"});
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot open " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError({"cannot write " + path.string()});
  out << text;
}

nlohmann::json uvec_to_json(const arma::uvec& v, arma::uword offset = 0) {
  auto arr = nlohmann::json::array();
  for (auto x : v) arr.push_back(static_cast<std::uint64_t>(x + offset));
  return arr;
}

arma::uvec uvec_from_json(const nlohmann::json& j, arma::uword offset = 0) {
  arma::uvec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<arma::uword>() - offset;
  return v;
}

nlohmann::json vec_to_json(const arma::vec& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

arma::vec vec_from_json(const nlohmann::json& j) {
  arma::vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

arma::vec PriorConfig::dirichlet() const {
  if (dirichlet_d.empty()) return arma::ones<arma::vec>(static_cast<arma::uword>(std::max(K, 0)));
  return arma::vec(dirichlet_d);
}

arma::mat RegimeParams::a_full() const {
  arma::mat a(rank + a0.n_rows, rank, arma::fill::zeros);
  a.head_rows(rank).eye();
  if (a0.n_rows > 0) a.tail_rows(a0.n_rows) = a0;
  return a;
}

// --- DrawStore ----------------------------------------------------------------

void DrawStore::append(int iteration, const ChainState& state) { draws_.push_back({iteration, state}); }

std::string DrawStore::to_ndjson() const {
  std::string out;
  nlohmann::json meta = {{"type", "meta"},
                         {"variant", meta_.variant},
                         {"seed", meta_.seed},
                         {"iterations", meta_.iterations},
                         {"burn_in", meta_.burn_in},
                         {"thin", meta_.thin},
                         {"periods", meta_.periods},
                         {"responses", meta_.responses},
                         {"covariates", meta_.covariates},
                         {"config", to_json(meta_.config)}};
  out += meta.dump() + "\n";
  for (const auto& d : draws_) {
    nlohmann::json rec = {{"type", "draw"}, {"iteration", d.iteration}, {"state", to_json(d.state)}};
    out += rec.dump() + "\n";
  }
  return out;
}

DrawStore DrawStore::from_ndjson(const std::string& text) {
  DrawStore store;
  std::istringstream in(text);
  std::string line;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const auto type = rec.at("type").get<std::string>();
    if (type == "meta") {
      StoreMeta m;
      m.variant = rec.at("variant").get<std::string>();
      m.seed = rec.at("seed").get<std::uint64_t>();
      m.iterations = rec.at("iterations").get<int>();
      m.burn_in = rec.at("burn_in").get<int>();
      m.thin = rec.at("thin").get<int>();
      m.periods = rec.at("periods").get<arma::uword>();
      m.responses = rec.at("responses").get<arma::uword>();
      m.covariates = rec.at("covariates").get<arma::uword>();
      m.config = config_from_json(rec.at("config"));
      store.meta_ = m;
      have_meta = true;
    } else if (type == "draw") {
      store.draws_.push_back({rec.at("iteration").get<int>(), state_from_json(rec.at("state"))});
    } else {
      throw ValidationError({"draw store: unknown record type '" + type + "'"});
    }
  }
  if (!have_meta) throw ValidationError({"draw store: missing meta record"});
  return store;
}

void DrawStore::save(const std::filesystem::path& path) const { write_file(path, to_ndjson()); }

DrawStore DrawStore::load(const std::filesystem::path& path) { return from_ndjson(read_file(path)); }

// --- validation ---------------------------------------------------------------

std::vector<std::string> validation_problems(const PriorConfig& c, const Dataset& data) {
  std::vector<std::string> out;
  auto positive = [&out](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive");
  };
  if (c.K < 1) out.emplace_back("K must be at least 1");
  positive(c.a_rho, "a_rho");
  positive(c.b_rho, "b_rho");
  positive(c.a_coef, "a_coef");
  positive(c.b_coef, "b_coef");
  positive(c.a_sigma_f, "a_sigma_f");
  positive(c.b_sigma_f, "b_sigma_f");
  positive(c.a_zeta, "a_zeta");
  positive(c.b_zeta, "b_zeta");
  positive(c.a_sv, "a_sv");
  positive(c.b_sv, "b_sv");
  positive(c.upsilon0_sq, "upsilon0_sq");
  positive(c.omega_w, "omega_w");
  positive(c.iw_psi, "iw_psi");
  positive(c.jitter, "jitter");
  positive(c.grrr_tol, "grrr_tol");
  positive(c.sigma2_f_min, "sigma2_f_min");
  positive(c.zeta_min, "zeta_min");
  if (!c.dirichlet_d.empty()) {
    if (c.K >= 1 && c.dirichlet_d.size() != static_cast<std::size_t>(c.K)) {
      out.emplace_back("dirichlet_d must have K entries");
    }
    for (double d : c.dirichlet_d) {
      if (!(d > 0.0)) {
        out.emplace_back("dirichlet_d entries must be positive");
        break;
      }
    }
  }
  if (c.grid_size < 1) out.emplace_back("grid_size must be at least 1");
  if (!(c.sigma2_f_max > c.sigma2_f_min)) out.emplace_back("sigma2_f grid range must have positive width");
  if (!(c.zeta_max > c.zeta_min)) out.emplace_back("zeta grid range must have positive width");
  if (!std::isfinite(c.d_val)) out.emplace_back("d_val must be finite");
  if (c.nu_matern != 1.5) out.emplace_back("nu_matern must be 1.5 (Matern 3/2 is the only supported kernel)");
  if (c.jitter_max < c.jitter) out.emplace_back("jitter_max must be at least jitter");
  if (c.grrr_max_iter < 1) out.emplace_back("grrr_max_iter must be at least 1");

  const arma::uword t = data.y.n_rows;
  const arma::uword q = data.y.n_cols;
  const arma::uword p = data.x.n_cols;
  if (data.y.is_empty() || data.x.is_empty()) {
    out.emplace_back("Y and X must be nonempty");
    return out;
  }
  if (data.x.n_rows != t) out.emplace_back("Y and X must have the same number of rows");
  if (!data.y.is_finite()) out.emplace_back("Y contains missing or non-finite values");
  if (!data.x.is_finite()) out.emplace_back("X contains missing or non-finite values");
  if (q < 3) out.emplace_back("q must be at least 3 (a low-rank group needs 1 < q_gamma < q)");
  if (p < 2) out.emplace_back("p must be at least 2 (rank must satisfy 1 <= r <= min(p, q_gamma) - 1)");
  if (!(t > q)) out.emplace_back("T must exceed q");
  if (!(t > p)) out.emplace_back("T must exceed p");
  if (!data.time_labels.empty() && data.time_labels.size() != t) {
    out.emplace_back("time labels must have one entry per row");
  }
  if (c.iw_nu != 0.0 && !(c.iw_nu > static_cast<double>(q) - 1.0)) {
    out.emplace_back("iw_nu must exceed q - 1");
  }
  return out;
}

void validate(const PriorConfig& config, const Dataset& data) {
  auto problems = validation_problems(config, data);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

arma::uword min_state_size(const Dataset& data) {
  return std::max(data.covariates(), data.responses()) + 2;
}

ChainState init_state(const PriorConfig& config, const Dataset& data, std::uint64_t seed) {
  const arma::uword n = data.periods();
  const arma::uword q = data.responses();
  const arma::uword p = data.covariates();
  const auto k_states = static_cast<arma::uword>(config.K);
  const arma::uword need = min_state_size(data);
  if (n < k_states * need) {
    throw ValidationError({"infeasible initialization: T = " + std::to_string(n) + " < K * (max(p, q) + 2) = " +
                           std::to_string(k_states * need)});
  }
  Rng rng(seed);
  ChainState st;
  st.s.zeros(n);
  if (k_states > 1) {
    for (arma::uword t = 0; t < n; ++t) st.s[t] = rng.uniform_index(k_states);
    // Move points from the largest state into any state below the minimum.
    for (;;) {
      arma::uvec counts(k_states, arma::fill::zeros);
      for (auto v : st.s) ++counts[v];
      const arma::uword small = counts.index_min();
      if (counts[small] >= need) break;
      const arma::uword large = counts.index_max();
      const arma::uvec members = arma::find(st.s == large);
      st.s[members[rng.uniform_index(members.n_elem)]] = small;
    }
  }

  const double sigma2_f0 = std::sqrt(config.sigma2_f_min * config.sigma2_f_max);
  const double zeta0 = std::sqrt(config.zeta_min * config.zeta_max);
  for (arma::uword k = 0; k < k_states; ++k) {
    RegimeParams reg;
    reg.gamma.ones(q);
    reg.gamma[rng.uniform_index(q)] = 0;
    reg.rank = 1;
    const arma::uword qg = q - 1;
    reg.a0.zeros(qg - 1, 1);
    reg.b.zeros(p, 1);
    reg.c.zeros(p, qg);
    reg.f_times = st.state_times(k);
    reg.f.zeros(reg.f_times.n_elem, q - qg);
    reg.rho = 0.5;
    reg.sigma2_f = sigma2_f0;
    reg.zeta = zeta0;
    st.regimes.push_back(std::move(reg));
  }
  const arma::vec d = config.dirichlet();
  st.xi = arma::repmat((d / arma::accu(d)).t(), k_states, 1);
  st.w.eye(q, q);
  st.h.zeros(n, q);
  st.h0.zeros(q);
  const double s2 = config.a_sv > 1.0 ? config.b_sv / (config.a_sv - 1.0) : config.b_sv;
  st.sigma2_sv = arma::vec(q, arma::fill::value(s2));
  return st;
}

// --- config file ----------------------------------------------------------------

namespace {

struct ConfigField {
  const char* name;
  double PriorConfig::*real = nullptr;
  int PriorConfig::*integer = nullptr;
};

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"K", nullptr, &PriorConfig::K},
      {"a_rho", &PriorConfig::a_rho},
      {"b_rho", &PriorConfig::b_rho},
      {"a_coef", &PriorConfig::a_coef},
      {"b_coef", &PriorConfig::b_coef},
      {"a_sigma_f", &PriorConfig::a_sigma_f},
      {"b_sigma_f", &PriorConfig::b_sigma_f},
      {"a_zeta", &PriorConfig::a_zeta},
      {"b_zeta", &PriorConfig::b_zeta},
      {"a_sv", &PriorConfig::a_sv},
      {"b_sv", &PriorConfig::b_sv},
      {"upsilon0_sq", &PriorConfig::upsilon0_sq},
      {"omega_w", &PriorConfig::omega_w},
      {"grid_size", nullptr, &PriorConfig::grid_size},
      {"sigma2_f_min", &PriorConfig::sigma2_f_min},
      {"sigma2_f_max", &PriorConfig::sigma2_f_max},
      {"zeta_min", &PriorConfig::zeta_min},
      {"zeta_max", &PriorConfig::zeta_max},
      {"d_val", &PriorConfig::d_val},
      {"nu_matern", &PriorConfig::nu_matern},
      {"iw_nu", &PriorConfig::iw_nu},
      {"iw_psi", &PriorConfig::iw_psi},
      {"jitter", &PriorConfig::jitter},
      {"jitter_max", &PriorConfig::jitter_max},
      {"grrr_tol", &PriorConfig::grrr_tol},
      {"grrr_max_iter", nullptr, &PriorConfig::grrr_max_iter},
  };
  return fields;
}

}  // namespace

PriorConfig parse_config(const std::string& text) {
  PriorConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "dirichlet_d") {
        cfg.dirichlet_d.clear();
        for (const auto& part : split(value, ',')) cfg.dirichlet_d.push_back(parse_double(part, key));
        continue;
      }
      const auto& fields = config_fields();
      const auto it = std::find_if(fields.begin(), fields.end(), [&](const ConfigField& f) { return key == f.name; });
      if (it == fields.end()) {
        problems.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        continue;
      }
      if (it->real != nullptr) {
        cfg.*(it->real) = parse_double(value, key);
      } else {
        cfg.*(it->integer) = parse_int(value, key);
      }
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

PriorConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string format_config(const PriorConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) {
    out += f.name;
    out += " = ";
    out += f.real != nullptr ? format_double(cfg.*(f.real)) : std::to_string(cfg.*(f.integer));
    out += "\n";
  }
  if (!cfg.dirichlet_d.empty()) {
    out += "dirichlet_d = ";
    for (std::size_t i = 0; i < cfg.dirichlet_d.size(); ++i) {
      if (i > 0) out += ", ";
      out += format_double(cfg.dirichlet_d[i]);
    }
    out += "\n";
  }
  return out;
}

// --- dataset CSV --------------------------------------------------------------

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError({"dataset: empty file"});
  const auto header = split(trim(line), ',');
  std::map<int, std::size_t> ycols, xcols;
  std::optional<std::size_t> time_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    if (name == "time" || name == "t") {
      time_col = i;
    } else if (name.size() > 1 && (name[0] == 'y' || name[0] == 'x')) {
      const int idx = parse_int(name.substr(1), "dataset header");
      auto& target = name[0] == 'y' ? ycols : xcols;
      if (!target.emplace(idx, i).second) throw ValidationError({"dataset: duplicate column " + name});
    } else {
      throw ValidationError({"dataset: unexpected column '" + name + "'"});
    }
  }
  auto check_contiguous = [](const std::map<int, std::size_t>& cols, char prefix) {
    int expect = 1;
    for (const auto& [idx, pos] : cols) {
      if (idx != expect++) throw ValidationError({std::string("dataset: columns ") + prefix + "1.." + prefix + "n must be contiguous"});
    }
  };
  check_contiguous(ycols, 'y');
  check_contiguous(xcols, 'x');

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw ValidationError({"dataset: row " + std::to_string(rows.size() + 1) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(header.size())});
    }
    rows.push_back(std::move(cells));
  }
  Dataset data;
  data.y.set_size(rows.size(), ycols.size());
  data.x.set_size(rows.size(), xcols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [idx, pos] : ycols) data.y(r, idx - 1) = parse_double(rows[r][pos], "dataset y" + std::to_string(idx));
    for (const auto& [idx, pos] : xcols) data.x(r, idx - 1) = parse_double(rows[r][pos], "dataset x" + std::to_string(idx));
    if (time_col) data.time_labels.push_back(rows[r][*time_col]);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset_csv(read_file(path)); }

std::string format_dataset_csv(const Dataset& data) {
  std::string out;
  const bool labels = !data.time_labels.empty();
  if (labels) out += "time,";
  for (arma::uword j = 0; j < data.y.n_cols; ++j) out += (j > 0 ? ",y" : "y") + std::to_string(j + 1);
  for (arma::uword j = 0; j < data.x.n_cols; ++j) out += ",x" + std::to_string(j + 1);
  out += "\n";
  for (arma::uword t = 0; t < data.y.n_rows; ++t) {
    if (labels) out += data.time_labels[t] + ",";
    for (arma::uword j = 0; j < data.y.n_cols; ++j) out += (j > 0 ? "," : "") + format_double(data.y(t, j));
    for (arma::uword j = 0; j < data.x.n_cols; ++j) out += "," + format_double(data.x(t, j));
    out += "\n";
  }
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) { write_file(path, format_dataset_csv(data)); }

// --- JSON ---------------------------------------------------------------------

nlohmann::json matrix_to_json(const arma::mat& m) {
  nlohmann::json j = {{"rows", m.n_rows}, {"cols", m.n_cols}};
  auto data = nlohmann::json::array();
  for (double v : m) data.push_back(v);
  j["data"] = std::move(data);
  return j;
}

arma::mat matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<arma::uword>();
  const auto cols = j.at("cols").get<arma::uword>();
  const auto& data = j.at("data");
  if (data.size() != rows * cols) throw ValidationError({"matrix JSON: data length mismatch"});
  arma::mat m(rows, cols);
  for (arma::uword i = 0; i < rows * cols; ++i) m[i] = data[i].get<double>();
  return m;
}

nlohmann::json to_json(const PriorConfig& cfg) {
  nlohmann::json j;
  for (const auto& f : config_fields()) {
    if (f.real != nullptr) {
      j[f.name] = cfg.*(f.real);
    } else {
      j[f.name] = cfg.*(f.integer);
    }
  }
  j["dirichlet_d"] = cfg.dirichlet_d;
  return j;
}

PriorConfig config_from_json(const nlohmann::json& j) {
  PriorConfig cfg;
  for (const auto& f : config_fields()) {
    if (!j.contains(f.name)) continue;
    if (f.real != nullptr) {
      cfg.*(f.real) = j.at(f.name).get<double>();
    } else {
      cfg.*(f.integer) = j.at(f.name).get<int>();
    }
  }
  if (j.contains("dirichlet_d")) cfg.dirichlet_d = j.at("dirichlet_d").get<std::vector<double>>();
  return cfg;
}

nlohmann::json to_json(const ChainState& st) {
  nlohmann::json j;
  j["s"] = uvec_to_json(st.s, 1);
  auto regimes = nlohmann::json::array();
  for (const auto& r : st.regimes) {
    regimes.push_back({{"gamma", uvec_to_json(r.gamma)},
                       {"rank", r.rank},
                       {"a0", matrix_to_json(r.a0)},
                       {"b", matrix_to_json(r.b)},
                       {"c", matrix_to_json(r.c)},
                       {"f", matrix_to_json(r.f)},
                       {"f_times", uvec_to_json(r.f_times, 1)},
                       {"rho", r.rho},
                       {"sigma2_f", r.sigma2_f},
                       {"zeta", r.zeta}});
  }
  j["regimes"] = std::move(regimes);
  j["xi"] = matrix_to_json(st.xi);
  j["w"] = matrix_to_json(st.w);
  j["h"] = matrix_to_json(st.h);
  j["h0"] = vec_to_json(st.h0);
  j["sigma2_sv"] = vec_to_json(st.sigma2_sv);
  return j;
}

ChainState state_from_json(const nlohmann::json& j) {
  ChainState st;
  st.s = uvec_from_json(j.at("s"), 1);
  for (const auto& r : j.at("regimes")) {
    RegimeParams reg;
    reg.gamma = uvec_from_json(r.at("gamma"));
    reg.rank = r.at("rank").get<arma::uword>();
    reg.a0 = matrix_from_json(r.at("a0"));
    reg.b = matrix_from_json(r.at("b"));
    reg.c = matrix_from_json(r.at("c"));
    reg.f = matrix_from_json(r.at("f"));
    reg.f_times = uvec_from_json(r.at("f_times"), 1);
    reg.rho = r.at("rho").get<double>();
    reg.sigma2_f = r.at("sigma2_f").get<double>();
    reg.zeta = r.at("zeta").get<double>();
    st.regimes.push_back(std::move(reg));
  }
  st.xi = matrix_from_json(j.at("xi"));
  st.w = matrix_from_json(j.at("w"));
  st.h = matrix_from_json(j.at("h"));
  st.h0 = vec_from_json(j.at("h0"));
  st.sigma2_sv = vec_from_json(j.at("sigma2_sv"));
  return st;
}

}  // namespace msprr
