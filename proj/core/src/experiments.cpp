#include "htband/experiments.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "htband/errors.hpp"
#include "htband/extremes.hpp"
#include "htband/localization.hpp"
#include "htband/parallel.hpp"
#include "htband/perturbation.hpp"
#include "htband/rng.hpp"
#include "htband/spectral.hpp"
#include "htband/truncation.hpp"

namespace htband {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError("malformed number for '" + key + "': '" + raw + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    // Also accept hexadecimal seeds.
    if (v.size() > 2 && (v.rfind("0x", 0) == 0 || v.rfind("0X", 0) == 0) &&
        v.find_first_not_of("0123456789abcdefABCDEF", 2) == std::string::npos) {
      return std::strtoull(v.c_str() + 2, nullptr, 16);
    }
    throw ConfigError("malformed unsigned integer for '" + key + "': '" + raw + "'");
  }
  errno = 0;
  const auto x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("integer out of range for '" + key + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("malformed boolean for '" + key + "': '" + raw + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(static_cast<T>(parse_uint(key, item)));
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<double> finite_only(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
          v.end());
  return v;
}

double median(std::vector<double> v) {
  v = finite_only(std::move(v));
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  const auto f = finite_only(v);
  if (f.empty()) return kNaN;
  double s = 0.0;
  for (double x : f) s += x;
  return s / static_cast<double>(f.size());
}

double maximum(const std::vector<double>& v) {
  const auto f = finite_only(v);
  if (f.empty()) return kNaN;
  return *std::max_element(f.begin(), f.end());
}

std::string k_name(const char* stem, std::size_t k) { return std::string(stem) + "_" + std::to_string(k); }

LanczosOptions lanczos_options(const ExperimentConfig& c, std::uint64_t stream, std::size_t r) {
  LanczosOptions o;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.seed = derive_seed(*c.seed, stream, r);
  return o;
}

template <class Fn>
std::vector<std::vector<double>> run_rows(const ExperimentConfig& c, std::size_t count, Fn&& fn) {
  std::vector<std::vector<double>> rows(count);
  parallel_for(count, c.threads, [&](std::size_t idx) { rows[idx] = fn(idx); });
  return rows;
}

/// Rows of `t` whose "converged" column is 1.
Table converged_rows(const Table& t) {
  Table out = t;
  const std::size_t col = t.column("converged");
  out.rows.clear();
  for (const auto& row : t.rows) {
    if (row[col] == 1.0) out.rows.push_back(row);
  }
  return out;
}

std::size_t solver_failures(const Table& t) {
  const std::size_t col = t.column("converged");
  return static_cast<std::size_t>(
      std::count_if(t.rows.begin(), t.rows.end(), [col](const auto& r) { return r[col] != 1.0; }));
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::size_t> supercritical_grid(const ExperimentConfig& c) {
  if (c.n_grid.empty()) return {};
  auto g = c.n_grid;
  g.push_back(c.n);
  return sorted_unique(g);
}

std::vector<std::size_t> moment_grid(const ExperimentConfig& c) {
  return c.n_grid.empty() ? std::vector<std::size_t>{c.n} : sorted_unique(c.n_grid);
}

/// Rows with a given key value in the first column.
std::vector<std::vector<double>> rows_with_key(const Table& t, double key) {
  std::vector<std::vector<double>> out;
  for (const auto& r : t.rows) {
    if (r[0] == key) out.push_back(r);
  }
  return out;
}

std::vector<double> column_of(const std::vector<std::vector<double>>& rows, std::size_t col) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[col]);
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void require_symmetrized(const ExperimentConfig& c) {
  if (c.alpha >= 1.0 + 1.0 / c.mu && !c.law.symmetrized) {
    throw ConfigError("a symmetrized law is required when alpha >= 1 + 1/mu");
  }
}

SumWindow sum_window(const ExperimentConfig& c) {
  return SumWindow{c.low_exponent, c.high_exponent};
}

TruncationSpec truncation_spec(const ExperimentConfig& c, std::size_t s) {
  return TruncationSpec{c.gamma, c.gamma_prime, c.gamma_double_prime, s};
}

// A3 exponents just above the structural thresholds of the subcritical proof.
constexpr double kA3Margin = 0.05;
constexpr double kA3Nu = 0.95;

}  // namespace

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::subcritical: return "subcritical";
    case StudyKind::supercritical: return "supercritical";
    case StudyKind::semicircle: return "semicircle";
    case StudyKind::poisson: return "poisson";
    case StudyKind::moments: return "moments";
    case StudyKind::tailsums: return "tailsums";
    case StudyKind::perturbation: return "perturbation";
  }
  return "unknown";
}

StudyKind study_kind_from_string(const std::string& name) {
  for (auto k : {StudyKind::subcritical, StudyKind::supercritical, StudyKind::semicircle,
                 StudyKind::poisson, StudyKind::moments, StudyKind::tailsums,
                 StudyKind::perturbation}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown study kind '" + name + "'");
}

TailLaw ExperimentConfig::make_law() const {
  SlowlyVarying factor;
  if (law.slowly_varying == "constant") {
    factor = ConstantFactor{law.c};
  } else if (law.slowly_varying == "log_power") {
    factor = LogPowerFactor{law.beta};
  } else {
    throw ConfigError("unknown slowly varying factor '" + law.slowly_varying + "'");
  }
  return TailLaw(alpha, law.scale, factor, law.symmetrized, law.variance_normalized);
}

double ExperimentConfig::threshold(const std::string& key) const {
  if (auto it = thresholds.find(key); it != thresholds.end()) return it->second;
  const auto defaults = default_thresholds(kind);
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw ConfigError(std::string("no threshold '") + key + "' for study " + to_string(kind));
}

std::map<std::string, double> default_thresholds(StudyKind kind) {
  switch (kind) {
    case StudyKind::subcritical:
      return {{"ratio1_low", 0.9},  {"ratio1_high", 1.1},   {"ratiok_low", 0.85},
              {"ratiok_high", 1.15}, {"overlap_min", 0.9}, {"overlap_fraction", 0.8}};
    case StudyKind::supercritical:
      return {{"edge_low", 1.8}, {"edge_high", 2.3}, {"event_max", 0.05}};
    case StudyKind::semicircle:
      return {{"ks_max", 0.05}};
    case StudyKind::poisson:
      return {{"mean_low", 0.8},       {"mean_high", 1.2},      {"dispersion_low", 0.8},
              {"dispersion_high", 1.2}, {"spacing_ks_max", 0.1}};
    case StudyKind::moments:
      return {{"ratio_factor", 2.0}, {"chebyshev_factor", 5.0}, {"chebyshev_floor", 3.0}};
    case StudyKind::tailsums:
      return {{"exceed_max", 0.02}};
    case StudyKind::perturbation:
      return {{"ratio1_low", 0.9}, {"ratio1_high", 1.1}};
  }
  return {};
}

void validate(const ExperimentConfig& c) {
  require(c.seed.has_value(), "a root seed is mandatory");
  require(c.replicas >= 1, "replicas must be >= 1");
  require(c.replica_begin < c.range_end() && c.range_end() <= c.replicas,
          "replica range must satisfy begin < end <= replicas");
  require(c.mu > 0.0 && c.mu <= 1.0, "mu must lie in (0, 1]");
  require(c.alpha > 0.0, "alpha must be positive");
  require(c.law.scale > 0.0, "law scale must be positive");
  const auto defaults = default_thresholds(c.kind);
  for (const auto& [key, value] : c.thresholds) {
    require(defaults.count(key) == 1,
            "threshold '" + key + "' does not apply to study " + to_string(c.kind));
  }
  (void)c.make_law();

  const bool matrix_study = c.kind != StudyKind::tailsums;
  if (matrix_study) {
    require(c.n >= 2, "n must be >= 2");
    require(c.top_k >= 1, "top_k must be >= 1");
    require_symmetrized(c);
  }
  const double crit = critical_alpha(c.mu);
  switch (c.kind) {
    case StudyKind::subcritical:
    case StudyKind::poisson:
    case StudyKind::perturbation: {
      require(c.alpha < crit, "this study needs the subcritical regime alpha < 2(1 + 1/mu) = " +
                                  format_double(crit));
      const auto pattern = build_pattern(c.n, c.mu, c.pattern);
      require(c.top_k <= pattern->independent_entry_count() && 2 * c.top_k <= c.n,
              "top_k too large for the matrix size");
      if (c.kind == StudyKind::poisson) {
        require(c.replicas >= 30, "the Poisson study needs at least 30 replicas");
        require(c.spacing_k >= 2 && c.spacing_k <= c.top_k, "spacing_k must lie in [2, top_k]");
        require(c.t > 0.0, "t must be positive");
      }
      break;
    }
    case StudyKind::supercritical:
      require(c.alpha > crit, "the supercritical study needs alpha > 2(1 + 1/mu) = " +
                                  format_double(crit));
      require(c.law.variance_normalized, "the supercritical study needs a variance-one law");
      require(2 * c.top_k <= c.n, "top_k too large for the matrix size");
      require(c.eta0 > 0.0 && c.eta0 < 0.5, "eta0 must lie in (0, 1/2)");
      require(c.c > 0.0 && (c.c < localized_c_limit(c.mu, c.alpha) || c.c < c.mu),
              "c lies outside both localization windows");
      for (auto n : c.n_grid) require(n >= 2, "grid sizes must be >= 2");
      break;
    case StudyKind::semicircle:
      require(c.alpha > 2.0, "the semicircle study needs alpha > 2");
      require(c.law.variance_normalized && c.law.symmetrized,
              "the semicircle study needs a mean-zero variance-one law");
      require(c.n <= c.dense_limit, "n exceeds the dense limit of the semicircle study");
      break;
    case StudyKind::moments: {
      require(c.law.variance_normalized && c.law.symmetrized,
              "the moment study needs a mean-zero variance-one law");
      require(!c.s_grid.empty(), "s_grid must not be empty");
      require(c.kappa > 0.0 && c.kappa < 1.0, "kappa must lie in (0, 1)");
      require(c.replicas >= 2, "the moment study needs at least 2 replicas");
      for (auto s : c.s_grid) require(s >= 1, "s must be >= 1");
      for (auto n : moment_grid(c)) {
        require(n >= 2 && n <= 512, "moment study sizes must lie in [2, 512]");
        const auto w = check_window(c.mu, n, truncation_spec(c, 1));
        if (!w.exponents_ok()) throw ConfigError("exponent window violated: " + w.violated);
      }
      break;
    }
    case StudyKind::tailsums: {
      require(!c.tail_n_grid.empty(), "tail_n_grid must not be empty");
      for (auto n : c.tail_n_grid) require(n >= 2, "tail sizes must be >= 2");
      const auto part = classify_sum_window(c.alpha, c.mu, sum_window(c));
      (void)predicted_sum_exponent(part, c.alpha, c.mu, sum_window(c), c.epsilon);
      break;
    }
  }
}

std::vector<ConfigEntry> config_entries(const ExperimentConfig& c) {
  std::vector<ConfigEntry> e;
  auto add = [&](const char* section, const char* key, std::string value) {
    e.push_back({section, key, std::move(value)});
  };
  add("study", "kind", to_string(c.kind));
  if (c.seed) add("study", "seed", std::to_string(*c.seed));
  add("study", "replicas", std::to_string(c.replicas));
  add("study", "threads", std::to_string(c.threads));
  add("study", "out", c.out_dir);
  add("study", "replica_begin", std::to_string(c.replica_begin));
  add("study", "replica_end", std::to_string(c.replica_end));
  add("matrix", "n", std::to_string(c.n));
  add("matrix", "n_grid", join(c.n_grid));
  add("matrix", "mu", format_double(c.mu));
  add("matrix", "pattern", to_string(c.pattern));
  add("law", "alpha", format_double(c.alpha));
  add("law", "scale", format_double(c.law.scale));
  add("law", "slowly_varying", c.law.slowly_varying);
  add("law", "c", format_double(c.law.c));
  add("law", "beta", format_double(c.law.beta));
  add("law", "symmetrized", c.law.symmetrized ? "true" : "false");
  add("law", "variance_normalized", c.law.variance_normalized ? "true" : "false");
  add("solver", "top_k", std::to_string(c.top_k));
  add("solver", "tol", format_double(c.tol));
  add("solver", "max_iter", std::to_string(c.max_iter));
  add("solver", "dense_limit", std::to_string(c.dense_limit));
  add("truncation", "gamma", format_double(c.gamma));
  add("truncation", "gamma_prime", format_double(c.gamma_prime));
  add("truncation", "gamma_double_prime", format_double(c.gamma_double_prime));
  add("truncation", "s_grid", join(c.s_grid));
  add("truncation", "kappa", format_double(c.kappa));
  add("localization", "c", format_double(c.c));
  add("localization", "eta0", format_double(c.eta0));
  add("poisson", "t", format_double(c.t));
  add("poisson", "spacing_k", std::to_string(c.spacing_k));
  add("tailsums", "low_exponent", format_double(c.low_exponent));
  add("tailsums", "high_exponent", format_double(c.high_exponent));
  add("tailsums", "epsilon", format_double(c.epsilon));
  add("tailsums", "n_grid", join(c.tail_n_grid));
  add("tailsums", "reference_n", std::to_string(c.reference_n));
  for (const auto& [key, value] : c.thresholds) {
    e.push_back({"assert", key, format_double(value)});
  }
  return e;
}

void apply_config_entry(ExperimentConfig& c, const std::string& section, const std::string& key,
                        const std::string& raw) {
  const std::string v = trim(raw);
  const std::string name = section + "." + key;
  auto d = [&] { return parse_double(name, v); };
  auto u = [&] { return static_cast<std::size_t>(parse_uint(name, v)); };
  if (section == "study") {
    if (key == "kind") return void(c.kind = study_kind_from_string(v));
    if (key == "seed") return void(c.seed = parse_uint(name, v));
    if (key == "replicas") return void(c.replicas = u());
    if (key == "threads") return void(c.threads = u());
    if (key == "out") return void(c.out_dir = v);
    if (key == "replica_begin") return void(c.replica_begin = u());
    if (key == "replica_end") return void(c.replica_end = u());
  } else if (section == "matrix") {
    if (key == "n") return void(c.n = u());
    if (key == "n_grid") return void(c.n_grid = parse_list<std::size_t>(name, v));
    if (key == "mu") return void(c.mu = d());
    if (key == "pattern") return void(c.pattern = pattern_kind_from_string(v));
  } else if (section == "law") {
    if (key == "alpha") return void(c.alpha = d());
    if (key == "scale") return void(c.law.scale = d());
    if (key == "slowly_varying") return void(c.law.slowly_varying = v);
    if (key == "c") return void(c.law.c = d());
    if (key == "beta") return void(c.law.beta = d());
    if (key == "symmetrized") return void(c.law.symmetrized = parse_bool(name, v));
    if (key == "variance_normalized") return void(c.law.variance_normalized = parse_bool(name, v));
  } else if (section == "solver") {
    if (key == "top_k") return void(c.top_k = u());
    if (key == "tol") return void(c.tol = d());
    if (key == "max_iter") return void(c.max_iter = u());
    if (key == "dense_limit") return void(c.dense_limit = u());
  } else if (section == "truncation") {
    if (key == "gamma") return void(c.gamma = d());
    if (key == "gamma_prime") return void(c.gamma_prime = d());
    if (key == "gamma_double_prime") return void(c.gamma_double_prime = d());
    if (key == "s_grid") return void(c.s_grid = parse_list<std::size_t>(name, v));
    if (key == "kappa") return void(c.kappa = d());
  } else if (section == "localization") {
    if (key == "c") return void(c.c = d());
    if (key == "eta0") return void(c.eta0 = d());
  } else if (section == "poisson") {
    if (key == "t") return void(c.t = d());
    if (key == "spacing_k") return void(c.spacing_k = u());
  } else if (section == "tailsums") {
    if (key == "low_exponent") return void(c.low_exponent = d());
    if (key == "high_exponent") return void(c.high_exponent = d());
    if (key == "epsilon") return void(c.epsilon = d());
    if (key == "n_grid") return void(c.tail_n_grid = parse_list<std::uint64_t>(name, v));
    if (key == "reference_n") return void(c.reference_n = parse_uint(name, v));
  } else if (section == "assert") {
    return void(c.thresholds[key] = d());
  }
  throw ConfigError("unknown config key '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must appear inside a [section]");
    }
    for (const auto& [key, value] : body) apply_config_entry(c, section, key, value.data());
  }
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  std::string section;
  for (const auto& e : config_entries(c)) {
    if (e.section != section) {
      if (!section.empty()) out += "\n";
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += e.key + " = " + e.value + "\n";
  }
  return out;
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw BoundsError("no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::values(const std::string& name) const {
  return column_of(rows, column(name));
}

void Table::sort_by_keys() {
  const std::size_t k = key_columns;
  std::stable_sort(rows.begin(), rows.end(), [k](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k),
                                        b.begin(), b.begin() + static_cast<std::ptrdiff_t>(k));
  });
}

bool StudySummary::passed() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.passed; });
}

// ---------------------------------------------------------------------------
// Per-study record tables

namespace {

StudySummary tables_subcritical(const ExperimentConfig& c) {
  const auto pattern = build_pattern(c.n, c.mu, c.pattern);
  const TailLaw law = c.make_law();
  const double b = b_n(law, pattern->independent_entry_count());
  const std::size_t kk = c.top_k;

  Table t;
  t.columns = {"replica", "b_n", "converged", "iterations"};
  for (std::size_t k = 1; k <= kk; ++k) {
    for (const char* stem : {"entry", "lambda", "ratio", "neg_ratio", "overlap", "point"}) {
      t.columns.push_back(k_name(stem, k));
    }
  }
  const std::size_t begin = c.replica_begin;
  t.rows = run_rows(c, c.range_end() - begin, [&](std::size_t idx) {
    const std::size_t r = begin + idx;
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = static_cast<double>(r);
    row[1] = b;
    row[2] = 0.0;
    row[3] = 0.0;
    const auto m = sample_matrix(pattern, law, *c.seed, r);
    const auto ranked = largest_entries(m, kk);
    try {
      const SymmetricOperator op(m);
      const auto pairs = lanczos_extremes(op, kk, kk, lanczos_options(c, 0x5c01, r));
      row[2] = pairs.top.converged && pairs.bottom.converged ? 1.0 : 0.0;
      row[3] = static_cast<double>(pairs.top.iterations);
      for (std::size_t k = 0; k < kk; ++k) {
        const auto& e = ranked[k];
        const double lambda = pairs.top.eigenvalues[k];
        const double lambda_neg = pairs.bottom.eigenvalues[kk - 1 - k];
        const auto& v = pairs.top.eigenvectors[k];
        const std::size_t base = 4 + 6 * k;
        row[base] = e.modulus;
        row[base + 1] = lambda;
        row[base + 2] = lambda / e.modulus;
        row[base + 3] = -lambda_neg / e.modulus;
        row[base + 4] = e.i == e.j ? std::abs(v[e.i]) : two_coord_overlap(v, e.i, e.j, e.sign);
        row[base + 5] = lambda / b;
      }
    } catch (const NumericError&) {
      row[2] = 0.0;
    }
    return row;
  });
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_poisson(const ExperimentConfig& c) {
  const auto pattern = build_pattern(c.n, c.mu, c.pattern);
  const TailLaw law = c.make_law();
  const double b = b_n(law, pattern->independent_entry_count());
  const std::size_t kk = c.top_k;

  Table t;
  t.columns = {"replica", "b_n", "converged", "iterations"};
  for (std::size_t k = 1; k <= kk; ++k) t.columns.push_back(k_name("point", k));
  for (std::size_t k = 1; k <= kk; ++k) t.columns.push_back(k_name("entry_point", k));
  const std::size_t begin = c.replica_begin;
  t.rows = run_rows(c, c.range_end() - begin, [&](std::size_t idx) {
    const std::size_t r = begin + idx;
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = static_cast<double>(r);
    row[1] = b;
    row[2] = 0.0;
    row[3] = 0.0;
    const auto m = sample_matrix(pattern, law, *c.seed, r);
    const auto ranked = largest_entries(m, kk);
    for (std::size_t k = 0; k < kk; ++k) row[4 + kk + k] = ranked[k].modulus / b;
    try {
      auto opts = lanczos_options(c, 0x9015, r);
      opts.want_vectors = false;
      const auto top = lanczos_topk(SymmetricOperator(m), kk, Which::largest_algebraic, opts);
      row[2] = top.converged ? 1.0 : 0.0;
      row[3] = static_cast<double>(top.iterations);
      for (std::size_t k = 0; k < kk; ++k) row[4 + k] = top.eigenvalues[k] / b;
    } catch (const NumericError&) {
      row[2] = 0.0;
    }
    return row;
  });
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_supercritical(const ExperimentConfig& c) {
  const auto pattern = build_pattern(c.n, c.mu, c.pattern);
  const TailLaw law = c.make_law();
  const double scale = std::pow(static_cast<double>(c.n), c.mu / 2.0);

  Table t;
  t.columns = {"replica",   "converged",          "iterations",         "edge_top",
               "edge_bottom", "event",            "flagged_localized", "flagged_successive",
               "min_best_tail", "max_participation"};
  const std::size_t begin = c.replica_begin;
  const std::size_t count = c.range_end() - begin;
  t.rows = run_rows(c, count, [&](std::size_t idx) {
    const std::size_t r = begin + idx;
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = static_cast<double>(r);
    row[1] = 0.0;
    row[2] = 0.0;
    const auto m = sample_matrix(pattern, law, *c.seed, r);
    try {
      const SymmetricOperator op(m);
      const auto pairs = lanczos_extremes(op, c.top_k, c.top_k, lanczos_options(c, 0x5e9e, r));
      row[1] = pairs.top.converged && pairs.bottom.converged ? 1.0 : 0.0;
      row[2] = static_cast<double>(pairs.top.iterations);
      row[3] = pairs.top.eigenvalues.front() / scale;
      row[4] = std::abs(pairs.bottom.eigenvalues.back()) / scale;
      const SpectralSummary* parts[] = {&pairs.top, &pairs.bottom};
      const auto report = delocalization_scan(parts, c.n, c.mu, c.alpha, c.c, c.eta0);
      bool loc = false, succ = false;
      double min_tail = 1.0, max_pr = 0.0;
      for (const auto& rec : report.records) {
        loc = loc || rec.flagged;
        succ = succ || rec.flagged_successive;
        min_tail = std::min(min_tail, rec.best_tail);
        max_pr = std::max(max_pr, rec.participation_ratio);
      }
      row[5] = report.event ? 1.0 : 0.0;
      row[6] = loc ? 1.0 : 0.0;
      row[7] = succ ? 1.0 : 0.0;
      row[8] = min_tail;
      row[9] = max_pr;
    } catch (const NumericError&) {
      row[1] = 0.0;
    }
    return row;
  });

  StudySummary s;
  const auto grid = supercritical_grid(c);
  if (!grid.empty()) {
    Table g;
    g.columns = {"n", "replica", "converged", "edge_top"};
    g.key_columns = 2;
    for (std::size_t gn : grid) {
      std::vector<std::vector<double>> rows;
      if (gn == c.n) {
        for (const auto& row : t.rows) rows.push_back({static_cast<double>(gn), row[0], row[1], row[3]});
      } else {
        const auto gp = build_pattern(gn, c.mu, c.pattern);
        const double gs = std::pow(static_cast<double>(gn), c.mu / 2.0);
        rows = run_rows(c, count, [&](std::size_t idx) {
          const std::size_t r = begin + idx;
          std::vector<double> row = {static_cast<double>(gn), static_cast<double>(r), 0.0, kNaN};
          const auto m = sample_matrix(gp, law, derive_seed(*c.seed, 0xed6e, gn), r);
          try {
            auto opts = lanczos_options(c, 0xed6e + gn, r);
            opts.want_vectors = false;
            const auto top = lanczos_topk(SymmetricOperator(m), 1, Which::largest_algebraic, opts);
            row[2] = top.converged ? 1.0 : 0.0;
            row[3] = top.eigenvalues.front() / gs;
          } catch (const NumericError&) {
          }
          return row;
        });
      }
      for (auto& row : rows) g.rows.push_back(std::move(row));
    }
    s.tables["edge_grid"] = std::move(g);
  }
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_semicircle(const ExperimentConfig& c) {
  const auto pattern = build_pattern(c.n, c.mu, c.pattern);
  const TailLaw law = c.make_law();
  const double scale = std::pow(static_cast<double>(c.n), c.mu / 2.0);
  Table t;
  t.columns = {"replica", "converged", "ks", "edge_top"};
  const std::size_t begin = c.replica_begin;
  t.rows = run_rows(c, c.range_end() - begin, [&](std::size_t idx) {
    const std::size_t r = begin + idx;
    std::vector<double> row = {static_cast<double>(r), 0.0, kNaN, kNaN};
    const auto m = sample_matrix(pattern, law, *c.seed, r);
    try {
      const auto spec = dense_eigh(m, false, c.dense_limit);
      row[1] = 1.0;
      row[2] = semicircle_ks(spec.eigenvalues, scale);
      row[3] = spec.eigenvalues.front() / scale;
    } catch (const NumericError&) {
    }
    return row;
  });
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_moments(const ExperimentConfig& c) {
  const TailLaw law = c.make_law();
  Table t;
  t.columns = {"n", "replica"};
  t.key_columns = 2;
  for (auto sv : c.s_grid) t.columns.push_back(k_name("trace_s", sv));
  t.columns.push_back("norm_hat");
  const std::size_t begin = c.replica_begin;
  const std::size_t count = c.range_end() - begin;
  for (std::size_t n : moment_grid(c)) {
    const auto pattern = build_pattern(n, c.mu, c.pattern);
    auto rows = run_rows(c, count, [&](std::size_t idx) {
      const std::size_t r = begin + idx;
      std::vector<double> row = {static_cast<double>(n), static_cast<double>(r)};
      // Same replica streams as trace_power_moment.
      const auto m = sample_matrix(pattern, law, *c.seed, r);
      const auto hat = truncate_matrix(m, c.gamma).hat.to_dense();
      for (auto sv : c.s_grid) row.push_back(trace_power(hat, sv));
      row.push_back(spectral_radius(hat));
      return row;
    });
    for (auto& row : rows) t.rows.push_back(std::move(row));
  }
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_tailsums(const ExperimentConfig& c) {
  const TailLaw law = c.make_law();
  Table t;
  t.columns = {"n", "replica", "sum"};
  t.key_columns = 2;
  const std::size_t begin = c.replica_begin;
  const std::size_t count = c.range_end() - begin;
  for (auto n : c.tail_n_grid) {
    TailSumConfig cfg;
    cfg.mu = c.mu;
    cfg.n = n;
    cfg.window = sum_window(c);
    cfg.epsilon = c.epsilon;
    cfg.replicas = c.replicas;
    const std::uint64_t seed = derive_seed(*c.seed, 0x7a11, n);
    auto rows = run_rows(c, count, [&](std::size_t idx) {
      const std::size_t r = begin + idx;
      return std::vector<double>{static_cast<double>(n), static_cast<double>(r),
                                 truncated_sum_sample(law, cfg, seed, r)};
    });
    for (auto& row : rows) t.rows.push_back(std::move(row));
  }
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

StudySummary tables_perturbation(const ExperimentConfig& c) {
  const auto pattern = build_pattern(c.n, c.mu, c.pattern);
  const TailLaw law = c.make_law();
  const double b = b_n(law, pattern->independent_entry_count());
  const std::size_t kk = c.top_k;
  const double kappa = (1.0 + 2.0 * c.mu) / (2.0 * (1.0 + c.mu)) + kA3Margin;
  const double tau = 1.0 / (1.0 + c.mu) + kA3Margin;

  Table t;
  t.columns = {"replica", "b_n", "converged", "fact1_gap", "b_i", "b_ii", "b_iii"};
  for (std::size_t k = 1; k <= kk; ++k) {
    for (const char* stem : {"ratio", "distance", "fact3"}) t.columns.push_back(k_name(stem, k));
  }
  const std::size_t begin = c.replica_begin;
  t.rows = run_rows(c, c.range_end() - begin, [&](std::size_t idx) {
    const std::size_t r = begin + idx;
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = static_cast<double>(r);
    row[1] = b;
    row[2] = 0.0;
    const auto m = sample_matrix(pattern, law, *c.seed, r);
    const auto a3 = hypothesis_a3_report(m, b, kappa, tau, kA3Nu, kk);
    row[4] = a3.b_i ? 1.0 : 0.0;
    row[5] = a3.b_ii ? 1.0 : 0.0;
    row[6] = a3.b_iii ? 1.0 : 0.0;
    try {
      const auto rep = theorem_a2_verify(m, kk, std::min<std::size_t>(c.dense_limit, 1000));
      row[2] = rep.solver_converged ? 1.0 : 0.0;
      row[3] = rep.fact1_gap;
      for (std::size_t k = 0; k < kk; ++k) {
        row[7 + 3 * k] = rep.entries[k].ratio;
        row[8 + 3 * k] = rep.entries[k].vector_distance;
        row[9 + 3 * k] = rep.entries[k].fact3_residual / b;
      }
    } catch (const NumericError&) {
      row[2] = 0.0;
    }
    return row;
  });
  StudySummary s;
  s.tables["replicas"] = std::move(t);
  return s;
}

// ---------------------------------------------------------------------------
// Aggregates

using Aggregates = std::map<std::string, double>;

Aggregates aggregate_subcritical(const StudySummary& s) {
  const ExperimentConfig& c = s.config;
  const Table& all = s.tables.at("replicas");
  const Table ok = converged_rows(all);
  Aggregates a;
  a["replicas_recorded"] = static_cast<double>(all.rows.size());
  a["solver_failures"] = static_cast<double>(solver_failures(all));
  for (std::size_t k = 1; k <= c.top_k; ++k) {
    a[k_name("median_ratio", k)] = median(ok.values(k_name("ratio", k)));
    a[k_name("median_neg_ratio", k)] = median(ok.values(k_name("neg_ratio", k)));
    a[k_name("median_overlap", k)] = median(ok.values(k_name("overlap", k)));
  }
  // Failed replicas count against the pass fraction.
  const double level = c.threshold("overlap_min");
  const auto ov = all.values("overlap_1");
  const auto conv = all.values("converged");
  double pass = 0.0;
  for (std::size_t i = 0; i < ov.size(); ++i) {
    if (conv[i] == 1.0 && ov[i] >= level) pass += 1.0;
  }
  a["overlap_pass_fraction"] = ov.empty() ? kNaN : pass / static_cast<double>(ov.size());
  return a;
}

void add_poisson_aggregates(Aggregates& a, const std::string& prefix, const Table& ok,
                            const ExperimentConfig& c, const char* stem) {
  std::vector<PointProcessSample> samples;
  for (const auto& row : ok.rows) {
    std::vector<double> pts;
    for (std::size_t k = 1; k <= c.top_k; ++k) pts.push_back(row[ok.column(k_name(stem, k))]);
    const double floor_level = *std::min_element(pts.begin(), pts.end());
    samples.push_back(make_point_process(pts, 1.0, c.alpha, static_cast<std::uint64_t>(row[0]),
                                         floor_level));
  }
  const std::vector<std::string> names = {"mean_count", "var_count", "dispersion", "chi_square",
                                          "spacing_ks"};
  for (const auto& n : names) a[prefix + n] = kNaN;
  try {
    const auto res = poisson_count_test(samples, c.t);
    a[prefix + "mean_count"] = res.mean_count;
    a[prefix + "var_count"] = res.var_count;
    a[prefix + "dispersion"] = res.dispersion;
    a[prefix + "chi_square"] = res.chi_square;
    a["expected_mean"] = res.expected_mean;
  } catch (const std::exception&) {
    a[prefix + "count_test_failed"] = 1.0;
  }
  try {
    a[prefix + "spacing_ks"] = transformed_spacings_test(samples, c.spacing_k);
  } catch (const std::exception&) {
    a[prefix + "spacing_test_failed"] = 1.0;
  }
}

Aggregates aggregate_poisson(const StudySummary& s) {
  const Table& all = s.tables.at("replicas");
  const Table ok = converged_rows(all);
  Aggregates a;
  a["replicas_recorded"] = static_cast<double>(all.rows.size());
  a["solver_failures"] = static_cast<double>(solver_failures(all));
  add_poisson_aggregates(a, "eig_", ok, s.config, "point");
  add_poisson_aggregates(a, "entry_", ok, s.config, "entry_point");
  return a;
}

Aggregates aggregate_supercritical(const StudySummary& s) {
  const Table& all = s.tables.at("replicas");
  const Table ok = converged_rows(all);
  Aggregates a;
  a["replicas_recorded"] = static_cast<double>(all.rows.size());
  a["solver_failures"] = static_cast<double>(solver_failures(all));
  a["median_edge_top"] = median(ok.values("edge_top"));
  a["median_edge_bottom"] = median(ok.values("edge_bottom"));
  a["event_frequency"] = mean(ok.values("event"));
  a["flagged_localized_frequency"] = mean(ok.values("flagged_localized"));
  a["flagged_successive_frequency"] = mean(ok.values("flagged_successive"));
  a["median_min_best_tail"] = median(ok.values("min_best_tail"));
  if (auto it = s.tables.find("edge_grid"); it != s.tables.end()) {
    const Table g = converged_rows(it->second);
    std::set<double> sizes;
    for (const auto& row : g.rows) sizes.insert(row[0]);
    double prev_gap = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double n : sizes) {
      const double med = median(column_of(rows_with_key(g, n), g.column("edge_top")));
      a["median_edge_n" + std::to_string(static_cast<std::uint64_t>(n))] = med;
      const double gap = std::abs(2.0 - med);
      monotone = monotone && gap <= prev_gap;
      prev_gap = gap;
    }
    a["edge_monotone"] = sizes.size() >= 2 ? (monotone ? 1.0 : 0.0) : kNaN;
  }
  return a;
}

Aggregates aggregate_semicircle(const StudySummary& s) {
  const Table& all = s.tables.at("replicas");
  const Table ok = converged_rows(all);
  Aggregates a;
  a["replicas_recorded"] = static_cast<double>(all.rows.size());
  a["solver_failures"] = static_cast<double>(solver_failures(all));
  a["mean_ks"] = mean(ok.values("ks"));
  a["median_ks"] = median(ok.values("ks"));
  a["max_ks"] = maximum(ok.values("ks"));
  a["median_edge_top"] = median(ok.values("edge_top"));
  return a;
}

Aggregates aggregate_moments(const StudySummary& s) {
  const ExperimentConfig& c = s.config;
  const Table& t = s.tables.at("replicas");
  Aggregates a;
  std::set<double> sizes;
  for (const auto& row : t.rows) sizes.insert(row[0]);
  if (sizes.empty()) return a;

  std::map<std::pair<double, std::size_t>, double> ratio;
  double s_window_violations = 0.0;
  for (double nd : sizes) {
    const auto n = static_cast<std::size_t>(nd);
    const auto rows = rows_with_key(t, nd);
    const std::string tag = "_n" + std::to_string(n);
    for (auto sv : c.s_grid) {
      const auto v = column_of(rows, t.column(k_name("trace_s", sv)));
      const double m = mean(v);
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      const double se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) /
                                                  static_cast<double>(v.size()))
                                      : kNaN;
      const auto spec = truncation_spec(c, sv);
      const double log_rhs = moment_bound_rhs(n, c.mu, spec, 1.0).log;
      const double r = std::exp(std::log(m) - log_rhs);
      const std::string cell = tag + "_s" + std::to_string(sv);
      a["mean_trace" + cell] = m;
      a["se_trace" + cell] = se;
      a["log_rhs" + cell] = log_rhs;
      a["ratio" + cell] = r;
      ratio[{nd, sv}] = r;
      if (!check_window(c.mu, n, spec).s_ok) s_window_violations += 1.0;
    }
  }
  const double smallest = *sizes.begin();
  double fit = 0.0, max_ratio = 0.0;
  for (const auto& [key, r] : ratio) {
    if (key.first == smallest) fit = std::max(fit, r);
    max_ratio = std::max(max_ratio, r);
  }
  a["fitted_constant"] = fit;
  a["max_ratio_over_fit"] = max_ratio / fit;
  a["s_window_violations"] = s_window_violations;

  for (double nd : sizes) {
    const auto n = static_cast<std::size_t>(nd);
    const auto rows = rows_with_key(t, nd);
    const std::string tag = "_n" + std::to_string(n);
    const auto s_cheb = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::pow(nd, c.gamma_double_prime))));
    const double level = 2.0 * c.kappa * std::pow(nd, c.gamma_prime);
    const auto norms = column_of(rows, t.column("norm_hat"));
    double exceed = 0.0;
    for (double x : norms) exceed += x >= level ? 1.0 : 0.0;
    a["chebyshev_s" + tag] = static_cast<double>(s_cheb);
    a["chebyshev_bound" + tag] =
        chebyshev_tail(n, c.mu, truncation_spec(c, s_cheb), c.kappa, fit).linear;
    a["chebyshev_empirical" + tag] = exceed / static_cast<double>(norms.size());
    a["replicas" + tag] = static_cast<double>(norms.size());
  }
  return a;
}

Aggregates aggregate_tailsums(const StudySummary& s) {
  const ExperimentConfig& c = s.config;
  const Table& t = s.tables.at("replicas");
  const auto part = classify_sum_window(c.alpha, c.mu, sum_window(c));
  const double exponent = predicted_sum_exponent(part, c.alpha, c.mu, sum_window(c), c.epsilon);
  Aggregates a;
  a["part"] = static_cast<double>(static_cast<int>(part));
  a["predicted_exponent"] = exponent;
  std::set<double> sizes;
  for (const auto& row : t.rows) sizes.insert(row[0]);
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  a["reference_exceedance"] = kNaN;
  for (double nd : sizes) {
    const auto sums = column_of(rows_with_key(t, nd), 2);
    const double threshold = std::pow(nd, exponent);
    double exceed = 0.0;
    for (double x : sums) exceed += x > threshold ? 1.0 : 0.0;
    const double freq = exceed / static_cast<double>(sums.size());
    const std::string tag = "_n" + std::to_string(static_cast<std::uint64_t>(nd));
    a["threshold" + tag] = threshold;
    a["exceedance" + tag] = freq;
    a["mean_sum" + tag] = mean(sums);
    monotone = monotone && freq <= prev;
    prev = freq;
    if (static_cast<std::uint64_t>(nd) == c.reference_n) a["reference_exceedance"] = freq;
  }
  a["decay_monotone"] = monotone ? 1.0 : 0.0;
  return a;
}

Aggregates aggregate_perturbation(const StudySummary& s) {
  const ExperimentConfig& c = s.config;
  const Table& all = s.tables.at("replicas");
  const Table ok = converged_rows(all);
  Aggregates a;
  a["replicas_recorded"] = static_cast<double>(all.rows.size());
  a["solver_failures"] = static_cast<double>(solver_failures(all));
  a["median_fact1_gap"] = median(ok.values("fact1_gap"));
  a["b_i_frequency"] = mean(all.values("b_i"));
  a["b_ii_frequency"] = mean(all.values("b_ii"));
  a["b_iii_frequency"] = mean(all.values("b_iii"));
  for (std::size_t k = 1; k <= c.top_k; ++k) {
    a[k_name("median_ratio", k)] = median(ok.values(k_name("ratio", k)));
    a[k_name("median_distance", k)] = median(ok.values(k_name("distance", k)));
    a[k_name("median_fact3", k)] = median(ok.values(k_name("fact3", k)));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Assertions

std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Assertion in_band(const std::string& name, double value, double lo, double hi) {
  Assertion a;
  a.name = name;
  a.value = value;
  a.passed = std::isfinite(value) && value >= lo && value <= hi;
  a.detail = "expected in [" + short_double(lo) + ", " + short_double(hi) + "]";
  return a;
}

Assertion at_most(const std::string& name, double value, double hi) {
  Assertion a;
  a.name = name;
  a.value = value;
  a.passed = std::isfinite(value) && value <= hi;
  a.detail = "expected <= " + short_double(hi);
  return a;
}

Assertion at_least(const std::string& name, double value, double lo) {
  Assertion a;
  a.name = name;
  a.value = value;
  a.passed = std::isfinite(value) && value >= lo;
  a.detail = "expected >= " + short_double(lo);
  return a;
}

double agg(const StudySummary& s, const std::string& key) {
  const auto it = s.aggregates.find(key);
  return it == s.aggregates.end() ? kNaN : it->second;
}

}  // namespace

std::map<std::string, double> recompute_aggregates(const StudySummary& s) {
  switch (s.config.kind) {
    case StudyKind::subcritical: return aggregate_subcritical(s);
    case StudyKind::supercritical: return aggregate_supercritical(s);
    case StudyKind::semicircle: return aggregate_semicircle(s);
    case StudyKind::poisson: return aggregate_poisson(s);
    case StudyKind::moments: return aggregate_moments(s);
    case StudyKind::tailsums: return aggregate_tailsums(s);
    case StudyKind::perturbation: return aggregate_perturbation(s);
  }
  return {};
}

std::vector<Assertion> evaluate_assertions(const StudySummary& s) {
  const ExperimentConfig& c = s.config;
  std::vector<Assertion> out;
  auto th = [&](const char* key) { return c.threshold(key); };
  switch (c.kind) {
    case StudyKind::subcritical:
      out.push_back(in_band("median ratio k=1", agg(s, "median_ratio_1"), th("ratio1_low"),
                            th("ratio1_high")));
      for (std::size_t k = 2; k <= c.top_k; ++k) {
        out.push_back(in_band("median ratio k=" + std::to_string(k),
                              agg(s, k_name("median_ratio", k)), th("ratiok_low"),
                              th("ratiok_high")));
      }
      out.push_back(at_least("overlap k=1 >= " + short_double(th("overlap_min")) + " fraction",
                             agg(s, "overlap_pass_fraction"), th("overlap_fraction")));
      break;
    case StudyKind::supercritical:
      out.push_back(in_band("median edge lambda_1 / N^(mu/2)", agg(s, "median_edge_top"),
                            th("edge_low"), th("edge_high")));
      out.push_back(at_most("delocalization event frequency", agg(s, "event_frequency"),
                            th("event_max")));
      if (std::isfinite(agg(s, "edge_monotone"))) {
        out.push_back(at_least("edge approaches 2 monotonically in N", agg(s, "edge_monotone"), 1.0));
      }
      break;
    case StudyKind::semicircle:
      out.push_back(at_most("mean semicircle KS", agg(s, "mean_ks"), th("ks_max")));
      break;
    case StudyKind::poisson:
      out.push_back(in_band("mean count above t", agg(s, "eig_mean_count"), th("mean_low"),
                            th("mean_high")));
      out.push_back(in_band("count dispersion", agg(s, "eig_dispersion"), th("dispersion_low"),
                            th("dispersion_high")));
      out.push_back(at_most("transformed spacing KS", agg(s, "eig_spacing_ks"),
                            th("spacing_ks_max")));
      break;
    case StudyKind::moments: {
      out.push_back(at_most("max ratio over fitted constant", agg(s, "max_ratio_over_fit"),
                            th("ratio_factor")));
      for (auto n : moment_grid(c)) {
        const std::string tag = "_n" + std::to_string(n);
        const double reps = agg(s, "replicas" + tag);
        const double allowed = std::max(th("chebyshev_factor") * agg(s, "chebyshev_bound" + tag),
                                        th("chebyshev_floor") / reps);
        out.push_back(at_most("Chebyshev exceedance N=" + std::to_string(n),
                              agg(s, "chebyshev_empirical" + tag), allowed));
      }
      break;
    }
    case StudyKind::tailsums:
      if (std::isfinite(agg(s, "reference_exceedance"))) {
        out.push_back(at_most("exceedance at n=" + std::to_string(c.reference_n),
                              agg(s, "reference_exceedance"), th("exceed_max")));
      }
      out.push_back(at_least("exceedance non-increasing in n", agg(s, "decay_monotone"), 1.0));
      break;
    case StudyKind::perturbation:
      out.push_back(in_band("median ratio k=1", agg(s, "median_ratio_1"), th("ratio1_low"),
                            th("ratio1_high")));
      break;
  }
  return out;
}

namespace {

template <class TablesFn>
StudySummary run_with(const ExperimentConfig& config, StudyKind kind, TablesFn&& fn) {
  if (config.kind != kind) {
    throw ConfigError(std::string("config kind ") + to_string(config.kind) + " passed to the " +
                      to_string(kind) + " study");
  }
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  StudySummary s = fn(config);
  s.config = config;
  for (auto& [name, table] : s.tables) table.sort_by_keys();
  s.aggregates = recompute_aggregates(s);
  s.assertions = evaluate_assertions(s);
  s.telemetry.threads = config.threads;
  for (const auto& [name, table] : s.tables) {
    if (std::find(table.columns.begin(), table.columns.end(), "iterations") != table.columns.end()) {
      for (double it : table.values("iterations")) {
        if (std::isfinite(it)) s.telemetry.solver_iterations += static_cast<std::size_t>(it);
      }
    }
  }
  s.telemetry.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

}  // namespace

StudySummary run_subcritical_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::subcritical, tables_subcritical);
}
StudySummary run_supercritical_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::supercritical, tables_supercritical);
}
StudySummary run_semicircle_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::semicircle, tables_semicircle);
}
StudySummary run_poisson_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::poisson, tables_poisson);
}
StudySummary run_moment_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::moments, tables_moments);
}
StudySummary run_tailsum_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::tailsums, tables_tailsums);
}
StudySummary run_perturbation_study(const ExperimentConfig& c) {
  return run_with(c, StudyKind::perturbation, tables_perturbation);
}

StudySummary run_study(const ExperimentConfig& c) {
  switch (c.kind) {
    case StudyKind::subcritical: return run_subcritical_study(c);
    case StudyKind::supercritical: return run_supercritical_study(c);
    case StudyKind::semicircle: return run_semicircle_study(c);
    case StudyKind::poisson: return run_poisson_study(c);
    case StudyKind::moments: return run_moment_study(c);
    case StudyKind::tailsums: return run_tailsum_study(c);
    case StudyKind::perturbation: return run_perturbation_study(c);
  }
  throw ConfigError("unknown study kind");
}

}  // namespace htband
