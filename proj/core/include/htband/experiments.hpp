#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htband/ensemble.hpp"
#include "htband/heavy_tail.hpp"

namespace htband {

enum class StudyKind { subcritical, supercritical, semicircle, poisson, moments, tailsums, perturbation };

const char* to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

struct LawOptions {
  double scale = 1.0;
  std::string slowly_varying = "constant";  ///< "constant" or "log_power"
  double c = 1.0;
  double beta = 0.0;
  bool symmetrized = true;
  bool variance_normalized = false;
};

struct ExperimentConfig {
  StudyKind kind = StudyKind::subcritical;
  std::optional<std::uint64_t> seed;  ///< mandatory; no ambient entropy
  std::size_t replicas = 100;
  std::size_t threads = 1;
  std::string out_dir;
  /// Replica sub-range [replica_begin, replica_end) for sharded runs;
  /// replica_end = 0 means `replicas`.
  std::size_t replica_begin = 0;
  std::size_t replica_end = 0;

  std::size_t n = 500;
  std::vector<std::size_t> n_grid;  ///< extra sizes (supercritical edge, moments)
  double mu = 1.0;
  PatternKind pattern = PatternKind::cyclic_band;

  double alpha = 1.5;
  LawOptions law;

  std::size_t top_k = 3;
  double tol = 1e-10;
  std::size_t max_iter = 0;
  std::size_t dense_limit = 4096;

  double gamma = 0.1;
  double gamma_prime = 0.55;
  double gamma_double_prime = 0.19;
  std::vector<std::size_t> s_grid = {1, 2, 3};
  double kappa = 0.9;

  double c = 0.25;
  double eta0 = 0.4;

  double t = 1.0;
  std::size_t spacing_k = 5;

  double low_exponent = -std::numeric_limits<double>::infinity();
  double high_exponent = 1.0 / 3.0;
  double epsilon = 0.1;
  std::vector<std::uint64_t> tail_n_grid = {1000, 10000, 100000};
  std::uint64_t reference_n = 10000;

  /// Pass/fail thresholds; unset keys take the per-kind defaults.
  std::map<std::string, double> thresholds;

  TailLaw make_law() const;
  double threshold(const std::string& key) const;
  std::size_t range_end() const { return replica_end == 0 ? replicas : replica_end; }
};

/// Default pass/fail thresholds of a study kind.
std::map<std::string, double> default_thresholds(StudyKind kind);

/// Regime, law and parameter checks; ConfigError before any sampling.
void validate(const ExperimentConfig& config);

/// One "key = value" line of a config section.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
};

/// Every field of a config as section/key/value text (doubles at 17
/// significant digits, so a round trip is exact).
std::vector<ConfigEntry> config_entries(const ExperimentConfig& config);
/// Sets one field; ConfigError for unknown keys or malformed values.
void apply_config_entry(ExperimentConfig& config, const std::string& section,
                        const std::string& key, const std::string& value);

/// Parses the sectioned key=value format (see docs in README).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);
/// Renders a config back to the same format.
std::string format_config(const ExperimentConfig& config);

/// Numeric per-record table. `key_columns` leading columns identify a
/// record (e.g. replica, or n and replica) and define merge order.
struct Table {
  std::vector<std::string> columns;
  std::size_t key_columns = 1;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
  void sort_by_keys();
};

struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct Telemetry {
  double wall_seconds = 0.0;
  std::size_t threads = 1;
  std::size_t solver_iterations = 0;
};

struct StudySummary {
  static constexpr int kSchemaVersion = 1;
  int schema_version = kSchemaVersion;
  ExperimentConfig config;
  std::map<std::string, Table> tables;
  std::map<std::string, double> aggregates;
  std::vector<Assertion> assertions;
  Telemetry telemetry;

  bool passed() const;
};

StudySummary run_subcritical_study(const ExperimentConfig& config);
StudySummary run_supercritical_study(const ExperimentConfig& config);
StudySummary run_semicircle_study(const ExperimentConfig& config);
StudySummary run_poisson_study(const ExperimentConfig& config);
StudySummary run_moment_study(const ExperimentConfig& config);
StudySummary run_tailsum_study(const ExperimentConfig& config);
StudySummary run_perturbation_study(const ExperimentConfig& config);
/// Dispatches on config.kind.
StudySummary run_study(const ExperimentConfig& config);

/// Recomputes aggregates from tables and config only.
std::map<std::string, double> recompute_aggregates(const StudySummary& summary);
/// Recomputes assertions from aggregates and config thresholds.
std::vector<Assertion> evaluate_assertions(const StudySummary& summary);

/// summary.json plus one CSV per table (hex-float values) and gnuplot-ready
/// histogram files. The summary carries FNV-1a checksums of itself and of
/// every table.
void persist(const StudySummary& summary, const std::filesystem::path& dir);
/// IntegrityError on checksum or schema mismatch.
StudySummary load(const std::filesystem::path& dir);

/// Writes the tables of a partial run under dir/shard-<index>.
void persist_shard(const StudySummary& partial, const std::filesystem::path& dir,
                   std::size_t shard_index);
/// Concatenates every shard under dir, sorts records by key and recomputes
/// aggregates and assertions.
StudySummary merge_shards(const std::filesystem::path& dir);

/// FNV-1a 64-bit digest.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace htband
