#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "htband/errors.hpp"
#include "htband/experiments.hpp"

namespace htband {

namespace {

using nlohmann::json;

constexpr const char* kTableHeader = "# htband-table v1";
constexpr std::size_t kHistogramBins = 30;

std::string hex(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double unhex(const std::string& s) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IntegrityError("malformed number '" + s + "'");
  return x;
}

std::string digest_string(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot write " + p.string());
  out << bytes;
  if (!out) throw IntegrityError("write failed for " + p.string());
}

std::string table_csv(const Table& t) {
  std::string out = kTableHeader;
  out += "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out += ",";
    out += t.columns[c];
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      out += hex(row[c]);
    }
    out += "\n";
  }
  return out;
}

Table parse_table_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader) {
    throw IntegrityError("table " + name + " has an unknown format version");
  }
  Table t;
  if (!std::getline(in, line)) throw IntegrityError("table " + name + " lacks a header");
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) t.columns.push_back(col);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(unhex(cell));
    if (row.size() != t.columns.size()) throw IntegrityError("ragged row in table " + name);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Two-column "center count" text for gnuplot.
std::string histogram(const std::vector<double>& values, const std::string& label) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  std::string out = "# histogram of " + label + "\n# bin_center count\n";
  if (v.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double width = *hi_it > lo ? (*hi_it - lo) / kHistogramBins : 1.0;
  std::vector<std::size_t> counts(kHistogramBins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    ++counts[std::min(b, kHistogramBins - 1)];
  }
  char buf[96];
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    std::snprintf(buf, sizeof buf, "%.10g %zu\n", lo + (static_cast<double>(b) + 0.5) * width,
                  counts[b]);
    out += buf;
  }
  return out;
}

/// Main per-replica quantity plotted for each study.
const char* histogram_column(StudyKind kind) {
  switch (kind) {
    case StudyKind::subcritical: return "ratio_1";
    case StudyKind::supercritical: return "edge_top";
    case StudyKind::semicircle: return "ks";
    case StudyKind::poisson: return "point_1";
    case StudyKind::moments: return "norm_hat";
    case StudyKind::tailsums: return "sum";
    case StudyKind::perturbation: return "ratio_1";
  }
  return "";
}

json config_json(const ExperimentConfig& c) {
  json j = json::object();
  for (const auto& e : config_entries(c)) j[e.section][e.key] = e.value;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  for (const auto& [section, body] : j.items()) {
    for (const auto& [key, value] : body.items()) {
      apply_config_entry(c, section, key, value.get<std::string>());
    }
  }
  return c;
}

json body_json(const StudySummary& s, const std::map<std::string, std::string>& table_digests) {
  json j;
  j["schema_version"] = s.schema_version;
  j["kind"] = to_string(s.config.kind);
  j["config"] = config_json(s.config);
  json agg = json::object();
  for (const auto& [k, v] : s.aggregates) agg[k] = hex(v);
  j["aggregates"] = agg;
  json as = json::array();
  for (const auto& a : s.assertions) {
    as.push_back({{"name", a.name}, {"passed", a.passed}, {"value", hex(a.value)},
                  {"detail", a.detail}});
  }
  j["assertions"] = as;
  j["passed"] = s.passed();
  j["telemetry"] = {{"wall_seconds", hex(s.telemetry.wall_seconds)},
                    {"threads", s.telemetry.threads},
                    {"solver_iterations", s.telemetry.solver_iterations}};
  json tables = json::object();
  for (const auto& [name, t] : s.tables) {
    tables[name] = {{"file", name + ".csv"},
                    {"columns", t.columns},
                    {"key_columns", t.key_columns},
                    {"rows", t.rows.size()},
                    {"checksum", table_digests.at(name)}};
  }
  j["tables"] = tables;
  return j;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void persist(const StudySummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> digests;
  for (const auto& [name, t] : s.tables) {
    const std::string csv = table_csv(t);
    digests[name] = digest_string(fnv1a64(csv));
    write_file(dir / (name + ".csv"), csv);
  }
  json j = body_json(s, digests);
  j["checksum"] = digest_string(fnv1a64(j.dump()));
  write_file(dir / "summary.json", j.dump(2) + "\n");

  const std::string col = histogram_column(s.config.kind);
  for (const auto& [name, t] : s.tables) {
    if (std::find(t.columns.begin(), t.columns.end(), col) == t.columns.end()) continue;
    write_file(dir / ("histogram_" + name + "_" + col + ".dat"),
               histogram(t.values(col), name + "." + col));
  }
}

StudySummary load(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "summary.json"));
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("corrupt summary.json: ") + e.what());
  }
  try {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != StudySummary::kSchemaVersion) {
      throw IntegrityError("schema version mismatch in " + (dir / "summary.json").string());
    }
    const std::string stored = j.at("checksum").get<std::string>();
    json body = j;
    body.erase("checksum");
    if (digest_string(fnv1a64(body.dump())) != stored) {
      throw IntegrityError("summary checksum mismatch in " + dir.string());
    }

    StudySummary s;
    s.schema_version = j["schema_version"].get<int>();
    s.config = config_from_json(j.at("config"));
    for (const auto& [k, v] : j.at("aggregates").items()) s.aggregates[k] = unhex(v.get<std::string>());
    for (const auto& a : j.at("assertions")) {
      s.assertions.push_back({a.at("name").get<std::string>(), a.at("passed").get<bool>(),
                              unhex(a.at("value").get<std::string>()),
                              a.at("detail").get<std::string>()});
    }
    const auto& tel = j.at("telemetry");
    s.telemetry.wall_seconds = unhex(tel.at("wall_seconds").get<std::string>());
    s.telemetry.threads = tel.at("threads").get<std::size_t>();
    s.telemetry.solver_iterations = tel.at("solver_iterations").get<std::size_t>();
    for (const auto& [name, meta] : j.at("tables").items()) {
      const std::string csv = read_file(dir / meta.at("file").get<std::string>());
      if (digest_string(fnv1a64(csv)) != meta.at("checksum").get<std::string>()) {
        throw IntegrityError("checksum mismatch for table " + name);
      }
      Table t = parse_table_csv(csv, name);
      if (t.columns != meta.at("columns").get<std::vector<std::string>>() ||
          t.rows.size() != meta.at("rows").get<std::size_t>()) {
        throw IntegrityError("table " + name + " disagrees with the summary");
      }
      t.key_columns = meta.at("key_columns").get<std::size_t>();
      s.tables[name] = std::move(t);
    }
    return s;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed summary: ") + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("malformed config echo: ") + e.what());
  }
}

void persist_shard(const StudySummary& partial, const std::filesystem::path& dir,
                   std::size_t shard_index) {
  persist(partial, dir / ("shard-" + std::to_string(shard_index)));
}

StudySummary merge_shards(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> shards;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("shard-", 0) == 0) {
      shards.push_back(entry.path());
    }
  }
  if (shards.empty()) throw IntegrityError("no shards under " + dir.string());
  std::sort(shards.begin(), shards.end());

  StudySummary merged;
  bool first = true;
  std::string reference_config;
  for (const auto& p : shards) {
    StudySummary part = load(p);
    ExperimentConfig full = part.config;
    full.replica_begin = 0;
    full.replica_end = 0;
    full.threads = 1;
    const std::string text = format_config(full);
    if (first) {
      merged.config = part.config;
      merged.config.replica_begin = 0;
      merged.config.replica_end = 0;
      reference_config = text;
      merged.tables = part.tables;
      merged.telemetry = part.telemetry;
      first = false;
      continue;
    }
    if (text != reference_config) throw IntegrityError("shard " + p.string() + " has a different config");
    for (auto& [name, t] : part.tables) {
      auto it = merged.tables.find(name);
      if (it == merged.tables.end() || it->second.columns != t.columns) {
        throw IntegrityError("shard " + p.string() + " has mismatched table " + name);
      }
      for (auto& row : t.rows) it->second.rows.push_back(std::move(row));
    }
    merged.telemetry.wall_seconds += part.telemetry.wall_seconds;
    merged.telemetry.threads = std::max(merged.telemetry.threads, part.telemetry.threads);
    merged.telemetry.solver_iterations += part.telemetry.solver_iterations;
  }
  for (auto& [name, t] : merged.tables) {
    t.sort_by_keys();
    const std::size_t k = t.key_columns;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      if (std::equal(t.rows[i].begin(), t.rows[i].begin() + static_cast<std::ptrdiff_t>(k),
                     t.rows[i - 1].begin())) {
        throw IntegrityError("duplicate record in table " + name);
      }
    }
  }
  std::set<double> replicas;
  for (const auto& [name, t] : merged.tables) {
    const std::size_t col = t.column("replica");
    for (const auto& row : t.rows) replicas.insert(row[col]);
  }
  if (replicas.size() != merged.config.replicas) {
    throw IntegrityError("shards cover " + std::to_string(replicas.size()) + " of " +
                         std::to_string(merged.config.replicas) + " replicas");
  }
  merged.aggregates = recompute_aggregates(merged);
  merged.assertions = evaluate_assertions(merged);
  return merged;
}

}  // namespace htband
