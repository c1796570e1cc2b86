// Runs the ten acceptance criteria with the shipped configs and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.
//
//   acceptance [config-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "htband/experiments.hpp"
#include "htband/verify.hpp"

#ifndef HTBAND_CONFIG_DIR
#define HTBAND_CONFIG_DIR "configs"
#endif

using namespace htband;

namespace {

std::string config_dir = HTBAND_CONFIG_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig load_named(const std::string& name) {
  auto c = load_config_file(config_dir + "/" + name + ".ini");
  c.threads = 1;
  return c;
}

StudySummary run_named(const std::string& name) { return run_study(load_named(name)); }

const Assertion* find_assertion(const StudySummary& s, const std::string& prefix) {
  for (const auto& a : s.assertions) {
    if (a.name.rfind(prefix, 0) == 0) return &a;
  }
  return nullptr;
}

// All assertions whose name starts with one of the prefixes must hold.
Outcome from_assertions(const StudySummary& s, const std::vector<std::string>& prefixes) {
  Outcome o{true, ""};
  for (const auto& a : s.assertions) {
    bool wanted = false;
    for (const auto& p : prefixes) wanted = wanted || a.name.rfind(p, 0) == 0;
    if (!wanted) continue;
    o.passed = o.passed && a.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += a.name + " = " + fmt("%.4g", a.value) + (a.passed ? "" : " [" + a.detail + "]");
  }
  if (o.detail.empty()) return {false, "no matching assertions"};
  return o;
}

bool same_records(const StudySummary& a, const StudySummary& b) {
  if (a.tables.size() != b.tables.size()) return false;
  for (const auto& [name, t] : a.tables) {
    const auto it = b.tables.find(name);
    if (it == b.tables.end()) return false;
    const auto& u = it->second;
    if (t.columns != u.columns || t.rows.size() != u.rows.size()) return false;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.rows[r].size() != u.rows[r].size() ||
          std::memcmp(t.rows[r].data(), u.rows[r].data(), t.rows[r].size() * sizeof(double)) != 0) {
        return false;
      }
    }
  }
  return true;
}

StudySummary subcritical;
double subcritical_seconds = 0.0;

Outcome criterion_coupling() {
  const auto t0 = std::chrono::steady_clock::now();
  subcritical = run_named("subcritical");
  subcritical_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto o = from_assertions(subcritical, {"median ratio"});
  const bool fast = subcritical_seconds <= 300.0;
  o.passed = o.passed && fast;
  o.detail += "; single-threaded runtime " + fmt("%.1f", subcritical_seconds) + " s (limit 300)";
  return o;
}

Outcome criterion_overlap() { return from_assertions(subcritical, {"overlap"}); }

Outcome criterion_poisson() {
  const auto s = run_named("poisson");
  auto o = from_assertions(s, {"mean count", "count dispersion", "transformed spacing"});
  o.detail += "; entries: mean " + fmt("%.4g", s.aggregates.at("entry_mean_count")) +
              ", dispersion " + fmt("%.4g", s.aggregates.at("entry_dispersion")) + ", KS " +
              fmt("%.4g", s.aggregates.at("entry_spacing_ks"));
  return o;
}

StudySummary supercritical;

Outcome criterion_edge() {
  supercritical = run_named("supercritical");
  auto o = from_assertions(supercritical, {"median edge", "edge approaches"});
  for (const char* n : {"500", "1000", "2000"}) {
    const auto key = std::string("median_edge_n") + n;
    if (supercritical.aggregates.count(key)) {
      o.detail += std::string("; N=") + n + ": " + fmt("%.4f", supercritical.aggregates.at(key));
    }
  }
  return o;
}

Outcome criterion_delocalization() {
  auto o = from_assertions(supercritical, {"delocalization event"});
  o.detail += "; flagged (L,eta) " +
              fmt("%.3g", supercritical.aggregates.at("flagged_localized_frequency")) +
              ", successive " +
              fmt("%.3g", supercritical.aggregates.at("flagged_successive_frequency"));
  return o;
}

Outcome criterion_semicircle() {
  const auto full = run_named("semicircle");
  const auto band = run_named("semicircle_band");
  auto a = from_assertions(full, {"mean semicircle KS"});
  auto b = from_assertions(band, {"mean semicircle KS"});
  return {a.passed && b.passed, "mu=1: " + a.detail + "; mu=0.5: " + b.detail};
}

Outcome criterion_moments() {
  const auto s = run_named("moments");
  auto o = from_assertions(s, {"max ratio over fitted constant", "Chebyshev exceedance"});
  o.detail += "; fitted constant " + fmt("%.4g", s.aggregates.at("fitted_constant"));
  return o;
}

Outcome criterion_inequalities() {
  const auto results = run_property_suite(VerifyOptions{});
  Outcome o{true, ""};
  for (std::size_t i = 0; i < results.size() && i < 5; ++i) {
    const auto& r = results[i];
    o.passed = o.passed && r.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += r.name + ": " + std::to_string(r.instances) + " checked, " +
                std::to_string(r.violations) + " violations";
  }
  return o;
}

Outcome criterion_probability_estimates() {
  Outcome o{true, ""};
  for (const char* part : {"a", "b", "c", "d"}) {
    const auto s = run_named(std::string("tailsums_") + part);
    const auto* ref = find_assertion(s, "exceedance at n=");
    const auto* mono = find_assertion(s, "exceedance non-increasing");
    const bool ok = ref && mono && ref->passed && mono->passed;
    o.passed = o.passed && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + "sums (" + part + ") " +
                (ref ? fmt("%.3g", ref->value) : std::string("missing")) +
                (mono && mono->passed ? " non-increasing" : " NOT non-increasing");
  }
  const auto results = run_property_suite(VerifyOptions{});
  for (std::size_t i = 5; i < results.size(); ++i) {
    const auto& r = results[i];
    o.passed = o.passed && r.passed;
    o.detail += "; " + r.name + ": " + std::to_string(r.violations) + " violations";
  }
  return o;
}

// Reduced copies of every shipped study, run at 1 and at 8 threads.
Outcome criterion_determinism() {
  struct Reduced {
    const char* name;
    std::function<void(ExperimentConfig&)> shrink;
  };
  const std::vector<Reduced> studies = {
      {"subcritical", [](ExperimentConfig& c) { c.replicas = 16; c.n = 300; }},
      {"poisson", [](ExperimentConfig& c) { c.replicas = 32; c.n = 400; }},
      {"supercritical", [](ExperimentConfig& c) { c.replicas = 8; c.n = 400; c.n_grid = {200}; }},
      {"semicircle", [](ExperimentConfig& c) { c.replicas = 4; c.n = 300; }},
      {"semicircle_band", [](ExperimentConfig& c) { c.replicas = 4; c.n = 300; }},
      {"moments", [](ExperimentConfig& c) { c.replicas = 50; }},
      {"tailsums_a", [](ExperimentConfig& c) { c.replicas = 20; }},
      {"tailsums_b", [](ExperimentConfig& c) { c.replicas = 20; }},
      {"tailsums_c", [](ExperimentConfig& c) { c.replicas = 20; }},
      {"tailsums_d", [](ExperimentConfig& c) { c.replicas = 20; }},
      {"perturbation", [](ExperimentConfig& c) { c.replicas = 12; c.n = 400; }},
  };
  Outcome o{true, ""};
  std::size_t identical = 0;
  for (const auto& st : studies) {
    auto c = load_named(st.name);
    st.shrink(c);
    c.threads = 1;
    const auto one = run_study(c);
    c.threads = 8;
    const auto eight = run_study(c);
    if (same_records(one, eight)) {
      ++identical;
    } else {
      o.passed = false;
      o.detail += std::string(o.detail.empty() ? "" : "; ") + st.name + " differs";
    }
  }
  o.detail = std::to_string(identical) + "/" + std::to_string(studies.size()) +
             " studies bit-identical" + (o.detail.empty() ? "" : " (" + o.detail + ")");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) config_dir = argv[1];
  struct Criterion {
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"subcritical eigenvalue/entry coupling", criterion_coupling},
      {"subcritical eigenvector localization", criterion_overlap},
      {"Poisson limit of the extreme eigenvalues", criterion_poisson},
      {"supercritical spectral edge", criterion_edge},
      {"delocalization event", criterion_delocalization},
      {"semicircle law", criterion_semicircle},
      {"moment bound shape and Chebyshev tail", criterion_moments},
      {"exact inequality suites", criterion_inequalities},
      {"probability estimates", criterion_probability_estimates},
      {"determinism across thread counts", criterion_determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.passed ? 0 : 1;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", index, c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures;
}
