// Command-line front end: sample, spectrum, localize, study <kind>, verify.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "htband/ensemble.hpp"
#include "htband/errors.hpp"
#include "htband/experiments.hpp"
#include "htband/heavy_tail.hpp"
#include "htband/localization.hpp"
#include "htband/spectral.hpp"
#include "htband/verify.hpp"

namespace {

constexpr int kExitFailedAssertions = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::string out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Config file (sectioned key = value)");
  cmd->add_option("--seed", f.seed, "Root seed");
  cmd->add_option("--replicas", f.replicas, "Replica count");
  cmd->add_option("--out", f.out, "Output file or directory");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
}

htband::ExperimentConfig resolve_config(const CommonFlags& f) {
  htband::ExperimentConfig c = f.config.empty() ? htband::ExperimentConfig{}
                                                : htband::load_config_file(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.replicas) c.replicas = *f.replicas;
  if (f.threads) c.threads = *f.threads;
  if (!f.out.empty()) c.out_dir = f.out;
  return c;
}

htband::SampledMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw htband::ConfigError("cannot open matrix file " + path);
  return htband::read_matrix(in);
}

std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) throw htband::ConfigError("cannot write " + path);
  return *holder;
}

int cmd_sample(const CommonFlags& f, std::size_t replica, const std::string& format) {
  auto c = resolve_config(f);
  if (!c.seed) throw htband::ConfigError("a seed is mandatory (--seed or [study] seed)");
  const auto pattern = htband::build_pattern(c.n, c.mu, c.pattern);
  const auto m = htband::sample_matrix(pattern, c.make_law(), *c.seed, replica);
  std::unique_ptr<std::ofstream> holder;
  std::ostream& out = open_out(f.out, holder);
  if (format == "binary") {
    htband::write_matrix_binary(m, out);
  } else {
    htband::write_matrix_text(m, out);
  }
  return 0;
}

int cmd_spectrum(const std::string& input, const std::string& method, std::size_t k,
                 const std::string& which, const std::string& out_path,
                 const std::string& vectors_path, double tol) {
  const auto m = read_matrix_file(input);
  htband::SpectralSummary s;
  const bool vectors = !vectors_path.empty();
  if (method == "dense") {
    s = htband::dense_eigh(m, vectors);
  } else {
    htband::LanczosOptions o;
    o.tol = tol;
    o.want_vectors = vectors;
    s = htband::lanczos_topk(m, k, which == "magnitude" ? htband::Which::largest_magnitude
                                                        : htband::Which::largest_algebraic,
                             o);
  }
  std::unique_ptr<std::ofstream> holder;
  htband::write_spectrum_csv(s, open_out(out_path, holder));
  if (vectors) {
    std::ofstream vout(vectors_path);
    htband::write_eigenvectors_csv(s, vout);
  }
  if (!s.converged) {
    std::cerr << "warning: solver did not reach tolerance " << s.tolerance << "\n";
    return kExitError;
  }
  return 0;
}

int cmd_localize(const std::string& input, std::size_t k, double alpha, double c, double eta0,
                 const std::string& out_path, double tol) {
  const auto m = read_matrix_file(input);
  const htband::SymmetricOperator op(m);
  htband::LanczosOptions o;
  o.tol = tol;
  const auto pairs = htband::lanczos_extremes(op, k, k, o);
  const htband::SpectralSummary* parts[] = {&pairs.top, &pairs.bottom};
  const auto report =
      htband::delocalization_scan(parts, m.n(), m.pattern().mu(), alpha, c, eta0);
  std::unique_ptr<std::ofstream> holder;
  htband::write_localization_csv(report, open_out(out_path, holder));
  std::cerr << "L = " << report.l << ", pairs scanned = " << report.pairs_scanned
            << ", event = " << (report.event ? "yes" : "no") << "\n";
  return 0;
}

int cmd_study(const CommonFlags& f, const std::string& kind, bool quiet) {
  auto c = resolve_config(f);
  c.kind = htband::study_kind_from_string(kind);
  const auto summary = htband::run_study(c);
  if (!c.out_dir.empty()) htband::persist(summary, c.out_dir);
  if (!quiet) {
    for (const auto& [key, value] : summary.aggregates) {
      std::printf("  %-36s %.6g\n", key.c_str(), value);
    }
  }
  for (const auto& a : summary.assertions) {
    std::printf("[%s] %s = %.6g (%s)\n", a.passed ? "PASS" : "FAIL", a.name.c_str(), a.value,
                a.detail.c_str());
  }
  std::printf("%s study: %.1f s, %zu solver iterations\n", kind.c_str(),
              summary.telemetry.wall_seconds, summary.telemetry.solver_iterations);
  return summary.passed() ? 0 : kExitFailedAssertions;
}

int cmd_verify(const CommonFlags& f, bool quick) {
  htband::VerifyOptions o;
  if (f.seed) o.seed = *f.seed;
  if (quick) {
    o.perturbation_instances = 500;
    o.localization_matrices = 10;
    o.chain_matrices = 40;
    o.bennett_trials = 10000;
  }
  bool ok = true;
  for (const auto& r : htband::run_property_suite(o)) {
    ok = ok && r.passed;
    std::printf("[%s] %s: %s (worst margin %.3g, rejected %zu)\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.detail.c_str(), r.worst_margin, r.rejected);
  }
  return ok ? 0 : kExitFailedAssertions;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed band matrix experiments"};
  app.require_subcommand(1);

  CommonFlags sample_flags;
  std::size_t replica = 0;
  std::string format = "text";
  auto* sample = app.add_subcommand("sample", "Sample one matrix and write it");
  add_common(sample, sample_flags);
  sample->add_option("--replica", replica, "Replica index");
  sample->add_option("--format", format, "text or binary")->check(CLI::IsMember({"text", "binary"}));

  std::string input, method = "lanczos", which = "algebraic", out_path, vectors_path;
  std::size_t k = 10;
  double tol = 1e-10;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues of a stored matrix");
  spectrum->add_option("--input", input, "Matrix file")->required();
  spectrum->add_option("--method", method, "dense or lanczos")
      ->check(CLI::IsMember({"dense", "lanczos"}));
  spectrum->add_option("-k", k, "Number of Lanczos pairs");
  spectrum->add_option("--which", which, "algebraic or magnitude")
      ->check(CLI::IsMember({"algebraic", "magnitude"}));
  spectrum->add_option("--tol", tol, "Lanczos residual tolerance");
  spectrum->add_option("--out", out_path, "Spectrum CSV (default stdout)");
  spectrum->add_option("--vectors", vectors_path, "Eigenvector CSV");

  double alpha = 6.0, c = 0.25, eta0 = 0.4;
  std::string loc_input, loc_out;
  std::size_t loc_k = 10;
  double loc_tol = 1e-10;
  auto* localize = app.add_subcommand("localize", "Localization scan of the extreme pairs");
  localize->add_option("--input", loc_input, "Matrix file")->required();
  localize->add_option("--alpha", alpha, "Tail exponent of the entries");
  localize->add_option("--c", c, "Support exponent, L = floor(N^c)");
  localize->add_option("--eta0", eta0, "Tail mass cut-off in (0, 1/2)");
  localize->add_option("-k", loc_k, "Pairs per spectral end");
  localize->add_option("--tol", loc_tol, "Lanczos residual tolerance");
  localize->add_option("--out", loc_out, "CSV (default stdout)");

  CommonFlags study_flags;
  std::string kind;
  bool quiet = false;
  auto* study = app.add_subcommand("study", "Run a Monte Carlo study");
  add_common(study, study_flags);
  study->add_option("kind", kind, "subcritical | supercritical | semicircle | poisson | moments | "
                                  "tailsums | perturbation")
      ->required();
  study->add_flag("--quiet", quiet, "Only print assertions");

  CommonFlags verify_flags;
  bool quick = false;
  auto* verify = app.add_subcommand("verify", "Run the instance-wise inequality suite");
  add_common(verify, verify_flags);
  verify->add_flag("--quick", quick, "Smaller instance counts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) return cmd_sample(sample_flags, replica, format);
    if (*spectrum) return cmd_spectrum(input, method, k, which, out_path, vectors_path, tol);
    if (*localize) return cmd_localize(loc_input, loc_k, alpha, c, eta0, loc_out, loc_tol);
    if (*study) return cmd_study(study_flags, kind, quiet);
    if (*verify) return cmd_verify(verify_flags, quick);
  } catch (const htband::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
