#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace htband {

/// Outcome of one instance-wise inequality sweep.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t instances = 0;   ///< inequalities evaluated
  std::size_t violations = 0;
  std::size_t rejected = 0;    ///< random draws discarded for failing a precondition
  /// Smallest (bound - value) seen, scaled by max(1, |bound|); negative on violation.
  double worst_margin = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0x5eed2024;
  std::size_t perturbation_instances = 10000;  ///< gapped instances, N <= 50
  std::size_t localization_matrices = 100;     ///< N <= 12, exhaustive rho_L
  std::size_t chain_matrices = 200;            ///< l-infinity chain and Weyl, N <= 20
  std::size_t bennett_trials = 100000;
};

/// Ball containment for random unit vectors and perturbed eigenvectors, and
/// the alignment bound 2 eps / (d - eps) on instances meeting its gap
/// precondition. Two results.
std::vector<CheckResult> verify_perturbation_bounds(const VerifyOptions& options);

/// |lambda| <= (rho_L + sqrt(eta) rho) / sqrt(1 - eta) for every eigenpair
/// and every L, with eta the pair's best tail.
CheckResult verify_localized_eigenvalue_bound(const VerifyOptions& options);

/// The l-infinity chain and Weyl interlacing. Two results.
std::vector<CheckResult> verify_chain_and_interlacing(const VerifyOptions& options);

/// Truncated-moment bound against quadrature on a (k, x) grid for several laws.
CheckResult verify_truncated_moment_grid();

/// Bennett's bound against simulated binomial deviation frequencies.
CheckResult verify_bennett(const VerifyOptions& options);

/// Every check above.
std::vector<CheckResult> run_property_suite(const VerifyOptions& options = {});

}  // namespace htband
