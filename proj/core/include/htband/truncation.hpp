#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "htband/ensemble.hpp"
#include "htband/heavy_tail.hpp"

namespace htband {

/// Exponents of the truncated-moment bound: cut-off N^gamma, norm scale
/// N^gamma', power-growth limit N^gamma'', and the power index s.
struct TruncationSpec {
  double gamma = 0.1;
  double gamma_prime = 0.55;
  double gamma_double_prime = 0.1;
  std::size_t s = 1;
};

struct WindowCheck {
  bool half_mu_ok = false;   ///< mu/2 <= gamma'
  bool strict_ok = false;    ///< mu/4 + gamma + gamma'' < gamma'
  bool positive_ok = false;  ///< all exponents positive
  bool s_ok = false;         ///< s <= N^gamma''
  /// Empty when the exponent window holds; otherwise names the inequality.
  std::string violated;
  bool exponents_ok() const { return half_mu_ok && strict_ok && positive_ok; }
};

WindowCheck check_window(double mu, std::size_t n, const TruncationSpec& spec);

/// A value carried as its natural logarithm; `linear` is +inf when the
/// value does not fit a double.
struct LogValue {
  double log = 0.0;
  double linear = 0.0;
  bool representable = true;
};

LogValue from_log(double log_value);

struct TruncatedPair {
  SampledMatrix hat;      ///< entries with |a_ij| <= threshold
  SampledMatrix removed;  ///< the rest
};

/// Splits at N^gamma. gamma = +inf keeps everything.
TruncatedPair truncate_matrix(const SampledMatrix& m, double gamma);
/// Splits at an explicit threshold.
TruncatedPair truncate_at(const SampledMatrix& m, double threshold);

/// max_i sum_j |removed_ij|, an upper bound on the spectral norm.
double remainder_norm_bound(const SampledMatrix& removed);

/// Tr(H^{2s}) = ||H^s||_F^2 by repeated dense multiplication.
double trace_power(const DenseMatrix& h, std::size_t s);

struct TraceMoment {
  double estimate = 0.0;
  double std_error = 0.0;
  bool overflow_risk = false;
  std::vector<double> samples;  ///< Tr(hat A^{2s}) per replica
};

/// Monte Carlo estimate of E Tr(hat A^{2s}) with cut-off N^gamma. Replica r
/// uses sample_matrix(pattern, law, seed, r). Requires N <= 512.
TraceMoment trace_power_moment(const PatternPtr& pattern, const TailLaw& law, double gamma,
                               std::size_t s, std::size_t replicas, std::uint64_t seed,
                               std::size_t threads = 1);

/// C N^{1+2 gamma} s^{-3/2} (2 N^{gamma'})^{2s}, evaluated in log space.
/// PreconditionError naming the inequality when the exponent window fails.
LogValue moment_bound_rhs(std::size_t n, double mu, const TruncationSpec& spec,
                          double fitted_constant);

/// kappa^{-2s} C N^{1+2 gamma} s^{-3/2}: bound on P(||hat A|| >= 2 kappa N^{gamma'}).
/// DomainError unless 0 < kappa < 1.
LogValue chebyshev_tail(std::size_t n, double mu, const TruncationSpec& spec, double kappa,
                        double fitted_constant);

/// C_s = binom(2s, s) / (s + 1); BoundsError for s > 30.
std::uint64_t catalan(unsigned s);

/// 2 exp(-m p h(eta)), h(u) = (1 + u) log(1 + u) - u.
double bennett_bound(std::uint64_t m, double p, double eta);

}  // namespace htband
