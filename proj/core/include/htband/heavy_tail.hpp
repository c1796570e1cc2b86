#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "htband/rng.hpp"

namespace htband {

/// L(x) = c, i.e. a pure Pareto tail.
struct ConstantFactor {
  double c = 1.0;
};

/// L(x) = (1 + log(x / scale))^beta. Requires beta <= alpha so the tail is
/// non-increasing.
struct LogPowerFactor {
  double beta = 0.0;
};

using SlowlyVarying = std::variant<ConstantFactor, LogPowerFactor>;

/// Law of one matrix entry, parametrized by the tail of its modulus:
///
///   P(|X| >= x) = G(x) = L(x) x^{-alpha}.
///
/// The raw modulus Y has G_raw(y) = min(1, c (y/scale)^{-alpha}) for a
/// constant factor and G_raw(y) = (y/scale)^{-alpha} (1 + log(y/scale))^beta
/// for y >= scale (1 below) for the log-power factor. A variance-normalized
/// law is X = Y_signed / sigma with sigma^2 = E[Y^2], which is again of the
/// above form with a rescaled constant.
class TailLaw {
 public:
  TailLaw(double alpha, double scale, SlowlyVarying factor, bool symmetrized,
          bool variance_normalized);

  static TailLaw pareto(double alpha, double scale = 1.0, bool symmetrized = true,
                        bool variance_normalized = false);

  double alpha() const { return alpha_; }
  double scale() const { return scale_; }
  const SlowlyVarying& slowly_varying() const { return factor_; }
  bool symmetrized() const { return symmetrized_; }
  bool variance_normalized() const { return variance_normalized_; }
  bool has_constant_factor() const {
    return std::holds_alternative<ConstantFactor>(factor_);
  }

  /// Divisor applied to the raw modulus (1 unless variance-normalized).
  double normalization() const { return sigma_; }
  /// Smallest attainable modulus; G = 1 below it.
  double effective_scale() const { return effective_scale_; }
  /// For constant factors: C with G(x) = C x^{-alpha} above the effective scale.
  double tail_constant() const;

  /// G(x) = P(|X| >= x).
  double tail_probability(double x) const;
  /// L(x) = G(x) x^alpha.
  double slowly_varying_at(double x) const;
  /// sup_{0 <= t <= x} L(t).
  double slowly_varying_sup(double x) const;
  /// Modulus m with G(m) = p, for p in (0, 1].
  double quantile(double tail_prob) const;
  /// E[|X|^k] for k < alpha.
  double absolute_moment(double k) const;

  double sample_modulus(Rng& rng) const;
  double sample(Rng& rng) const;
  /// Maps one 64-bit draw to an entry; used by bulk samplers.
  double entry_from_bits(std::uint64_t bits) const;

 private:
  double raw_tail(double y) const;
  double raw_quantile(double p) const;
  double raw_second_moment() const;

  double alpha_;
  double scale_;
  SlowlyVarying factor_;
  bool symmetrized_;
  bool variance_normalized_;
  double sigma_ = 1.0;
  double effective_scale_ = 1.0;
  double inv_alpha_ = 1.0;
};

double sample_entry(const TailLaw& law, Rng& rng);
double tail_probability(const TailLaw& law, double x);

/// b = inf{x >= effective scale : G(x) <= 1/m}: the typical size of the
/// largest of m independent entries.
double b_n(const TailLaw& law, std::uint64_t independent_entry_count);

enum class Regime { subcritical, supercritical };

/// Threshold 2(1 + 1/mu) separating the two regimes.
double critical_alpha(double mu);

struct RegimeParams {
  double mu;
  double alpha;
  Regime regime;

  /// Throws ConfigError for mu outside (0,1], alpha <= 0 or alpha critical.
  static RegimeParams classify(double mu, double alpha);
};

struct TruncatedMoment {
  double bound;      ///< right-hand side of the uniform truncated-moment bound
  double empirical;  ///< E[|X|^k 1{|X| <= x}]
  double l0;         ///< the fitted slowly varying multiplier at x
};

/// Uniform bound on truncated moments: E[A^k 1{A<=x}] <= L0(x) for k <= alpha
/// and <= L0(x) k/(k-alpha) x^{k-alpha} for k > alpha. L0 is fitted per case:
/// the full moment for k < alpha, eff^alpha + sup L * alpha log(x/eff) at
/// k = alpha, and sup_{t<=x} L(t) above. Throws DomainError for x < scale.
TruncatedMoment truncated_moment_bound(const TailLaw& law, int k, double x);

enum class SumRegimePart { a, b, c, d };

/// Exponent window (low, high] on the summands, as powers of n.
/// low = -infinity selects the untruncated-below case.
struct SumWindow {
  double low_exponent = -std::numeric_limits<double>::infinity();
  double high_exponent = 0.0;
};

/// Matches a window to one of the four concentration regimes; endpoints
/// equal to mu/alpha count as the straddling case. Throws ConfigError when
/// nothing matches.
SumRegimePart classify_sum_window(double alpha, double mu, const SumWindow& window);

/// Bound exponent for the matched regime (ConfigError if epsilon is too
/// small for the straddling case).
double predicted_sum_exponent(SumRegimePart part, double alpha, double mu,
                              const SumWindow& window, double epsilon);

struct TailSumConfig {
  double mu = 1.0;
  std::uint64_t n = 1000;
  SumWindow window;
  double epsilon = 0.1;
  std::size_t replicas = 200;
};

struct TailSumResult {
  SumRegimePart part;
  double predicted_exponent;
  double exceedance_frequency;
  std::uint64_t draws_per_replica;
  double threshold;
  std::vector<double> sums;  ///< one per replica
};

/// One replica of sum_{j <= floor(n^mu)} Y_j 1{window}.
double truncated_sum_sample(const TailLaw& law, const TailSumConfig& config, std::uint64_t seed,
                            std::size_t replica);

/// Monte Carlo frequency of sum_{j <= floor(n^mu)} Y_j 1{window} > n^exponent.
TailSumResult truncated_sum_regime(const TailLaw& law, const TailSumConfig& config,
                                   std::uint64_t seed);

}  // namespace htband
