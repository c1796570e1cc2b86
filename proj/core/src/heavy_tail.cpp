#include "htband/heavy_tail.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "htband/errors.hpp"

namespace htband {
namespace {

// Solves alpha t - beta log(1 + t) = q for t >= 0 (q >= 0); the left side is
// increasing whenever beta <= alpha.
double solve_log_power(double alpha, double beta, double q) {
  auto f = [&](double t) { return alpha * t - beta * std::log1p(t) - q; };
  auto df = [&](double t) { return alpha - beta / (1.0 + t); };
  if (q <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = q / alpha + 1.0;
  while (f(hi) < 0.0) hi *= 2.0;
  double t = std::clamp(q / alpha, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double ft = f(t);
    if (ft == 0.0) return t;
    if (ft < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double slope = df(t);
    double next = slope > 0.0 ? t - ft / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * (1.0 + t) || hi - lo <= 1e-16 * (1.0 + hi)) {
      return next;
    }
    t = next;
  }
  return t;
}

// integral_0^inf exp(rate t) (1 + t)^beta dt for rate < 0.
double log_power_laplace(double rate, double beta) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double t) { return std::exp(rate * t) * std::pow(1.0 + t, beta); };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TailLaw::TailLaw(double alpha, double scale, SlowlyVarying factor, bool symmetrized,
                 bool variance_normalized)
    : alpha_(alpha),
      scale_(scale),
      factor_(factor),
      symmetrized_(symmetrized),
      variance_normalized_(variance_normalized) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("tail exponent alpha must be positive and finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("scale must be positive and finite");
  }
  if (const auto* c = std::get_if<ConstantFactor>(&factor_)) {
    if (!(c->c > 0.0) || !std::isfinite(c->c)) {
      throw ConfigError("constant slowly varying factor must be positive");
    }
  } else {
    const double beta = std::get<LogPowerFactor>(factor_).beta;
    if (!std::isfinite(beta) || beta > alpha) {
      throw ConfigError("log-power exponent beta must satisfy beta <= alpha");
    }
  }
  if (variance_normalized && alpha <= 2.0) {
    throw ConfigError("variance normalization requires alpha > 2 (alpha = " +
                      std::to_string(alpha) + ")");
  }
  inv_alpha_ = 1.0 / alpha_;
  const double raw_eff = has_constant_factor()
                             ? scale_ * std::pow(std::get<ConstantFactor>(factor_).c, inv_alpha_)
                             : scale_;
  sigma_ = variance_normalized_ ? std::sqrt(raw_second_moment()) : 1.0;
  effective_scale_ = raw_eff / sigma_;
}

TailLaw TailLaw::pareto(double alpha, double scale, bool symmetrized,
                        bool variance_normalized) {
  return TailLaw(alpha, scale, ConstantFactor{1.0}, symmetrized, variance_normalized);
}

double TailLaw::raw_tail(double y) const {
  if (has_constant_factor()) {
    const double eff = effective_scale_ * sigma_;
    if (y < eff) return 1.0;
    return std::pow(y / eff, -alpha_);
  }
  if (y < scale_) return 1.0;
  const double t = std::log(y / scale_);
  const double beta = std::get<LogPowerFactor>(factor_).beta;
  return std::exp(-alpha_ * t) * std::pow(1.0 + t, beta);
}

double TailLaw::raw_quantile(double p) const {
  if (has_constant_factor()) {
    const double eff = effective_scale_ * sigma_;
    return alpha_ == 1.0 ? eff / p : eff * std::pow(p, -inv_alpha_);
  }
  const double beta = std::get<LogPowerFactor>(factor_).beta;
  return scale_ * std::exp(solve_log_power(alpha_, beta, -std::log(p)));
}

double TailLaw::raw_second_moment() const {
  if (has_constant_factor()) {
    const double eff = scale_ * std::pow(std::get<ConstantFactor>(factor_).c, inv_alpha_);
    return alpha_ * eff * eff / (alpha_ - 2.0);
  }
  const double beta = std::get<LogPowerFactor>(factor_).beta;
  return scale_ * scale_ * (1.0 + 2.0 * log_power_laplace(2.0 - alpha_, beta));
}

double TailLaw::tail_constant() const {
  if (!has_constant_factor()) {
    throw ConfigError("tail_constant is defined for constant slowly varying factors only");
  }
  return std::pow(effective_scale_, alpha_);
}

double TailLaw::tail_probability(double x) const {
  if (std::isnan(x) || x < 0.0) throw DomainError("tail_probability requires x >= 0");
  return raw_tail(sigma_ * x);
}

double TailLaw::slowly_varying_at(double x) const {
  return tail_probability(x) * std::pow(x, alpha_);
}

double TailLaw::slowly_varying_sup(double x) const {
  if (x < 0.0) throw DomainError("slowly_varying_sup requires x >= 0");
  if (has_constant_factor()) return std::pow(std::min(x, effective_scale_), alpha_);
  const double base = scale_ / sigma_;
  if (x < base) return std::pow(x, alpha_);
  const double beta = std::get<LogPowerFactor>(factor_).beta;
  const double grow = std::pow(1.0 + std::log(x / base), beta);
  return std::pow(base, alpha_) * std::max(1.0, grow);
}

double TailLaw::quantile(double tail_prob) const {
  if (!(tail_prob > 0.0 && tail_prob <= 1.0)) {
    throw DomainError("quantile requires a tail probability in (0, 1]");
  }
  return raw_quantile(tail_prob) / sigma_;
}

double TailLaw::absolute_moment(double k) const {
  if (!(k >= 0.0 && k < alpha_)) throw DomainError("absolute_moment requires 0 <= k < alpha");
  if (has_constant_factor()) return alpha_ * std::pow(effective_scale_, k) / (alpha_ - k);
  const double beta = std::get<LogPowerFactor>(factor_).beta;
  const double raw = std::pow(scale_, k) * (1.0 + k * log_power_laplace(k - alpha_, beta));
  return raw / std::pow(sigma_, k);
}

double TailLaw::entry_from_bits(std::uint64_t bits) const {
  const double modulus = raw_quantile(Rng::to_open_unit(bits)) / sigma_;
  if (!symmetrized_) return modulus;
  return (bits & 1U) ? modulus : -modulus;
}

double TailLaw::sample_modulus(Rng& rng) const { return quantile(rng.uniform_open()); }

double TailLaw::sample(Rng& rng) const { return entry_from_bits(rng()); }

double sample_entry(const TailLaw& law, Rng& rng) { return law.sample(rng); }

double tail_probability(const TailLaw& law, double x) { return law.tail_probability(x); }

double b_n(const TailLaw& law, std::uint64_t independent_entry_count) {
  if (independent_entry_count == 0) throw DomainError("b_n requires at least one entry");
  const double m = static_cast<double>(independent_entry_count);
  if (law.has_constant_factor()) {
    return law.effective_scale() * std::pow(m, 1.0 / law.alpha());
  }
  return law.quantile(1.0 / m);
}

double critical_alpha(double mu) { return 2.0 * (1.0 + 1.0 / mu); }

RegimeParams RegimeParams::classify(double mu, double alpha) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1]");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  const double crit = critical_alpha(mu);
  if (std::abs(alpha - crit) <= 1e-12 * crit) {
    throw ConfigError("alpha = 2(1 + 1/mu) is the critical case; no regime applies");
  }
  return {mu, alpha, alpha < crit ? Regime::subcritical : Regime::supercritical};
}

TruncatedMoment truncated_moment_bound(const TailLaw& law, int k, double x) {
  if (k < 1) throw DomainError("truncated_moment_bound requires k >= 1");
  if (!(x >= law.scale())) throw DomainError("truncated_moment_bound requires x >= scale");
  const double alpha = law.alpha();
  const double eff = law.effective_scale();
  const double kd = static_cast<double>(k);

  double empirical = 0.0;
  if (x > eff) {
    if (law.has_constant_factor()) {
      const double c = std::pow(eff, alpha);
      empirical = kd == alpha ? alpha * c * std::log(x / eff)
                              : alpha * c * (std::pow(x, kd - alpha) - std::pow(eff, kd - alpha)) /
                                    (kd - alpha);
    } else {
      const double gx = law.tail_probability(x);
      auto integrand = [&](double u) {
        const double t = eff * std::exp(u);
        return kd * std::pow(t, kd) * (law.tail_probability(t) - gx);
      };
      const double upper = std::log(x / eff);
      empirical = std::pow(eff, kd) * (1.0 - gx) +
                  boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                      integrand, 0.0, upper, 20, 1e-13);
    }
  }

  TruncatedMoment out{};
  out.empirical = empirical;
  if (kd < alpha) {
    out.l0 = law.absolute_moment(kd);
    out.bound = out.l0;
  } else if (kd == alpha) {
    out.l0 = std::pow(eff, alpha) +
             law.slowly_varying_sup(x) * alpha * std::max(0.0, std::log(x / eff));
    out.bound = out.l0;
  } else {
    out.l0 = law.slowly_varying_sup(x);
    out.bound = out.l0 * kd / (kd - alpha) * std::pow(x, kd - alpha);
  }
  return out;
}

SumRegimePart classify_sum_window(double alpha, double mu, const SumWindow& w) {
  const double ratio = mu / alpha;
  const bool open_below = std::isinf(w.low_exponent) && w.low_exponent < 0.0;
  if (open_below) {
    if (w.high_exponent >= 0.0 && w.high_exponent <= ratio) return SumRegimePart::a;
    throw ConfigError("untruncated-below window needs 0 <= high <= mu/alpha");
  }
  if (!(w.low_exponent <= w.high_exponent)) {
    throw ConfigError("sum window needs low <= high");
  }
  if (w.low_exponent > ratio) {
    if (w.high_exponent > 0.0) return SumRegimePart::d;
    throw ConfigError("window above mu/alpha needs a positive high exponent");
  }
  if (w.high_exponent >= ratio) return SumRegimePart::c;
  if (alpha >= 1.0 && w.low_exponent >= 0.0 && w.low_exponent < w.high_exponent) {
    return SumRegimePart::b;
  }
  throw ConfigError("sum window below mu/alpha needs alpha >= 1 and 0 <= low < high");
}

double predicted_sum_exponent(SumRegimePart part, double alpha, double mu,
                              const SumWindow& w, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double ratio = mu / alpha;
  switch (part) {
    case SumRegimePart::a:
      return mu + w.high_exponent * std::max(1.0 - alpha, 0.0) + epsilon;
    case SumRegimePart::b:
      return mu - w.low_exponent * (alpha - 1.0) + epsilon;
    case SumRegimePart::c: {
      const double eta = ratio - w.low_exponent;
      const double eta_prime = w.high_exponent - ratio;
      if (!(epsilon > alpha * eta + eta_prime)) {
        throw ConfigError("straddling window requires epsilon > alpha*eta + eta'");
      }
      return ratio + epsilon;
    }
    case SumRegimePart::d:
      return w.high_exponent + epsilon;
  }
  throw ConfigError("unknown regime part");
}

namespace {

std::uint64_t sum_draws(const TailSumConfig& cfg) {
  return static_cast<std::uint64_t>(
      std::floor(std::pow(static_cast<double>(cfg.n), cfg.mu) * (1.0 + 1e-12)));
}

}  // namespace

double truncated_sum_sample(const TailLaw& law, const TailSumConfig& cfg, std::uint64_t seed,
                            std::size_t replica) {
  const double n = static_cast<double>(cfg.n);
  const double lo = std::isinf(cfg.window.low_exponent) ? 0.0 : std::pow(n, cfg.window.low_exponent);
  const double hi = std::pow(n, cfg.window.high_exponent);
  const std::uint64_t draws = sum_draws(cfg);
  Rng rng(derive_seed(seed, 0x7a115u, replica));
  double sum = 0.0;
  for (std::uint64_t j = 0; j < draws; ++j) {
    const double y = law.sample_modulus(rng);
    if (y > lo && y <= hi) sum += y;
  }
  return sum;
}

TailSumResult truncated_sum_regime(const TailLaw& law, const TailSumConfig& cfg,
                                   std::uint64_t seed) {
  if (cfg.n < 2) throw ConfigError("truncated_sum_regime requires n >= 2");
  if (cfg.replicas == 0) throw ConfigError("truncated_sum_regime requires replicas >= 1");
  TailSumResult out{};
  out.part = classify_sum_window(law.alpha(), cfg.mu, cfg.window);
  out.predicted_exponent =
      predicted_sum_exponent(out.part, law.alpha(), cfg.mu, cfg.window, cfg.epsilon);
  out.draws_per_replica = sum_draws(cfg);
  out.threshold = std::pow(static_cast<double>(cfg.n), out.predicted_exponent);

  std::size_t exceed = 0;
  out.sums.reserve(cfg.replicas);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const double sum = truncated_sum_sample(law, cfg, seed, r);
    out.sums.push_back(sum);
    if (sum > out.threshold) ++exceed;
  }
  out.exceedance_frequency = static_cast<double>(exceed) / static_cast<double>(cfg.replicas);
  return out;
}

}  // namespace htband
