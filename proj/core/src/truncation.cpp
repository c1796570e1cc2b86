#include "htband/truncation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "htband/errors.hpp"
#include "htband/parallel.hpp"

namespace htband {

WindowCheck check_window(double mu, std::size_t n, const TruncationSpec& spec) {
  WindowCheck c;
  c.positive_ok = spec.gamma > 0.0 && spec.gamma_prime > 0.0 && spec.gamma_double_prime > 0.0;
  c.half_mu_ok = mu / 2.0 <= spec.gamma_prime;
  c.strict_ok = mu / 4.0 + spec.gamma + spec.gamma_double_prime < spec.gamma_prime;
  c.s_ok = static_cast<double>(spec.s) <=
           std::pow(static_cast<double>(n), spec.gamma_double_prime) * (1.0 + 1e-12);
  std::ostringstream why;
  if (!c.positive_ok) why << "exponents gamma, gamma', gamma'' must be positive; ";
  if (!c.half_mu_ok) {
    why << "mu/2 <= gamma' fails (" << mu / 2.0 << " > " << spec.gamma_prime << "); ";
  }
  if (!c.strict_ok) {
    why << "mu/4 + gamma + gamma'' < gamma' fails ("
        << mu / 4.0 + spec.gamma + spec.gamma_double_prime << " >= " << spec.gamma_prime << "); ";
  }
  c.violated = why.str();
  return c;
}

LogValue from_log(double log_value) {
  LogValue v;
  v.log = log_value;
  v.linear = std::exp(log_value);
  v.representable = std::isfinite(v.linear) && (v.linear > 0.0 || log_value == -INFINITY);
  if (!std::isfinite(v.linear)) v.linear = std::numeric_limits<double>::infinity();
  return v;
}

TruncatedPair truncate_at(const SampledMatrix& m, double threshold) {
  const auto vals = m.values();
  std::vector<double> hat(vals.size(), 0.0);
  std::vector<double> removed(vals.size(), 0.0);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (std::abs(vals[k]) <= threshold) {
      hat[k] = vals[k];
    } else {
      removed[k] = vals[k];
    }
  }
  return {SampledMatrix(m.pattern_ptr(), std::move(hat), m.law(), m.seed(), m.replica_index()),
          SampledMatrix(m.pattern_ptr(), std::move(removed), m.law(), m.seed(),
                        m.replica_index())};
}

TruncatedPair truncate_matrix(const SampledMatrix& m, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("truncate_matrix requires gamma > 0");
  const double threshold = std::isinf(gamma)
                               ? std::numeric_limits<double>::infinity()
                               : std::pow(static_cast<double>(m.n()), gamma);
  return truncate_at(m, threshold);
}

double remainder_norm_bound(const SampledMatrix& removed) {
  return row_tail_sum(removed, 0.0).max;
}

double trace_power(const DenseMatrix& h, std::size_t s) {
  if (s == 0) return static_cast<double>(h.size());
  DenseMatrix p = h;
  for (std::size_t t = 1; t < s; ++t) p = p.multiply(h);
  const double f = p.frobenius_norm();
  return f * f;
}

TraceMoment trace_power_moment(const PatternPtr& pattern, const TailLaw& law, double gamma,
                               std::size_t s, std::size_t replicas, std::uint64_t seed,
                               std::size_t threads) {
  if (pattern->n() > 512) throw ConfigError("trace_power_moment is limited to N <= 512");
  if (replicas < 2) throw ConfigError("trace_power_moment needs at least two replicas");
  if (s == 0) throw DomainError("trace_power_moment requires s >= 1");
  TraceMoment out;
  out.samples.assign(replicas, 0.0);
  const double n = static_cast<double>(pattern->n());
  // Entries of hat A are at most N^gamma, so Tr(hat A^{2s}) <= N (d N^gamma)^{2s}.
  const double d = *std::max_element(pattern->row_counts().begin(), pattern->row_counts().end());
  const double cut_log = std::isinf(gamma) ? std::numeric_limits<double>::infinity()
                                           : gamma * std::log(n);
  const double worst_log = std::log(n) + 2.0 * static_cast<double>(s) * (std::log(d) + cut_log);
  out.overflow_risk = !(worst_log < 700.0);

  parallel_for(replicas, threads, [&](std::size_t r) {
    const auto m = sample_matrix(pattern, law, seed, r);
    const auto hat = truncate_matrix(m, gamma).hat;
    out.samples[r] = trace_power(hat.to_dense(), s);
  });
  double sum = 0.0;
  for (double x : out.samples) {
    if (!std::isfinite(x)) out.overflow_risk = true;
    sum += x;
  }
  const double mean = sum / static_cast<double>(replicas);
  double ss = 0.0;
  for (double x : out.samples) ss += (x - mean) * (x - mean);
  out.estimate = mean;
  out.std_error = std::sqrt(ss / static_cast<double>(replicas - 1) / static_cast<double>(replicas));
  return out;
}

namespace {

double log_moment_rhs(std::size_t n, const TruncationSpec& spec, double fitted_constant) {
  if (!(fitted_constant > 0.0)) throw DomainError("fitted constant must be positive");
  if (spec.s == 0) throw DomainError("power index s must be positive");
  const double ln = std::log(static_cast<double>(n));
  const double s = static_cast<double>(spec.s);
  return std::log(fitted_constant) + (1.0 + 2.0 * spec.gamma) * ln - 1.5 * std::log(s) +
         2.0 * s * (std::log(2.0) + spec.gamma_prime * ln);
}

void require_window(double mu, std::size_t n, const TruncationSpec& spec) {
  const auto c = check_window(mu, n, spec);
  if (!c.exponents_ok()) throw PreconditionError("exponent window violated: " + c.violated);
}

}  // namespace

LogValue moment_bound_rhs(std::size_t n, double mu, const TruncationSpec& spec,
                          double fitted_constant) {
  require_window(mu, n, spec);
  return from_log(log_moment_rhs(n, spec, fitted_constant));
}

LogValue chebyshev_tail(std::size_t n, double mu, const TruncationSpec& spec, double kappa,
                        double fitted_constant) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("chebyshev_tail requires 0 < kappa < 1");
  require_window(mu, n, spec);
  const double s = static_cast<double>(spec.s);
  const double norm_scale = 2.0 * s * (std::log(2.0) + spec.gamma_prime *
                                                           std::log(static_cast<double>(n)));
  return from_log(log_moment_rhs(n, spec, fitted_constant) - norm_scale -
                  2.0 * s * std::log(kappa));
}

std::uint64_t catalan(unsigned s) {
  if (s > 30) throw BoundsError("catalan is limited to s <= 30");
  std::uint64_t c = 1;
  for (std::uint64_t k = 0; k < s; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

double bennett_bound(std::uint64_t m, double p, double eta) {
  if (m == 0) throw DomainError("bennett_bound requires m >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("bennett_bound requires 0 < p <= 1");
  if (!(eta > 0.0)) throw DomainError("bennett_bound requires eta > 0");
  const double h = (1.0 + eta) * std::log1p(eta) - eta;
  return 2.0 * std::exp(-static_cast<double>(m) * p * h);
}

}  // namespace htband
