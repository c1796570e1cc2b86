#include "htband/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "htband/errors.hpp"

namespace htband {

PointProcessSample make_point_process(std::span<const double> values, double scale, double alpha,
                                      std::uint64_t replica, double coverage_floor) {
  if (!(scale > 0.0)) throw DomainError("point process scale must be positive");
  PointProcessSample s;
  s.alpha = alpha;
  s.replica = replica;
  s.coverage_floor = coverage_floor;
  for (double v : values) {
    if (v > 0.0) s.points.push_back(v / scale);
  }
  std::sort(s.points.begin(), s.points.end(), std::greater<>());
  return s;
}

double expected_count_above(double alpha, double t) {
  if (!(t > 0.0)) throw DomainError("expected_count_above requires t > 0");
  if (!(alpha > 0.0)) throw DomainError("expected_count_above requires alpha > 0");
  return std::pow(t, -alpha);
}

PoissonCountResult poisson_count_test(std::span<const PointProcessSample> samples, double t) {
  if (samples.size() < 30) {
    throw ConfigError("poisson_count_test needs at least 30 replicas (got " +
                      std::to_string(samples.size()) + ")");
  }
  PoissonCountResult r;
  r.replicas = samples.size();
  const double alpha = samples.front().alpha;
  r.expected_mean = expected_count_above(alpha, t);
  std::vector<double> counts;
  counts.reserve(samples.size());
  for (const auto& s : samples) {
    if (t < s.coverage_floor) {
      throw DomainError("threshold lies below the coverage floor of replica " +
                        std::to_string(s.replica));
    }
    const auto c = static_cast<std::size_t>(
        std::count_if(s.points.begin(), s.points.end(), [t](double x) { return x > t; }));
    counts.push_back(static_cast<double>(c));
    ++r.observed[std::min<std::size_t>(c, 3)];
  }
  const double n = static_cast<double>(counts.size());
  double sum = 0.0;
  for (double c : counts) sum += c;
  r.mean_count = sum / n;
  double ss = 0.0;
  for (double c : counts) ss += (c - r.mean_count) * (c - r.mean_count);
  r.var_count = ss / (n - 1.0);
  r.degenerate = sum == 0.0;
  r.dispersion = r.degenerate ? std::numeric_limits<double>::quiet_NaN() : r.var_count / r.mean_count;

  const double lam = r.expected_mean;
  const double p0 = std::exp(-lam);
  const double p1 = p0 * lam;
  const double p2 = p1 * lam / 2.0;
  const double p3 = std::max(0.0, 1.0 - p0 - p1 - p2);
  const std::array<double, 4> p = {p0, p1, p2, p3};
  for (std::size_t b = 0; b < 4; ++b) {
    r.expected[b] = n * p[b];
    if (r.expected[b] > 0.0) {
      const double d = static_cast<double>(r.observed[b]) - r.expected[b];
      r.chi_square += d * d / r.expected[b];
    }
  }
  return r;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double transformed_spacings_test(std::span<const PointProcessSample> samples, std::size_t k) {
  if (k < 2) throw DomainError("transformed spacings need K >= 2 (K points give K - 1 gaps)");
  if (samples.empty()) throw DomainError("transformed spacings need at least one sample");
  std::vector<double> gaps;
  gaps.reserve(samples.size() * (k - 1));
  for (const auto& s : samples) {
    if (s.points.size() < k) {
      throw DomainError("replica " + std::to_string(s.replica) + " has fewer than K points");
    }
    double prev = std::pow(s.points[0], -s.alpha);
    for (std::size_t t = 1; t < k; ++t) {
      const double u = std::pow(s.points[t], -s.alpha);
      if (u < prev) throw InvariantViolation("transformed points are not increasing");
      gaps.push_back(u - prev);
      prev = u;
    }
  }
  return ks_statistic(std::move(gaps), [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
}

double frechet_cdf(double x, double alpha) {
  if (x <= 0.0) return 0.0;
  return std::exp(-std::pow(x, -alpha));
}

}  // namespace htband
