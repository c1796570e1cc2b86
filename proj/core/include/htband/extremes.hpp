#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace htband {

/// Rescaled extreme values of one replica.
struct PointProcessSample {
  std::vector<double> points;  ///< descending, all > 0
  double alpha = 1.0;
  std::uint64_t replica = 0;
  /// The sample is complete above this level: every point of the process
  /// exceeding it is listed. Counts above t are only valid for t >= floor.
  double coverage_floor = 0.0;
};

/// Keeps the positive values, divides by `scale` and sorts descending.
PointProcessSample make_point_process(std::span<const double> values, double scale, double alpha,
                                      std::uint64_t replica, double coverage_floor);

/// Mean number of points above t for intensity alpha x^{-alpha-1} dx: t^{-alpha}.
double expected_count_above(double alpha, double t);

struct PoissonCountResult {
  std::size_t replicas = 0;
  double mean_count = 0.0;
  double var_count = 0.0;     ///< unbiased sample variance
  double dispersion = 0.0;    ///< var / mean; NaN when degenerate
  double chi_square = 0.0;    ///< counts binned 0, 1, 2, >= 3 against Poisson(t^{-alpha})
  double expected_mean = 0.0;
  std::array<std::size_t, 4> observed{};
  std::array<double, 4> expected{};
  bool degenerate = false;  ///< every count is zero
};

/// ConfigError with fewer than 30 samples; DomainError if t lies below some
/// sample's coverage floor.
PoissonCountResult poisson_count_test(std::span<const PointProcessSample> samples, double t);

/// Pools the gaps u_{k+1} - u_k of u_k = x_k^{-alpha} over the top-K points
/// of every sample (K - 1 gaps each) and returns their KS distance from
/// Exp(1). DomainError when K < 2 or a sample has fewer than K points.
double transformed_spacings_test(std::span<const PointProcessSample> samples, std::size_t k);

/// One-sample KS distance between `sample` and a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// exp(-x^{-alpha}) for x > 0, else 0.
double frechet_cdf(double x, double alpha);

}  // namespace htband
