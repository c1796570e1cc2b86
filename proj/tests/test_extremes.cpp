#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "htband/errors.hpp"
#include "htband/extremes.hpp"
#include "htband/rng.hpp"

using namespace htband;

namespace {

// Points x_k = u_k^{-1/alpha} with u_k the arrivals of a unit-rate Poisson
// process, i.e. a Poisson process with intensity alpha x^{-alpha-1} dx.
PointProcessSample poisson_points(double alpha, std::size_t count, Rng& rng, std::uint64_t replica) {
  std::vector<double> pts;
  double u = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    u += -std::log(rng.uniform_open());
    pts.push_back(std::pow(u, -1.0 / alpha));
  }
  return make_point_process(pts, 1.0, alpha, replica, pts.back());
}

}  // namespace

TEST_CASE("expected counts") {
  CHECK(expected_count_above(2.0, 2.0) == doctest::Approx(0.25));
  for (double a : {0.5, 1.0, 3.0}) CHECK(expected_count_above(a, 1.0) == 1.0);
  CHECK(expected_count_above(1.0, 1e300) < 1e-299);
  CHECK_THROWS_AS(expected_count_above(1.0, 0.0), DomainError);
}

TEST_CASE("expected count matches quadrature of the intensity") {
  for (double a : {0.7, 1.0, 2.5}) {
    for (double t : {0.5, 1.0, 3.0}) {
      // Integrate alpha x^{-alpha-1} over [t, inf) via x = t e^u, u in [0, 60 / alpha].
      const int m = 20000;
      const double top = 60.0 / a;
      const double h = top / m;
      double s = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double x = t * std::exp(i * h);
        const double f = a * std::pow(x, -a - 1.0) * x;
        s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
      }
      s *= h / 3.0;
      CHECK(expected_count_above(a, t) == doctest::Approx(s).epsilon(1e-9));
    }
  }
}

TEST_CASE("point process construction") {
  const std::vector<double> v{3.0, -1.0, 0.0, 8.0, 2.0};
  const auto s = make_point_process(v, 2.0, 1.5, 4, 0.5);
  CHECK(s.points == std::vector<double>{4.0, 1.5, 1.0});
  CHECK(s.replica == 4);
  CHECK(s.coverage_floor == 0.5);
  CHECK_THROWS_AS(make_point_process(v, 0.0, 1.5, 0, 0.0), DomainError);
}

TEST_CASE("count test on simulated Poisson processes") {
  Rng rng(2);
  std::vector<PointProcessSample> samples;
  for (std::uint64_t r = 0; r < 500; ++r) samples.push_back(poisson_points(1.0, 40, rng, r));
  const auto res = poisson_count_test(samples, 1.0);
  CHECK(res.replicas == 500);
  CHECK(res.expected_mean == 1.0);
  CHECK(std::abs(res.mean_count - 1.0) <= 0.15);
  CHECK(std::abs(res.dispersion - 1.0) <= 0.15);
  CHECK_FALSE(res.degenerate);
  std::size_t total = 0;
  for (auto c : res.observed) total += c;
  CHECK(total == 500);
  CHECK(res.expected[0] == doctest::Approx(500.0 * std::exp(-1.0)));
  double e = 0.0;
  for (double x : res.expected) e += x;
  CHECK(e == doctest::Approx(500.0));
}

TEST_CASE("count test edge cases") {
  Rng rng(3);
  std::vector<PointProcessSample> samples;
  for (std::uint64_t r = 0; r < 40; ++r) samples.push_back(poisson_points(2.0, 10, rng, r));
  SUBCASE("huge threshold is degenerate") {
    const auto res = poisson_count_test(samples, 1e6);
    CHECK(res.degenerate);
    CHECK(res.mean_count == 0.0);
    CHECK(std::isnan(res.dispersion));
  }
  SUBCASE("too few replicas") {
    std::vector<PointProcessSample> few(samples.begin(), samples.begin() + 29);
    CHECK_THROWS_AS(poisson_count_test(few, 1.0), ConfigError);
  }
  SUBCASE("threshold below coverage") {
    CHECK_THROWS_AS(poisson_count_test(samples, 1e-3), DomainError);
  }
}

TEST_CASE("transformed spacings of simulated processes") {
  Rng rng(4);
  std::vector<PointProcessSample> samples;
  // 2500 replicas with K = 5 give 10^4 gaps.
  for (std::uint64_t r = 0; r < 2500; ++r) samples.push_back(poisson_points(1.7, 6, rng, r));
  CHECK(transformed_spacings_test(samples, 5) <= 0.05);
  CHECK_THROWS_AS(transformed_spacings_test(samples, 1), DomainError);
  CHECK_THROWS_AS(transformed_spacings_test(samples, 7), DomainError);
}

TEST_CASE("transformed spacings detect a wrong exponent") {
  Rng rng(5);
  std::vector<PointProcessSample> samples;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    auto s = poisson_points(1.0, 6, rng, r);
    s.alpha = 3.0;
    samples.push_back(s);
  }
  CHECK(transformed_spacings_test(samples, 5) > 0.1);
}

TEST_CASE("KS statistic and Frechet CDF") {
  CHECK(frechet_cdf(1.0, 2.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(frechet_cdf(0.0, 2.0) == 0.0);
  CHECK(frechet_cdf(-1.0, 2.0) == 0.0);
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_statistic({0.5}, uniform) == doctest::Approx(0.5));
  CHECK(ks_statistic({0.25, 0.75}, uniform) == doctest::Approx(0.25));
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
  CHECK(ks_statistic(grid, uniform) == doctest::Approx(0.005));
}
