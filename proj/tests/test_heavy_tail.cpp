#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "htband/ensemble.hpp"
#include "htband/errors.hpp"
#include "htband/heavy_tail.hpp"
#include "htband/rng.hpp"

using namespace htband;

namespace {

// sup_x |F_n(x) - F(x)| for the modulus, with F(x) = 1 - G(x).
double modulus_ks(const TailLaw& law, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(draws);
  for (auto& v : x) v = std::abs(law.sample(rng));
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(draws);
  double d = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double f = 1.0 - law.tail_probability(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                  std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

double dkw_band(std::size_t n, double confidence) {
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(n)));
}

}  // namespace

TEST_CASE("quantile of a square-root tail") {
  const auto law = TailLaw::pareto(2.0, 1.0);
  CHECK(law.quantile(0.25) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("variance-normalized law has unit second moment") {
  const auto law = TailLaw::pareto(3.0, 1.0, true, true);
  Rng rng(derive_seed(11, 1));
  double s = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = law.sample(rng);
    s += x * x;
  }
  CHECK(std::abs(s / n - 1.0) <= 0.01);
}

TEST_CASE("symmetrized signs average to zero") {
  const auto law = TailLaw::pareto(1.5);
  Rng rng(derive_seed(12, 1));
  long long total = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) total += law.sample(rng) > 0 ? 1 : -1;
  CHECK(std::abs(static_cast<double>(total) / n) <= 0.004);
}

TEST_CASE("tail probability closed forms") {
  const auto law = TailLaw::pareto(2.0, 1.0);
  CHECK(law.tail_probability(10.0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(law.tail_probability(0.0) == 1.0);
  CHECK(TailLaw::pareto(0.7, 3.0).tail_probability(0.0) == 1.0);

  // X = Y / sigma with sigma^2 = alpha / (alpha - 2) pushes the tail constant
  // to sigma^{-alpha}.
  const auto vn = TailLaw::pareto(3.0, 1.0, true, true);
  const double c = std::pow(1.0 / 3.0, 1.5);
  CHECK(vn.tail_constant() == doctest::Approx(c).epsilon(1e-13));
  for (double x : {1.0, 2.5, 40.0}) {
    CHECK(vn.tail_probability(x) == doctest::Approx(c * std::pow(x, -3.0)).epsilon(1e-13));
  }
}

TEST_CASE("variance normalization needs alpha above two") {
  CHECK_THROWS_AS(TailLaw::pareto(2.0, 1.0, true, true), ConfigError);
  CHECK_THROWS_AS(TailLaw::pareto(1.2, 1.0, true, true), ConfigError);
}

TEST_CASE("b_n inverts the tail") {
  CHECK(b_n(TailLaw::pareto(2.0), 10000) == doctest::Approx(100.0).epsilon(1e-13));
  CHECK(b_n(TailLaw::pareto(2.0), 1) == doctest::Approx(1.0));
  const double mu = std::log(8.7) / std::log(100.0);
  const auto p = build_pattern(100, mu, PatternKind::cyclic_band);
  REQUIRE(p->half_width() == 4);
  CHECK(p->independent_entry_count() == 500);
  for (double a : {0.8, 1.5, 3.0}) {
    CHECK(b_n(TailLaw::pareto(a), p->independent_entry_count()) ==
          doctest::Approx(std::pow(500.0, 1.0 / a)).epsilon(1e-12));
  }
}

TEST_CASE("b_n is monotone and attains 1/M") {
  const TailLaw laws[] = {TailLaw::pareto(1.5), TailLaw::pareto(4.0, 2.0, true, true),
                          TailLaw(2.0, 1.0, LogPowerFactor{1.5}, true, false),
                          TailLaw(3.0, 1.0, ConstantFactor{0.5}, true, false)};
  for (const auto& law : laws) {
    double prev = 0.0;
    for (std::uint64_t m : {1ull, 2ull, 7ull, 100ull, 12345ull, 1000000ull}) {
      const double b = b_n(law, m);
      CHECK(b >= prev);
      prev = b;
      CHECK(law.tail_probability(b) <= (1.0 / static_cast<double>(m)) * (1.0 + 1e-10));
      if (b > law.effective_scale() * (1.0 + 1e-9)) {
        CHECK(law.tail_probability(b * (1.0 - 1e-9)) > 1.0 / static_cast<double>(m));
      }
      if (law.has_constant_factor() && b > law.effective_scale()) {
        CHECK(law.tail_probability(b) ==
              doctest::Approx(1.0 / static_cast<double>(m)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("quantile round trip to 12 digits") {
  const TailLaw laws[] = {TailLaw::pareto(0.5), TailLaw::pareto(2.0, 3.0),
                          TailLaw::pareto(5.0, 1.0, true, true),
                          TailLaw(3.0, 1.0, ConstantFactor{0.5}, true, false)};
  for (const auto& law : laws) {
    for (int j = 0; j <= 200; ++j) {
      const double p = std::pow(10.0, -0.06 * j);
      CHECK(law.tail_probability(law.quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical tail within the DKW band") {
  const std::size_t n = 1000000;
  const double band = dkw_band(n, 0.999);
  CHECK(modulus_ks(TailLaw::pareto(1.5), n, 21) <= band);
  CHECK(modulus_ks(TailLaw::pareto(3.0, 1.0, true, true), n, 22) <= band);
  CHECK(modulus_ks(TailLaw(2.0, 1.0, LogPowerFactor{1.0}, true, false), n, 23) <= band);
}

TEST_CASE("regime classification") {
  CHECK(critical_alpha(1.0) == 4.0);
  CHECK(critical_alpha(0.5) == 6.0);
  CHECK(RegimeParams::classify(1.0, 1.5).regime == Regime::subcritical);
  CHECK(RegimeParams::classify(1.0, 6.0).regime == Regime::supercritical);
  CHECK_THROWS_AS(RegimeParams::classify(1.0, 4.0), ConfigError);
  CHECK_THROWS_AS(RegimeParams::classify(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(RegimeParams::classify(1.5, 1.0), ConfigError);
}

TEST_CASE("truncated moments") {
  const auto law = TailLaw::pareto(3.0, 1.0, false, false);
  SUBCASE("k above alpha: integral of t^4 3 t^-4 from 1 to x") {
    const auto tm = truncated_moment_bound(law, 4, 10.0);
    CHECK(tm.empirical == doctest::Approx(27.0).epsilon(1e-10));
    CHECK(tm.empirical <= tm.bound);
  }
  SUBCASE("k below alpha: bounded by the mean 3/2, bound flat in x") {
    const double b0 = truncated_moment_bound(law, 1, 2.0).bound;
    for (double x : {2.0, 10.0, 1e3, 1e8}) {
      const auto tm = truncated_moment_bound(law, 1, x);
      CHECK(tm.empirical <= 1.5);
      CHECK(tm.empirical <= tm.bound);
      CHECK(tm.bound == doctest::Approx(b0));
    }
  }
  SUBCASE("empty truncation range") {
    const auto tm = truncated_moment_bound(law, 2, 1.0);
    CHECK(tm.empirical == 0.0);
    CHECK(tm.bound >= 0.0);
  }
  SUBCASE("below the scale") {
    CHECK_THROWS_AS(truncated_moment_bound(law, 2, 0.5), DomainError);
  }
}

TEST_CASE("truncated moment of a log-power law against Simpson quadrature") {
  // Density of the modulus: -G'(t) with G(t) = t^{-a} (1 + log t)^b.
  const double a = 2.0, beta = 1.0;
  const TailLaw law(a, 1.0, LogPowerFactor{beta}, true, false);
  auto density = [&](double t) {
    const double l = 1.0 + std::log(t);
    return std::pow(t, -a - 1.0) * (a * std::pow(l, beta) - beta * std::pow(l, beta - 1.0));
  };
  for (int k : {1, 2, 3}) {
    for (double x : {3.0, 50.0, 1e4}) {
      // Simpson in u = log t.
      const int m = 20000;
      const double h = std::log(x) / m;
      double s = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double t = std::exp(i * h);
        const double f = std::pow(t, k) * density(t) * t;
        s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
      }
      s *= h / 3.0;
      const auto tm = truncated_moment_bound(law, k, x);
      CHECK(tm.empirical == doctest::Approx(s).epsilon(1e-7));
      CHECK(tm.empirical <= tm.bound);
    }
  }
}

TEST_CASE("truncated moment bound on the scale-doubling grid") {
  for (double a : {0.7, 1.0, 2.0, 3.0, 6.5}) {
    const auto law = TailLaw::pareto(a, 1.5, true, false);
    for (int k = 1; k <= 8; ++k) {
      for (int j = 0; j <= 20; ++j) {
        const auto tm = truncated_moment_bound(law, k, law.scale() * std::ldexp(1.0, j));
        CHECK(tm.empirical <= tm.bound * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("sum window regimes and exponents") {
  SUBCASE("part b") {
    const SumWindow w{0.2, 0.3};
    REQUIRE(classify_sum_window(3.0, 1.0, w) == SumRegimePart::b);
    CHECK(predicted_sum_exponent(SumRegimePart::b, 3.0, 1.0, w, 0.05) ==
          doctest::Approx(0.65).epsilon(1e-14));
  }
  SUBCASE("part c with eta = eta' = 0") {
    const SumWindow w{0.5, 0.5};
    REQUIRE(classify_sum_window(2.0, 1.0, w) == SumRegimePart::c);
    CHECK(predicted_sum_exponent(SumRegimePart::c, 2.0, 1.0, w, 0.1) ==
          doctest::Approx(0.6).epsilon(1e-14));
  }
  SUBCASE("part c needs epsilon above alpha eta + eta'") {
    const SumWindow w{0.4, 0.6};
    CHECK_THROWS_AS(predicted_sum_exponent(SumRegimePart::c, 2.0, 1.0, w, 0.2), ConfigError);
    CHECK(predicted_sum_exponent(SumRegimePart::c, 2.0, 1.0, w, 0.31) ==
          doctest::Approx(0.81));
  }
  SUBCASE("part a and d") {
    CHECK(classify_sum_window(3.0, 1.0, SumWindow{}) == SumRegimePart::a);
    const SumWindow a{-INFINITY, 0.3};
    CHECK(predicted_sum_exponent(SumRegimePart::a, 3.0, 1.0, a, 0.1) == doctest::Approx(1.1));
    CHECK(predicted_sum_exponent(SumRegimePart::a, 0.5, 1.0, SumWindow{-INFINITY, 1.0}, 0.1) ==
          doctest::Approx(1.6));
    const SumWindow d{0.6, 1.0};
    CHECK(classify_sum_window(2.0, 1.0, d) == SumRegimePart::d);
    CHECK(predicted_sum_exponent(SumRegimePart::d, 2.0, 1.0, d, 0.15) == doctest::Approx(1.15));
  }
  SUBCASE("endpoint at mu/alpha is the straddling case") {
    CHECK(classify_sum_window(2.0, 1.0, SumWindow{0.3, 0.5}) == SumRegimePart::c);
    CHECK(classify_sum_window(2.0, 1.0, SumWindow{0.5, 0.7}) == SumRegimePart::c);
  }
  SUBCASE("unmatched windows") {
    CHECK_THROWS_AS(classify_sum_window(3.0, 1.0, SumWindow{-INFINITY, 0.5}), ConfigError);
    CHECK_THROWS_AS(classify_sum_window(0.8, 1.0, SumWindow{0.1, 0.2}), ConfigError);
    CHECK_THROWS_AS(classify_sum_window(3.0, 1.0, SumWindow{0.3, 0.1}), ConfigError);
  }
}

TEST_CASE("truncated sums stay below the predicted power") {
  const auto law = TailLaw::pareto(3.0);
  TailSumConfig cfg;
  cfg.window = {0.2, 0.3};
  cfg.epsilon = 0.1;
  cfg.replicas = 200;
  double prev = 1.0;
  for (std::uint64_t n : {1000ull, 10000ull, 100000ull}) {
    cfg.n = n;
    const auto r = truncated_sum_regime(law, cfg, derive_seed(31, n));
    CHECK(r.part == SumRegimePart::b);
    CHECK(r.draws_per_replica == n);
    CHECK(r.sums.size() == 200);
    if (n == 10000) CHECK(r.exceedance_frequency <= 0.02);
    CHECK(r.exceedance_frequency <= prev);
    prev = r.exceedance_frequency;
  }
}

TEST_CASE("truncated sum replicas are reproducible") {
  const auto law = TailLaw::pareto(2.0);
  TailSumConfig cfg;
  cfg.n = 5000;
  cfg.window = {0.6, 1.0};
  cfg.replicas = 5;
  const auto r = truncated_sum_regime(law, cfg, 77);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(truncated_sum_sample(law, cfg, 77, i) == r.sums[i]);
  }
}
