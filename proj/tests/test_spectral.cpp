#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "htband/ensemble.hpp"
#include "htband/errors.hpp"
#include "htband/linalg.hpp"
#include "htband/rng.hpp"
#include "htband/spectral.hpp"

using namespace htband;

namespace {

DenseMatrix random_dense(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) h.set_symmetric(i, j, 2.0 * rng.uniform() - 1.0);
  }
  return h;
}

// Cyclic Jacobi rotations; eigenvalues descending.
std::vector<double> jacobi_eigenvalues(DenseMatrix a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
  std::sort(d.begin(), d.end(), std::greater<>());
  return d;
}

// Solves (A - sigma I) x = b by Gaussian elimination with partial pivoting.
std::vector<double> shifted_solve(const DenseMatrix& a, double sigma, std::vector<double> b) {
  const std::size_t n = a.size();
  DenseMatrix m = a;
  for (std::size_t i = 0; i < n; ++i) m(i, i) -= sigma;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    }
    for (std::size_t k = 0; k < n; ++k) std::swap(m(c, k), m(piv, k));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      for (std::size_t k = c; k < n; ++k) m(r, k) -= f * m(c, k);
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= m(i, k) * x[k];
    x[i] = s / m(i, i);
  }
  return x;
}

double inverse_iteration(const DenseMatrix& a, double shift) {
  std::vector<double> x(a.size(), 1.0);
  for (int it = 0; it < 20; ++it) {
    x = shifted_solve(a, shift, x);
    const double nx = norm2(x);
    for (auto& v : x) v /= nx;
  }
  return dot(x, a.multiply(x));
}

double reference_semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) + std::asin(x / 2.0) / std::numbers::pi;
}

double semicircle_quantile(double p) {
  double lo = -2.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (reference_semicircle_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SampledMatrix planted_pair(std::size_t n, double value) {
  const auto p = build_pattern(n, 1.0, PatternKind::cyclic_band);
  DenseMatrix d(n);
  d.set_symmetric(0, 1, value);
  return from_dense(p, d);
}

}  // namespace

TEST_CASE("dense solver on small closed forms") {
  SUBCASE("planted pair") {
    const auto s = dense_eigh(planted_pair(4, 5.0));
    REQUIRE(s.eigenvalues.size() == 4);
    CHECK(s.eigenvalues[0] == doctest::Approx(5.0));
    CHECK(std::abs(s.eigenvalues[1]) < 1e-14);
    CHECK(std::abs(s.eigenvalues[2]) < 1e-14);
    CHECK(s.eigenvalues[3] == doctest::Approx(-5.0));
    const auto& v = s.eigenvectors[0];
    CHECK(std::abs(v[0]) == doctest::Approx(std::sqrt(0.5)));
    CHECK(v[0] * v[1] > 0);
  }
  SUBCASE("diagonal") {
    const double d[] = {1.0, 3.0};
    const auto s = dense_eigh(DenseMatrix::diagonal(d));
    CHECK(s.eigenvalues[0] == 3.0);
    CHECK(s.eigenvalues[1] == 1.0);
    CHECK(std::abs(s.eigenvectors[0][1]) == doctest::Approx(1.0));
    CHECK(std::abs(s.eigenvectors[1][0]) == doctest::Approx(1.0));
  }
}

TEST_CASE("dense solver against Jacobi and inverse iteration") {
  const auto h = random_dense(30, 303);
  const auto s = dense_eigh(h);
  const auto ref = jacobi_eigenvalues(h);
  for (std::size_t k = 0; k < 30; ++k) {
    CHECK(std::abs(s.eigenvalues[k] - ref[k]) < 1e-8);
    CHECK(std::abs(s.eigenvalues[k] - inverse_iteration(h, ref[k] + 1e-7)) < 1e-8);
  }
}

TEST_CASE("dense solver invariants") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 5 + 7 * seed;
    const auto p = build_pattern(n, 0.8, PatternKind::band);
    const auto m = sample_matrix(p, TailLaw::pareto(1.3), seed, 0);
    const auto h = m.to_dense();
    const auto s = dense_eigh(h);
    CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
    const double sum = std::accumulate(s.eigenvalues.begin(), s.eigenvalues.end(), 0.0);
    CHECK(std::abs(sum - h.trace()) <= 1e-8 * h.frobenius_norm());
    for (std::size_t a = 0; a < n; ++a) {
      CHECK(std::abs(norm2(s.eigenvectors[a]) - 1.0) <= 1e-12);
      CHECK(s.residuals[a] <= 1e-10 * std::max(1.0, s.spectral_radius_estimate));
      for (std::size_t b = a + 1; b < n; ++b) {
        CHECK(std::abs(dot(s.eigenvectors[a], s.eigenvectors[b])) <= 1e-8);
      }
    }
  }
}

TEST_CASE("dense solver respects its size limit") {
  const auto p = build_pattern(50, 1.0, PatternKind::cyclic_band);
  const auto m = sample_matrix(p, TailLaw::pareto(2.0), 1, 0);
  CHECK_THROWS_AS(dense_eigh(m, false, 40), ConfigError);
}

TEST_CASE("Lanczos agrees with the dense solver") {
  const auto p = build_pattern(500, 1.0, PatternKind::cyclic_band);
  const auto m = sample_matrix(p, TailLaw::pareto(1.5), 2024, 0);
  const auto dense = dense_eigh(m, false);
  SUBCASE("largest algebraic") {
    const auto l = lanczos_topk(m, 5, Which::largest_algebraic);
    REQUIRE(l.converged);
    REQUIRE(l.eigenvalues.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(l.eigenvalues[k] - dense.eigenvalues[k]) <=
            1e-8 * std::abs(dense.eigenvalues[k]));
      CHECK(l.residuals[k] <= 1e-10 * std::max(1.0, l.spectral_radius_estimate));
      CHECK(std::abs(norm2(l.eigenvectors[k]) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("largest magnitude merges both ends") {
    std::vector<double> mags(dense.eigenvalues);
    std::sort(mags.begin(), mags.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    const auto l = lanczos_topk(m, 5, Which::largest_magnitude);
    REQUIRE(l.converged);
    REQUIRE(l.eigenvalues.size() == 5);
    CHECK(std::is_sorted(l.eigenvalues.rbegin(), l.eigenvalues.rend()));
    std::vector<double> got(l.eigenvalues);
    std::sort(got.begin(), got.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(got[k] - mags[k]) <= 1e-8 * std::abs(mags[k]));
    }
  }
  SUBCASE("both ends from one run") {
    const SymmetricOperator op(m);
    const auto e = lanczos_extremes(op, 3, 3);
    REQUIRE(e.top.converged);
    REQUIRE(e.bottom.converged);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(e.top.eigenvalues[k] - dense.eigenvalues[k]) <=
            1e-8 * std::abs(dense.eigenvalues[k]));
      const double lo = dense.eigenvalues[497 + k];
      CHECK(std::abs(e.bottom.eigenvalues[k] - lo) <= 1e-8 * std::abs(lo));
    }
  }
}

TEST_CASE("Lanczos trivial cases") {
  SUBCASE("planted pair") {
    const auto l = lanczos_topk(planted_pair(200, 5.0), 1, Which::largest_algebraic);
    CHECK(l.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(l.residuals[0] < 1e-10);
  }
  SUBCASE("diagonal 1..N") {
    std::vector<double> d(300);
    std::iota(d.begin(), d.end(), 1.0);
    const SymmetricOperator op(DenseMatrix::diagonal(d));
    const auto l = lanczos_topk(op, 1, Which::largest_algebraic);
    CHECK(l.converged);
    CHECK(l.eigenvalues[0] == doctest::Approx(300.0).epsilon(1e-12));
  }
  SUBCASE("non-convergence is flagged") {
    const auto p = build_pattern(400, 1.0, PatternKind::cyclic_band);
    const auto m = sample_matrix(p, TailLaw::pareto(3.0), 5, 0);
    LanczosOptions o;
    o.max_iter = 12;
    o.tol = 1e-14;
    const auto l = lanczos_topk(m, 5, Which::largest_algebraic, o);
    CHECK_FALSE(l.converged);
  }
}

TEST_CASE("semicircle law") {
  SUBCASE("CDF matches quadrature of the density") {
    for (double x = -2.0; x <= 2.0; x += 0.25) {
      const int m = 4000;
      const double h = (x + 2.0) / m;
      double s = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double t = -2.0 + i * h;
        const double f = std::sqrt(std::max(0.0, 4.0 - t * t)) / (2.0 * std::numbers::pi);
        s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
      }
      CHECK(semicircle_cdf(x) == doctest::Approx(s * h / 3.0).epsilon(1e-5));
    }
  }
  SUBCASE("second and fourth moments") {
    // Substituting x = 2 sin t removes the square-root endpoint singularity.
    auto moment = [](int p) {
      const int m = 2000;
      const double a = -std::numbers::pi / 2, h = std::numbers::pi / m;
      double s = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double t = a + i * h;
        const double f = std::pow(2.0 * std::sin(t), p) * 4.0 * std::cos(t) * std::cos(t) /
                         (2.0 * std::numbers::pi);
        s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
      }
      return s * h / 3.0;
    };
    CHECK(moment(2) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(moment(4) == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("quantile sample") {
    const std::size_t n = 1000;
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = 3.0 * semicircle_quantile((i + 0.5) / n);
    CHECK(semicircle_ks(ev, 3.0) <= 1.0 / n);
    std::vector<double> shuffled(ev);
    Rng rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(semicircle_ks(shuffled, 3.0) == semicircle_ks(ev, 3.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS(semicircle_ks(std::vector<double>{}, 1.0));
  }
}

TEST_CASE("principal submatrix radii") {
  SUBCASE("closed forms") {
    const double d[] = {3.0, 1.0, 1.0};
    const auto h = DenseMatrix::diagonal(d);
    CHECK(submatrix_rho(h, 1, SubmatrixMode::exhaustive) == 3.0);
    const auto r = random_dense(9, 2);
    CHECK(submatrix_rho(r, 9, SubmatrixMode::exhaustive) == doctest::Approx(spectral_radius(r)));
    CHECK(submatrix_rho(r, 9, SubmatrixMode::successive) == doctest::Approx(spectral_radius(r)));
  }
  SUBCASE("monotone and successive below exhaustive") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto h = random_dense(12, seed);
      const double rho = spectral_radius(h);
      double prev = 0.0;
      for (std::size_t l = 1; l <= 12; ++l) {
        const double ex = submatrix_rho(h, l, SubmatrixMode::exhaustive);
        const double su = submatrix_rho(h, l, SubmatrixMode::successive);
        CHECK(ex >= prev - 1e-12);
        CHECK(ex <= rho + 1e-12);
        CHECK(su <= ex + 1e-12);
        prev = ex;
      }
    }
  }
  SUBCASE("combinatorial budget") {
    const auto h = random_dense(40, 3);
    CHECK(binomial_saturating(40, 20) > 1000000);
    CHECK_THROWS_AS(submatrix_rho(h, 20, SubmatrixMode::exhaustive), ConfigError);
    CHECK_NOTHROW(submatrix_rho(h, 20, SubmatrixMode::successive));
    CHECK(binomial_saturating(12, 3) == 220);
    CHECK(binomial_saturating(200, 100) == UINT64_MAX);
  }
}

TEST_CASE("Weyl interlacing on small matrices") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 3 + seed % 18;
    const auto h = random_dense(n, 100 + seed);
    const auto full = jacobi_eigenvalues(h);
    for (std::size_t k = 1; k < n && k <= 5; ++k) {
      std::vector<std::size_t> keep;
      for (std::size_t i = k - 1; i < n; ++i) keep.push_back(i);
      const auto sub = jacobi_eigenvalues(h.principal_submatrix(keep));
      CHECK(full[k - 1] <= sub[0] + 1e-12);
    }
  }
}

TEST_CASE("spectrum CSV") {
  const double d[] = {2.0, -1.0};
  const auto s = dense_eigh(DenseMatrix::diagonal(d));
  std::ostringstream out;
  write_spectrum_csv(s, out);
  const std::string text = out.str();
  CHECK(text.rfind("rank,eigenvalue,residual\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
