#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "htband/ensemble.hpp"
#include "htband/errors.hpp"
#include "htband/extremes.hpp"
#include "htband/heavy_tail.hpp"
#include "htband/rng.hpp"

using namespace htband;

TEST_CASE("pattern shapes") {
  SUBCASE("full cyclic pattern at mu = 1") {
    const auto p = build_pattern(100, 1.0, PatternKind::cyclic_band);
    CHECK(p->half_width() == 50);
    for (std::size_t i = 0; i < 100; ++i) CHECK(p->row_count(i) == 100);
    CHECK(p->independent_entry_count() == 100 * 101 / 2);
  }
  SUBCASE("cyclic band at mu = 1/2") {
    const auto p = build_pattern(100, 0.5, PatternKind::cyclic_band);
    CHECK(p->half_width() == 5);
    for (std::size_t i = 0; i < 100; ++i) CHECK(p->row_count(i) == 11);
    CHECK(p->a_n() == doctest::Approx(1.1));
    CHECK(p->d_n() == doctest::Approx(11.0));
    CHECK(p->exceptional_rows() == 0);
  }
  SUBCASE("band boundary rows") {
    const auto p = build_pattern(100, 0.5, PatternKind::band);
    CHECK(p->row_count(0) == 6);
    CHECK(p->row_count(99) == 6);
    CHECK(p->row_count(50) == 11);
    CHECK(p->exceptional_rows() == 10);
    for (std::size_t i = 0; i < 100; ++i) CHECK(p->row_count(i) <= 11);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(build_pattern(1, 1.0, PatternKind::band), ConfigError);
    CHECK_THROWS_AS(build_pattern(10, 0.0, PatternKind::band), ConfigError);
    CHECK_THROWS_AS(build_pattern(10, 1.2, PatternKind::band), ConfigError);
  }
}

TEST_CASE("pattern membership is symmetric and matches the band rule") {
  for (auto kind : {PatternKind::band, PatternKind::cyclic_band}) {
    for (std::size_t n : {7, 30, 64}) {
      for (double mu : {0.3, 0.6, 1.0}) {
        const auto p = build_pattern(n, mu, kind);
        const std::size_t w = p->half_width();
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t d = i > j ? i - j : j - i;
            const std::size_t dist = kind == PatternKind::band ? d : std::min(d, n - d);
            CHECK(p->contains(i, j) == p->contains(j, i));
            CHECK(p->contains(i, j) == (dist <= w));
            total += p->contains(i, j) ? 1 : 0;
          }
        }
        std::size_t rows = 0;
        for (std::size_t i = 0; i < n; ++i) rows += p->row_count(i);
        CHECK(rows == total);
        if (kind == PatternKind::cyclic_band && 2 * w + 1 <= n) CHECK(total == n * (2 * w + 1));
      }
    }
  }
}

TEST_CASE("custom masks") {
  SUBCASE("single symmetric pair") {
    const auto p = custom_pattern(2, 1.0, {{1, 0}});
    const SampledMatrix m(p, {-3.0});
    CHECK(m.at(0, 1) == -3.0);
    CHECK(m.at(1, 0) == -3.0);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(1, 1) == 0.0);
  }
  SUBCASE("density check rejects sparse rows") {
    // Rows 0..49 hold the full upper block, rows 50..99 are nearly empty.
    std::vector<Position> pos;
    for (std::uint32_t i = 0; i < 50; ++i) {
      for (std::uint32_t j = i; j < 50; ++j) pos.push_back({i, j});
    }
    for (std::uint32_t i = 50; i < 100; ++i) pos.push_back({i, i});
    try {
      custom_pattern(100, 1.0, pos);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.offending_count() == 50);
    }
    CHECK_NOTHROW(custom_pattern(100, 1.0, pos, false));
  }
}

TEST_CASE("sampling is symmetric, on-pattern and reproducible") {
  const auto p = build_pattern(60, 0.6, PatternKind::band);
  const auto law = TailLaw::pareto(1.5);
  const auto a = sample_matrix(p, law, 99, 3);
  const auto b = sample_matrix(p, law, 99, 3);
  const auto c = sample_matrix(p, law, 99, 4);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  const auto d = a.to_dense();
  CHECK(d.is_symmetric());
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 60; ++j) {
      CHECK(d(i, j) == d(j, i));
      if (!p->contains(i, j)) CHECK(d(i, j) == 0.0);
      else CHECK(d(i, j) != 0.0);
    }
  }
}

TEST_CASE("off-diagonal entries follow the law") {
  const auto p = build_pattern(2000, 0.5, PatternKind::cyclic_band);
  const auto law = TailLaw::pareto(3.0);
  const auto m = sample_matrix(p, law, 5, 0);
  std::vector<double> mods;
  for (std::size_t k = 0; k < p->upper().size(); ++k) {
    if (p->upper()[k].i != p->upper()[k].j) mods.push_back(std::abs(m.values()[k]));
  }
  std::sort(mods.begin(), mods.end());
  const double n = static_cast<double>(mods.size());
  double d = 0.0;
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const double f = 1.0 - std::pow(mods[i], -3.0);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  CHECK(d <= std::sqrt(std::log(2.0 / 0.001) / (2.0 * n)));
}

TEST_CASE("ranked entries") {
  SUBCASE("two entries") {
    const auto p = custom_pattern(3, 1.0, {{0, 1}, {0, 2}}, false);
    const SampledMatrix m(p, {-5.0, 3.0});
    const auto r = largest_entries(m, 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0].i == 0);
    CHECK(r[0].j == 1);
    CHECK(r[0].value == -5.0);
    CHECK(r[0].sign == -1);
    CHECK(r[1].j == 2);
    CHECK(r[1].modulus == 3.0);
    CHECK_THROWS_AS(largest_entries(m, 3), BoundsError);
  }
  SUBCASE("ties break lexicographically") {
    const auto p = build_pattern(5, 1.0, PatternKind::cyclic_band);
    std::vector<double> v(p->upper().size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = k % 2 ? 2.0 : -2.0;
    const auto r = largest_entries(SampledMatrix(p, v), v.size());
    for (std::size_t k = 1; k < r.size(); ++k) {
      CHECK(std::pair(r[k - 1].i, r[k - 1].j) < std::pair(r[k].i, r[k].j));
    }
  }
  SUBCASE("moduli non-increasing and positions distinct") {
    const auto p = build_pattern(200, 0.7, PatternKind::band);
    const auto m = sample_matrix(p, TailLaw::pareto(1.0), 8, 0);
    const auto r = largest_entries(m, 50);
    for (std::size_t k = 1; k < r.size(); ++k) {
      CHECK(r[k - 1].modulus >= r[k].modulus);
      CHECK(std::pair(r[k - 1].i, r[k - 1].j) != std::pair(r[k].i, r[k].j));
    }
    for (const auto& e : r) {
      CHECK(e.i <= e.j);
      CHECK(p->contains(e.i, e.j));
      CHECK(std::abs(m.at(e.i, e.j)) == e.modulus);
    }
  }
}

TEST_CASE("rescaled largest entry is Frechet") {
  const auto p = build_pattern(2000, 1.0, PatternKind::cyclic_band);
  const auto law = TailLaw::pareto(1.0);
  const double b = b_n(law, p->independent_entry_count());
  std::vector<double> tops;
  for (std::uint64_t r = 0; r < 500; ++r) {
    tops.push_back(sample_matrix(p, law, 404, r).max_abs() / b);
  }
  std::sort(tops.begin(), tops.end());
  double d = 0.0;
  const double n = static_cast<double>(tops.size());
  for (std::size_t i = 0; i < tops.size(); ++i) {
    const double f = std::exp(-1.0 / tops[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  CHECK(d <= 0.08);
}

TEST_CASE("row tail sums") {
  const auto p = build_pattern(40, 1.0, PatternKind::cyclic_band);
  const auto m = sample_matrix(p, TailLaw::pareto(1.2), 17, 0);
  const auto d = m.to_dense();
  const auto full = row_tail_sum(m, 0.0);
  CHECK(full.max == doctest::Approx(d.max_abs_row_sum()).epsilon(1e-14));
  for (std::size_t i = 0; i < 40; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 40; ++j) s += std::abs(d(i, j));
    CHECK(full.per_row[i] == doctest::Approx(s).epsilon(1e-14));
  }
  const auto none = row_tail_sum(m, m.max_abs());
  CHECK(none.max == 0.0);
  for (double v : none.per_row) CHECK(v == 0.0);
}

TEST_CASE("large-entry row sums in the supercritical regime stay below sqrt N") {
  const std::size_t n = 2000;
  const auto p = build_pattern(n, 1.0, PatternKind::cyclic_band);
  const auto law = TailLaw::pareto(6.0, 1.0, true, true);
  const double threshold = std::pow(static_cast<double>(n), 0.2);
  int below = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto t = row_tail_sum(sample_matrix(p, law, 4242, r), threshold);
    if (t.max < std::sqrt(static_cast<double>(n))) ++below;
  }
  CHECK(below >= 95);
}

TEST_CASE("two-large-entries diagnostics") {
  SUBCASE("row exponent at mu = 1 is 3/4") {
    const auto p = build_pattern(50, 1.0, PatternKind::cyclic_band);
    const auto m = sample_matrix(p, TailLaw::pareto(1.5), 1, 0);
    const auto d = claim31_diagnostics(m, 0.01);
    CHECK(std::log(d.row_threshold) / std::log(d.b) == doctest::Approx(0.76));
    CHECK(std::log(d.diagonal_threshold) / std::log(d.b) == doctest::Approx(0.51));
  }
  SUBCASE("planted pair in one row") {
    const auto p = build_pattern(50, 1.0, PatternKind::cyclic_band);
    const auto law = TailLaw::pareto(1.5);
    auto dense = sample_matrix(p, law, 2, 0).to_dense();
    dense.set_symmetric(3, 10, 1e9);
    dense.set_symmetric(3, 20, -1e9);
    const auto planted = from_dense(p, dense);
    const SampledMatrix m(p, std::vector<double>(planted.values().begin(), planted.values().end()),
                          law);
    CHECK(claim31_diagnostics(m, 0.05).two_large_per_row);
  }
  SUBCASE("needs a law and positive eta") {
    const auto p = custom_pattern(2, 1.0, {{0, 1}});
    CHECK_THROWS_AS(claim31_diagnostics(SampledMatrix(p, {1.0}), 0.1), ConfigError);
    const SampledMatrix m(p, {1.0}, TailLaw::pareto(1.0));
    CHECK_THROWS_AS(claim31_diagnostics(m, 0.0), DomainError);
  }
}

TEST_CASE("two-large-entries frequency on a sparse band") {
  const auto p = build_pattern(5000, 0.5, PatternKind::cyclic_band);
  const auto law = TailLaw::pareto(1.5);
  int clean_005 = 0, clean_03 = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto m = sample_matrix(p, law, 3131, r);
    const auto a = claim31_diagnostics(m, 0.05);
    const auto b = claim31_diagnostics(m, 0.3);
    clean_005 += !a.two_large_per_row && !a.large_diagonal;
    clean_03 += !b.two_large_per_row && !b.large_diagonal;
  }
  // At eta = 0.05 the diagonal threshold b^{2/3 + 0.05} is far below the
  // largest of N diagonal entries at this size, so the flag is usually
  // raised; eta = 0.3 clears it.
  MESSAGE("clean fraction at eta=0.05: " << clean_005 / 100.0);
  CHECK(clean_03 >= 90);
}

TEST_CASE("matrix text and binary round trips") {
  const auto p = build_pattern(30, 0.5, PatternKind::band);
  const auto m = sample_matrix(p, TailLaw::pareto(2.5), 777, 9);
  for (int binary = 0; binary < 2; ++binary) {
    std::stringstream s;
    if (binary) write_matrix_binary(m, s);
    else write_matrix_text(m, s);
    const auto r = read_matrix(s);
    CHECK(r.n() == 30);
    CHECK(r.pattern().mu() == 0.5);
    CHECK(r.pattern().kind() == PatternKind::band);
    CHECK(r.seed() == 777);
    CHECK(r.replica_index() == 9);
    REQUIRE(r.values().size() == m.values().size());
    CHECK(std::equal(m.values().begin(), m.values().end(), r.values().begin()));
  }
}

TEST_CASE("matrix import rejects inconsistent input") {
  SUBCASE("off-pattern entry") {
    std::istringstream s("# htband matrix v1\n# n 10\n# mu 0x1p-1\n# kind band\n1 9 2.5\n");
    CHECK_THROWS_AS(read_matrix(s), ValidationError);
  }
  SUBCASE("asymmetric mirror") {
    std::istringstream s(
        "# htband matrix v1\n# n 4\n# mu 0x1p+0\n# kind cyclic_band\n1 2 2.5\n2 1 3.0\n");
    CHECK_THROWS_AS(read_matrix(s), ValidationError);
  }
}
