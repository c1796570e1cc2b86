#include "htband/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "htband/ensemble.hpp"
#include "htband/errors.hpp"
#include "htband/heavy_tail.hpp"
#include "htband/linalg.hpp"
#include "htband/localization.hpp"
#include "htband/perturbation.hpp"
#include "htband/rng.hpp"
#include "htband/spectral.hpp"
#include "htband/truncation.hpp"

namespace htband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1)) %
                  (hi - lo + 1);
}

/// Symmetric test matrix whose entry law is drawn per instance: uniform,
/// Gaussian-like (sum of uniforms) or symmetric Pareto with a random index.
DenseMatrix random_symmetric(Rng& rng, std::size_t n) {
  const int family = static_cast<int>(rng.uniform() * 3.0) % 3;
  const double alpha = 0.5 + 4.5 * rng.uniform();
  const TailLaw law = TailLaw::pareto(alpha, 1.0, true, false);
  DenseMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double x = 0.0;
      if (family == 0) {
        x = 2.0 * rng.uniform() - 1.0;
      } else if (family == 1) {
        for (int t = 0; t < 4; ++t) x += rng.uniform() - 0.5;
      } else {
        x = law.sample(rng);
      }
      h.set_symmetric(i, j, x);
    }
  }
  return h;
}

std::vector<double> random_unit(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  const double nv = norm2(v);
  for (auto& x : v) x /= nv;
  return v;
}

CheckResult named(std::string name) {
  CheckResult r;
  r.name = std::move(name);
  return r;
}

void record(CheckResult& r, double bound, double value) {
  const double margin = (bound - value) / std::max(1.0, std::abs(bound));
  if (r.instances == 0 || margin < r.worst_margin) r.worst_margin = margin;
  ++r.instances;
}

void finish(CheckResult& r) {
  r.passed = r.violations == 0 && r.instances > 0;
  if (r.detail.empty()) {
    r.detail = std::to_string(r.instances) + " inequalities, " + std::to_string(r.violations) +
               " violations";
  }
}

}  // namespace

std::vector<CheckResult> verify_perturbation_bounds(const VerifyOptions& o) {
  CheckResult ball = named("Rayleigh quotient ball contains an eigenvalue");
  CheckResult align = named("perturbed eigenvector alignment 2eps/(d-eps)");
  Rng rng(derive_seed(o.seed, 0xa1, 0));
  std::size_t gapped = 0;
  while (gapped < o.perturbation_instances) {
    const std::size_t n = uniform_size(rng, 2, 50);
    const DenseMatrix h = random_symmetric(rng, n);
    const auto spec = dense_eigh(h, true);
    const double slack = inequality_slack(spec.spectral_radius_estimate);

    // Arbitrary unit vector.
    try {
      const auto v = random_unit(rng, n);
      const auto pe = check_perturbed_eigenvalue(h, v, spec);
      record(ball, pe.epsilon + slack, std::abs(pe.nearest_eig - pe.lambda));
    } catch (const InvariantViolation&) {
      ++ball.instances;
      ++ball.violations;
    }

    // Eigenvector plus a perturbation of random size.
    const std::size_t k = uniform_size(rng, 0, n - 1);
    const double delta = std::pow(10.0, -1.0 - 5.0 * rng.uniform());
    auto v = spec.eigenvectors[k];
    const auto g = random_unit(rng, n);
    axpy(delta, g, v);
    const double nv = norm2(v);
    for (auto& x : v) x /= nv;
    try {
      const auto pe = check_perturbed_eigenvalue(h, v, spec);
      record(ball, pe.epsilon + slack, std::abs(pe.nearest_eig - pe.lambda));
    } catch (const InvariantViolation&) {
      ++ball.instances;
      ++ball.violations;
      continue;
    }
    try {
      const auto ac = check_eigenvector_alignment(h, v, 0.0, spec);
      record(align, ac.rhs + slack, ac.lhs);
      ++gapped;
    } catch (const PreconditionError&) {
      ++align.rejected;
    } catch (const InvariantViolation&) {
      ++align.instances;
      ++align.violations;
      ++gapped;
    }
  }
  finish(ball);
  finish(align);
  return {ball, align};
}

CheckResult verify_localized_eigenvalue_bound(const VerifyOptions& o) {
  CheckResult r = named("localized eigenvalue bound (rho_L + sqrt(eta) rho)/sqrt(1-eta)");
  Rng rng(derive_seed(o.seed, 0x1e5, 0));
  for (std::size_t m = 0; m < o.localization_matrices; ++m) {
    const std::size_t n = uniform_size(rng, 2, 12);
    const DenseMatrix h = random_symmetric(rng, n);
    const auto spec = dense_eigh(h, true);
    const double rho = spec.spectral_radius_estimate;
    const double slack = inequality_slack(rho);
    for (std::size_t l = 1; l <= n; ++l) {
      const double rho_l = submatrix_rho(h, l, SubmatrixMode::exhaustive);
      for (std::size_t k = 0; k < n; ++k) {
        const double eta = best_tail(spec.eigenvectors[k], l).tail_mass;
        if (!(eta < 1.0)) continue;
        const double bound = localized_eigenvalue_bound(rho_l, rho, std::max(0.0, eta));
        const double value = std::abs(spec.eigenvalues[k]);
        record(r, bound + slack, value);
        if (value > bound + slack) ++r.violations;
      }
    }
  }
  finish(r);
  return r;
}

std::vector<CheckResult> verify_chain_and_interlacing(const VerifyOptions& o) {
  CheckResult chain = named("l-infinity chain |h_11| <= ||H||_inf <= |h_11| + small row sum");
  CheckResult weyl = named("Weyl interlacing lambda_k(H) <= lambda_1(H^(k))");
  Rng rng(derive_seed(o.seed, 0xf1, 0));
  for (std::size_t m = 0; m < o.chain_matrices; ++m) {
    const std::size_t n = uniform_size(rng, 2, 20);
    const double alpha = 0.5 + 2.0 * rng.uniform();
    const auto pattern = build_pattern(n, 1.0, PatternKind::cyclic_band);
    const auto sm = sample_matrix(pattern, TailLaw::pareto(alpha), derive_seed(o.seed, 0xf2, m), 0);

    // Threshold just above every row's second largest modulus, so each row
    // holds at most one entry at or above it.
    std::vector<std::vector<double>> mods(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mods[i].push_back(std::abs(sm.at(i, j)));
      std::sort(mods[i].begin(), mods[i].end(), std::greater<>());
    }
    double second = 0.0;
    for (const auto& row : mods) second = std::max(second, row.size() > 1 ? row[1] : 0.0);
    const double t = std::nextafter(second, kInf);
    const auto fc = fact1_chain(sm, t);
    if (!fc.precondition) {
      ++chain.rejected;
    } else {
      record(chain, fc.upper + inequality_slack(fc.norm_inf), fc.norm_inf);
      if (!fc.holds) ++chain.violations;
    }

    const DenseMatrix h = sm.to_dense();
    const auto ranked = largest_entries(sm, std::min<std::size_t>(4, pattern->independent_entry_count()));
    std::vector<std::size_t> rows;
    for (const auto& e : ranked) {
      for (std::size_t idx : {e.i, e.j}) {
        if (std::find(rows.begin(), rows.end(), idx) == rows.end()) rows.push_back(idx);
      }
    }
    for (std::size_t k = 1; k < n && k <= 5; ++k) {
      // Rows of the largest entries first, then random distinct rows.
      std::vector<std::size_t> removed(rows.begin(),
                                       rows.begin() + static_cast<std::ptrdiff_t>(std::min(k - 1, rows.size())));
      while (removed.size() < k - 1) {
        const std::size_t idx = uniform_size(rng, 0, n - 1);
        if (std::find(removed.begin(), removed.end(), idx) == removed.end()) removed.push_back(idx);
      }
      const auto wc = weyl_interlacing_check(h, removed);
      record(weyl, wc.lambda1_sub, wc.lambda_k);
      if (!wc.holds) ++weyl.violations;
    }
  }
  finish(chain);
  finish(weyl);
  return {chain, weyl};
}

CheckResult verify_truncated_moment_grid() {
  CheckResult r = named("truncated moment bound on the (k, x) grid");
  std::vector<TailLaw> laws;
  for (double a : {0.5, 1.0, 1.5, 2.5, 4.0}) laws.push_back(TailLaw::pareto(a, 1.0, true, false));
  laws.push_back(TailLaw::pareto(1.5, 2.0, true, false));
  laws.push_back(TailLaw::pareto(5.0, 1.0, true, true));
  laws.emplace_back(2.0, 1.0, LogPowerFactor{1.0}, true, false);
  laws.emplace_back(3.0, 1.0, ConstantFactor{0.5}, true, false);
  for (const auto& law : laws) {
    const double x0 = std::max(law.scale(), law.effective_scale());
    for (int k = 1; k <= 8; ++k) {
      for (int j = 0; j <= 40; ++j) {
        const double x = x0 * std::pow(2.0, 0.5 * j);
        const auto tm = truncated_moment_bound(law, k, x);
        // Quadrature error allowance only.
        const double allowed = tm.bound * (1.0 + 1e-9);
        record(r, allowed, tm.empirical);
        if (!(tm.empirical <= allowed)) ++r.violations;
      }
    }
  }
  finish(r);
  return r;
}

CheckResult verify_bennett(const VerifyOptions& o) {
  CheckResult r = named("Bennett bound against simulated binomial deviations");
  struct Case {
    std::uint64_t m;
    double p;
    double eta;
  };
  const Case cases[] = {{1000, 0.5, 0.2}, {100, 0.1, 1.0}, {200, 0.05, 0.5}, {50, 0.3, 0.5}};
  std::string detail;
  std::size_t idx = 0;
  for (const auto& c : cases) {
    Rng rng(derive_seed(o.seed, 0xbe, idx++));
    const double mp = static_cast<double>(c.m) * c.p;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < o.bennett_trials; ++t) {
      std::uint64_t x = 0;
      for (std::uint64_t i = 0; i < c.m; ++i) x += rng.uniform() < c.p ? 1 : 0;
      if (std::abs(static_cast<double>(x) - mp) >= c.eta * mp) ++hits;
    }
    const double freq = static_cast<double>(hits) / static_cast<double>(o.bennett_trials);
    const double bound = bennett_bound(c.m, c.p, c.eta);
    record(r, bound, freq);
    if (freq > bound) ++r.violations;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%sm=%llu p=%g eta=%g: freq %.3g <= %.3g", detail.empty() ? "" : "; ",
                  static_cast<unsigned long long>(c.m), c.p, c.eta, freq, bound);
    detail += buf;
  }
  r.detail = detail;
  finish(r);
  return r;
}

std::vector<CheckResult> run_property_suite(const VerifyOptions& o) {
  std::vector<CheckResult> out = verify_perturbation_bounds(o);
  out.push_back(verify_localized_eigenvalue_bound(o));
  for (auto& c : verify_chain_and_interlacing(o)) out.push_back(std::move(c));
  out.push_back(verify_truncated_moment_grid());
  out.push_back(verify_bennett(o));
  return out;
}

}  // namespace htband
