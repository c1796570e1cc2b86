#include "htband/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "htband/errors.hpp"
#include "htband/rng.hpp"

namespace htband {
namespace {

double relative_floor(double rho) { return std::max(1.0, rho); }

std::vector<double> residual_vector(const SymmetricOperator& op, std::span<const double> v,
                                    double lambda) {
  std::vector<double> r(v.size());
  op.apply(v, r);
  axpy(-lambda, v, r);
  return r;
}

void random_unit(Rng& rng, std::vector<double>& v) {
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  const double nrm = norm2(v);
  for (double& x : v) x /= nrm;
}

// Two classical Gram-Schmidt passes against the first `m` rows of `basis`.
void orthogonalize(const std::vector<double>& basis, std::size_t m, std::size_t n,
                   std::vector<double>& w) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < m; ++i) {
      std::span<const double> vi(basis.data() + i * n, n);
      const double c = dot(vi, w);
      axpy(-c, vi, w);
    }
  }
}

struct LanczosRun {
  std::vector<double> ritz;  // all Ritz values, descending
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::vector<double> residuals;
  std::size_t iterations = 0;
  bool converged = false;
  double rho_estimate = 0.0;
};

std::vector<std::size_t> wanted_indices(std::size_t m, std::size_t k_top, std::size_t k_bottom) {
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < std::min(k_top, m); ++t) idx.push_back(t);
  for (std::size_t t = 0; t < std::min(k_bottom, m); ++t) idx.push_back(m - 1 - t);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

LanczosRun run_lanczos(const SymmetricOperator& op, std::size_t k_top, std::size_t k_bottom,
                       const LanczosOptions& opt) {
  const std::size_t n = op.n();
  if (n == 0) throw DomainError("Lanczos on an empty operator");
  const std::size_t k_total = k_top + k_bottom;
  if (k_total == 0) throw DomainError("Lanczos needs at least one wanted eigenpair");
  if (k_top > n || k_bottom > n) throw BoundsError("requested more eigenpairs than the dimension");
  std::size_t max_iter = opt.max_iter != 0 ? opt.max_iter
                                           : std::max<std::size_t>(300, 40 * k_total);
  max_iter = std::min(max_iter, n);
  const std::size_t min_space = std::min(n, std::max(k_total, std::size_t{2}));
  max_iter = std::max(max_iter, min_space);

  Rng rng(opt.seed);
  std::vector<double> basis;
  basis.reserve(max_iter * n);
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples v_j and v_{j+1}
  std::vector<double> v(n);
  std::vector<double> w(n);
  random_unit(rng, v);
  double anorm = 0.0;
  std::size_t next_check = std::max<std::size_t>(min_space, opt.check_every);

  LanczosRun run;
  for (std::size_t j = 0;; ++j) {
    basis.insert(basis.end(), v.begin(), v.end());
    op.apply(v, w);
    const double a = dot(v, w);
    axpy(-a, v, w);
    if (j > 0) axpy(-beta[j - 1], std::span<const double>(basis.data() + (j - 1) * n, n), w);
    orthogonalize(basis, j + 1, n, w);
    double b = norm2(w);
    alpha.push_back(a);
    anorm = std::max(anorm, std::abs(a) + b + (j > 0 ? beta[j - 1] : 0.0));
    const std::size_t m = j + 1;
    bool exhausted = m >= n;
    if (!exhausted && b <= 1e-12 * std::max(anorm, 1e-300)) {
      // Invariant subspace found: continue in its orthogonal complement.
      random_unit(rng, w);
      orthogonalize(basis, m, n, w);
      const double r = norm2(w);
      if (r <= 1e-8) {
        exhausted = true;
      } else {
        for (double& x : w) x /= r;
      }
      b = 0.0;
    } else if (!exhausted) {
      for (double& x : w) x /= b;
    }
    beta.push_back(b);

    const bool at_limit = m >= max_iter || exhausted;
    if (!at_limit && m < next_check) {
      std::swap(v, w);
      continue;
    }
    next_check = m + opt.check_every;

    // Ritz values plus last components of the Ritz vectors of T_m.
    std::vector<double> d(alpha.begin(), alpha.end());
    std::vector<double> off(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) off[i] = beta[i - 1];
    std::vector<std::vector<double>> last_row(1, std::vector<double>(m, 0.0));
    last_row[0][m - 1] = 1.0;
    tridiagonal_ql_rows(d, off, last_row);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
    const double rho = std::max(std::abs(d[order.front()]), std::abs(d[order.back()]));
    const double target = opt.tol * relative_floor(rho);
    const auto wanted = wanted_indices(m, k_top, k_bottom);
    bool estimate_ok = true;
    for (std::size_t t : wanted) {
      if (b * std::abs(last_row[0][order[t]]) > target) estimate_ok = false;
    }
    if (!estimate_ok && !at_limit) {
      std::swap(v, w);
      continue;
    }

    // Ritz vectors and explicit residual certification.
    std::vector<double> d2(alpha.begin(), alpha.end());
    std::vector<double> off2(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) off2[i] = beta[i - 1];
    DenseMatrix z = DenseMatrix::identity(m);
    tridiagonal_ql(d2, off2, &z);
    std::vector<std::size_t> order2(m);
    std::iota(order2.begin(), order2.end(), 0);
    std::sort(order2.begin(), order2.end(),
              [&](std::size_t x, std::size_t y) { return d2[x] > d2[y]; });

    run.ritz.clear();
    for (std::size_t t = 0; t < m; ++t) run.ritz.push_back(d2[order2[t]]);
    run.values.clear();
    run.vectors.clear();
    run.residuals.clear();
    run.rho_estimate = std::max(std::abs(run.ritz.front()), std::abs(run.ritz.back()));
    bool certified = true;
    const double cert_target = opt.tol * relative_floor(run.rho_estimate);
    for (std::size_t t : wanted) {
      const std::size_t col = order2[t];
      std::vector<double> y(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        axpy(z(i, col), std::span<const double>(basis.data() + i * n, n), y);
      }
      const double nrm = norm2(y);
      for (double& x : y) x /= nrm;
      const double theta = run.ritz[t];
      const double res = norm2(residual_vector(op, y, theta));
      if (!(res <= cert_target)) certified = false;
      run.values.push_back(theta);
      run.vectors.push_back(std::move(y));
      run.residuals.push_back(res);
    }
    run.iterations = m;
    run.converged = certified;
    if (certified || at_limit) return run;
    std::swap(v, w);
  }
}

SpectralSummary make_summary(std::vector<double> values, std::vector<std::vector<double>> vectors,
                             std::vector<double> residuals, const LanczosRun& run,
                             const LanczosOptions& opt) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  SpectralSummary s;
  s.method = SolverMethod::lanczos;
  s.iterations = run.iterations;
  s.tolerance = opt.tol;
  s.converged = run.converged;
  s.spectral_radius_estimate = run.rho_estimate;
  for (std::size_t t : order) {
    s.eigenvalues.push_back(values[t]);
    s.residuals.push_back(residuals[t]);
    if (opt.want_vectors) s.eigenvectors.push_back(std::move(vectors[t]));
  }
  return s;
}

}  // namespace

const char* to_string(SolverMethod method) {
  return method == SolverMethod::dense ? "dense" : "lanczos";
}

SpectralSummary dense_eigh(const DenseMatrix& h, bool want_vectors) {
  const std::size_t n = h.size();
  SpectralSummary s;
  s.method = SolverMethod::dense;
  if (n == 0) return s;
  auto eig = symmetric_eigen(h, want_vectors);
  s.eigenvalues = std::move(eig.values);
  s.spectral_radius_estimate =
      std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  s.tolerance = std::max(1e-10, 100.0 * static_cast<double>(n) *
                                    std::numeric_limits<double>::epsilon());
  if (!want_vectors) return s;
  const SymmetricOperator op(h);
  const double target = s.tolerance * relative_floor(s.spectral_radius_estimate);
  s.eigenvectors.resize(n);
  s.residuals.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v(n);
    for (std::size_t r = 0; r < n; ++r) v[r] = eig.vectors(r, k);
    const double res = norm2(residual_vector(op, v, s.eigenvalues[k]));
    if (!(res <= target)) {
      throw NumericError("dense eigenpair failed the residual check", k);
    }
    s.eigenvectors[k] = std::move(v);
    s.residuals[k] = res;
  }
  return s;
}

SpectralSummary dense_eigh(const SampledMatrix& m, bool want_vectors, std::size_t dense_limit) {
  if (m.n() > dense_limit) {
    throw ConfigError("matrix dimension " + std::to_string(m.n()) + " exceeds the dense limit " +
                      std::to_string(dense_limit));
  }
  return dense_eigh(m.to_dense(), want_vectors);
}

SpectralSummary lanczos_topk(const SymmetricOperator& op, std::size_t k, Which which,
                             const LanczosOptions& options) {
  if (k == 0) throw DomainError("lanczos_topk requires k >= 1");
  if (which == Which::largest_algebraic) {
    auto run = run_lanczos(op, k, 0, options);
    return make_summary(run.values, std::move(run.vectors), run.residuals, run, options);
  }
  auto run = run_lanczos(op, k, k, options);
  std::vector<std::size_t> order(run.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(run.values[a]) > std::abs(run.values[b]);
  });
  order.resize(std::min(k, order.size()));
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::vector<double> residuals;
  for (std::size_t t : order) {
    values.push_back(run.values[t]);
    vectors.push_back(std::move(run.vectors[t]));
    residuals.push_back(run.residuals[t]);
  }
  return make_summary(std::move(values), std::move(vectors), std::move(residuals), run, options);
}

SpectralSummary lanczos_topk(const SampledMatrix& m, std::size_t k, Which which,
                             const LanczosOptions& options) {
  return lanczos_topk(SymmetricOperator(m), k, which, options);
}

ExtremePairs lanczos_extremes(const SymmetricOperator& op, std::size_t k_top,
                              std::size_t k_bottom, const LanczosOptions& options) {
  auto run = run_lanczos(op, k_top, k_bottom, options);
  // run.values is ascending in Ritz index, i.e. descending in value.
  const std::size_t count = run.values.size();
  const std::size_t top = std::min(k_top, count);
  const std::size_t bottom = std::min(k_bottom, count);
  auto slice = [&](std::size_t from, std::size_t to) {
    std::vector<double> values(run.values.begin() + static_cast<std::ptrdiff_t>(from),
                               run.values.begin() + static_cast<std::ptrdiff_t>(to));
    std::vector<std::vector<double>> vectors;
    std::vector<double> residuals;
    for (std::size_t t = from; t < to; ++t) {
      vectors.push_back(run.vectors[t]);
      residuals.push_back(run.residuals[t]);
    }
    return make_summary(std::move(values), std::move(vectors), std::move(residuals), run,
                        options);
  };
  ExtremePairs out;
  out.top = slice(0, top);
  out.bottom = slice(count - bottom, count);
  return out;
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
         std::asin(x / 2.0) / std::numbers::pi;
}

double semicircle_ks(std::span<const double> eigenvalues, double scale) {
  if (eigenvalues.empty()) throw DomainError("semicircle_ks requires at least one eigenvalue");
  if (!(scale > 0.0)) throw DomainError("semicircle_ks requires a positive scale");
  std::vector<double> x(eigenvalues.begin(), eigenvalues.end());
  for (double& v : x) v /= scale;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = semicircle_cdf(x[i]);
    ks = std::max({ks, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return ks;
}

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t r = 1;
  for (std::uint64_t t = 1; t <= k; ++t) {
    // r * (n - k + t) / t is exact; cancel gcd(r, t) first to stay in range.
    const std::uint64_t g = std::gcd(r, t);
    const std::uint64_t factor = (n - k + t) / (t / g);
    r /= g;
    if (r > kMax / factor) return kMax;
    r *= factor;
  }
  return r;
}

double submatrix_rho(const DenseMatrix& h, std::size_t l, SubmatrixMode mode,
                     std::uint64_t max_subsets) {
  const std::size_t n = h.size();
  if (l == 0 || l > n) throw BoundsError("submatrix size must lie in [1, N]");
  double best = 0.0;
  std::vector<std::size_t> idx(l);
  if (mode == SubmatrixMode::successive) {
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t t = 0; t < l; ++t) idx[t] = (s + t) % n;
      best = std::max(best, spectral_radius(h.principal_submatrix(idx)));
      if (l == n) break;
    }
    return best;
  }
  if (binomial_saturating(n, l) > max_subsets) {
    throw ConfigError("exhaustive submatrix search over C(" + std::to_string(n) + ", " +
                      std::to_string(l) + ") subsets exceeds the budget; use successive mode");
  }
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    best = std::max(best, spectral_radius(h.principal_submatrix(idx)));
    std::size_t t = l;
    while (t > 0 && idx[t - 1] == n - l + (t - 1)) --t;
    if (t == 0) break;
    ++idx[t - 1];
    for (std::size_t u = t; u < l; ++u) idx[u] = idx[u - 1] + 1;
  }
  return best;
}

double submatrix_rho(const SampledMatrix& m, std::size_t l, SubmatrixMode mode,
                     std::uint64_t max_subsets) {
  const std::size_t n = m.n();
  if (mode == SubmatrixMode::exhaustive) {
    return submatrix_rho(m.to_dense(), l, mode, max_subsets);
  }
  if (l == 0 || l > n) throw BoundsError("submatrix size must lie in [1, N]");
  double best = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    DenseMatrix sub(l);
    for (std::size_t a = 0; a < l; ++a) {
      for (std::size_t b = a; b < l; ++b) sub.set_symmetric(a, b, m.at((s + a) % n, (s + b) % n));
    }
    best = std::max(best, spectral_radius(sub));
    if (l == n) break;
  }
  return best;
}

void write_spectrum_csv(const SpectralSummary& s, std::ostream& out) {
  out << "rank,eigenvalue,residual\n";
  char buf[128];
  for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
    if (k < s.residuals.size()) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k + 1, s.eigenvalues[k], s.residuals[k]);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", k + 1, s.eigenvalues[k]);
    }
    out << buf;
  }
}

void write_eigenvectors_csv(const SpectralSummary& s, std::ostream& out) {
  if (s.eigenvectors.empty()) return;
  out << "index";
  for (std::size_t k = 0; k < s.eigenvectors.size(); ++k) out << ",v" << (k + 1);
  out << "\n";
  char buf[64];
  const std::size_t n = s.eigenvectors.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    out << (i + 1);
    for (const auto& v : s.eigenvectors) {
      std::snprintf(buf, sizeof buf, ",%.17g", v[i]);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace htband
