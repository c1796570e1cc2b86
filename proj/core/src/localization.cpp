#include "htband/localization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "htband/errors.hpp"

namespace htband {
namespace {

void require_unit(std::span<const double> v, std::size_t l) {
  if (v.empty()) throw DomainError("empty vector");
  if (l == 0 || l > v.size()) throw DomainError("L must lie in [1, N]");
  const double nrm = norm2(v);
  if (!(std::abs(nrm - 1.0) <= 1e-10)) throw DomainError("vector is not of unit norm");
}

// Sum of v_j^2 over j outside `inside`, in index order.
template <class Inside>
double complement_mass(std::span<const double> v, Inside&& inside) {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!inside(j)) s += v[j] * v[j];
  }
  return s;
}

}  // namespace

BestTail best_tail(std::span<const double> v, std::size_t l) {
  require_unit(v, l);
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(l), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double ma = v[a] * v[a];
                      const double mb = v[b] * v[b];
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  BestTail out;
  out.support.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(l));
  std::sort(out.support.begin(), out.support.end());
  std::vector<char> in(v.size(), 0);
  for (std::size_t j : out.support) in[j] = 1;
  out.tail_mass = complement_mass(v, [&](std::size_t j) { return in[j] != 0; });
  return out;
}

WindowTail successive_best_tail(std::span<const double> v, std::size_t l) {
  require_unit(v, l);
  const std::size_t n = v.size();
  double window = 0.0;
  for (std::size_t t = 0; t < l; ++t) window += v[t] * v[t];
  double best = window;
  std::size_t best_start = 0;
  for (std::size_t s = 1; s < n && l < n; ++s) {
    const std::size_t leaving = s - 1;
    const std::size_t entering = (s + l - 1) % n;
    window += v[entering] * v[entering] - v[leaving] * v[leaving];
    if (window > best) {
      best = window;
      best_start = s;
    }
  }
  WindowTail out;
  out.window_start = best_start;
  out.tail_mass = complement_mass(v, [&](std::size_t j) {
    const std::size_t offset = (j + n - best_start) % n;
    return offset < l;
  });
  return out;
}

double two_coord_overlap(std::span<const double> v, std::size_t i, std::size_t j, int sign) {
  if (i == j) throw DomainError("two_coord_overlap requires distinct indices");
  if (i >= v.size() || j >= v.size()) throw BoundsError("index outside the vector");
  if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
  return std::abs(v[i] + static_cast<double>(sign) * v[j]) / std::sqrt(2.0);
}

double participation_ratio(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x * x * x;
  if (!(s > 0.0)) throw DomainError("participation ratio of the zero vector");
  return 1.0 / s;
}

double localized_eigenvalue_bound(double rho_l, double rho, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw DomainError("eta must lie in [0, 1)");
  return (rho_l + std::sqrt(eta) * rho) / std::sqrt(1.0 - eta);
}

double localized_c_limit(double mu, double alpha) {
  return 0.4 * mu * (alpha - 2.0) / (alpha - 1.0);
}

LocalizationReport delocalization_scan(std::span<const SpectralSummary* const> summaries,
                                       std::size_t n, double mu, double alpha, double c,
                                       double eta0) {
  if (!(eta0 > 0.0 && eta0 < 0.5)) throw ConfigError("eta0 must lie in (0, 1/2)");
  LocalizationReport rep;
  rep.c = c;
  rep.eta0 = eta0;
  rep.localized_variant = c > 0.0 && alpha > 2.0 && c < localized_c_limit(mu, alpha);
  rep.successive_variant = c > 0.0 && c < mu;
  if (!rep.localized_variant && !rep.successive_variant) {
    throw ConfigError("c lies outside both admissible windows");
  }
  rep.l = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(n), c) * (1.0 + 1e-12)));
  rep.l = std::clamp<std::size_t>(rep.l, 1, n);

  for (const auto* s : summaries) {
    rep.rho = std::max(rep.rho, s->spectral_radius_estimate);
    for (double lam : s->eigenvalues) rep.rho = std::max(rep.rho, std::abs(lam));
  }
  std::size_t k = 0;
  for (const auto* s : summaries) {
    for (std::size_t t = 0; t < s->eigenvectors.size(); ++t, ++k) {
      const auto& v = s->eigenvectors[t];
      if (v.size() != n) throw BoundsError("eigenvector length differs from N");
      LocalizationRecord rec;
      rec.k = k;
      rec.lambda = s->eigenvalues[t];
      auto bt = best_tail(v, rep.l);
      rec.best_tail = bt.tail_mass;
      rec.best_support = std::move(bt.support);
      const auto wt = successive_best_tail(v, rep.l);
      rec.successive_tail = wt.tail_mass;
      rec.window_start = wt.window_start;
      rec.participation_ratio = participation_ratio(v);
      const double mag = std::abs(rec.lambda);
      rec.flagged = rec.best_tail < eta0 && mag > std::sqrt(2.0 * rec.best_tail) * rep.rho;
      rec.flagged_successive =
          rec.successive_tail < eta0 && mag > std::sqrt(2.0 * rec.successive_tail) * rep.rho;
      if ((rep.localized_variant && rec.flagged) ||
          (rep.successive_variant && rec.flagged_successive)) {
        rep.event = true;
      }
      rep.records.push_back(std::move(rec));
    }
  }
  rep.pairs_scanned = rep.records.size();
  return rep;
}

LocalizationReport delocalization_scan(const SpectralSummary& summary, const SampledMatrix& m,
                                       double c, double eta0) {
  if (!m.law()) throw ConfigError("delocalization_scan needs the matrix's entry law");
  const SpectralSummary* ptr = &summary;
  return delocalization_scan(std::span<const SpectralSummary* const>(&ptr, 1), m.n(),
                             m.pattern().mu(), m.law()->alpha(), c, eta0);
}

void write_localization_csv(const LocalizationReport& report, std::ostream& out) {
  out << "k,lambda,L,best_tail,successive_tail,participation_ratio,overlap\n";
  char buf[256];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g,%.17g,%.17g,", r.k + 1, r.lambda,
                  report.l, r.best_tail, r.successive_tail, r.participation_ratio);
    out << buf;
    if (r.overlap >= 0.0) {
      std::snprintf(buf, sizeof buf, "%.17g", r.overlap);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace htband
