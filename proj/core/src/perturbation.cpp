#include "htband/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htband/errors.hpp"
#include "htband/rng.hpp"

namespace htband {
namespace {

constexpr std::uint64_t kPlantedStream = 0x91a7ed;

void require_unit(std::span<const double> v, std::size_t n) {
  if (v.size() != n) throw BoundsError("vector length differs from the matrix dimension");
  if (!(std::abs(norm2(v) - 1.0) <= 1e-10)) throw DomainError("vector is not of unit norm");
}

void require_exponent(double x, const char* name) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

}  // namespace

double inequality_slack(double rho) { return 1e-9 * std::max(1.0, rho); }

PerturbedEigenvalue check_perturbed_eigenvalue(const DenseMatrix& h, std::span<const double> v,
                                               const SpectralSummary& spectrum) {
  const std::size_t n = h.size();
  require_unit(v, n);
  if (spectrum.eigenvalues.size() != n) throw BoundsError("spectrum must be complete");
  PerturbedEigenvalue out;
  std::vector<double> hv = h.multiply(v);
  out.lambda = dot(v, hv);
  axpy(-out.lambda, v, hv);
  out.epsilon = norm2(hv);
  out.w.assign(n, 0.0);
  if (out.epsilon > 0.0) {
    for (std::size_t i = 0; i < n; ++i) out.w[i] = hv[i] / out.epsilon;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double dist = std::abs(spectrum.eigenvalues[k] - out.lambda);
    if (dist < best) {
      best = dist;
      out.nearest_index = k;
    }
  }
  out.nearest_eig = spectrum.eigenvalues[out.nearest_index];
  out.contained = best <= out.epsilon + inequality_slack(spectrum.spectral_radius_estimate);
  if (!out.contained) {
    throw InvariantViolation("no eigenvalue within epsilon of the Rayleigh quotient");
  }
  return out;
}

PerturbedEigenvalue check_perturbed_eigenvalue(const DenseMatrix& h, std::span<const double> v) {
  return check_perturbed_eigenvalue(h, v, dense_eigh(h, false));
}

AlignmentCheck check_eigenvector_alignment(const DenseMatrix& h, std::span<const double> v,
                                           double d, const SpectralSummary& spectrum) {
  const std::size_t n = h.size();
  if (spectrum.eigenvectors.size() != n) {
    throw PreconditionError("alignment check needs the full eigen-decomposition");
  }
  const auto pe = check_perturbed_eigenvalue(h, v, spectrum);
  AlignmentCheck out;
  out.lambda = pe.lambda;
  out.epsilon = pe.epsilon;
  std::size_t inside = 0;
  std::size_t inside_index = 0;
  double rest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double dist = std::abs(spectrum.eigenvalues[k] - pe.lambda);
    if (dist <= pe.epsilon) {
      ++inside;
      inside_index = k;
    } else {
      rest = std::min(rest, dist);
    }
  }
  if (inside != 1) {
    throw PreconditionError("the epsilon-ball must contain exactly one eigenvalue");
  }
  out.d = d > 0.0 ? d : rest;
  if (!(out.d > pe.epsilon)) throw PreconditionError("gap d must exceed epsilon");
  if (rest < out.d) throw PreconditionError("another eigenvalue lies closer than d");
  const auto& ve = spectrum.eigenvectors[inside_index];
  const double c = dot(ve, v);
  std::vector<double> r(ve.begin(), ve.end());
  axpy(-c, v, r);
  out.lhs = norm2(r);
  out.rhs = 2.0 * pe.epsilon / (out.d - pe.epsilon);
  if (out.lhs > out.rhs + inequality_slack(spectrum.spectral_radius_estimate)) {
    throw InvariantViolation("eigenvector alignment bound violated");
  }
  return out;
}

AlignmentCheck check_eigenvector_alignment(const DenseMatrix& h, std::span<const double> v,
                                           double d) {
  return check_eigenvector_alignment(h, v, d, dense_eigh(h, true));
}

HypothesisA3Report hypothesis_a3_report(const SampledMatrix& h, double c_n, double kappa,
                                        double tau, double nu, std::size_t k_max) {
  require_exponent(kappa, "kappa");
  require_exponent(tau, "tau");
  require_exponent(nu, "nu");
  if (!(c_n > 0.0)) throw DomainError("scale c_n must be positive");
  HypothesisA3Report rep;
  rep.n = h.n();
  rep.c_n = c_n;
  rep.kappa = kappa;
  rep.tau = tau;
  rep.nu = nu;
  const double large = std::pow(c_n, kappa);
  const double diag_cap = std::pow(c_n, tau);
  const double small_cap = std::pow(c_n, nu);

  std::vector<std::uint32_t> large_count(h.n(), 0);
  std::vector<double> small_sum(h.n(), 0.0);
  const auto& up = h.pattern().upper();
  const auto vals = h.values();
  for (std::size_t k = 0; k < up.size(); ++k) {
    const double a = std::abs(vals[k]);
    const std::size_t i = up[k].i;
    const std::size_t j = up[k].j;
    if (i == j) rep.max_diagonal = std::max(rep.max_diagonal, a);
    if (a > large) {
      ++large_count[i];
      if (i != j) ++large_count[j];
    }
    if (a < large) {
      small_sum[i] += a;
      if (i != j) small_sum[j] += a;
    }
  }
  for (std::size_t i = 0; i < h.n(); ++i) {
    if (large_count[i] >= 2) ++rep.rows_with_two_large;
    rep.max_small_row_sum = std::max(rep.max_small_row_sum, small_sum[i]);
  }
  rep.b_i = rep.rows_with_two_large == 0;
  rep.b_ii = rep.max_diagonal <= diag_cap;
  rep.b_iii = rep.max_small_row_sum <= small_cap;

  const std::size_t k_avail = std::min(k_max + 1, up.size());
  const auto ranked = largest_entries(h, k_avail);
  for (std::size_t k = 0; k < std::min(k_max, ranked.size()); ++k) {
    rep.entry_ratios.push_back(ranked[k].modulus / c_n);
    if (k + 1 < ranked.size()) {
      rep.gap_ratios.push_back((ranked[k].modulus - ranked[k + 1].modulus) / c_n);
    }
  }
  return rep;
}

HypothesisA3Summary hypothesis_a3_check(std::span<const SampledMatrix> sequence,
                                        const std::function<double(std::size_t)>& c,
                                        double kappa, double tau, double nu,
                                        std::size_t k_max) {
  HypothesisA3Summary out;
  out.min_entry_ratio = std::numeric_limits<double>::infinity();
  out.min_gap_ratio = std::numeric_limits<double>::infinity();
  out.all_b_pass = true;
  double prev_c = 0.0;
  for (const auto& h : sequence) {
    const double cn = c(h.n());
    auto rep = hypothesis_a3_report(h, cn, kappa, tau, nu, k_max);
    for (double r : rep.entry_ratios) {
      out.min_entry_ratio = std::min(out.min_entry_ratio, r);
      out.max_entry_ratio = std::max(out.max_entry_ratio, r);
    }
    for (double g : rep.gap_ratios) out.min_gap_ratio = std::min(out.min_gap_ratio, g);
    out.all_b_pass = out.all_b_pass && rep.b_i && rep.b_ii && rep.b_iii;
    if (prev_c > 0.0) out.scale_ratios.push_back(cn / prev_c);
    prev_c = cn;
    out.per_size.push_back(std::move(rep));
  }
  return out;
}

TheoremA2Report theorem_a2_verify(const SampledMatrix& h, std::size_t k_max,
                                  std::size_t dense_limit) {
  const std::size_t n = h.n();
  if (k_max == 0 || k_max > n) throw BoundsError("K must lie in [1, N]");
  const auto ranked = largest_entries(h, k_max);
  TheoremA2Report rep;
  if (ranked.front().modulus > 0.0) {
    rep.fact1_gap = row_tail_sum(h, 0.0).max / ranked.front().modulus - 1.0;
  }

  SpectralSummary spec;
  if (n <= dense_limit) {
    spec = dense_eigh(h.to_dense(), true);
  } else {
    LanczosOptions opt;
    opt.tol = 1e-10;
    spec = lanczos_topk(h, k_max, Which::largest_algebraic, opt);
  }
  rep.method = spec.method;
  rep.solver_converged = spec.converged;

  const SymmetricOperator op(h);
  std::vector<double> u(n, 0.0);
  std::vector<double> hu(n, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto& e = ranked[k];
    TheoremA2Entry row;
    row.k = k + 1;
    row.i = e.i;
    row.j = e.j;
    row.entry_modulus = e.modulus;
    row.lambda = spec.eigenvalues[k];
    row.ratio = e.modulus > 0.0 ? row.lambda / e.modulus : std::numeric_limits<double>::quiet_NaN();

    std::fill(u.begin(), u.end(), 0.0);
    if (e.i == e.j) {
      u[e.i] = 1.0;
    } else {
      u[e.i] = 1.0 / std::sqrt(2.0);
      u[e.j] = static_cast<double>(e.sign) / std::sqrt(2.0);
    }
    const auto& v = spec.eigenvectors[k];
    const double orient = v[e.i] < 0.0 ? -1.0 : 1.0;
    double dist = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double diff = orient * v[t] - u[t];
      dist += diff * diff;
    }
    row.vector_distance = std::sqrt(dist);
    op.apply(u, hu);
    axpy(-e.modulus, u, hu);
    row.fact3_residual = norm2(hu);
    rep.entries.push_back(row);
  }
  return rep;
}

Fact1Chain fact1_chain(const SampledMatrix& h, double threshold) {
  Fact1Chain out;
  std::vector<double> row_sum(h.n(), 0.0);
  std::vector<double> small_sum(h.n(), 0.0);
  std::vector<std::uint32_t> big(h.n(), 0);
  const auto& up = h.pattern().upper();
  const auto vals = h.values();
  for (std::size_t k = 0; k < up.size(); ++k) {
    const double a = std::abs(vals[k]);
    const std::size_t i = up[k].i;
    const std::size_t j = up[k].j;
    out.largest_entry = std::max(out.largest_entry, a);
    row_sum[i] += a;
    if (i != j) row_sum[j] += a;
    if (a < threshold) {
      small_sum[i] += a;
      if (i != j) small_sum[j] += a;
    } else {
      ++big[i];
      if (i != j) ++big[j];
    }
  }
  double max_small = 0.0;
  for (std::size_t i = 0; i < h.n(); ++i) {
    out.norm_inf = std::max(out.norm_inf, row_sum[i]);
    max_small = std::max(max_small, small_sum[i]);
  }
  out.precondition = std::all_of(big.begin(), big.end(), [](std::uint32_t b) { return b <= 1; });
  out.upper = out.largest_entry + max_small;
  const double slack = inequality_slack(out.norm_inf);
  out.holds = out.largest_entry <= out.norm_inf + slack &&
              (!out.precondition || out.norm_inf <= out.upper + slack);
  return out;
}

WeylCheck weyl_interlacing_check(const DenseMatrix& h, std::span<const std::size_t> removed) {
  const std::size_t n = h.size();
  if (removed.size() >= n) throw BoundsError("cannot remove every row");
  std::vector<char> drop(n, 0);
  for (std::size_t r : removed) {
    if (r >= n) throw BoundsError("removed index out of range");
    if (drop[r]) throw DomainError("removed indices must be distinct");
    drop[r] = 1;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) keep.push_back(i);
  }
  const auto full = symmetric_eigen(h, false);
  const auto sub = symmetric_eigen(h.principal_submatrix(keep), false);
  WeylCheck out;
  out.lambda_k = full.values[removed.size()];
  out.lambda1_sub = sub.values.front();
  const double rho = std::max(std::abs(full.values.front()), std::abs(full.values.back()));
  out.holds = out.lambda_k <= out.lambda1_sub + inequality_slack(rho);
  return out;
}

SampledMatrix planted_instance(std::size_t n, double c, std::size_t k_planted,
                               double background_exponent, std::uint64_t seed) {
  if (n < 2 * k_planted + 1) throw ConfigError("planted instance needs n >= 2K + 1");
  if (!(c > 0.0)) throw ConfigError("planted scale must be positive");
  auto pattern = build_pattern(n, 1.0, PatternKind::cyclic_band);
  Rng rng(derive_seed(seed, kPlantedStream, n));
  const double amp = std::pow(c, background_exponent) / static_cast<double>(n);
  std::vector<double> values(pattern->upper().size());
  for (double& x : values) x = amp * (2.0 * rng.uniform() - 1.0);
  const std::size_t s = n / (2 * k_planted + 1);
  for (std::size_t k = 1; k <= k_planted; ++k) {
    const auto idx = pattern->find((2 * k - 1) * s, 2 * k * s);
    values[*idx] = c * (2.0 - static_cast<double>(k) / 10.0);
  }
  return SampledMatrix(std::move(pattern), std::move(values), std::nullopt, seed, 0);
}

}  // namespace htband
