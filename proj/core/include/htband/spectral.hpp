#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "htband/ensemble.hpp"
#include "htband/linalg.hpp"

namespace htband {

enum class SolverMethod { dense, lanczos };
enum class Which { largest_algebraic, largest_magnitude };

const char* to_string(SolverMethod method);

struct SpectralSummary {
  std::vector<double> eigenvalues;                ///< descending
  std::vector<std::vector<double>> eigenvectors;  ///< parallel to eigenvalues, or empty
  std::vector<double> residuals;                  ///< ||H v - lambda v|| per pair; empty for dense runs without vectors
  SolverMethod method = SolverMethod::dense;
  std::size_t iterations = 0;
  double tolerance = 0.0;
  bool converged = true;
  /// max(|lambda_max|, |lambda_min|) over the spectrum seen by the solver.
  double spectral_radius_estimate = 0.0;
};

/// Full spectrum by Householder reduction and implicit QL. With vectors,
/// every residual is recomputed and must stay below
/// tolerance * max(1, rho); otherwise NumericError.
SpectralSummary dense_eigh(const DenseMatrix& h, bool want_vectors = true);
/// Throws ConfigError above `dense_limit`.
SpectralSummary dense_eigh(const SampledMatrix& m, bool want_vectors = true,
                           std::size_t dense_limit = 4096);

struct LanczosOptions {
  double tol = 1e-10;         ///< relative residual target
  std::size_t max_iter = 0;   ///< 0 selects min(n, max(300, 40 k))
  std::size_t check_every = 8;
  bool want_vectors = true;
  std::uint64_t seed = 0x1a2c3e5f;
};

/// Top-k eigenpairs by full-reorthogonalization Lanczos. With
/// largest_magnitude both spectral ends come from one Krylov space and are
/// merged by |lambda|. Residuals are recomputed against the operator; a
/// result that misses the tolerance is returned with converged = false.
SpectralSummary lanczos_topk(const SymmetricOperator& op, std::size_t k, Which which,
                             const LanczosOptions& options = {});
SpectralSummary lanczos_topk(const SampledMatrix& m, std::size_t k, Which which,
                             const LanczosOptions& options = {});

struct ExtremePairs {
  SpectralSummary top;     ///< k_top largest, descending
  SpectralSummary bottom;  ///< k_bottom smallest, descending
};

/// Largest and smallest algebraic eigenpairs from a single Lanczos run.
ExtremePairs lanczos_extremes(const SymmetricOperator& op, std::size_t k_top,
                              std::size_t k_bottom, const LanczosOptions& options = {});

/// F(x) = 1/2 + x sqrt(4 - x^2) / (4 pi) + asin(x / 2) / pi on [-2, 2].
double semicircle_cdf(double x);

/// Kolmogorov-Smirnov distance between the empirical law of lambda / scale
/// and the semicircle law.
double semicircle_ks(std::span<const double> eigenvalues, double scale);

enum class SubmatrixMode { exhaustive, successive };

/// Largest spectral radius over L x L principal submatrices: all of them
/// (exhaustive, refused with ConfigError when C(N, L) > max_subsets) or the N
/// cyclic index windows (successive).
double submatrix_rho(const DenseMatrix& h, std::size_t l, SubmatrixMode mode,
                     std::uint64_t max_subsets = 1000000);
double submatrix_rho(const SampledMatrix& m, std::size_t l, SubmatrixMode mode,
                     std::uint64_t max_subsets = 1000000);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k);

/// CSV "rank,eigenvalue,residual" (residual empty when absent).
void write_spectrum_csv(const SpectralSummary& s, std::ostream& out);
/// CSV with one column per stored eigenvector.
void write_eigenvectors_csv(const SpectralSummary& s, std::ostream& out);

}  // namespace htband
