#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "htband/ensemble.hpp"
#include "htband/spectral.hpp"

namespace htband {

struct BestTail {
  double tail_mass = 0.0;            ///< 1 - mass on the support
  std::vector<std::size_t> support;  ///< ascending indices
};

/// Smallest mass outside any L-set, attained by the L largest |v_j|
/// (lower index first on ties). DomainError unless ||v|| = 1 within 1e-10.
BestTail best_tail(std::span<const double> v, std::size_t l);

struct WindowTail {
  double tail_mass = 0.0;
  std::size_t window_start = 0;  ///< window is {start, ..., start + L - 1} mod N
};

/// As best_tail, restricted to the N cyclic index windows of length L.
WindowTail successive_best_tail(std::span<const double> v, std::size_t l);

/// |<v, (e_i + sign e_j)/sqrt 2>|; i != j.
double two_coord_overlap(std::span<const double> v, std::size_t i, std::size_t j, int sign);

/// (sum v_j^4)^{-1} for a unit vector.
double participation_ratio(std::span<const double> v);

/// (rho_L + sqrt(eta) rho) / sqrt(1 - eta): no (L, eta)-localized eigenvector
/// has |lambda| above it. DomainError unless 0 <= eta < 1.
double localized_eigenvalue_bound(double rho_l, double rho, double eta);

/// Upper end of the c-window for the localized variant: (2/5) mu (alpha-2)/(alpha-1).
double localized_c_limit(double mu, double alpha);

struct LocalizationRecord {
  std::size_t k = 0;  ///< position in the summary (0-based)
  double lambda = 0.0;
  double best_tail = 0.0;
  std::vector<std::size_t> best_support;
  double successive_tail = 0.0;
  std::size_t window_start = 0;
  double participation_ratio = 0.0;
  /// Overlap with the predicted two-coordinate vector; negative when not supplied.
  double overlap = -1.0;
  bool flagged = false;             ///< (L, eta)-localized with |lambda| > sqrt(2 eta) rho, eta < eta0
  bool flagged_successive = false;  ///< same with the successive tail
};

struct LocalizationReport {
  double c = 0.0;
  double eta0 = 0.0;
  std::size_t l = 0;  ///< floor(N^c)
  double rho = 0.0;
  bool localized_variant = false;   ///< c below the localized-variant limit
  bool successive_variant = false;  ///< c < mu
  bool event = false;               ///< some applicable variant flagged a pair
  /// Only the computed pairs are scanned, never the full spectrum.
  std::size_t pairs_scanned = 0;
  std::vector<LocalizationRecord> records;
};

/// Scans the eigenpairs stored in each summary. rho is the largest |lambda|
/// seen by the summaries. ConfigError when c is outside both windows or
/// eta0 is not in (0, 1/2).
LocalizationReport delocalization_scan(std::span<const SpectralSummary* const> summaries,
                                       std::size_t n, double mu, double alpha, double c,
                                       double eta0);
LocalizationReport delocalization_scan(const SpectralSummary& summary, const SampledMatrix& m,
                                       double c, double eta0);

/// CSV "k,lambda,L,best_tail,successive_tail,participation_ratio,overlap".
void write_localization_csv(const LocalizationReport& report, std::ostream& out);

}  // namespace htband
