#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htband/heavy_tail.hpp"
#include "htband/linalg.hpp"

namespace htband {

enum class PatternKind { band, cyclic_band, custom_mask };

const char* to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string& name);

/// Upper-triangle position, 0-based, i <= j.
struct Position {
  std::uint32_t i;
  std::uint32_t j;
  friend bool operator==(const Position&, const Position&) = default;
  friend auto operator<=>(const Position&, const Position&) = default;
};

/// Sparsity mask B(N). Only the upper triangle plus diagonal is stored
/// (coordinate-sorted); membership is symmetric by construction.
class BandPattern {
 public:
  std::size_t n() const { return n_; }
  double mu() const { return mu_; }
  PatternKind kind() const { return kind_; }
  /// W; zero for custom masks.
  std::size_t half_width() const { return half_width_; }
  /// Realized density ratio: max row count / N^mu.
  double a_n() const { return a_n_; }
  /// a_n N^mu, the maximal row count.
  double d_n() const;
  /// Rows whose count is below d_n.
  std::size_t exceptional_rows() const;

  const std::vector<Position>& upper() const { return upper_; }
  std::uint64_t independent_entry_count() const { return upper_.size(); }
  std::size_t row_count(std::size_t i) const { return row_counts_.at(i); }
  const std::vector<std::size_t>& row_counts() const { return row_counts_; }
  bool contains(std::size_t i, std::size_t j) const;
  /// Index of (min(i,j), max(i,j)) in upper(), if present.
  std::optional<std::size_t> find(std::size_t i, std::size_t j) const;

 private:
  friend std::shared_ptr<const BandPattern> build_pattern(std::size_t, double, PatternKind);
  friend std::shared_ptr<const BandPattern> custom_pattern(std::size_t, double,
                                                           std::vector<Position>, bool);
  void finalize();

  std::size_t n_ = 0;
  double mu_ = 1.0;
  PatternKind kind_ = PatternKind::band;
  std::size_t half_width_ = 0;
  double a_n_ = 0.0;
  std::vector<Position> upper_;
  std::vector<std::size_t> row_counts_;
};

using PatternPtr = std::shared_ptr<const BandPattern>;

/// W = min(floor(N^mu / 2), floor(N / 2)); band keeps |i-j| <= W, cyclic
/// keeps min(|i-j|, N-|i-j|) <= W. Requires n >= 2 and mu in (0, 1].
PatternPtr build_pattern(std::size_t n, double mu, PatternKind kind);

/// Mask from explicit positions (either triangle; duplicates merged). With
/// `validate`, rejects masks where more than N / log N rows fall short of
/// the maximal row count.
PatternPtr custom_pattern(std::size_t n, double mu, std::vector<Position> positions,
                          bool validate = true);

/// One symmetric matrix on a pattern; values are parallel to
/// pattern().upper(). Immutable once built.
class SampledMatrix {
 public:
  SampledMatrix(PatternPtr pattern, std::vector<double> values,
                std::optional<TailLaw> law = std::nullopt, std::uint64_t seed = 0,
                std::uint64_t replica_index = 0);

  std::size_t n() const { return pattern_->n(); }
  const BandPattern& pattern() const { return *pattern_; }
  const PatternPtr& pattern_ptr() const { return pattern_; }
  std::span<const double> values() const { return values_; }
  const std::optional<TailLaw>& law() const { return law_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replica_index() const { return replica_index_; }

  /// a_ij (zero off the pattern).
  double at(std::size_t i, std::size_t j) const;
  DenseMatrix to_dense() const;
  /// Largest |entry|; 0 for an all-zero matrix.
  double max_abs() const;

 private:
  PatternPtr pattern_;
  std::vector<double> values_;
  std::optional<TailLaw> law_;
  std::uint64_t seed_;
  std::uint64_t replica_index_;
};

/// Matrix with the same pattern and the given dense values (only pattern
/// positions are read).
SampledMatrix from_dense(PatternPtr pattern, const DenseMatrix& dense);

/// Independent draws on the upper triangle plus diagonal, in coordinate
/// order, from a generator derived from (seed, replica_index).
SampledMatrix sample_matrix(PatternPtr pattern, const TailLaw& law, std::uint64_t seed,
                            std::uint64_t replica_index);

/// y = A x. Dense row-major storage above a fill ratio of 1/4, compressed
/// rows below; built once per matrix and reused by iterative solvers.
class SymmetricOperator {
 public:
  explicit SymmetricOperator(const SampledMatrix& m);
  explicit SymmetricOperator(const DenseMatrix& m);

  std::size_t n() const { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const;
  bool is_dense() const { return dense_; }

 private:
  std::size_t n_;
  bool dense_;
  std::vector<double> values_;
  std::vector<std::uint32_t> cols_;
  std::vector<std::size_t> row_ptr_;
};

struct RankedEntry {
  std::size_t i;
  std::size_t j;
  double value;
  double modulus;
  int sign;
};

/// Descending modulus; equal moduli ordered lexicographically on (i, j).
using RankedEntries = std::vector<RankedEntry>;

/// Top-k entries of the upper triangle. Throws BoundsError if k exceeds the
/// number of stored positions.
RankedEntries largest_entries(const SampledMatrix& m, std::size_t k);

struct RowTailSum {
  std::vector<double> per_row;  ///< sum_{j : |a_ij| > threshold} |a_ij|
  double max = 0.0;
};

RowTailSum row_tail_sum(const SampledMatrix& m, double threshold);

struct Claim31Diagnostics {
  bool two_large_per_row = false;
  bool large_diagonal = false;
  double row_threshold = 0.0;       ///< b^{(1+2mu)/(2(1+mu)) + eta}
  double diagonal_threshold = 0.0;  ///< b^{1/(1+mu) + eta}
  double b = 0.0;
};

/// Needs the matrix's law (ConfigError otherwise) and eta > 0.
Claim31Diagnostics claim31_diagnostics(const SampledMatrix& m, double eta);

/// Text coordinate format: '#' header lines carrying N, mu, kind, seed and
/// replica, then "i j value" per upper-triangle entry, 1-based.
void write_matrix_text(const SampledMatrix& m, std::ostream& out);
/// Binary format: "HTBM" magic, version, header fields, then (i, j, value).
void write_matrix_binary(const SampledMatrix& m, std::ostream& out);
/// Reads either format. Off-pattern or asymmetric input raises
/// ValidationError. Lower-triangle lines must agree with their mirror.
SampledMatrix read_matrix(std::istream& in);

}  // namespace htband
