#include "htband/ensemble.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "htband/errors.hpp"
#include "htband/rng.hpp"

namespace htband {
namespace {

constexpr std::uint64_t kSampleStream = 0x5a3d1e;
constexpr char kBinaryMagic[4] = {'H', 'T', 'B', 'M'};
constexpr std::uint32_t kBinaryVersion = 1;

double n_pow_mu(std::size_t n, double mu) { return std::pow(static_cast<double>(n), mu); }

}  // namespace

const char* to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::band:
      return "band";
    case PatternKind::cyclic_band:
      return "cyclic_band";
    case PatternKind::custom_mask:
      return "custom_mask";
  }
  return "?";
}

PatternKind pattern_kind_from_string(const std::string& name) {
  if (name == "band") return PatternKind::band;
  if (name == "cyclic_band" || name == "cyclic") return PatternKind::cyclic_band;
  if (name == "custom_mask" || name == "custom") return PatternKind::custom_mask;
  throw ConfigError("unknown pattern kind '" + name + "'");
}

double BandPattern::d_n() const { return a_n_ * n_pow_mu(n_, mu_); }

std::size_t BandPattern::exceptional_rows() const {
  const std::size_t top = row_counts_.empty()
                              ? 0
                              : *std::max_element(row_counts_.begin(), row_counts_.end());
  return static_cast<std::size_t>(
      std::count_if(row_counts_.begin(), row_counts_.end(),
                    [top](std::size_t c) { return c < top; }));
}

std::optional<std::size_t> BandPattern::find(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (j >= n_) return std::nullopt;
  const Position key{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
  auto it = std::lower_bound(upper_.begin(), upper_.end(), key);
  if (it == upper_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - upper_.begin());
}

bool BandPattern::contains(std::size_t i, std::size_t j) const { return find(i, j).has_value(); }

void BandPattern::finalize() {
  row_counts_.assign(n_, 0);
  for (const auto& p : upper_) {
    ++row_counts_[p.i];
    if (p.i != p.j) ++row_counts_[p.j];
  }
  const std::size_t top =
      row_counts_.empty() ? 0 : *std::max_element(row_counts_.begin(), row_counts_.end());
  a_n_ = static_cast<double>(top) / n_pow_mu(n_, mu_);
}

PatternPtr build_pattern(std::size_t n, double mu, PatternKind kind) {
  if (n < 2) throw ConfigError("pattern dimension must be at least 2");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("pattern too large");
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1]");
  if (kind == PatternKind::custom_mask) {
    throw ConfigError("custom masks are built with custom_pattern");
  }
  auto p = std::make_shared<BandPattern>();
  p->n_ = n;
  p->mu_ = mu;
  p->kind_ = kind;
  // Guard against N^mu landing just below an even integer through rounding.
  const double half = n_pow_mu(n, mu) / 2.0;
  std::size_t w = static_cast<std::size_t>(std::floor(half * (1.0 + 1e-12)));
  w = std::min(w, n / 2);
  p->half_width_ = w;

  const std::size_t per_row = std::min(2 * w + 1, n);
  p->upper_.reserve(n * (w + 1));
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == PatternKind::band) {
      const std::size_t hi = std::min(n - 1, i + w);
      for (std::size_t j = i; j <= hi; ++j) {
        p->upper_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      }
    } else {
      for (std::size_t j = i; j < n; ++j) {
        const std::size_t d = j - i;
        if (std::min(d, n - d) <= w) {
          p->upper_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        }
      }
    }
  }
  p->finalize();
  if (kind == PatternKind::cyclic_band) {
    for (std::size_t c : p->row_counts_) {
      if (c != per_row) throw InvariantViolation("cyclic band row count mismatch");
    }
  }
  return p;
}

PatternPtr custom_pattern(std::size_t n, double mu, std::vector<Position> positions,
                          bool validate) {
  if (n < 1) throw ConfigError("pattern dimension must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1]");
  for (auto& pos : positions) {
    if (pos.i >= n || pos.j >= n) throw BoundsError("mask position outside the matrix");
    if (pos.i > pos.j) std::swap(pos.i, pos.j);
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  auto p = std::make_shared<BandPattern>();
  p->n_ = n;
  p->mu_ = mu;
  p->kind_ = PatternKind::custom_mask;
  p->upper_ = std::move(positions);
  p->finalize();
  if (validate) {
    const std::size_t bad = p->exceptional_rows();
    const double allowed = n > 2 ? static_cast<double>(n) / std::log(static_cast<double>(n)) : 0.0;
    if (static_cast<double>(bad) > allowed) {
      throw ValidationError("custom mask: " + std::to_string(bad) +
                                " rows fall short of the common row count",
                            bad);
    }
  }
  return p;
}

SampledMatrix::SampledMatrix(PatternPtr pattern, std::vector<double> values,
                             std::optional<TailLaw> law, std::uint64_t seed,
                             std::uint64_t replica_index)
    : pattern_(std::move(pattern)),
      values_(std::move(values)),
      law_(std::move(law)),
      seed_(seed),
      replica_index_(replica_index) {
  if (!pattern_) throw ConfigError("matrix requires a pattern");
  if (values_.size() != pattern_->upper().size()) {
    throw BoundsError("value count does not match the pattern");
  }
}

double SampledMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n() || j >= n()) throw BoundsError("matrix index out of range");
  const auto idx = pattern_->find(i, j);
  return idx ? values_[*idx] : 0.0;
}

DenseMatrix SampledMatrix::to_dense() const {
  DenseMatrix d(n());
  const auto& up = pattern_->upper();
  for (std::size_t k = 0; k < up.size(); ++k) d.set_symmetric(up[k].i, up[k].j, values_[k]);
  return d;
}

double SampledMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SampledMatrix from_dense(PatternPtr pattern, const DenseMatrix& dense) {
  if (dense.size() != pattern->n()) throw BoundsError("dense size does not match the pattern");
  const auto& up = pattern->upper();
  std::vector<double> values(up.size());
  for (std::size_t k = 0; k < up.size(); ++k) values[k] = dense(up[k].i, up[k].j);
  return SampledMatrix(std::move(pattern), std::move(values));
}

SampledMatrix sample_matrix(PatternPtr pattern, const TailLaw& law, std::uint64_t seed,
                            std::uint64_t replica_index) {
  Rng rng(derive_seed(seed, kSampleStream, replica_index));
  std::vector<double> values(pattern->upper().size());
  for (double& v : values) v = law.entry_from_bits(rng());
  return SampledMatrix(std::move(pattern), std::move(values), law, seed, replica_index);
}

SymmetricOperator::SymmetricOperator(const SampledMatrix& m) : n_(m.n()) {
  const auto& pat = m.pattern();
  const double stored = 2.0 * static_cast<double>(pat.upper().size());
  dense_ = stored >= 0.25 * static_cast<double>(n_) * static_cast<double>(n_);
  const auto& up = pat.upper();
  const auto vals = m.values();
  if (dense_) {
    values_.assign(n_ * n_, 0.0);
    for (std::size_t k = 0; k < up.size(); ++k) {
      values_[up[k].i * n_ + up[k].j] = vals[k];
      values_[up[k].j * n_ + up[k].i] = vals[k];
    }
    return;
  }
  row_ptr_.assign(n_ + 1, 0);
  for (std::size_t i = 0; i < n_; ++i) row_ptr_[i + 1] = row_ptr_[i] + pat.row_count(i);
  values_.resize(row_ptr_[n_]);
  cols_.resize(row_ptr_[n_]);
  std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
  // Upper positions are sorted by (i, j), so each row receives its lower
  // neighbours (as mirrors) before its own upper part: columns stay sorted.
  for (std::size_t k = 0; k < up.size(); ++k) {
    const std::size_t i = up[k].i;
    const std::size_t j = up[k].j;
    values_[fill[i]] = vals[k];
    cols_[fill[i]++] = static_cast<std::uint32_t>(j);
    if (i != j) {
      values_[fill[j]] = vals[k];
      cols_[fill[j]++] = static_cast<std::uint32_t>(i);
    }
  }
}

SymmetricOperator::SymmetricOperator(const DenseMatrix& m)
    : n_(m.size()), dense_(true), values_(m.data()) {}

void SymmetricOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw BoundsError("operator size mismatch");
  if (dense_) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = values_.data() + i * n_;
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[cols_[k]];
    y[i] = s;
  }
}

RankedEntries largest_entries(const SampledMatrix& m, std::size_t k) {
  const auto& up = m.pattern().upper();
  const auto vals = m.values();
  if (k > up.size()) throw BoundsError("largest_entries: k exceeds the number of entries");
  std::vector<std::size_t> idx(up.size());
  for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = t;
  // Index order equals (i, j) order, so a lower index wins ties.
  auto before = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(vals[a]);
    const double mb = std::abs(vals[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  RankedEntries out;
  out.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    const double v = vals[idx[t]];
    out.push_back({up[idx[t]].i, up[idx[t]].j, v, std::abs(v), v < 0.0 ? -1 : 1});
  }
  return out;
}

RowTailSum row_tail_sum(const SampledMatrix& m, double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("row_tail_sum requires threshold >= 0");
  RowTailSum out;
  out.per_row.assign(m.n(), 0.0);
  const auto& up = m.pattern().upper();
  const auto vals = m.values();
  for (std::size_t k = 0; k < up.size(); ++k) {
    const double a = std::abs(vals[k]);
    if (!(a > threshold)) continue;
    out.per_row[up[k].i] += a;
    if (up[k].i != up[k].j) out.per_row[up[k].j] += a;
  }
  for (double s : out.per_row) out.max = std::max(out.max, s);
  return out;
}

Claim31Diagnostics claim31_diagnostics(const SampledMatrix& m, double eta) {
  if (!(eta > 0.0)) throw DomainError("claim31_diagnostics requires eta > 0");
  if (!m.law()) throw ConfigError("claim31_diagnostics needs the matrix's entry law");
  const double mu = m.pattern().mu();
  Claim31Diagnostics d;
  d.b = b_n(*m.law(), m.pattern().independent_entry_count());
  d.row_threshold = std::pow(d.b, (1.0 + 2.0 * mu) / (2.0 * (1.0 + mu)) + eta);
  d.diagonal_threshold = std::pow(d.b, 1.0 / (1.0 + mu) + eta);

  std::vector<std::uint8_t> large(m.n(), 0);
  const auto& up = m.pattern().upper();
  const auto vals = m.values();
  for (std::size_t k = 0; k < up.size(); ++k) {
    const double a = std::abs(vals[k]);
    const std::size_t i = up[k].i;
    const std::size_t j = up[k].j;
    if (i == j && a > d.diagonal_threshold) d.large_diagonal = true;
    if (a > d.row_threshold) {
      if (++large[i] >= 2) d.two_large_per_row = true;
      if (i != j && ++large[j] >= 2) d.two_large_per_row = true;
    }
  }
  return d;
}

void write_matrix_text(const SampledMatrix& m, std::ostream& out) {
  const auto& pat = m.pattern();
  out << "# htband matrix v1\n";
  out << "# n " << pat.n() << "\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%a", pat.mu());
  out << "# mu " << buf << "\n";
  out << "# kind " << to_string(pat.kind()) << "\n";
  out << "# seed " << m.seed() << "\n";
  out << "# replica " << m.replica_index() << "\n";
  const auto& up = pat.upper();
  const auto vals = m.values();
  for (std::size_t k = 0; k < up.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", up[k].i + 1, up[k].j + 1, vals[k]);
    out << buf;
  }
}

namespace {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ValidationError("truncated binary matrix");
  return v;
}

struct RawEntry {
  std::size_t i;
  std::size_t j;
  double v;
};

SampledMatrix assemble(std::size_t n, double mu, PatternKind kind, std::uint64_t seed,
                       std::uint64_t replica, const std::vector<RawEntry>& entries) {
  std::map<std::pair<std::size_t, std::size_t>, double> upper;
  for (const auto& e : entries) {
    if (e.i >= n || e.j >= n) throw ValidationError("matrix entry index out of range", 1);
    const auto key = std::minmax(e.i, e.j);
    auto [it, inserted] = upper.emplace(std::make_pair(key.first, key.second), e.v);
    if (!inserted && it->second != e.v) {
      throw ValidationError("matrix is not symmetric at (" + std::to_string(e.i + 1) + ", " +
                                std::to_string(e.j + 1) + ")",
                            1);
    }
  }
  PatternPtr pattern;
  if (kind == PatternKind::custom_mask) {
    std::vector<Position> pos;
    pos.reserve(upper.size());
    for (const auto& [key, v] : upper) {
      pos.push_back({static_cast<std::uint32_t>(key.first), static_cast<std::uint32_t>(key.second)});
    }
    pattern = custom_pattern(n, mu, std::move(pos), false);
  } else {
    pattern = build_pattern(n, mu, kind);
  }
  std::vector<double> values(pattern->upper().size(), 0.0);
  std::size_t off_pattern = 0;
  for (const auto& [key, v] : upper) {
    const auto idx = pattern->find(key.first, key.second);
    if (!idx) {
      ++off_pattern;
      continue;
    }
    values[*idx] = v;
  }
  if (off_pattern > 0) {
    throw ValidationError(std::to_string(off_pattern) + " entries lie outside the pattern",
                          off_pattern);
  }
  return SampledMatrix(std::move(pattern), std::move(values), std::nullopt, seed, replica);
}

SampledMatrix read_text(std::istream& in) {
  std::size_t n = 0;
  double mu = 1.0;
  PatternKind kind = PatternKind::custom_mask;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  bool have_n = false;
  std::vector<RawEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash;
      std::string key;
      std::string value;
      ls >> hash >> key >> value;
      if (key == "n") {
        n = std::stoull(value);
        have_n = true;
      } else if (key == "mu") {
        mu = std::strtod(value.c_str(), nullptr);
      } else if (key == "kind") {
        kind = pattern_kind_from_string(value);
      } else if (key == "seed") {
        seed = std::stoull(value);
      } else if (key == "replica") {
        replica = std::stoull(value);
      }
      continue;
    }
    std::size_t i = 0;
    std::size_t j = 0;
    std::string value;
    if (!(ls >> i >> j >> value) || i == 0 || j == 0) {
      throw ValidationError("malformed matrix line: " + line, 1);
    }
    entries.push_back({i - 1, j - 1, std::strtod(value.c_str(), nullptr)});
  }
  if (!have_n) throw ValidationError("matrix file lacks an '# n' header");
  return assemble(n, mu, kind, seed, replica, entries);
}

}  // namespace

void write_matrix_binary(const SampledMatrix& m, std::ostream& out) {
  const auto& pat = m.pattern();
  out.write(kBinaryMagic, 4);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint64_t>(out, pat.n());
  put<double>(out, pat.mu());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(pat.kind()));
  put<std::uint64_t>(out, m.seed());
  put<std::uint64_t>(out, m.replica_index());
  put<std::uint64_t>(out, pat.upper().size());
  const auto vals = m.values();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    put<std::uint32_t>(out, pat.upper()[k].i);
    put<std::uint32_t>(out, pat.upper()[k].j);
    put<double>(out, vals[k]);
  }
}

SampledMatrix read_matrix(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kBinaryMagic, 4) == 0) {
    const auto version = get<std::uint32_t>(in);
    if (version != kBinaryVersion) throw IntegrityError("unsupported binary matrix version");
    const auto n = get<std::uint64_t>(in);
    const auto mu = get<double>(in);
    const auto kind_raw = get<std::uint32_t>(in);
    if (kind_raw > 2) throw ValidationError("unknown pattern kind in binary matrix");
    const auto seed = get<std::uint64_t>(in);
    const auto replica = get<std::uint64_t>(in);
    const auto count = get<std::uint64_t>(in);
    std::vector<RawEntry> entries;
    entries.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto i = get<std::uint32_t>(in);
      const auto j = get<std::uint32_t>(in);
      const auto v = get<double>(in);
      entries.push_back({i, j, v});
    }
    return assemble(n, mu, static_cast<PatternKind>(kind_raw), seed, replica, entries);
  }
  in.clear();
  in.seekg(0);
  return read_text(in);
}

}  // namespace htband
