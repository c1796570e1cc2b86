#include "htband/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "htband/errors.hpp"

namespace htband {
namespace {

inline double pythag(double a, double b) {
  const double r = std::sqrt(a * a + b * b);
  if (!std::isfinite(r) || r < 1e-150) return std::hypot(a, b);
  return r;
}

// Implicit-shift QL on a tridiagonal matrix. `rotate(i, s, c)` is invoked
// for each plane rotation acting on columns i and i+1.
template <class Rotate>
void ql_sweeps(std::vector<double>& d, std::vector<double>& e, Rotate&& rotate) {
  const std::size_t n = d.size();
  if (n == 0) return;
  if (e.size() != n) throw DomainError("tridiagonal_ql: diag/off size mismatch");
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t budget = 30 * n;

  for (std::size_t l = 0; l < n; ++l) {
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (budget-- == 0) {
          throw NumericError("QL iteration did not converge", l);
        }
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = pythag(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool early_exit = false;
        for (std::size_t ii = m; ii-- > l;) {
          double f = s * e[ii];
          const double b = c * e[ii];
          r = pythag(f, g);
          e[ii + 1] = r;
          if (r == 0.0) {
            d[ii + 1] -= p;
            e[m] = 0.0;
            early_exit = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[ii + 1] - p;
          r = (d[ii] - g) * s + 2.0 * c * b;
          p = s * r;
          d[ii + 1] = g + p;
          g = c * r - b;
          rotate(ii, s, c);
        }
        if (early_exit) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

bool DenseMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) return false;
    }
  }
  return true;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) throw BoundsError("DenseMatrix::multiply: size mismatch");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) y[i] = dot(row(i), x);
  return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  if (other.n_ != n_) throw BoundsError("DenseMatrix::multiply: size mismatch");
  DenseMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < n_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      axpy(a, other.row(k), dst);
    }
  }
  return out;
}

DenseMatrix DenseMatrix::principal_submatrix(std::span<const std::size_t> idx) const {
  DenseMatrix sub(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = (*this)(idx[a], idx[b]);
  }
  return sub;
}

double DenseMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

double DenseMatrix::max_abs_row_sum() const {
  double best = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (double v : row(i)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, DenseMatrix* z) {
  if (z == nullptr) {
    ql_sweeps(d, e, [](std::size_t, double, double) {});
    return;
  }
  const std::size_t n = z->size();
  ql_sweeps(d, e, [&](std::size_t i, double s, double c) {
    for (std::size_t k = 0; k < n; ++k) {
      double* row = z->row(k).data();
      const double f = row[i + 1];
      row[i + 1] = s * row[i] + c * f;
      row[i] = c * row[i] - s * f;
    }
  });
}

void tridiagonal_ql_rows(std::vector<double>& d, std::vector<double>& e,
                         std::vector<std::vector<double>>& rows) {
  ql_sweeps(d, e, [&](std::size_t i, double s, double c) {
    for (auto& row : rows) {
      const double f = row[i + 1];
      row[i + 1] = s * row[i] + c * f;
      row[i] = c * row[i] - s * f;
    }
  });
}

void householder_tridiagonalize(DenseMatrix& z, std::vector<double>& d,
                                std::vector<double>& e, bool want_vectors) {
  const std::size_t n = z.size();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  if (n == 0) return;

  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    double* u = z.row(i).data();
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k < i; ++k) scale += std::abs(u[k]);
      if (scale == 0.0) {
        e[i] = u[l];
      } else {
        for (std::size_t k = 0; k < i; ++k) {
          u[k] /= scale;
          h += u[k] * u[k];
        }
        double f = u[l];
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        u[l] = f - g;
        if (want_vectors) {
          for (std::size_t j = 0; j < i; ++j) z(j, i) = u[j] / h;
        }
        // p = A u using the lower triangle (rows j < i, columns k <= j).
        std::fill(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
        for (std::size_t j = 0; j < i; ++j) {
          const double* a = z.row(j).data();
          const double uj = u[j];
          double acc = 0.0;
          for (std::size_t k = 0; k < j; ++k) {
            acc += a[k] * u[k];
            e[k] += a[k] * uj;
          }
          e[j] += acc + a[j] * uj;
        }
        f = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
          e[j] /= h;
          f += e[j] * u[j];
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j < i; ++j) {
          f = u[j];
          g = e[j] - hh * f;
          e[j] = g;
          double* a = z.row(j).data();
          for (std::size_t k = 0; k <= j; ++k) a[k] -= (f * e[k] + g * u[k]);
        }
      }
    } else {
      e[i] = u[l];
    }
    d[i] = h;
  }

  if (want_vectors) d[0] = 0.0;
  e[0] = 0.0;
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (want_vectors) {
      if (d[i] != 0.0) {
        // g_j = sum_k z(i,k) z(k,j); then z(k,j) -= g_j z(k,i), for j,k < i.
        std::fill(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
        for (std::size_t k = 0; k < i; ++k) {
          const double zik = z(i, k);
          const double* zk = z.row(k).data();
          for (std::size_t j = 0; j < i; ++j) g[j] += zik * zk[j];
        }
        for (std::size_t k = 0; k < i; ++k) {
          double* zk = z.row(k).data();
          const double zki = zk[i];
          for (std::size_t j = 0; j < i; ++j) zk[j] -= g[j] * zki;
        }
      }
      d[i] = z(i, i);
      z(i, i) = 1.0;
      for (std::size_t j = 0; j < i; ++j) {
        z(j, i) = 0.0;
        z(i, j) = 0.0;
      }
    } else {
      d[i] = z(i, i);
    }
  }
}

SymmetricEigen symmetric_eigen(DenseMatrix a, bool want_vectors) {
  const std::size_t n = a.size();
  std::vector<double> d;
  std::vector<double> e;
  householder_tridiagonalize(a, d, e, want_vectors);
  tridiagonal_ql(d, e, want_vectors ? &a : nullptr);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
  SymmetricEigen out;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = d[order[k]];
  if (want_vectors) {
    out.vectors = DenseMatrix(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < n; ++k) out.vectors(r, k) = a(r, order[k]);
    }
  }
  return out;
}

double spectral_radius(const DenseMatrix& a) {
  if (a.size() == 0) return 0.0;
  const auto eig = symmetric_eigen(a, false);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

}  // namespace htband
