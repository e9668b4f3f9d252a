#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opcalc {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

/// Raised when an input lies outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative numerical procedure fails to reach its target.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Global tolerances for Hermitian / unitary input checks.
struct Tolerances {
  double herm = 1e-10;
  double unit = 1e-10;
};

inline Tolerances& tolerances() {
  static Tolerances t;
  return t;
}

/**
 * Dense square complex matrix, row-major.
 *
 * The ambient representation for every operator in the library. Sizes are
 * small (N <= 256), so operations are written as plain loops.
 */
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n), data_(n * n, Complex{}) {}
  Matrix(std::size_t n, std::vector<Complex> entries) : n_(n), data_(std::move(entries)) {
    if (data_.size() != n * n) throw std::invalid_argument("Matrix: entry count does not match dim");
  }
  Matrix(std::initializer_list<std::initializer_list<Complex>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& r : rows) {
      if (r.size() != n_) throw std::invalid_argument("Matrix: rows must be square");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(std::span<const Complex> d) {
    Matrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const { return n_; }
  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

  Matrix adjoint() const {
    Matrix r(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  Complex trace() const {
    Complex s{};
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(Complex s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator-(Matrix a) { return a *= -1.0; }
  friend Matrix operator*(Matrix a, Complex s) { return a *= s; }
  friend Matrix operator*(Complex s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    a.check_same(b);
    const std::size_t n = a.n_;
    Matrix r(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        const Complex* brow = &b.data_[k * n];
        Complex* rrow = &r.data_[i * n];
        for (std::size_t j = 0; j < n; ++j) rrow[j] += aik * brow[j];
      }
    return r;
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same(const Matrix& o) const {
    if (o.n_ != n_) throw std::invalid_argument("Matrix: dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<Complex> data_;
};

inline Matrix adjoint(const Matrix& m) { return m.adjoint(); }

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (const auto& z : m.data()) s += std::norm(z);
  return std::sqrt(s);
}

inline double max_abs(const Matrix& m) {
  double s = 0.0;
  for (const auto& z : m.data()) s = std::max(s, std::abs(z));
  return s;
}

/// Rectangular product helpers used when restricting to subspaces: Q is N x r stored column-major
/// as r column vectors of length N.
using ColumnBasis = std::vector<std::vector<Complex>>;

/// Q^* X Q for an orthonormal column basis Q.
inline Matrix compress_to(const Matrix& x, const ColumnBasis& q) {
  const std::size_t n = x.dim(), r = q.size();
  std::vector<std::vector<Complex>> xq(r, std::vector<Complex>(n));
  for (std::size_t c = 0; c < r; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      Complex s{};
      for (std::size_t k = 0; k < n; ++k) s += x(i, k) * q[c][k];
      xq[c][i] = s;
    }
  Matrix out(r);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < r; ++b) {
      Complex s{};
      for (std::size_t i = 0; i < n; ++i) s += std::conj(q[a][i]) * xq[b][i];
      out(a, b) = s;
    }
  return out;
}

/// Q Y Q^*: embeds an operator on span(Q) back into the ambient space, zero on the complement.
inline Matrix embed_from(const Matrix& y, const ColumnBasis& q, std::size_t n) {
  const std::size_t r = q.size();
  Matrix out(n);
  if (r == 0) return out;
  std::vector<std::vector<Complex>> qy(n, std::vector<Complex>(r));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < r; ++b) {
      Complex s{};
      for (std::size_t a = 0; a < r; ++a) s += q[a][i] * y(a, b);
      qy[i][b] = s;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Complex s{};
      for (std::size_t b = 0; b < r; ++b) s += qy[i][b] * std::conj(q[b][j]);
      out(i, j) = s;
    }
  return out;
}

/// Gauss-Jordan inversion with partial pivoting.
inline Matrix matrix_inverse(const Matrix& m) {
  const std::size_t n = m.dim();
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  const double scale = std::max(max_abs(m), std::numeric_limits<double>::min());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) <= 1e-14 * scale)
      throw NumericError("matrix_inverse: matrix is numerically singular", std::abs(a(piv, col)));
    if (piv != col)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(piv, j), a(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    const Complex d = 1.0 / a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) *= d;
      inv(col, j) *= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const Complex f = a(r, col);
      if (f == Complex{}) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

/// Eigenvalues (ascending) + unitary eigenvector matrix of a normal operator.
struct SpectralDecomposition {
  std::vector<Complex> eigenvalues;
  Matrix vectors;  // columns are eigenvectors
  double residual = 0.0;

  std::size_t dim() const { return eigenvalues.size(); }

  /// Rank-one spectral projection onto the i-th eigenvector.
  Matrix projection(std::size_t i) const {
    const std::size_t n = dim();
    Matrix p(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) p(r, c) = vectors(r, i) * std::conj(vectors(c, i));
    return p;
  }
};

namespace detail {

inline double offdiag_frobenius(const Matrix& a) {
  double s = 0.0;
  const std::size_t n = a.dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

inline double reconstruction_residual(const Matrix& m, const SpectralDecomposition& d) {
  const std::size_t n = m.dim();
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      Complex v{};
      for (std::size_t k = 0; k < n; ++k) v += d.vectors(r, k) * d.eigenvalues[k] * std::conj(d.vectors(c, k));
      s += std::norm(m(r, c) - v);
    }
  return std::sqrt(s);
}

inline constexpr int kMaxSweeps = 60;

/// Cyclic complex Jacobi on (H + H^*)/2. Returns eigenvalues sorted ascending.
inline SpectralDecomposition jacobi_eig(const Matrix& h_in) {
  const std::size_t n = h_in.dim();
  Matrix a = h_in + h_in.adjoint();
  a *= 0.5;
  const Matrix sym = a;
  Matrix v = Matrix::identity(n);
  const double norm_f = frobenius_norm(a);
  const double threshold = 1e-14 * norm_f;

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_frobenius(a) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double g = std::abs(apq);
        if (g == 0.0) continue;
        const double app = a(p, p).real(), aqq = a(q, q).real();
        // Negligible relative to both diagonal entries: zero it out.
        if (sweep > 3 && std::abs(app) + 1e3 * g == std::abs(app) && std::abs(aqq) + 1e3 * g == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const Complex ph = apq / g;  // e^{i phi}
        const double theta = (aqq - app) / (2.0 * g);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // J = diag(1, conj(ph)) * [[c, s], [-s, c]]
        const Complex jpp = c, jpq = s, jqp = -s * std::conj(ph), jqq = c * std::conj(ph);
        for (std::size_t k = 0; k < n; ++k) {  // A <- A J
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A <- J^* A
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {  // V <- V J
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
  }
  const double off = offdiag_frobenius(a);
  if (off > threshold && sweep >= kMaxSweeps)
    throw NumericError("herm_eig: Jacobi did not converge within 60 sweeps", off);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.vectors = Matrix(n);
  for (std::size_t c = 0; c < n; ++c) {
    d.eigenvalues[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) d.vectors(r, c) = v(r, order[c]);
  }
  d.residual = reconstruction_residual(sym, d);
  return d;
}

}  // namespace detail

/// Largest singular value, from the top eigenvalue of X^*X.
inline double operator_norm(const Matrix& x) {
  if (x.dim() == 0) return 0.0;
  const auto d = detail::jacobi_eig(x.adjoint() * x);
  return std::sqrt(std::max(0.0, d.eigenvalues.back().real()));
}

/// Singular values (descending) via eigenvalues of X^*X, clamped at zero.
inline std::vector<double> singular_values(const Matrix& x) {
  const auto d = detail::jacobi_eig(x.adjoint() * x);
  std::vector<double> s;
  s.reserve(d.dim());
  for (auto it = d.eigenvalues.rbegin(); it != d.eigenvalues.rend(); ++it)
    s.push_back(std::sqrt(std::max(0.0, it->real())));
  return s;
}

/// Schatten order p > 0. Values p < 1 give the quasi-norm.
class SchattenOrder {
 public:
  explicit SchattenOrder(double p) : p_(p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("SchattenOrder: p must be a finite positive real");
  }
  double value() const { return p_; }
  bool is_quasi() const { return p_ < 1.0; }

 private:
  double p_;
};

inline double schatten_norm(const Matrix& x, SchattenOrder p) {
  const double pv = p.value();
  double s = 0.0;
  for (double sigma : singular_values(x))
    if (sigma > 0.0) s += std::pow(sigma, pv);
  return s == 0.0 ? 0.0 : std::pow(s, 1.0 / pv);
}
inline double schatten_norm(const Matrix& x, double p) { return schatten_norm(x, SchattenOrder(p)); }

/// ||M - M^*||_op <= tol ||M||_op, with a cheap Frobenius pre-check.
inline bool is_hermitian(const Matrix& m, double tol) {
  const Matrix diff = m - m.adjoint();
  const double fd = frobenius_norm(diff);
  const double fm = frobenius_norm(m);
  const double n = static_cast<double>(std::max<std::size_t>(1, m.dim()));
  if (fd <= tol * fm / std::sqrt(n)) return true;
  return operator_norm(diff) <= tol * operator_norm(m);
}

inline bool is_unitary(const Matrix& m, double tol) {
  const Matrix e = m.adjoint() * m - Matrix::identity(m.dim());
  if (frobenius_norm(e) <= tol) return true;
  return operator_norm(e) <= tol;
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
inline SpectralDecomposition herm_eig(const Matrix& h) {
  if (h.dim() == 0) throw DomainError("herm_eig: empty matrix");
  if (!h.all_finite()) throw DomainError("herm_eig: non-finite entries");
  if (!is_hermitian(h, tolerances().herm)) throw DomainError("herm_eig: input is not Hermitian within tolerance");
  auto d = detail::jacobi_eig(h);
  d.residual = detail::reconstruction_residual(h, d);
  return d;
}

/// Cayley transform eta(x) = (x + i)/(x - i), mapping R onto T \ {1}.
inline Complex cayley(Complex x) { return (x + kI) / (x - kI); }

/// Inverse Cayley transform i (z + 1)/(z - 1). Pole at z = 1.
inline Complex cayley_inverse(Complex z) {
  if (std::abs(z - 1.0) == 0.0) throw DomainError("cayley_inverse: pole at z = 1");
  return kI * (z + 1.0) / (z - 1.0);
}

namespace detail {

/// Minimal distance from e^{i theta} to a set of unit-circle points.
inline double circle_gap(double theta, std::span<const Complex> pts) {
  const Complex w = std::polar(1.0, theta);
  double g = std::numeric_limits<double>::infinity();
  for (const auto& z : pts) g = std::min(g, std::abs(z - w));
  return g;
}

/// Angle among 720 equispaced candidates maximizing the distance to pts.
inline std::pair<double, double> best_rotation(std::span<const Complex> pts) {
  double best = 0.0, best_gap = -1.0;
  for (int k = 0; k < 720; ++k) {
    const double th = 2.0 * kPi * k / 720.0;
    const double g = circle_gap(th, pts);
    if (g > best_gap) {
      best_gap = g;
      best = th;
    }
  }
  return {best, best_gap};
}

/// Completes a unitary eigendecomposition from an orthonormal eigenbasis: Rayleigh quotients
/// normalized to the unit circle, sorted by principal argument.
inline SpectralDecomposition finish_unitary(const Matrix& u, const Matrix& w) {
  const std::size_t n = u.dim();
  const Matrix uw = u * w;
  std::vector<Complex> lam(n);
  for (std::size_t c = 0; c < n; ++c) {
    Complex s{};
    for (std::size_t r = 0; r < n; ++r) s += std::conj(w(r, c)) * uw(r, c);
    lam[c] = std::abs(s) > 0.0 ? s / std::abs(s) : Complex{1.0, 0.0};
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return std::arg(lam[x]) < std::arg(lam[y]); });
  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.vectors = Matrix(n);
  for (std::size_t c = 0; c < n; ++c) {
    d.eigenvalues[c] = lam[order[c]];
    for (std::size_t r = 0; r < n; ++r) d.vectors(r, c) = w(r, order[c]);
  }
  d.residual = reconstruction_residual(u, d);
  return d;
}

inline bool unitary_decomposition_ok(const Matrix& u, const SpectralDecomposition& d) {
  const double n = static_cast<double>(u.dim());
  return d.residual <= 1e-12 * n * std::max(frobenius_norm(u), 1.0);
}

}  // namespace detail

/**
 * Eigendecomposition of a unitary matrix through the Cayley transform.
 *
 * A rotation e^{i theta} is chosen away from the spectrum (proxy: the points e^{+-i acos c}
 * for c in the spectrum of the Hermitian part, a superset of the true spectrum). Then
 * A = eta^{-1}(e^{-i theta} U) is Hermitian and shares eigenvectors with U. If the gap test
 * fails, the commuting pair (U + U^*)/2, (U - U^*)/(2i) is diagonalized jointly instead.
 */
inline SpectralDecomposition unitary_eig(const Matrix& u) {
  const std::size_t n = u.dim();
  if (n == 0) throw DomainError("unitary_eig: empty matrix");
  if (!u.all_finite()) throw DomainError("unitary_eig: non-finite entries");
  if (!is_unitary(u, tolerances().unit)) throw DomainError("unitary_eig: input is not unitary within tolerance");

  const Matrix re_part = 0.5 * (u + u.adjoint());
  const Matrix im_part = Complex{0.0, -0.5} * (u - u.adjoint());
  const auto cos_d = detail::jacobi_eig(re_part);
  std::vector<Complex> proxy;
  for (const auto& c : cos_d.eigenvalues) {
    const double phi = std::acos(std::clamp(c.real(), -1.0, 1.0));
    proxy.push_back(std::polar(1.0, phi));
    proxy.push_back(std::polar(1.0, -phi));
  }
  const auto [theta, proxy_gap] = detail::best_rotation(proxy);
  constexpr double kMinGap = 1e-3;

  if (proxy_gap >= kMinGap) {
    const Complex rot = std::polar(1.0, -theta);
    const Matrix w = rot * u;
    const Matrix id = Matrix::identity(n);
    try {
      Matrix a = kI * ((w + id) * matrix_inverse(w - id));
      a = 0.5 * (a + a.adjoint());
      const auto ad = detail::jacobi_eig(a);
      auto d = detail::finish_unitary(u, ad.vectors);
      if (detail::circle_gap(theta, d.eigenvalues) >= kMinGap && detail::unitary_decomposition_ok(u, d)) return d;
    } catch (const NumericError&) {
      // fall through to the commuting-pair route
    }
  }

  // Generic real combination of the commuting Hermitian pair separates the joint eigenspaces.
  const Matrix combo = re_part + 0.5772156649015329 * im_part;
  const auto cd = detail::jacobi_eig(combo);
  auto d = detail::finish_unitary(u, cd.vectors);
  if (!detail::unitary_decomposition_ok(u, d))
    throw NumericError("unitary_eig: both Cayley and commuting-pair routes failed", d.residual);
  return d;
}

/// f(M) = W diag(f(lambda_i)) W^*.
template <class F>
Matrix apply_function(F&& f, const SpectralDecomposition& d) {
  const std::size_t n = d.dim();
  std::vector<Complex> fv(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex v;
    try {
      v = f(d.eigenvalues[i]);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "apply_function: evaluation failed at eigenvalue " << d.eigenvalues[i] << ": " << e.what();
      throw DomainError(os.str());
    }
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream os;
      os << "apply_function: non-finite value at eigenvalue " << d.eigenvalues[i];
      throw DomainError(os.str());
    }
    fv[i] = v;
  }
  Matrix out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      Complex s{};
      for (std::size_t k = 0; k < n; ++k) s += d.vectors(r, k) * fv[k] * std::conj(d.vectors(c, k));
      out(r, c) = s;
    }
  return out;
}

/// e^{iA} for Hermitian A.
inline Matrix expm_hermitian(const Matrix& a) {
  return apply_function([](Complex x) { return std::exp(kI * x.real()); }, herm_eig(a));
}

}  // namespace opcalc
