#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "opcalc/functions.hpp"
#include "opcalc/linalg.hpp"
#include "opcalc/random.hpp"

namespace opcalc {

enum class PathFlavor { unitary, selfadjoint };

/**
 * Differentiable operator path t -> X(t).
 *
 * deriv(l, t) is the l-th derivative of the difference path t -> X(t) - X(0); for l >= 1 this is
 * the derivative of X itself, and deriv(0, t) = X(t) - X(0).
 */
class OperatorPath {
 public:
  virtual ~OperatorPath() = default;

  virtual PathFlavor flavor() const = 0;
  virtual int order() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual Matrix eval(double t) const = 0;

  Matrix deriv(int l, double t) const {
    if (l < 0 || l > order())
      throw DomainError(name() + ": derivative order " + std::to_string(l) + " exceeds order " +
                        std::to_string(order()));
    if (l == 0) return eval(t) - base();
    return deriv_impl(l, t);
  }

  Matrix base() const { return eval(0.0); }

 protected:
  virtual Matrix deriv_impl(int l, double t) const = 0;
};

using PathPtr = std::shared_ptr<const OperatorPath>;

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

inline Complex ipow(Complex z, int k) {
  Complex r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

/// W diag(g(lambda)) W^* for a Hermitian decomposition.
inline Matrix spectral_map(const SpectralDecomposition& d, const std::function<Complex(double)>& g) {
  return apply_function([&](Complex x) { return g(x.real()); }, d);
}

}  // namespace detail

/// U(t) = e^{itA} U_0.
class ExpPath : public OperatorPath {
 public:
  ExpPath(Matrix a, Matrix u0) : a_(std::move(a)), u0_(std::move(u0)), d_(herm_eig(a_)) {
    if (!is_unitary(u0_, tolerances().unit)) throw DomainError("ExpPath: base is not unitary");
    if (u0_.dim() != a_.dim()) throw DomainError("ExpPath: dimension mismatch");
  }

  PathFlavor flavor() const override { return PathFlavor::unitary; }
  int order() const override { return kSmoothOrder; }
  std::size_t dim() const override { return a_.dim(); }
  std::string name() const override { return "exp"; }
  Matrix eval(double t) const override { return factor(0, t) * u0_; }

  const Matrix& generator() const { return a_; }

  /// (iA)^l e^{itA}.
  Matrix factor(int l, double t) const {
    return detail::spectral_map(d_, [l, t](double x) { return detail::ipow(kI * x, l) * std::exp(kI * t * x); });
  }

 protected:
  Matrix deriv_impl(int l, double t) const override { return factor(l, t) * u0_; }

 private:
  Matrix a_, u0_;
  SpectralDecomposition d_;
};

/// A(t) = A_0 + t K.
class LinearSAPath : public OperatorPath {
 public:
  LinearSAPath(Matrix a0, Matrix k) : a0_(std::move(a0)), k_(std::move(k)) {
    if (a0_.dim() != k_.dim()) throw DomainError("LinearSAPath: dimension mismatch");
    if (!is_hermitian(a0_, tolerances().herm) || !is_hermitian(k_, tolerances().herm))
      throw DomainError("LinearSAPath: inputs must be Hermitian");
  }

  PathFlavor flavor() const override { return PathFlavor::selfadjoint; }
  int order() const override { return kSmoothOrder; }
  std::size_t dim() const override { return a0_.dim(); }
  std::string name() const override { return "linear_sa"; }
  Matrix eval(double t) const override { return a0_ + t * k_; }

 protected:
  Matrix deriv_impl(int l, double) const override { return l == 1 ? k_ : Matrix(dim()); }

 private:
  Matrix a0_, k_;
};

/// U(t) = e^{itA_1} e^{itA_2} U_0; derivatives by the Leibniz rule on the two factors.
class ProductExpPath : public OperatorPath {
 public:
  ProductExpPath(Matrix a1, Matrix a2, Matrix u0)
      : e1_(std::move(a1), Matrix::identity(u0.dim())), e2_(std::move(a2), Matrix::identity(u0.dim())),
        u0_(std::move(u0)) {
    if (!is_unitary(u0_, tolerances().unit)) throw DomainError("ProductExpPath: base is not unitary");
  }

  PathFlavor flavor() const override { return PathFlavor::unitary; }
  int order() const override { return kSmoothOrder; }
  std::size_t dim() const override { return u0_.dim(); }
  std::string name() const override { return "product_exp"; }
  Matrix eval(double t) const override { return e1_.factor(0, t) * e2_.factor(0, t) * u0_; }

 protected:
  Matrix deriv_impl(int l, double t) const override {
    Matrix s(dim());
    for (int j = 0; j <= l; ++j) s += detail::binomial(l, j) * (e1_.factor(j, t) * e2_.factor(l - j, t));
    return s * u0_;
  }

 private:
  ExpPath e1_, e2_;
  Matrix u0_;
};

/// U(t)^* for a unitary path.
class AdjointPath : public OperatorPath {
 public:
  explicit AdjointPath(PathPtr u) : u_(std::move(u)) {
    if (u_->flavor() != PathFlavor::unitary) throw DomainError("AdjointPath: needs a unitary path");
  }
  PathFlavor flavor() const override { return PathFlavor::unitary; }
  int order() const override { return u_->order(); }
  std::size_t dim() const override { return u_->dim(); }
  std::string name() const override { return "adj(" + u_->name() + ")"; }
  Matrix eval(double t) const override { return u_->eval(t).adjoint(); }

 protected:
  Matrix deriv_impl(int l, double t) const override { return u_->deriv(l, t).adjoint(); }

 private:
  PathPtr u_;
};

/// Derivatives 0..l of the resolvent R(t) = (W(t) - I)^{-1} from those of W, using
/// (W - I) R^{(l)} = -sum_{j=1}^{l} C(l, j) W^{(j)} R^{(l-j)}.
inline std::vector<Matrix> resolvent_derivatives(const std::vector<Matrix>& w_derivs) {
  const std::size_t n = w_derivs[0].dim();
  const Matrix r0 = matrix_inverse(w_derivs[0] - Matrix::identity(n));
  std::vector<Matrix> r{r0};
  for (std::size_t l = 1; l < w_derivs.size(); ++l) {
    Matrix s(n);
    for (std::size_t j = 1; j <= l; ++j) s += detail::binomial(int(l), int(j)) * (w_derivs[j] * r[l - j]);
    r.push_back(-1.0 * (r0 * s));
  }
  return r;
}

/**
 * Selfadjoint path A(t) = eta^{-1}(e^{-i theta} U(t)) = i I + 2i (W(t) - I)^{-1}, W = e^{-i theta} U.
 */
class CayleyPath : public OperatorPath {
 public:
  static constexpr double kMinGap = 1e-3;

  CayleyPath(PathPtr u, double theta) : u_(std::move(u)), theta_(theta) {
    if (u_->flavor() != PathFlavor::unitary) throw DomainError("CayleyPath: needs a unitary path");
    gap_ = gap_at(0.0);
    if (gap_ < kMinGap)
      throw DomainError("CayleyPath: e^{i theta} with theta = " + std::to_string(theta_) +
                        " is within 1e-3 of the spectrum of U(0); choose another rotation (suggested theta = " +
                        std::to_string(suggest_rotation(u_->base())) + ")");
  }

  /// Rotation angle (720-point grid) farthest from the spectrum of u.
  static double suggest_rotation(const Matrix& u) {
    return detail::best_rotation(unitary_eig(u).eigenvalues).first;
  }

  PathFlavor flavor() const override { return PathFlavor::selfadjoint; }
  int order() const override { return u_->order(); }
  std::size_t dim() const override { return u_->dim(); }
  std::string name() const override { return "cayley(" + u_->name() + ")"; }
  double theta() const { return theta_; }
  const PathPtr& unitary_path() const { return u_; }

  /// Distance from e^{i theta} to the spectrum of U(0).
  double spectral_gap() const { return gap_; }
  double gap_at(double t) const { return detail::circle_gap(theta_, unitary_eig(u_->eval(t)).eigenvalues); }

  /**
   * Largest s on a grid of spacing `step` (up to `tmax`) such that ||U(+-s') - U(0)||_op < gap/2 for
   * every grid point s' <= s. Eigenvalues of normal matrices move by at most the operator-norm
   * perturbation, so e^{i theta} stays off the spectrum on the sampled neighborhood.
   */
  double certified_radius(double step = 1e-2, double tmax = 10.0) const {
    const Matrix u0 = u_->base();
    double r = 0.0;
    for (double s = step; s <= tmax + 1e-15; s += step) {
      const double move = std::max(operator_norm(u_->eval(s) - u0), operator_norm(u_->eval(-s) - u0));
      if (move >= 0.5 * gap_) break;
      r = s;
    }
    return r;
  }

  Matrix eval(double t) const override {
    const std::size_t n = dim();
    const Matrix r = resolvent(w(t), t);
    Matrix a = kI * Matrix::identity(n) + (2.0 * kI) * r;
    return 0.5 * (a + a.adjoint());
  }

 protected:
  Matrix deriv_impl(int l, double t) const override {
    std::vector<Matrix> wd{w(t)};
    const Complex rot = std::polar(1.0, -theta_);
    for (int j = 1; j <= l; ++j) wd.push_back(rot * u_->deriv(j, t));
    std::vector<Matrix> r;
    try {
      r = resolvent_derivatives(wd);
    } catch (const NumericError&) {
      throw gap_error(t);
    }
    Matrix a = (2.0 * kI) * r[l];
    return 0.5 * (a + a.adjoint());
  }

 private:
  Matrix w(double t) const { return std::polar(1.0, -theta_) * u_->eval(t); }
  Matrix resolvent(const Matrix& w, double t) const {
    try {
      return matrix_inverse(w - Matrix::identity(dim()));
    } catch (const NumericError&) {
      throw gap_error(t);
    }
  }
  DomainError gap_error(double t) const {
    return DomainError("CayleyPath: e^{i theta} lies on the spectrum of U(" + std::to_string(t) +
                       "); choose another rotation");
  }

  PathPtr u_;
  double theta_;
  double gap_ = 0.0;
};

inline PathPtr cayley_path(PathPtr u, double theta) { return std::make_shared<CayleyPath>(std::move(u), theta); }

/// e^{i theta} eta(A) for Hermitian A: the unitary whose rotated Cayley transform is A.
inline Matrix cayley_unitary(const Matrix& a, double theta) {
  return std::polar(1.0, theta) * apply_function([](Complex x) { return cayley(x.real()); }, herm_eig(a));
}

/**
 * A(t) = -i log(U(t) U(0)^*) with the principal logarithm; requires ||U(t)U(0)^* - I||_op < 1/2.
 * Values come from the eigendecomposition; derivatives from the series
 * log(I + Z) = sum_m (-1)^{m+1} Z^m / m, Z(t) = U(t)U(0)^* - I, differentiated term by term.
 */
class LogPath : public OperatorPath {
 public:
  explicit LogPath(PathPtr u) : u_(std::move(u)), u0_star_(u_->base().adjoint()) {
    if (u_->flavor() != PathFlavor::unitary) throw DomainError("LogPath: needs a unitary path");
  }

  PathFlavor flavor() const override { return PathFlavor::selfadjoint; }
  int order() const override { return u_->order(); }
  std::size_t dim() const override { return u_->dim(); }
  std::string name() const override { return "log(" + u_->name() + ")"; }

  Matrix eval(double t) const override {
    const Matrix v = u_->eval(t) * u0_star_;
    check_small(v, t);
    Matrix a = apply_function([](Complex z) { return Complex(std::arg(z)); }, unitary_eig(v));
    return 0.5 * (a + a.adjoint());
  }

  /// Number of series terms used for derivative order l at t.
  int series_terms(int l, double t) const { return terms_for(operator_norm(z(t)), l); }

 protected:
  Matrix deriv_impl(int l, double t) const override {
    const std::size_t n = dim();
    std::vector<Matrix> zd{z(t)};
    const double q = operator_norm(zd[0]);
    if (q >= 0.5) throw smallness_error(t, q);
    for (int j = 1; j <= l; ++j) zd.push_back(u_->deriv(j, t) * u0_star_);
    const int terms = terms_for(q, l);
    // p[k] = (Z^m)^{(k)}, built from (Z^m)^{(k)} = sum_j C(k, j) Z^{(j)} (Z^{m-1})^{(k-j)}.
    std::vector<Matrix> p(zd);
    Matrix total = p[l];
    for (int m = 2; m <= terms; ++m) {
      std::vector<Matrix> next(l + 1, Matrix(n));
      for (int k = 0; k <= l; ++k)
        for (int j = 0; j <= k; ++j) next[k] += detail::binomial(k, j) * (zd[j] * p[k - j]);
      p = std::move(next);
      total += ((m % 2 ? 1.0 : -1.0) / m) * p[l];
    }
    Matrix a = -kI * total;
    return 0.5 * (a + a.adjoint());
  }

 private:
  Matrix z(double t) const { return u_->eval(t) * u0_star_ - Matrix::identity(dim()); }

  /// Smallest m with m^l q^{m+1-l} / (m+1) < 1e-14: the tail bound of the differentiated
  /// series, which reduces to ||Z||^{m+1}/(m+1) for values.
  static int terms_for(double q, int l) {
    if (q == 0.0) return std::max(l, 1);
    for (int m = std::max(l, 1); m < 2000; ++m)
      if (std::pow(double(m + 1), l) * std::pow(q, m + 1 - l) / (m + 1) < 1e-14) return m;
    return 2000;
  }

  void check_small(const Matrix& v, double t) const {
    const double q = operator_norm(v - Matrix::identity(dim()));
    if (q >= 0.5) throw smallness_error(t, q);
  }
  static DomainError smallness_error(double t, double q) {
    return DomainError("log_path: ||U(t)U(0)^* - I|| = " + std::to_string(q) + " >= 1/2 at t = " + std::to_string(t));
  }

  PathPtr u_;
  Matrix u0_star_;
};

inline PathPtr log_path(PathPtr u) { return std::make_shared<LogPath>(std::move(u)); }

/**
 * Spectral projection P_j of a unitary V onto the arc {e^{2 i pi s} : 0 <= s <= (j-1)/j}.
 * Eigenvalues within 1e-12 of the arc endpoint count as inside, and arguments within 1e-12 of
 * a full turn are read as 0.
 */
class ProjectionTruncation {
 public:
  ProjectionTruncation(const Matrix& v, int j) : v_(v), d_(unitary_eig(v)), j_(j) {
    if (j < 1) throw DomainError("ProjectionTruncation: j must be >= 1");
    const std::size_t n = v.dim();
    const double end = double(j - 1) / double(j);
    for (std::size_t i = 0; i < n; ++i) {
      double s = std::arg(d_.eigenvalues[i]) / (2.0 * kPi);
      if (s < 0.0) s += 1.0;
      if (s > 1.0 - 1e-12) s = 0.0;
      if (s <= end + 1e-12) {
        inside_.push_back(i);
        std::vector<Complex> col(n);
        for (std::size_t r = 0; r < n; ++r) col[r] = d_.vectors(r, i);
        basis_.push_back(std::move(col));
      }
    }
    p_ = inside_.size() == n ? Matrix::identity(n) : embed_from(Matrix::identity(inside_.size()), basis_, n);
  }

  int j() const { return j_; }
  std::size_t dim() const { return v_.dim(); }
  std::size_t rank() const { return inside_.size(); }
  bool covers_spectrum() const { return rank() == dim(); }
  const Matrix& projection() const { return p_; }
  const ColumnBasis& basis() const { return basis_; }
  const Matrix& reference() const { return v_; }
  const SpectralDecomposition& reference_decomposition() const { return d_; }

  /// V P_j on the ambient space.
  Matrix truncated_unitary() const { return v_ * p_; }

  /// V restricted to range(P_j), as an r x r unitary in the basis of kept eigenvectors.
  Matrix restricted_unitary() const { return compress_to(v_, basis_); }

  /// Eigendecomposition of the restricted unitary, read off from V's decomposition.
  SpectralDecomposition restricted_decomposition() const {
    SpectralDecomposition d;
    d.vectors = Matrix::identity(rank());
    for (std::size_t i : inside_) d.eigenvalues.push_back(d_.eigenvalues[i]);
    return d;
  }

  Matrix compress(const Matrix& x) const { return covers_spectrum() ? x : p_ * x * p_; }
  Matrix restrict(const Matrix& x) const { return compress_to(x, basis_); }
  Matrix embed(const Matrix& y) const { return embed_from(y, basis_, dim()); }

 private:
  Matrix v_;
  SpectralDecomposition d_;
  int j_;
  std::vector<std::size_t> inside_;
  ColumnBasis basis_;
  Matrix p_;
};

inline Matrix truncate(const ProjectionTruncation& tr, const Matrix& x) { return tr.compress(x); }

/// Derivatives 0..l of e^{iB(t)} from those of B, by differentiating the exponential series.
inline std::vector<Matrix> exp_series_derivatives(const std::vector<Matrix>& b_derivs) {
  const std::size_t n = b_derivs[0].dim();
  const int l = int(b_derivs.size()) - 1;
  std::vector<Matrix> ib;
  for (const auto& b : b_derivs) ib.push_back(kI * b);
  const double q = std::max(operator_norm(b_derivs[0]), 1e-300);
  double scale = 1.0;
  for (const auto& b : b_derivs) scale = std::max(scale, operator_norm(b));
  std::vector<Matrix> total(l + 1, Matrix(n));
  total[0] = Matrix::identity(n);
  std::vector<Matrix> p(ib);  // (iB)^m derivatives for current m, scaled by 1/m!
  for (int k = 0; k <= l; ++k) total[k] += p[k];
  for (int m = 2; m < 400; ++m) {
    std::vector<Matrix> next(l + 1, Matrix(n));
    for (int k = 0; k <= l; ++k)
      for (int j = 0; j <= k; ++j) next[k] += (detail::binomial(k, j) / m) * (ib[j] * p[k - j]);
    p = std::move(next);
    double biggest = 0.0;
    for (int k = 0; k <= l; ++k) {
      total[k] += p[k];
      biggest = std::max(biggest, frobenius_norm(p[k]));
    }
    if (biggest < 1e-17 && m > std::max(q, scale) * 2.0 + l) break;
  }
  return total;
}

/**
 * U_j(t) = e^{i A_j(t)} V_j on range(P_j) with A_j(t) = P_j A(t) P_j, realized as r x r matrices
 * in the basis of kept eigenvectors of V.
 */
class TruncatedPath : public OperatorPath {
 public:
  TruncatedPath(const ProjectionTruncation& tr, PathPtr a) : tr_(tr), a_(std::move(a)), vj_(tr.restricted_unitary()) {
    if (a_->flavor() != PathFlavor::selfadjoint) throw DomainError("TruncatedPath: needs a selfadjoint path");
    if (a_->dim() != tr.dim()) throw DomainError("TruncatedPath: dimension mismatch");
  }

  PathFlavor flavor() const override { return PathFlavor::unitary; }
  int order() const override { return a_->order(); }
  std::size_t dim() const override { return tr_.rank(); }
  std::string name() const override { return "trunc(" + a_->name() + ")"; }

  Matrix generator(double t) const { return tr_.restrict(a_->eval(t)); }
  Matrix eval(double t) const override { return expm_hermitian(generator(t)) * vj_; }

 protected:
  Matrix deriv_impl(int l, double t) const override {
    std::vector<Matrix> bd{generator(t)};
    for (int k = 1; k <= l; ++k) bd.push_back(tr_.restrict(a_->deriv(k, t)));
    return exp_series_derivatives(bd)[l] * vj_;
  }

 private:
  ProjectionTruncation tr_;
  PathPtr a_;
  Matrix vj_;
};

inline PathPtr truncate_path(const ProjectionTruncation& tr, PathPtr a) {
  return std::make_shared<TruncatedPath>(tr, std::move(a));
}

/**
 * k-th derivative of a matrix function by iterated central differences and one Richardson step:
 * D_h = (2h)^{-k} sum_j (-1)^j C(k, j) F(t + (k - 2j) h), result (4 D_{h/2} - D_h) / 3.
 * Step h = 1e-3 max(1, |t|) by default. Larger h raises truncation error (O(h^4) after
 * extrapolation), smaller h amplifies rounding by roughly eps / h^k.
 */
inline Matrix fd_derivative(const std::function<Matrix(double)>& f, double t, int k, double h = 0.0) {
  if (k < 0) throw DomainError("fd_derivative: negative order");
  if (h == 0.0) h = 1e-3 * std::max(1.0, std::abs(t));
  auto stencil = [&](double step) {
    Matrix acc;
    for (int j = 0; j <= k; ++j) {
      const Matrix v = ((j % 2 ? -1.0 : 1.0) * detail::binomial(k, j)) * f(t + double(k - 2 * j) * step);
      acc = j == 0 ? v : acc + v;
    }
    return acc * std::pow(2.0 * step, -k);
  };
  return (1.0 / 3.0) * (4.0 * stencil(0.5 * h) - stencil(h));
}

/// ||a - b||_F / max(||a||_F, ||b||_F), 0 when both vanish.
inline double relative_difference(const Matrix& a, const Matrix& b) {
  const double s = std::max(frobenius_norm(a), frobenius_norm(b));
  const double d = frobenius_norm(a - b);
  return s == 0.0 ? 0.0 : d / s;
}

/**
 * Relative error between deriv(l, t) and the finite-difference derivative of eval. When the
 * analytic derivative is exactly zero, a difference quotient at rounding level (below
 * 64 eps max||X|| / h^l) counts as zero too.
 */
inline double path_fd_check(const OperatorPath& path, int l, double t) {
  if (l > path.order()) throw DomainError("path_fd_check: l exceeds path order");
  const Matrix fd = fd_derivative([&](double s) { return path.eval(s); }, t, l);
  const Matrix exact = path.deriv(l, t);
  const Matrix ref = l == 0 ? fd - path.base() : fd;
  if (frobenius_norm(exact) == 0.0) {
    const double h = 1e-3 * std::max(1.0, std::abs(t));
    double m = 0.0;
    for (int j = -l; j <= l; ++j) m = std::max(m, frobenius_norm(path.eval(t + j * h)));
    if (frobenius_norm(ref) <= 64.0 * std::numeric_limits<double>::epsilon() * m / std::pow(h, l)) return 0.0;
  }
  return relative_difference(exact, ref);
}

/// Random path of a named kind; `norm_scale` is the Frobenius norm of each Hermitian generator.
inline PathPtr make_path(const std::string& kind, std::size_t dim, std::uint64_t seed, double norm_scale) {
  if (dim < 1) throw DomainError("make_path: dim must be >= 1");
  EnsembleSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  spec.perturbation_scale = norm_scale;
  if (kind == "exp") return std::make_shared<ExpPath>(spec.hermitian("path/A"), spec.unitary("path/U0"));
  if (kind == "product_exp")
    return std::make_shared<ProductExpPath>(spec.hermitian("path/A1"), spec.hermitian("path/A2"),
                                            spec.unitary("path/U0"));
  if (kind == "linear_sa") {
    EnsembleSpec base = spec;
    base.perturbation_scale = 1.0;
    return std::make_shared<LinearSAPath>(base.hermitian("path/A0"), spec.hermitian("path/K"));
  }
  throw DomainError("make_path: unknown path kind '" + kind + "' (expected exp, linear_sa or product_exp)");
}

}  // namespace opcalc
