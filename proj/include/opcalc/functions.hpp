#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "opcalc/linalg.hpp"

namespace opcalc {

/// Order reported by functions that are C-infinity (trig polynomials, Cayley transforms).
inline constexpr int kSmoothOrder = 64;

/// Reduce an angle to [0, 2 pi).
inline double wrap_angle(double t) {
  double r = std::fmod(t, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

/// Lower-triangular coefficient table c[k][p], 1 <= p <= k <= kmax (index 0 unused).
using CoeffTable = std::vector<std::vector<Complex>>;

/**
 * Coefficients a_{p,k} with  (g~)^{(k)}(t) = sum_p a_{p,k} e^{ipt} g^{(p)}(e^{it}),
 * where g~(t) = g(e^{it}) and g^{(p)} is the circle derivative.
 *
 * Generated by differentiating e^{ipt} g^{(p)}(e^{it}) once more:
 * a_{p,k+1} = i p a_{p,k} + i a_{p-1,k}, a_{1,1} = i.
 */
inline CoeffTable angle_from_circle_coeffs(int kmax) {
  CoeffTable a(kmax + 1, std::vector<Complex>(kmax + 2, Complex{}));
  if (kmax >= 1) a[1][1] = kI;
  for (int k = 1; k < kmax; ++k)
    for (int p = 1; p <= k + 1; ++p) a[k + 1][p] = kI * double(p) * a[k][p] + kI * a[k][p - 1];
  return a;
}

/**
 * Coefficients b_{p,k} with  g^{(k)}(e^{it}) = e^{-ikt} sum_p b_{p,k} (g~)^{(p)}(t).
 *
 * From h_{k+1} = -i e^{-it} d/dt h_k:  b_{p,k+1} = -k b_{p,k} - i b_{p-1,k}, b_{1,1} = -i.
 */
inline CoeffTable circle_from_angle_coeffs(int kmax) {
  CoeffTable b(kmax + 1, std::vector<Complex>(kmax + 2, Complex{}));
  if (kmax >= 1) b[1][1] = -kI;
  for (int k = 1; k < kmax; ++k)
    for (int p = 1; p <= k + 1; ++p) b[k + 1][p] = -double(k) * b[k][p] - kI * b[k][p - 1];
  return b;
}

/**
 * Coefficients c_{k,p} of the k-th derivative of g(x) = f(c + 2i/(x - a)):
 *   g^{(k)}(x) = sum_{p=1}^k c_{k,p} (x - a)^{-(k+p)} f^{(p)}(...).
 * Both eta(x) = 1 + 2i/(x - i) and eta^{-1}(z) = i + 2i/(z - 1) have this shape, so one table
 * serves the pullback and the pushforward.  c_{k+1,p} = -(k+p) c_{k,p} - 2i c_{k,p-1}.
 */
inline CoeffTable mobius_chain_coeffs(int kmax) {
  CoeffTable c(kmax + 1, std::vector<Complex>(kmax + 2, Complex{}));
  if (kmax >= 1) c[1][1] = -2.0 * kI;
  for (int k = 1; k < kmax; ++k)
    for (int p = 1; p <= k + 1; ++p)
      c[k + 1][p] = -double(k + p) * c[k][p] - 2.0 * kI * c[k][p - 1];
  return c;
}

/**
 * A function on the unit circle with a derivative stack f, f', ..., f^{(order)}.
 *
 * deriv(k, z) is the circle derivative: the limit of difference quotients
 * (f(w) - f(z))/(w - z) with w on the circle. angle_deriv(k, t) is the derivative of
 * t -> f(e^{it}); the default converts from circle derivatives.
 */
class CircleFunction {
 public:
  virtual ~CircleFunction() = default;
  virtual int order() const = 0;
  virtual Complex deriv(int k, Complex z) const = 0;
  virtual std::string name() const = 0;

  virtual Complex angle_deriv(int k, double t) const {
    const Complex z = std::polar(1.0, t);
    if (k == 0) return deriv(0, z);
    const auto a = angle_from_circle_coeffs(k);
    Complex s{};
    for (int p = 1; p <= k; ++p) s += a[k][p] * std::polar(1.0, p * t) * deriv(p, z);
    return s;
  }

  Complex operator()(Complex z) const { return deriv(0, z); }

  /// Angles in [0, 2 pi) where the top derivative is discontinuous; empty for smooth functions.
  virtual std::vector<double> singular_angles() const { return {}; }

 protected:
  void check_order(int k) const {
    if (k < 0 || k > order())
      throw DomainError(name() + ": derivative order " + std::to_string(k) + " exceeds order " +
                        std::to_string(order()));
  }
};

using CircleFn = std::shared_ptr<const CircleFunction>;

namespace detail {

/// Circle derivative of order k from an angle-derivative callback.
template <class AngleDeriv>
Complex circle_from_angle(int k, double t, AngleDeriv&& ad) {
  if (k == 0) return ad(0, t);
  const auto b = circle_from_angle_coeffs(k);
  Complex s{};
  for (int p = 1; p <= k; ++p) s += b[k][p] * ad(p, t);
  return std::polar(1.0, -k * t) * s;
}

inline double falling(int m, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= double(m - i);
  return r;
}

}  // namespace detail

/// sum_{k=-d}^{d} c_k z^k. Derivatives are exact: d/dz sum c_k z^k = sum k c_k z^{k-1}.
class TrigPoly final : public CircleFunction {
 public:
  /// coeffs[i] is the coefficient of z^{i - degree}; size must be 2*degree + 1.
  TrigPoly(int degree, std::vector<Complex> coeffs) : degree_(degree), coeffs_(std::move(coeffs)) {
    if (degree < 0 || coeffs_.size() != std::size_t(2 * degree + 1))
      throw DomainError("TrigPoly: coefficient vector must have 2*degree+1 entries");
  }

  static TrigPoly monomial(int k, Complex c = 1.0) {
    const int d = std::abs(k);
    std::vector<Complex> cs(2 * d + 1, Complex{});
    cs[k + d] = c;
    return TrigPoly(d, std::move(cs));
  }
  static TrigPoly constant(Complex c) { return TrigPoly(0, {c}); }

  int degree() const { return degree_; }
  Complex coeff(int k) const { return std::abs(k) > degree_ ? Complex{} : coeffs_[k + degree_]; }
  const std::vector<Complex>& coeffs() const { return coeffs_; }

  int order() const override { return kSmoothOrder; }
  std::string name() const override { return "trig:" + std::to_string(degree_); }

  Complex deriv(int k, Complex z) const override {
    check_order(k);
    const double r = std::abs(z), th = std::arg(z);
    Complex s{};
    for (int m = -degree_; m <= degree_; ++m) {
      const Complex c = coeffs_[m + degree_];
      if (c == Complex{}) continue;
      const double f = detail::falling(m, k);
      if (f == 0.0) continue;
      s += c * f * std::polar(std::pow(r, m - k), (m - k) * th);
    }
    return s;
  }

  Complex angle_deriv(int k, double t) const override {
    check_order(k);
    Complex s{};
    for (int m = -degree_; m <= degree_; ++m) {
      const Complex c = coeffs_[m + degree_];
      if (c == Complex{}) continue;
      s += c * std::pow(kI * double(m), k) * std::polar(1.0, m * t);
    }
    return s;
  }

 private:
  int degree_;
  std::vector<Complex> coeffs_;
};

/**
 * Function whose n-th angle derivative is the square wave sgn(sin t), with each lower level
 * its zero-mean periodic antiderivative. Levels are piecewise polynomials in t on [0, pi) and
 * [pi, 2 pi). The top derivative is bounded and discontinuous at t in {0, pi}; it takes the
 * value 0 exactly at those two points.
 */
class TriangleStack final : public CircleFunction {
 public:
  explicit TriangleStack(int n) : n_(n) {
    if (n < 0) throw DomainError("TriangleStack: order must be >= 0");
    levels_.resize(n + 1);
    levels_[n] = {{1.0}, {-1.0}};
    for (int lvl = n; lvl > 0; --lvl) levels_[lvl - 1] = antiderivative(levels_[lvl]);
  }

  int order() const override { return n_; }
  std::string name() const override { return "triangle:" + std::to_string(n_); }
  std::vector<double> singular_angles() const override { return {0.0, kPi}; }

  Complex angle_deriv(int k, double t) const override {
    check_order(k);
    const double th = wrap_angle(t);
    if (k == n_ && (th == 0.0 || th == kPi)) return 0.0;
    const auto& lv = levels_[k];
    return th < kPi ? horner(lv.plus, th) : horner(lv.minus, th - kPi);
  }

  Complex deriv(int k, Complex z) const override {
    check_order(k);
    const double t = std::arg(z);
    return detail::circle_from_angle(k, t, [this](int p, double s) { return angle_deriv(p, s); });
  }

  /// Exact Fourier coefficient of t -> f(e^{it}): 2/(i pi m) / (i m)^n for odd m, else 0.
  Complex exact_fourier(int m) const {
    if (m % 2 == 0) return 0.0;
    return 2.0 / (kI * kPi * double(m)) / std::pow(kI * double(m), n_);
  }

 private:
  struct Level {
    std::vector<double> plus;   // polynomial in u = t on [0, pi)
    std::vector<double> minus;  // polynomial in u = t - pi on [pi, 2 pi)
  };

  static double horner(const std::vector<double>& c, double u) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * u + *it;
    return s;
  }
  static std::vector<double> integrate(const std::vector<double>& c) {
    std::vector<double> r(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) r[i + 1] = c[i] / double(i + 1);
    return r;
  }
  static double integral_0_pi(const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * std::pow(kPi, double(i + 1)) / double(i + 1);
    return s;
  }

  static Level antiderivative(const Level& lv) {
    Level out{integrate(lv.plus), integrate(lv.minus)};
    const double jump = horner(out.plus, kPi);
    out.minus[0] += jump;  // continuity at pi
    const double mean = (integral_0_pi(out.plus) + integral_0_pi(out.minus)) / (2.0 * kPi);
    out.plus[0] -= mean;
    out.minus[0] -= mean;
    return out;
  }

  int n_;
  std::vector<Level> levels_;
};

/// h(z) = f(e^{i theta} z); h^{(k)}(z) = e^{ik theta} f^{(k)}(e^{i theta} z).
class RotatedFunction final : public CircleFunction {
 public:
  RotatedFunction(CircleFn f, double theta) : f_(std::move(f)), theta_(theta) {}
  int order() const override { return f_->order(); }
  std::string name() const override { return "rot(" + f_->name() + ")"; }
  std::vector<double> singular_angles() const override {
    auto a = f_->singular_angles();
    for (auto& t : a) t = wrap_angle(t - theta_);
    return a;
  }
  Complex deriv(int k, Complex z) const override {
    check_order(k);
    return std::polar(1.0, k * theta_) * f_->deriv(k, std::polar(1.0, theta_) * z);
  }

 private:
  CircleFn f_;
  double theta_;
};

/// sum_i w_i f_i, with order the minimum of the parts.
class LinearCombination final : public CircleFunction {
 public:
  LinearCombination(std::vector<std::pair<Complex, CircleFn>> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw DomainError("LinearCombination: no terms");
  }
  int order() const override {
    int o = kSmoothOrder;
    for (const auto& [w, f] : terms_) o = std::min(o, f->order());
    return o;
  }
  std::string name() const override { return "lincomb"; }
  std::vector<double> singular_angles() const override {
    const int o = order();
    std::vector<double> a;
    for (const auto& [w, f] : terms_)
      if (f->order() == o)
        for (double t : f->singular_angles()) a.push_back(t);
    return a;
  }
  Complex deriv(int k, Complex z) const override {
    check_order(k);
    Complex s{};
    for (const auto& [w, f] : terms_) s += w * f->deriv(k, z);
    return s;
  }

 private:
  std::vector<std::pair<Complex, CircleFn>> terms_;
};

/// Scalar callable with a single derivative stack callback, for ad-hoc functions in tests.
class CallableCircleFunction final : public CircleFunction {
 public:
  using Fn = std::function<Complex(int, Complex)>;
  CallableCircleFunction(int order, Fn fn, std::string name = "callable")
      : order_(order), fn_(std::move(fn)), name_(std::move(name)) {}
  int order() const override { return order_; }
  std::string name() const override { return name_; }
  Complex deriv(int k, Complex z) const override {
    check_order(k);
    return fn_(k, z);
  }

 private:
  int order_;
  Fn fn_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Functions on the real line.

/// A function on R with a derivative stack g, g', ..., g^{(order)}.
class LineFunction {
 public:
  virtual ~LineFunction() = default;
  virtual int order() const = 0;
  virtual Complex deriv(int k, double x) const = 0;
  virtual std::string name() const = 0;
  Complex operator()(double x) const { return deriv(0, x); }

 protected:
  void check_order(int k) const {
    if (k < 0 || k > order())
      throw DomainError(name() + ": derivative order " + std::to_string(k) + " exceeds order " +
                        std::to_string(order()));
  }
};

using LineFn = std::shared_ptr<const LineFunction>;

/// Polynomial sum c_i x^i on the line.
class LinePolynomial final : public LineFunction {
 public:
  explicit LinePolynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}
  int order() const override { return kSmoothOrder; }
  std::string name() const override { return "linepoly:" + std::to_string(c_.size()); }
  Complex deriv(int k, double x) const override {
    check_order(k);
    Complex s{};
    for (int i = int(c_.size()) - 1; i >= k; --i) s = s * x + c_[i] * detail::falling(i, k);
    return s;
  }

 private:
  std::vector<Complex> c_;
};

/// g = f o eta on R, eta(x) = (x + i)/(x - i). Derivatives by the Mobius chain recursion.
class CayleyPullback final : public LineFunction {
 public:
  explicit CayleyPullback(CircleFn f) : f_(std::move(f)), coeffs_(mobius_chain_coeffs(std::min(f_->order(), 16))) {}
  int order() const override { return f_->order(); }
  std::string name() const override { return "pullback(" + f_->name() + ")"; }
  Complex deriv(int k, double x) const override {
    check_order(k);
    const Complex z = cayley(x);
    if (k == 0) return f_->deriv(0, z);
    if (k >= int(coeffs_.size())) throw DomainError("CayleyPullback: derivative order beyond table");
    const Complex w = Complex(x, 0.0) - kI;
    Complex s{};
    for (int p = 1; p <= k; ++p) s += coeffs_[k][p] * std::pow(w, -(k + p)) * f_->deriv(p, z);
    return s;
  }
  const CircleFn& base() const { return f_; }

 private:
  CircleFn f_;
  CoeffTable coeffs_;
};

/// f = g o eta^{-1} on T \ {1}. Evaluation at the pole z = 1 is a domain error.
class CayleyPushforward final : public CircleFunction {
 public:
  explicit CayleyPushforward(LineFn g) : g_(std::move(g)), coeffs_(mobius_chain_coeffs(std::min(g_->order(), 16))) {}
  int order() const override { return g_->order(); }
  std::string name() const override { return "pushforward(" + g_->name() + ")"; }
  Complex deriv(int k, Complex z) const override {
    check_order(k);
    if (std::abs(z - 1.0) < 1e-12) throw DomainError("CayleyPushforward: evaluation at the Cayley pole z = 1");
    const double x = cayley_inverse(z).real();
    if (k == 0) return g_->deriv(0, x);
    if (k >= int(coeffs_.size())) throw DomainError("CayleyPushforward: derivative order beyond table");
    const Complex w = z - 1.0;
    Complex s{};
    for (int p = 1; p <= k; ++p) s += coeffs_[k][p] * std::pow(w, -(k + p)) * g_->deriv(p, x);
    return s;
  }

 private:
  LineFn g_;
  CoeffTable coeffs_;
};

inline LineFn cayley_pullback(CircleFn f) {
  if (f->order() < 1) throw DomainError("cayley_pullback: order must be >= 1");
  return std::make_shared<CayleyPullback>(std::move(f));
}
inline CircleFn cayley_pushforward(LineFn g) {
  if (g->order() < 1) throw DomainError("cayley_pushforward: order must be >= 1");
  return std::make_shared<CayleyPushforward>(std::move(g));
}

// ---------------------------------------------------------------------------
// Smoothing constructions.

/// Grid estimate of sup |f^{(k)}| over G equispaced circle points. A lower bound of the true sup.
inline double sup_norm(const CircleFunction& f, int k, int grid = 4096) {
  double m = 0.0;
  for (int i = 0; i < grid; ++i) m = std::max(m, std::abs(f.deriv(k, std::polar(1.0, 2.0 * kPi * i / grid))));
  return m;
}

/// Same, for angle derivatives of t -> f(e^{it}).
inline double sup_norm_angle(const CircleFunction& f, int k, int grid = 4096) {
  double m = 0.0;
  for (int i = 0; i < grid; ++i) m = std::max(m, std::abs(f.angle_deriv(k, 2.0 * kPi * i / grid)));
  return m;
}

/// Grid maximum of |f^{(k)}(z) - g^{(k)}(z)| over z on the unit circle.
inline double sup_distance(const CircleFunction& f, const CircleFunction& g, int k, int grid = 4096) {
  double m = 0.0;
  for (int i = 0; i < grid; ++i) {
    const Complex z = std::polar(1.0, 2.0 * kPi * i / grid);
    m = std::max(m, std::abs(f.deriv(k, z) - g.deriv(k, z)));
  }
  return m;
}

/// Fourier coefficients c_k, |k| <= d, of t -> f(e^{it}) by the trapezoidal rule on G points.
inline std::vector<Complex> fourier_coefficients(const CircleFunction& f, int d, int grid = 1 << 14) {
  std::vector<Complex> vals(grid);
  for (int i = 0; i < grid; ++i) vals[i] = f.deriv(0, std::polar(1.0, 2.0 * kPi * i / grid));
  std::vector<Complex> c(2 * d + 1);
  for (int k = -d; k <= d; ++k) {
    Complex s{};
    for (int i = 0; i < grid; ++i) s += vals[i] * std::polar(1.0, -2.0 * kPi * double((long long)k * i % grid) / grid);
    c[k + d] = s / double(grid);
  }
  return c;
}

/// Fejer mean f * F_j: coefficients scaled by 1 - |k|/(j+1), |k| <= j.
inline TrigPoly fejer_smooth(const CircleFunction& f, int j) {
  if (j < 1) throw DomainError("fejer_smooth: j must be >= 1");
  auto c = fourier_coefficients(f, j);
  for (int k = -j; k <= j; ++k) c[k + j] *= 1.0 - double(std::abs(k)) / double(j + 1);
  return TrigPoly(j, std::move(c));
}

namespace detail {

template <class F>
double simpson_recursive(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                         int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recursive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recursive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature of a real integrand.
template <class F>
double adaptive_simpson(F f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recursive(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

/**
 * Steklov average f~_j(t) = j int_0^t (f~(u + 1/j) - f~(u)) du + f(1).
 *
 * Angle derivatives k >= 1 use the exact difference rule
 * (f~_j)^{(k)}(t) = j ((f~)^{(k-1)}(t + 1/j) - (f~)^{(k-1)}(t)); the value (k = 0) is computed by
 * adaptive Simpson quadrature of the defining integral at tolerance 1e-10.
 */
class SteklovSmoothed final : public CircleFunction {
 public:
  SteklovSmoothed(CircleFn f, int j) : f_(std::move(f)), j_(j) {
    if (j < 1) throw DomainError("steklov_smooth: j must be >= 1");
    if (f_->order() < 1) throw DomainError("steklov_smooth: f must have order >= 1");
  }
  int order() const override { return f_->order(); }
  std::string name() const override { return "steklov(" + f_->name() + "," + std::to_string(j_) + ")"; }
  int j() const { return j_; }

  Complex angle_deriv(int k, double t) const override {
    check_order(k);
    const double h = 1.0 / double(j_);
    if (k >= 1) return double(j_) * (f_->angle_deriv(k - 1, t + h) - f_->angle_deriv(k - 1, t));
    const double tt = wrap_angle(t);
    auto re = [&](double u) { return (f_->angle_deriv(0, u + h) - f_->angle_deriv(0, u)).real(); };
    auto im = [&](double u) { return (f_->angle_deriv(0, u + h) - f_->angle_deriv(0, u)).imag(); };
    const Complex integral{detail::adaptive_simpson(re, 0.0, tt, 1e-10), detail::adaptive_simpson(im, 0.0, tt, 1e-10)};
    return double(j_) * integral + f_->angle_deriv(0, 0.0);
  }

  Complex deriv(int k, Complex z) const override {
    check_order(k);
    const double t = std::arg(z);
    return detail::circle_from_angle(k, t, [this](int p, double s) { return angle_deriv(p, s); });
  }

 private:
  CircleFn f_;
  int j_;
};

inline CircleFn steklov_smooth(CircleFn f, int j) { return std::make_shared<SteklovSmoothed>(std::move(f), j); }

inline CircleFn make_trig(TrigPoly p) { return std::make_shared<TrigPoly>(std::move(p)); }
inline CircleFn make_triangle(int n) { return std::make_shared<TriangleStack>(n); }

}  // namespace opcalc
