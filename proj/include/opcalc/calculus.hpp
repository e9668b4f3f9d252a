#pragma once

#include <cfloat>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opcalc/moi.hpp"
#include "opcalc/paths.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Compositions
// ---------------------------------------------------------------------------

/// Ordered tuple (l_1, ..., l_m) of positive integers summing to k.
struct Composition {
  int k = 0;
  std::vector<int> parts;

  int length() const { return int(parts.size()); }
  /// Multinomial weight k! / (l_1! ... l_m!).
  double weight() const {
    double w = detail::factorial(k);
    for (int l : parts) w /= detail::factorial(l);
    return w;
  }
  std::string label() const {
    std::string s = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + std::to_string(parts[i]);
    return s + ")";
  }
  bool operator==(const Composition&) const = default;
};

/// All compositions of k into exactly m parts, in lexicographic order.
inline std::vector<Composition> compositions(int k, int m) {
  if (k < 1 || m < 1) throw DomainError("compositions: k and m must be positive");
  if (m > k) throw DomainError("compositions: m = " + std::to_string(m) + " exceeds k = " + std::to_string(k));
  std::vector<Composition> out;
  std::vector<int> parts(m, 1);
  // Recursive fill of parts[pos..] with the remaining sum, smallest first.
  auto fill = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == m - 1) {
      parts[pos] = remaining;
      out.push_back({k, parts});
      return;
    }
    for (int l = 1; l <= remaining - (m - 1 - pos); ++l) {
      parts[pos] = l;
      self(self, pos + 1, remaining - l);
    }
  };
  fill(fill, 0, k);
  return out;
}

/// Every composition of k, grouped by m = 1..k.
inline std::vector<Composition> all_compositions(int k) {
  std::vector<Composition> out;
  for (int m = 1; m <= k; ++m) {
    auto c = compositions(k, m);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derivative formulas
// ---------------------------------------------------------------------------

/// One weighted term weight * Gamma^{(X(t))^{m+1}}(f^{[m]})(X^{(l_1)}(t), ..., X^{(l_m)}(t)).
struct DerivativeTerm {
  Composition composition;
  Matrix contribution;
};

/// k-th derivative of t -> f(X(t)) together with its per-composition breakdown.
struct DerivativeReport {
  int k = 0;
  double t = 0.0;
  Matrix value;
  std::vector<DerivativeTerm> terms;
  std::optional<Matrix> fd_reference;
  double rel_error = std::numeric_limits<double>::quiet_NaN();

  /// Sum of the stored contributions; equals value up to rounding.
  Matrix sum_of_terms() const {
    Matrix s(value.dim());
    for (const auto& term : terms) s += term.contribution;
    return s;
  }

  /// Stores a finite-difference reference and the relative Frobenius error against it.
  void attach_fd(Matrix fd) {
    rel_error = relative_difference(value, fd);
    fd_reference = std::move(fd);
  }
};

namespace detail {

/// Shared engine: decomposition d of X(t), derivatives dx[l] = X^{(l)}(t) for l = 1..k, symbol factory.
template <class MakeSymbol>
DerivativeReport derivative_from(const SpectralDecomposition& d, const std::vector<Matrix>& dx, int k, double t,
                                 MakeSymbol&& make_symbol) {
  DerivativeReport rep;
  rep.k = k;
  rep.t = t;
  rep.value = Matrix(d.dim());
  for (int m = 1; m <= k; ++m) {
    const MoiOperator op(d, make_symbol(m));
    for (auto& comp : compositions(k, m)) {
      std::vector<Matrix> ks;
      ks.reserve(m);
      for (int l : comp.parts) ks.push_back(dx[l]);
      Matrix c = op.apply(ks);
      c *= Complex(comp.weight());
      rep.value += c;
      rep.terms.push_back({std::move(comp), std::move(c)});
    }
  }
  return rep;
}

inline void check_derivative_args(int k, int f_order, const OperatorPath& path, PathFlavor flavor, const char* who) {
  if (k < 1) throw DomainError(std::string(who) + ": k must be >= 1");
  if (f_order < k) throw DomainError(std::string(who) + ": function order is below k");
  if (path.order() < k) throw DomainError(std::string(who) + ": path order is below k");
  if (path.flavor() != flavor) throw DomainError(std::string(who) + ": path has the wrong flavor");
}

inline std::vector<Matrix> path_derivatives(const OperatorPath& path, int k, double t) {
  std::vector<Matrix> dx(k + 1);
  for (int l = 1; l <= k; ++l) dx[l] = path.deriv(l, t);
  return dx;
}

}  // namespace detail

/// phi^{(k)}(t) for phi(t) = f(U(t)), U a unitary path; U(t) is diagonalized once.
inline DerivativeReport derivative_unitary(const CircleFn& f, const OperatorPath& path, double t, int k) {
  detail::check_derivative_args(k, f->order(), path, PathFlavor::unitary, "derivative_unitary");
  const auto d = unitary_eig(path.eval(t));
  return detail::derivative_from(d, detail::path_derivatives(path, k, t), k, t,
                                 [&](int m) { return MoiSymbol::divided_diff(f, m); });
}

/// phi^{(k)}(t) for phi(t) = g(A(t)), A a self-adjoint path; A(t) is diagonalized once.
inline DerivativeReport derivative_selfadjoint(const LineFn& g, const OperatorPath& path, double t, int k) {
  detail::check_derivative_args(k, g->order(), path, PathFlavor::selfadjoint, "derivative_selfadjoint");
  const auto d = herm_eig(path.eval(t));
  return detail::derivative_from(d, detail::path_derivatives(path, k, t), k, t,
                                 [&](int m) { return MoiSymbol::divided_diff(g, m); });
}

/// t -> f(U(t)) evaluated through the spectral decomposition of U(t).
inline std::function<Matrix(double)> unitary_function_path(CircleFn f, PathPtr path) {
  return [f = std::move(f), path = std::move(path)](double s) {
    return apply_function([&](Complex z) { return (*f)(z); }, unitary_eig(path->eval(s)));
  };
}

/**
 * Smallest angular distance between the spectrum of U(s), sampled at 13 points of
 * [t - half_width, t + half_width], and the singular angles of f. Infinite when f has none.
 */
inline double singular_clearance(const CircleFunction& f, const OperatorPath& path, double t, double half_width) {
  const auto sing = f.singular_angles();
  double best = std::numeric_limits<double>::infinity();
  if (sing.empty()) return best;
  for (int i = -6; i <= 6; ++i)
    for (const Complex& z : unitary_eig(path.eval(t + half_width * i / 6.0)).eigenvalues)
      for (double a : sing) best = std::min(best, std::abs(std::arg(z * std::polar(1.0, -a))));
  return best;
}

/// t -> g(A(t)) evaluated through the spectral decomposition of A(t).
inline std::function<Matrix(double)> selfadjoint_function_path(LineFn g, PathPtr path) {
  return [g = std::move(g), path = std::move(path)](double s) {
    return apply_function([&](Complex x) { return (*g)(x.real()); }, herm_eig(path->eval(s)));
  };
}

/// Gamma^{(A(t))^n}(g^{[n-1]})(S_1(t), ..., S_{n-1}(t)) with n = s.size() + 1.
inline Matrix moi_path_value(const LineFn& g, const OperatorPath& a, const std::vector<PathPtr>& s, double t) {
  const int n = int(s.size()) + 1;
  const MoiOperator op(herm_eig(a.eval(t)), MoiSymbol::divided_diff(g, n - 1));
  std::vector<Matrix> ks;
  for (const auto& si : s) ks.push_back(si->eval(t));
  return op.apply(ks);
}

/**
 * Derivative of t -> Gamma^{(A(t))^n}(g^{[n-1]})(S_1(t), ..., S_{n-1}(t)):
 *
 *   sum_k Gamma^{(A(t))^n}(g^{[n-1]})(S_1, ..., S_k', ..., S_{n-1})
 *     + sum_{k=1}^{n} Gamma^{(A(t))^{n+1}}(g^{[n]})(S_1, ..., S_{k-1}, A'(t), S_k, ..., S_{n-1}).
 */
inline Matrix moi_path_derivative(const LineFn& g, const OperatorPath& a, const std::vector<PathPtr>& s, double t) {
  if (a.flavor() != PathFlavor::selfadjoint) throw DomainError("moi_path_derivative: A must be self-adjoint");
  const int n = int(s.size()) + 1;
  const auto d = herm_eig(a.eval(t));
  std::vector<Matrix> sv, sd;
  for (const auto& si : s) {
    if (si->flavor() != PathFlavor::selfadjoint) throw DomainError("moi_path_derivative: S paths must be self-adjoint");
    sv.push_back(si->eval(t));
    sd.push_back(si->deriv(1, t));
  }
  Matrix out(d.dim());
  if (n >= 2) {
    const MoiOperator low(d, MoiSymbol::divided_diff(g, n - 1));
    for (int k = 0; k < n - 1; ++k) {
      auto ks = sv;
      ks[k] = sd[k];
      out += low.apply(ks);
    }
  }
  const MoiOperator high(d, MoiSymbol::divided_diff(g, n));
  const Matrix da = a.deriv(1, t);
  for (int k = 0; k < n; ++k) {
    auto ks = sv;
    ks.insert(ks.begin() + k, da);
    out += high.apply(ks);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identity checks
// ---------------------------------------------------------------------------

/// Outcome of one two-sided identity evaluation.
struct CheckRecord {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
  std::size_t dim = 0;
  int n = 0;
  double p = 2.0;
  std::string family;
  std::uint64_t seed = 0;
  int trial = 0;
  double lhs_norm = 0.0;
  double rhs_norm = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// rel_err = ||LHS - RHS||_p / max(||LHS||_p, DBL_MIN).
inline CheckRecord make_check(std::string name, const Matrix& lhs, const Matrix& rhs, double p, double tol) {
  CheckRecord r;
  r.name = std::move(name);
  r.dim = lhs.dim();
  r.p = p;
  r.lhs_norm = schatten_norm(lhs, p);
  r.rhs_norm = schatten_norm(rhs, p);
  r.abs_err = schatten_norm(lhs - rhs, p);
  r.rel_err = r.abs_err / std::max(r.lhs_norm, DBL_MIN);
  r.tol = tol;
  r.pass = r.rel_err <= tol;
  return r;
}

namespace detail {

inline std::vector<SpectralDecomposition> unitary_decomps(const std::vector<Matrix>& us) {
  std::vector<SpectralDecomposition> ds;
  ds.reserve(us.size());
  for (const auto& u : us) ds.push_back(unitary_eig(u));
  return ds;
}

}  // namespace detail

/**
 * [Gamma^{U_1..U_{i-1},U,U_i..U_{n-1}} - Gamma^{U_1..U_{i-1},V,U_i..U_{n-1}}](f^{[n-1]})(K_1..K_{n-1})
 *   = Gamma^{U_1..U_{i-1},U,V,U_i..U_{n-1}}(f^{[n]})(K_1..K_{i-1}, U - V, K_i..K_{n-1}),
 * with n = others.size() + 1 and insertion index 1 <= i <= n.
 */
inline CheckRecord perturbation_identity(const CircleFn& f, const std::vector<Matrix>& others, const Matrix& u,
                                         const Matrix& v, const std::vector<Matrix>& ks, int i, double p = 2.0,
                                         double tol = 1e-10) {
  const int n = int(others.size()) + 1;
  if (int(ks.size()) != n - 1) throw DomainError("perturbation_identity: need n - 1 inputs");
  if (i < 1 || i > n) throw DomainError("perturbation_identity: insertion index out of range");
  const auto base = detail::unitary_decomps(others);
  const auto du = unitary_eig(u), dv = unitary_eig(v);

  auto with = [&](std::vector<SpectralDecomposition> extra) {
    auto ds = base;
    ds.insert(ds.begin() + (i - 1), extra.begin(), extra.end());
    return ds;
  };
  const MoiOperator lu(with({du}), MoiSymbol::divided_diff(f, n - 1));
  const MoiOperator lv(with({dv}), MoiSymbol::divided_diff(f, n - 1));
  const MoiOperator r(with({du, dv}), MoiSymbol::divided_diff(f, n));

  auto rks = ks;
  rks.insert(rks.begin() + (i - 1), u - v);
  auto rec = make_check("perturbation", lu.apply(ks) - lv.apply(ks), r.apply(rks), p, tol);
  rec.n = n;
  rec.params.emplace_back("i", std::to_string(i));
  return rec;
}

/**
 * Gamma^{(U)^n}(f^{[n-1]})(K) - Gamma^{(V)^n}(f^{[n-1]})(K)
 *   = sum_{i=1}^n Gamma^{(U)^i,(V)^{n-i+1}}(f^{[n]})(K_1..K_{i-1}, U - V, K_i..K_{n-1}),
 * with n = ks.size() + 1.
 */
inline CheckRecord telescoping_identity(const CircleFn& f, const Matrix& u, const Matrix& v,
                                        const std::vector<Matrix>& ks, double p = 2.0, double tol = 1e-10) {
  const int n = int(ks.size()) + 1;
  const auto du = unitary_eig(u), dv = unitary_eig(v);
  const Matrix lhs = MoiOperator(du, MoiSymbol::divided_diff(f, n - 1)).apply(ks) -
                     MoiOperator(dv, MoiSymbol::divided_diff(f, n - 1)).apply(ks);
  Matrix rhs(u.dim());
  for (int i = 1; i <= n; ++i) {
    std::vector<SpectralDecomposition> ds(i, du);
    ds.insert(ds.end(), n - i + 1, dv);
    auto rks = ks;
    rks.insert(rks.begin() + (i - 1), u - v);
    rhs += MoiOperator(std::move(ds), MoiSymbol::divided_diff(f, n)).apply(rks);
  }
  auto rec = make_check("telescoping", lhs, rhs, p, tol);
  rec.n = n;
  return rec;
}

/// Sampled statistics of the Lipschitz quotient for tuples of unitaries.
struct LipschitzReport {
  double max = 0.0;
  double mean = 0.0;
  int samples = 0;
  double displacement = 0.0;  // max_k ||U_k - V_k||_p
};

/**
 * Ratio ||[Gamma^{U_1..U_n} - Gamma^{V_1..V_n}](f^{[n-1]})(K)||_p
 *     / (||f^{(n)}||_inf * max_k ||U_k - V_k||_p * prod_i ||K_i||_p)
 * over random Gaussian probes K, with n = us.size().
 */
inline LipschitzReport lipschitz_bound_report(const CircleFn& f, const std::vector<Matrix>& us,
                                              const std::vector<Matrix>& vs, double p, int trials, Rng& rng) {
  if (us.empty() || us.size() != vs.size()) throw DomainError("lipschitz_bound_report: tuple sizes differ");
  if (trials < 1) throw DomainError("lipschitz_bound_report: trials must be >= 1");
  const int n = int(us.size());
  LipschitzReport rep;
  for (std::size_t k = 0; k < us.size(); ++k) rep.displacement = std::max(rep.displacement, schatten_norm(us[k] - vs[k], p));
  rep.samples = trials;
  if (rep.displacement == 0.0) return rep;
  const double fn = sup_norm(*f, n);
  if (fn == 0.0) return rep;
  const MoiOperator gu(detail::unitary_decomps(us), MoiSymbol::divided_diff(f, n - 1));
  const MoiOperator gv(detail::unitary_decomps(vs), MoiSymbol::divided_diff(f, n - 1));
  const std::size_t dim = us[0].dim();
  double sum = 0.0;
  for (int s = 0; s < trials; ++s) {
    std::vector<Matrix> ks;
    double denom = fn * rep.displacement;
    for (int i = 0; i < n - 1; ++i) {
      ks.push_back(gaussian_matrix(dim, rng));
      denom *= schatten_norm(ks.back(), p);
    }
    const double r = schatten_norm(gu.apply(ks) - gv.apply(ks), p) / denom;
    rep.max = std::max(rep.max, r);
    sum += r;
  }
  rep.mean = sum / trials;
  return rep;
}

// ---------------------------------------------------------------------------
// Taylor remainders
// ---------------------------------------------------------------------------

/// R_{n,f,U}(t) = f(U(t)) - f(U(0)) - sum_{k=1}^{n-1} t^k/k! phi^{(k)}(0).
inline Matrix taylor_remainder_direct(const CircleFn& f, const PathPtr& path, double t, int n) {
  if (n < 1) throw DomainError("taylor_remainder_direct: n must be >= 1");
  if (path->flavor() != PathFlavor::unitary) throw DomainError("taylor_remainder_direct: path must be unitary");
  const auto fu = unitary_function_path(f, path);
  Matrix r = fu(t) - fu(0.0);
  if (n >= 2) {
    const auto d0 = unitary_eig(path->eval(0.0));
    for (int k = 1; k < n; ++k) {
      detail::check_derivative_args(k, f->order(), *path, PathFlavor::unitary, "taylor_remainder_direct");
      auto rep = detail::derivative_from(d0, detail::path_derivatives(*path, k, 0.0), k, 0.0,
                                         [&](int m) { return MoiSymbol::divided_diff(f, m); });
      rep.value *= Complex(std::pow(t, k) / detail::factorial(k));
      r -= rep.value;
    }
  }
  return r;
}

/**
 * Representation of the Taylor remainder through multiple operator integrals:
 *
 *   R_{n,f,U}(t) = sum_{m=1}^n sum_{l_1+..+l_m=n}
 *     Gamma^{U(t),(U(0))^m}(f^{[m]})(R_{l_1,U}(t), t^{l_2} U^{(l_2)}(0)/l_2!, ..., t^{l_m} U^{(l_m)}(0)/l_m!),
 *
 * where R_{l,U}(t) = U(t) - U(0) - sum_{k=1}^{l-1} t^k/k! U^{(k)}(0).
 */
inline Matrix taylor_remainder_moi(const CircleFn& f, const PathPtr& path, double t, int n) {
  if (n < 1) throw DomainError("taylor_remainder_moi: n must be >= 1");
  if (path->flavor() != PathFlavor::unitary) throw DomainError("taylor_remainder_moi: path must be unitary");
  if (f->order() < n || path->order() < n) throw DomainError("taylor_remainder_moi: orders are below n");
  const auto dt = unitary_eig(path->eval(t));
  const auto d0 = unitary_eig(path->eval(0.0));
  std::vector<Matrix> taylor(n);  // t^k/k! U^{(k)}(0)
  for (int k = 1; k < n; ++k) taylor[k] = Complex(std::pow(t, k) / detail::factorial(k)) * path->deriv(k, 0.0);
  std::vector<Matrix> rem(n + 1);  // R_{l,U}(t)
  rem[1] = path->deriv(0, t);
  for (int l = 2; l <= n; ++l) rem[l] = rem[l - 1] - taylor[l - 1];

  Matrix out(dt.dim());
  for (int m = 1; m <= n; ++m) {
    std::vector<SpectralDecomposition> ds{dt};
    ds.insert(ds.end(), m, d0);
    const MoiOperator op(std::move(ds), MoiSymbol::divided_diff(f, m));
    for (const auto& comp : compositions(n, m)) {
      std::vector<Matrix> ks{rem[comp.parts[0]]};
      for (int q = 1; q < m; ++q) ks.push_back(taylor[comp.parts[q]]);
      out += op.apply(ks);
    }
  }
  return out;
}

/// Remainder size on the path e^{itA}U_0 at t = 1 against sum_{m=1}^n ||f^{(m)}||_inf ||A||_p^n.
struct RemainderReport {
  int n = 0;
  double p = 2.0;
  double exponent = 2.0;  // p / n, a quasi-norm exponent when below 1
  bool quasi = false;
  double remainder_norm = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

inline RemainderReport remainder_estimate_report(const CircleFn& f, const Matrix& a, const Matrix& u0, double p, int n) {
  if (n < 1) throw DomainError("remainder_estimate_report: n must be >= 1");
  RemainderReport rep;
  rep.n = n;
  rep.p = p;
  rep.exponent = p / n;
  rep.quasi = rep.exponent < 1.0;
  const auto path = std::make_shared<ExpPath>(a, u0);
  rep.remainder_norm = schatten_norm(taylor_remainder_direct(f, path, 1.0, n), rep.exponent);
  double sup = 0.0;
  for (int m = 1; m <= n; ++m) sup += sup_norm(*f, m);
  rep.denominator = sup * std::pow(schatten_norm(a, p), n);
  rep.ratio = rep.denominator == 0.0 ? 0.0 : rep.remainder_norm / rep.denominator;
  return rep;
}

/// Least-squares slope of log(ys) against log(xs); entries with ys == 0 are rejected.
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("loglog_slope: need two or more matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("loglog_slope: nonpositive value");
    const double x = std::log(xs[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// ||R_{n,f,U}(1)||_{p/n} along e^{itsA}U_0 for each scale s, plus the fitted exponent.
struct ScaleSweep {
  std::vector<double> scales;
  std::vector<double> norms;
  double slope = 0.0;
};

inline ScaleSweep remainder_scale_sweep(const CircleFn& f, const Matrix& a, const Matrix& u0, double p, int n,
                                        const std::vector<double>& scales) {
  ScaleSweep sw;
  sw.scales = scales;
  for (double s : scales) sw.norms.push_back(remainder_estimate_report(f, Complex(s) * a, u0, p, n).remainder_norm);
  sw.slope = loglog_slope(sw.scales, sw.norms);
  return sw;
}

// ---------------------------------------------------------------------------
// Truncation and Cayley consistency
// ---------------------------------------------------------------------------

/**
 * Compressed-input identity for the truncation P_j of V:
 *
 *   Gamma^{(e^{iA_j}V_j)^{n+1}}(f^{[n]})(K_{1,j}, ..., K_{n,j}) = Gamma^{(e^{iA_j}V)^{n+1}}(f^{[n]})(K_{1,j}, ..., K_{n,j})
 *
 * with n = ks.size(), A_j = P_j A P_j and K_{i,j} = P_j K_i P_j. The left side is realized on range(P_j)
 * and embedded back; the right side is evaluated on the full space.
 */
inline CheckRecord truncation_identity(const CircleFn& f, const Matrix& a, const ProjectionTruncation& tr,
                                       const std::vector<Matrix>& ks, double p = 2.0, double tol = 1e-10) {
  const int n = int(ks.size());
  if (n < 1) throw DomainError("truncation_identity: need at least one input");
  const MoiSymbol sym = MoiSymbol::divided_diff(f, n);
  std::vector<Matrix> kc, kr;
  for (const auto& k : ks) {
    kc.push_back(tr.compress(k));
    kr.push_back(tr.restrict(k));
  }
  Matrix lhs(tr.dim());
  if (tr.rank() > 0) {
    const Matrix wr = expm_hermitian(tr.restrict(a)) * tr.restricted_unitary();
    lhs = tr.embed(MoiOperator(unitary_eig(wr), sym).apply(kr));
  }
  const Matrix wf = expm_hermitian(tr.compress(a)) * tr.reference();
  const Matrix rhs = MoiOperator(unitary_eig(wf), sym).apply(kc);
  auto rec = make_check("truncation", lhs, rhs, p, tol);
  rec.n = n;
  rec.params.emplace_back("j", std::to_string(tr.j()));
  rec.params.emplace_back("rank", std::to_string(tr.rank()));
  return rec;
}

/// ||Gamma^{(VP_j)^{n+1}}(f^{[n]})(K_{1,j}, ..., K_{n,j}) - Gamma^{(V)^{n+1}}(f^{[n]})(K)||_p over a sweep of j.
struct TruncationSweep {
  std::vector<int> js;
  std::vector<std::size_t> ranks;
  std::vector<double> errors;

  /// True when each error is at most its predecessor plus slack.
  bool nonincreasing(double slack = 1e-12) const {
    for (std::size_t i = 1; i < errors.size(); ++i)
      if (errors[i] > errors[i - 1] + slack) return false;
    return true;
  }
};

/// The truncated operator V P_j is realized on range(P_j), in the eigenbasis of V.
inline TruncationSweep truncation_convergence(const CircleFn& f, const Matrix& v, const std::vector<Matrix>& ks,
                                              const std::vector<int>& js, double p = 2.0) {
  const int n = int(ks.size());
  if (n < 1) throw DomainError("truncation_convergence: need at least one input");
  const MoiSymbol sym = MoiSymbol::divided_diff(f, n);
  const Matrix full = MoiOperator(unitary_eig(v), sym).apply(ks);
  TruncationSweep sw;
  for (int j : js) {
    const ProjectionTruncation tr(v, j);
    Matrix approx(v.dim());
    if (tr.covers_spectrum()) {
      approx = full;  // P_j = I: the truncated operator is V itself
    } else if (tr.rank() > 0) {
      std::vector<Matrix> kr;
      for (const auto& k : ks) kr.push_back(tr.restrict(k));
      approx = tr.embed(MoiOperator(tr.restricted_decomposition(), sym).apply(kr));
    }
    sw.js.push_back(j);
    sw.ranks.push_back(tr.rank());
    sw.errors.push_back(schatten_norm(approx - full, p));
  }
  return sw;
}

/**
 * Compares derivative_unitary(f, U) with derivative_selfadjoint(g, A), where A is the Cayley path of U
 * for the rotation theta and g = h o eta with h(z) = f(e^{i theta} z), so that g(A(t)) = f(U(t)).
 * Without an explicit theta the rotation maximizing the spectral gap of U(0) is used.
 */
inline CheckRecord cayley_consistency(const CircleFn& f, const PathPtr& path, double t, int k, double p = 2.0,
                                      double tol = 1e-8, std::optional<double> theta = std::nullopt) {
  const double th = theta ? *theta : CayleyPath::suggest_rotation(path->eval(0.0));
  const auto a = cayley_path(path, th);
  const LineFn g = cayley_pullback(std::make_shared<RotatedFunction>(f, th));
  const auto lhs = derivative_unitary(f, *path, t, k);
  const auto rhs = derivative_selfadjoint(g, *a, t, k);
  auto rec = make_check("cayley", lhs.value, rhs.value, p, tol);
  rec.n = k;
  rec.params.emplace_back("theta", std::to_string(th));
  return rec;
}

}  // namespace opcalc
