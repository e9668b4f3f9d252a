#pragma once

#include <functional>
#include <memory>
#include <span>
#include <thread>
#include <vector>

#include "opcalc/divdiff.hpp"
#include "opcalc/linalg.hpp"
#include "opcalc/random.hpp"

namespace opcalc {

/**
 * Scalar symbol phi(lambda_1, ..., lambda_{n+1}) of a multiple operator integral.
 *
 * Symbols are cheap value types holding a shared evaluator; the kind tag and the stored
 * functions are kept so that callers (and the split into diagonal parts) can inspect them.
 */
class MoiSymbol {
 public:
  enum class Kind { divided_diff, callable, product, diagonal_restricted };
  using Eval = std::function<Complex(std::span<const Complex>)>;

  /// f^{[n]} on circle points.
  static MoiSymbol divided_diff(CircleFn f, int n) {
    if (!f) throw DomainError("MoiSymbol: null function");
    if (f->order() < n) throw DomainError("MoiSymbol: order of " + f->name() + " is below n");
    MoiSymbol s(Kind::divided_diff, n + 1);
    s.eval_ = [f](std::span<const Complex> lam) { return divided_difference(*f, lam); };
    s.domain_ = NodeDomain::circle;
    s.circle_ = std::move(f);
    return s;
  }

  /// g^{[n]} on real points.
  static MoiSymbol divided_diff(LineFn g, int n) {
    if (!g) throw DomainError("MoiSymbol: null function");
    if (g->order() < n) throw DomainError("MoiSymbol: order of " + g->name() + " is below n");
    MoiSymbol s(Kind::divided_diff, n + 1);
    s.eval_ = [g](std::span<const Complex> lam) { return divided_difference_ex(*g, lam).value; };
    s.domain_ = NodeDomain::line;
    s.line_ = std::move(g);
    return s;
  }

  static MoiSymbol callable(int arity, Eval phi) {
    MoiSymbol s(Kind::callable, arity);
    s.eval_ = std::move(phi);
    return s;
  }

  /// f_1(lambda_1) * ... * f_{n+1}(lambda_{n+1}).
  static MoiSymbol product(std::vector<std::function<Complex(Complex)>> fs) {
    MoiSymbol s(Kind::product, int(fs.size()));
    auto shared = std::make_shared<const std::vector<std::function<Complex(Complex)>>>(std::move(fs));
    s.eval_ = [shared](std::span<const Complex> lam) {
      Complex r = 1.0;
      for (std::size_t q = 0; q < lam.size(); ++q) r *= (*shared)[q](lam[q]);
      return r;
    };
    s.factors_ = std::move(shared);
    return s;
  }

  /// base * chi_Delta (on_diagonal) or base * (1 - chi_Delta), where Delta is the set of tuples
  /// whose entries all fall into one cluster at tolerance tau.
  static MoiSymbol diagonal_restricted(const MoiSymbol& base, bool on_diagonal, double tau = kClusterTol) {
    MoiSymbol s(Kind::diagonal_restricted, base.arity());
    s.eval_ = [b = base.eval_, on_diagonal, tau](std::span<const Complex> lam) {
      const bool diag = NodeTuple::build(lam, tau).cluster_count() == 1;
      return diag == on_diagonal ? b(lam) : Complex{};
    };
    s.domain_ = base.domain_;
    return s;
  }

  Kind kind() const { return kind_; }
  int arity() const { return arity_; }
  NodeDomain domain() const { return domain_; }
  const CircleFn& circle_function() const { return circle_; }
  const LineFn& line_function() const { return line_; }

  Complex operator()(std::span<const Complex> lam) const {
    if (int(lam.size()) != arity_) throw DomainError("MoiSymbol: wrong number of arguments");
    return eval_(lam);
  }

 private:
  MoiSymbol(Kind k, int arity) : kind_(k), arity_(arity) {
    if (arity < 1) throw DomainError("MoiSymbol: arity must be >= 1");
  }

  Kind kind_;
  int arity_;
  NodeDomain domain_ = NodeDomain::circle;
  Eval eval_;
  CircleFn circle_;
  LineFn line_;
  std::shared_ptr<const std::vector<std::function<Complex(Complex)>>> factors_;
};

/// Weight tensors up to this many entries are precomputed once per operator.
inline constexpr std::size_t kWeightCacheLimit = 1'000'000;

/**
 * Gamma^{A_1, ..., A_{n+1}}(phi) acting on (K_1, ..., K_n).
 *
 * In the eigenbases W_q of the A_q the map reads
 *   out[i_1, i_{n+1}] = sum_{i_2..i_n} phi(lambda_{i_1}, ..., lambda_{i_{n+1}}) prod_q Khat_q[i_q, i_{q+1}]
 * with Khat_q = W_q^* K_q W_{q+1}; the result is mapped back by W_1 (.) W_{n+1}^*.
 */
class MoiOperator {
 public:
  MoiOperator(std::vector<SpectralDecomposition> decomps, MoiSymbol symbol)
      : decomps_(std::move(decomps)), symbol_(std::move(symbol)) {
    if (decomps_.empty()) throw DomainError("MoiOperator: no spectral data");
    if (int(decomps_.size()) != symbol_.arity())
      throw DomainError("MoiOperator: symbol arity " + std::to_string(symbol_.arity()) + " does not match " +
                        std::to_string(decomps_.size()) + " operators");
    const std::size_t n = decomps_[0].dim();
    for (const auto& d : decomps_)
      if (d.dim() != n) throw DomainError("MoiOperator: spectral data of different dimensions");
    std::size_t total = 1;
    for (std::size_t q = 0; q < decomps_.size() && total <= kWeightCacheLimit; ++q) total *= n;
    if (total <= kWeightCacheLimit) build_cache();
  }

  /// Same decomposition in every slot.
  MoiOperator(const SpectralDecomposition& d, MoiSymbol symbol)
      : MoiOperator(std::vector<SpectralDecomposition>(std::size_t(symbol.arity()), d), symbol) {}

  std::size_t dim() const { return decomps_[0].dim(); }
  int order() const { return symbol_.arity() - 1; }
  const MoiSymbol& symbol() const { return symbol_; }
  const std::vector<SpectralDecomposition>& decomps() const { return decomps_; }
  bool cached() const { return !cache_.empty(); }

  Complex weight(std::span<const std::size_t> idx) const {
    if (cached()) {
      std::size_t flat = 0;
      for (std::size_t i : idx) flat = flat * dim() + i;
      return cache_[flat];
    }
    return evaluate(idx);
  }

  /// Largest |phi| over the realized eigenvalue tuples.
  double max_weight() const {
    double m = 0.0;
    for_each_index([&](std::span<const std::size_t> idx) { m = std::max(m, std::abs(weight(idx))); });
    return m;
  }

  /// Apply to K_1..K_n. `threads` > 1 splits the i_1 rows; each row is summed in a fixed order,
  /// so the result does not depend on the thread count.
  Matrix apply(std::span<const Matrix> ks, unsigned threads = 1) const {
    const int n = order();
    if (int(ks.size()) != n)
      throw DomainError("moi_apply: expected " + std::to_string(n) + " inputs, got " + std::to_string(ks.size()));
    const std::size_t dn = dim();
    for (const auto& k : ks)
      if (k.dim() != dn) throw DomainError("moi_apply: input dimension does not match spectral data");

    if (n == 0) {
      Matrix out(dn);
      for (std::size_t i = 0; i < dn; ++i) {
        const std::size_t idx[1] = {i};
        out(i, i) = weight(idx);
      }
      return back(out);
    }

    std::vector<Matrix> kh(n);
    for (int q = 0; q < n; ++q) kh[q] = decomps_[q].vectors.adjoint() * ks[q] * decomps_[q + 1].vectors;

    Matrix out(dn);
    if (n == 1) {
      for (std::size_t i = 0; i < dn; ++i)
        for (std::size_t j = 0; j < dn; ++j) {
          const std::size_t idx[2] = {i, j};
          out(i, j) = weight(idx) * kh[0](i, j);
        }
      return back(out);
    }

    auto rows = [&](std::size_t begin, std::size_t end) {
      std::vector<std::size_t> idx(n + 1);
      std::vector<Complex> prefix(n + 1);
      for (std::size_t i1 = begin; i1 < end; ++i1) {
        idx[0] = i1;
        prefix[0] = 1.0;
        contract(kh, idx, prefix, 1, out);
      }
    };
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(dn)));
    if (threads == 1) {
      rows(0, dn);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (dn + threads - 1) / threads;
      for (std::size_t b = 0; b < dn; b += chunk) pool.emplace_back(rows, b, std::min(dn, b + chunk));
      for (auto& t : pool) t.join();
    }
    return back(out);
  }

  Matrix apply(std::initializer_list<Matrix> ks) const {
    return apply(std::span<const Matrix>(ks.begin(), ks.size()));
  }

 private:
  Complex evaluate(std::span<const std::size_t> idx) const {
    std::vector<Complex> lam(idx.size());
    for (std::size_t q = 0; q < idx.size(); ++q) lam[q] = decomps_[q].eigenvalues[idx[q]];
    const Complex v = symbol_(lam);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericError("moi: non-finite symbol value");
    return v;
  }

  template <class F>
  void for_each_index(F&& f) const {
    const std::size_t m = decomps_.size(), n = dim();
    std::vector<std::size_t> idx(m, 0);
    while (true) {
      f(std::span<const std::size_t>(idx));
      std::size_t q = m;
      while (q > 0 && ++idx[q - 1] == n) idx[--q] = 0;
      if (q == 0) return;
    }
  }

  void build_cache() {
    std::vector<Complex> c;
    for_each_index([&](std::span<const std::size_t> idx) { c.push_back(evaluate(idx)); });
    cache_ = std::move(c);
  }

  void contract(const std::vector<Matrix>& kh, std::vector<std::size_t>& idx, std::vector<Complex>& prefix,
                int level, Matrix& out) const {
    const std::size_t dn = dim();
    const int n = order();
    for (std::size_t i = 0; i < dn; ++i) {
      const Complex p = prefix[level - 1] * kh[level - 1](idx[level - 1], i);
      if (p == Complex{}) continue;
      idx[level] = i;
      if (level == n) {
        out(idx[0], i) += weight(idx) * p;
      } else {
        prefix[level] = p;
        contract(kh, idx, prefix, level + 1, out);
      }
    }
  }

  Matrix back(const Matrix& x) const { return decomps_.front().vectors * x * decomps_.back().vectors.adjoint(); }

  std::vector<SpectralDecomposition> decomps_;
  MoiSymbol symbol_;
  std::vector<Complex> cache_;
};

inline Matrix moi_apply(const MoiOperator& op, std::span<const Matrix> ks) { return op.apply(ks); }

struct MoiSplit {
  Matrix diagonal;
  Matrix off_diagonal;
};

/// Split of Gamma(phi) into the parts carried by the diagonal set Delta and its complement.
inline MoiSplit moi_apply_split(const MoiOperator& op, std::span<const Matrix> ks) {
  const MoiOperator on(op.decomps(), MoiSymbol::diagonal_restricted(op.symbol(), true));
  const MoiOperator off(op.decomps(), MoiSymbol::diagonal_restricted(op.symbol(), false));
  return {on.apply(ks), off.apply(ks)};
}

/// Literal sandwich f_1(A_1) K_1 f_2(A_2) ... K_n f_{n+1}(A_{n+1}).
inline Matrix moi_product_symbol(const std::vector<std::function<Complex(Complex)>>& fs,
                                 const std::vector<SpectralDecomposition>& decomps, std::span<const Matrix> ks) {
  if (fs.size() != decomps.size() || ks.size() + 1 != fs.size())
    throw DomainError("moi_product_symbol: need n+1 functions and decompositions for n inputs");
  Matrix out = apply_function(fs[0], decomps[0]);
  for (std::size_t q = 0; q < ks.size(); ++q) out = out * ks[q] * apply_function(fs[q + 1], decomps[q + 1]);
  return out;
}

struct NormRatioStats {
  double max = 0.0;
  double mean = 0.0;
  int samples = 0;
};

/**
 * Empirical ||Gamma(phi)(K_1..K_n)||_p / prod ||K_i||_{p_i} over Gaussian inputs.
 * Requires 1/p = sum 1/p_i; the result is a lower estimate of the multilinear norm.
 */
inline NormRatioStats moi_norm_ratio(const MoiOperator& op, double p, std::span<const double> ps, int trials,
                                     Rng& rng) {
  if (int(ps.size()) != op.order()) throw DomainError("moi_norm_ratio: need one exponent per input");
  double inv = 0.0;
  for (double q : ps) {
    static_cast<void>(SchattenOrder(q));
    inv += 1.0 / q;
  }
  if (std::abs(1.0 / p - inv) > 1e-12) throw DomainError("moi_norm_ratio: exponents violate 1/p = sum 1/p_i");
  NormRatioStats s;
  std::vector<Matrix> ks(ps.size());
  for (int t = 0; t < trials; ++t) {
    double denom = 1.0;
    for (std::size_t q = 0; q < ks.size(); ++q) {
      ks[q] = gaussian_matrix(op.dim(), rng);
      denom *= schatten_norm(ks[q], ps[q]);
    }
    const double r = schatten_norm(op.apply(ks), p) / denom;
    s.max = std::max(s.max, r);
    s.mean += r;
    ++s.samples;
  }
  if (s.samples > 0) s.mean /= s.samples;
  return s;
}

}  // namespace opcalc
