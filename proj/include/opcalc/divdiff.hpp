#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "opcalc/functions.hpp"
#include "opcalc/random.hpp"

namespace opcalc {

/// Points closer than this are treated as one confluent node.
///
/// Error model: a quotient over a gap d loses about eps/d relative accuracy per level, while
/// substituting the derivative costs about d * |f^{(k+1)}|. At double precision the two balance
/// near sqrt(eps) ~ 1e-8; 1e-7 keeps the substitution error below the quotient error.
inline constexpr double kClusterTol = 1e-7;

enum class NodeDomain { circle, line };

/// Node tuple with its partition into clusters of numerically equal points.
struct NodeTuple {
  std::vector<Complex> points;
  std::vector<int> cluster_map;  // cluster id per point; ids are 0..(clusters-1)
  bool near_cluster = false;     // some pair lies in (tau, 10 tau): cancellation risk

  static NodeTuple build(std::span<const Complex> pts, double tau = kClusterTol) {
    NodeTuple t;
    t.points.assign(pts.begin(), pts.end());
    const std::size_t n = pts.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = std::abs(pts[i] - pts[j]);
        if (d <= tau)
          parent[find(int(i))] = find(int(j));
        else if (d < 10.0 * tau)
          t.near_cluster = true;
      }
    std::vector<int> id(n, -1);
    int next = 0;
    t.cluster_map.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int r = find(int(i));
      if (id[r] < 0) id[r] = next++;
      t.cluster_map[i] = id[r];
    }
    return t;
  }

  /// Circle tuple: every point must be unit modulus within 1e-10.
  static NodeTuple on_circle(std::span<const Complex> pts, double tau = kClusterTol) {
    for (const auto& z : pts)
      if (std::abs(std::abs(z) - 1.0) > 1e-10) throw DomainError("NodeTuple: point is not on the unit circle");
    return build(pts, tau);
  }

  int cluster_count() const {
    return cluster_map.empty() ? 0 : *std::max_element(cluster_map.begin(), cluster_map.end()) + 1;
  }
};

struct DivDiffResult {
  Complex value;
  bool near_cluster = false;
};

namespace detail {

inline double node_key(Complex z, NodeDomain dom) { return dom == NodeDomain::circle ? std::arg(z) : z.real(); }

inline double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace detail

/**
 * Confluent Newton table for f^{[n]}(z_0, ..., z_n).
 *
 * Clustered points are replaced by a canonical representative and placed contiguously, clusters
 * ordered by argument (circle) or value (line). Entries spanning a single cluster of width k use
 * f^{(k)}(z)/k!; all others use the quotient recursion. `deriv(k, z)` supplies the derivative
 * stack and `max_order` its depth.
 */
template <class Deriv>
DivDiffResult confluent_divdiff(std::span<const Complex> nodes, Deriv&& deriv, int max_order, NodeDomain dom,
                                double tau = kClusterTol) {
  const int n = int(nodes.size()) - 1;
  if (n < 0) throw DomainError("divided_difference: empty node tuple");
  const NodeTuple t = NodeTuple::build(nodes, tau);
  const int nc = t.cluster_count();

  // Canonical representative: smallest key, ties by real then imaginary part.
  std::vector<Complex> rep(nc);
  std::vector<int> mult(nc, 0);
  std::vector<bool> seen(nc, false);
  auto less = [dom](Complex a, Complex b) {
    const double ka = detail::node_key(a, dom), kb = detail::node_key(b, dom);
    if (ka != kb) return ka < kb;
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  };
  for (int i = 0; i <= n; ++i) {
    const int c = t.cluster_map[i];
    ++mult[c];
    if (!seen[c] || less(nodes[i], rep[c])) rep[c] = nodes[i];
    seen[c] = true;
  }
  std::vector<int> corder(nc);
  std::iota(corder.begin(), corder.end(), 0);
  std::sort(corder.begin(), corder.end(), [&](int a, int b) { return less(rep[a], rep[b]); });

  std::vector<Complex> z;
  std::vector<int> cl;
  z.reserve(n + 1);
  for (int c : corder) {
    if (mult[c] - 1 > max_order)
      throw DomainError("divided_difference: confluent node of multiplicity " + std::to_string(mult[c]) +
                        " needs derivative order " + std::to_string(mult[c] - 1) + " but only " +
                        std::to_string(max_order) + " is available");
    for (int r = 0; r < mult[c]; ++r) {
      z.push_back(rep[c]);
      cl.push_back(c);
    }
  }

  // Derivative values per cluster, up to multiplicity - 1.
  std::vector<std::vector<Complex>> dv(nc);
  for (int c = 0; c < nc; ++c) {
    dv[c].resize(mult[c]);
    for (int k = 0; k < mult[c]; ++k) dv[c][k] = deriv(k, rep[c]) / detail::factorial(k);
  }

  std::vector<Complex> col(n + 1);
  for (int i = 0; i <= n; ++i) col[i] = dv[cl[i]][0];
  for (int k = 1; k <= n; ++k)
    for (int i = 0; i + k <= n; ++i) {
      if (cl[i] == cl[i + k])
        col[i] = dv[cl[i]][k];
      else
        col[i] = (col[i + 1] - col[i]) / (z[i + k] - z[i]);
    }
  return {col[0], t.near_cluster};
}

inline DivDiffResult divided_difference_ex(const CircleFunction& f, std::span<const Complex> nodes,
                                           double tau = kClusterTol) {
  return confluent_divdiff(
      nodes, [&f](int k, Complex z) { return f.deriv(k, z); }, f.order(), NodeDomain::circle, tau);
}

/// f^{[n]}(lambda_1, ..., lambda_{n+1}) for circle points.
inline Complex divided_difference(const CircleFunction& f, std::span<const Complex> nodes) {
  return divided_difference_ex(f, nodes).value;
}
inline Complex divided_difference(const CircleFunction& f, std::initializer_list<Complex> nodes) {
  return divided_difference(f, std::span<const Complex>(nodes.begin(), nodes.size()));
}

/// Same engine on real nodes for functions on the line.
inline DivDiffResult divided_difference_ex(const LineFunction& g, std::span<const Complex> nodes,
                                           double tau = kClusterTol) {
  return confluent_divdiff(
      nodes, [&g](int k, Complex x) { return g.deriv(k, x.real()); }, g.order(), NodeDomain::line, tau);
}
inline Complex divided_difference(const LineFunction& g, std::span<const double> nodes) {
  std::vector<Complex> z(nodes.begin(), nodes.end());
  return divided_difference_ex(g, z).value;
}
inline Complex divided_difference(const LineFunction& g, std::initializer_list<double> nodes) {
  return divided_difference(g, std::span<const double>(nodes.begin(), nodes.size()));
}

/**
 * Empirical ratio max |f^{[n]}| / sup|f^{(n)}| over random circle tuples (half of them with a
 * repeated node). A lower estimate of the constant d_n for this f; 0 when f^{(n)} vanishes.
 */
inline double divdiff_bound_ratio(const CircleFunction& f, int n, int samples, std::uint64_t seed = 1) {
  if (f.order() < n) throw DomainError("divdiff_bound_ratio: order of f is below n");
  const double sup = sup_norm(f, n);
  if (sup <= 1e-300) return 0.0;
  Rng rng(seed, "divdiff_bound_ratio");
  double best = 0.0;
  std::vector<Complex> nodes(n + 1);
  for (int s = 0; s < samples; ++s) {
    for (auto& z : nodes) z = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    if (s % 2 == 1 && n >= 1) nodes[1] = nodes[0];
    best = std::max(best, std::abs(divided_difference(f, nodes)));
  }
  return best / sup;
}

/**
 * (f o eta)^{[m]}(x_1, ..., x_{m+1}) expanded over index chains 1 = i_0 < ... < i_k = m+1:
 *
 *   (i/2)^m sum_k sum_chains f^{[k]}(eta(x_{i_0}), ..., eta(x_{i_k}))
 *       * prod_{j=1}^{k-1} (eta(x_{i_j}) - 1)^2 * prod_{l not in {i_1..i_{k-1}}} (eta(x_l) - 1).
 *
 * Follows from eta(x) - eta(y) = (i/2)(x - y)(eta(x) - 1)(eta(y) - 1) and the Leibniz rule for
 * divided differences, one factor i/2 per recursion level.
 */
inline Complex cayley_divdiff_expansion(const CircleFunction& f, int m, std::span<const double> xs) {
  if (m < 1) throw DomainError("cayley_divdiff_expansion: m must be >= 1");
  if (int(xs.size()) != m + 1) throw DomainError("cayley_divdiff_expansion: need m+1 nodes");
  if (f.order() < m) throw DomainError("cayley_divdiff_expansion: order of f is below m");
  std::vector<Complex> e(m + 1), em1(m + 1);
  for (int l = 0; l <= m; ++l) {
    e[l] = cayley(xs[l]);
    em1[l] = e[l] - 1.0;
    if (std::abs(em1[l]) < 1e-8) throw DomainError("cayley_divdiff_expansion: node too close to the Cayley pole");
  }
  Complex total{};
  // Interior indices i_1..i_{k-1} range over subsets of {1..m-1} (0-based); enumerate by bitmask.
  const int interior = m - 1;
  for (unsigned mask = 0; mask < (1u << interior); ++mask) {
    std::vector<int> chain{0};
    for (int b = 0; b < interior; ++b)
      if (mask & (1u << b)) chain.push_back(b + 1);
    chain.push_back(m);
    const int k = int(chain.size()) - 1;
    std::vector<Complex> pts;
    for (int idx : chain) pts.push_back(e[idx]);
    Complex term = divided_difference(f, pts);
    std::vector<bool> inner(m + 1, false);
    for (int j = 1; j < k; ++j) {
      inner[chain[j]] = true;
      term *= em1[chain[j]] * em1[chain[j]];
    }
    for (int l = 0; l <= m; ++l)
      if (!inner[l]) term *= em1[l];
    total += term;
  }
  return std::pow(kI / 2.0, m) * total;
}

}  // namespace opcalc
