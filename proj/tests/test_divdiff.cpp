#include <gtest/gtest.h>

#include <algorithm>

#include "opcalc/divdiff.hpp"
#include "oracles.hpp"

using namespace opcalc;

namespace {

TrigPoly random_trig(int degree, std::uint64_t seed) {
  Rng rng(seed, "trig");
  std::vector<Complex> c(2 * degree + 1);
  for (auto& z : c) z = rng.complex_gaussian();
  return TrigPoly(degree, c);
}

std::vector<Complex> random_circle_points(std::size_t n, Rng& rng) {
  std::vector<Complex> z(n);
  for (auto& w : z) w = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
  return z;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::vector<CircleFn> families() {
  return {make_trig(random_trig(4, 1)), make_trig(TrigPoly::monomial(5)), make_triangle(4),
          std::make_shared<RotatedFunction>(make_triangle(4), 1.1), steklov_smooth(make_triangle(3), 9)};
}

}  // namespace

TEST(DividedDifference, TwoPointSquare) {
  const TrigPoly f = TrigPoly::monomial(2);
  EXPECT_LT(std::abs(divided_difference(f, {1.0, kI}) - Complex(1.0, 1.0)), 1e-15);
}

TEST(DividedDifference, RepeatedNodeIsDerivative) {
  const TrigPoly f = TrigPoly::monomial(3);
  EXPECT_LT(std::abs(divided_difference(f, {1.0, 1.0}) - 3.0), 1e-14);
}

TEST(DividedDifference, DiagonalIdentityDegreeFour) {
  const TrigPoly f = random_trig(4, 3);
  const Complex l = std::polar(1.0, 0.7);
  EXPECT_LT(rel(divided_difference(f, {l, l, l, l}), f.deriv(3, l) / 6.0), 1e-10);
}

TEST(DividedDifference, DiagonalIdentityAllFamilies) {
  for (const auto& f : families())
    for (int n = 1; n <= std::min(4, f->order()); ++n)
      for (double t : {0.3, 2.2, 4.9}) {
        const Complex l = std::polar(1.0, t);
        std::vector<Complex> nodes(n + 1, l);
        EXPECT_LE(std::abs(divided_difference(*f, nodes) - f->deriv(n, l) / detail::factorial(n)),
                  1e-10 * std::max(1.0, std::abs(f->deriv(n, l))))
            << f->name() << " n=" << n;
      }
}

TEST(DividedDifference, MatchesNaiveRecursionInEveryOrder) {
  const TrigPoly f = random_trig(5, 8);
  auto fv = [&](Complex z) { return f(z); };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed, "naive");
    auto nodes = random_circle_points(4, rng);
    const Complex lib = divided_difference(f, nodes);
    std::sort(nodes.begin(), nodes.end(), [](Complex a, Complex b) { return std::arg(a) < std::arg(b); });
    int orderings = 0;
    do {
      EXPECT_LE(rel(lib, oracle::naive_divdiff(fv, nodes)), 1e-10);
      EXPECT_LE(rel(lib, divided_difference(f, nodes)), 1e-9);
      ++orderings;
    } while (std::next_permutation(nodes.begin(), nodes.end(),
                                   [](Complex a, Complex b) { return std::arg(a) < std::arg(b); }));
    EXPECT_EQ(orderings, 24);
  }
}

TEST(DividedDifference, RecursionConsistency) {
  for (const auto& f : families()) {
    Rng rng(5, f->name());
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 1 + trial % std::min(3, f->order());
      auto nodes = random_circle_points(n + 1, rng);
      if (trial % 2 == 1 && n >= 2) nodes[2] = nodes[n];  // repeated tail node
      const Complex l1 = nodes[0], l2 = nodes[1];
      std::vector<Complex> a(nodes.begin() + 2, nodes.end()), b = a;
      a.insert(a.begin(), l1);
      b.insert(b.begin(), l2);
      const Complex lhs = divided_difference(*f, nodes) * (l1 - l2);
      const Complex rhs = divided_difference(*f, a) - divided_difference(*f, b);
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(rhs))) << f->name() << " n=" << n;
    }
  }
}

TEST(DividedDifference, LowDegreeAnnihilated) {
  Rng rng(17);
  for (int n = 1; n <= 5; ++n)
    for (int k = 0; k < n; ++k) {
      const TrigPoly f = TrigPoly::monomial(k);
      auto nodes = random_circle_points(n + 1, rng);
      if (n >= 2) nodes[1] = nodes[0];
      EXPECT_LT(std::abs(divided_difference(f, nodes)), 1e-11) << "n=" << n << " k=" << k;
    }
}

TEST(DividedDifference, InsufficientOrderIsADomainError) {
  TriangleStack f(1);
  const Complex l = std::polar(1.0, 0.5);
  EXPECT_NO_THROW(divided_difference(f, {l, l}));
  EXPECT_THROW(divided_difference(f, {l, l, l}), DomainError);
}

TEST(DividedDifference, ClustersAndNearClusterFlag) {
  const TrigPoly f = TrigPoly::monomial(3);
  const Complex l = std::polar(1.0, 1.0);
  const Complex close = l * std::polar(1.0, 5e-8);
  const auto clustered = divided_difference_ex(f, std::vector<Complex>{l, close});
  EXPECT_FALSE(clustered.near_cluster);
  EXPECT_LT(std::abs(clustered.value - 3.0 * l * l), 1e-6);
  const auto near = divided_difference_ex(f, std::vector<Complex>{l, l * std::polar(1.0, 5e-7)});
  EXPECT_TRUE(near.near_cluster);

  const std::vector<Complex> pts{l, close, -l};
  const auto t = NodeTuple::on_circle(pts);
  EXPECT_EQ(t.cluster_count(), 2);
  EXPECT_EQ(t.cluster_map[0], t.cluster_map[1]);
  EXPECT_THROW(NodeTuple::on_circle(std::vector<Complex>{1.1}), DomainError);
}

TEST(DividedDifference, LineFunctionsUseTheSameEngine) {
  const LinePolynomial g({1.0, 0.0, 0.0, 2.0});  // 1 + 2x^3
  EXPECT_LT(std::abs(divided_difference(g, {0.0, 1.0}) - 2.0), 1e-14);
  EXPECT_LT(std::abs(divided_difference(g, {0.5, 0.5, 0.5}) - 6.0 * 0.5), 1e-13);
  EXPECT_LT(std::abs(divided_difference(g, {-1.0, 0.2, 0.7, 3.0}) - 2.0), 1e-12);
}

TEST(DivDiffBound, MonomialRatioBounded) {
  for (int n = 1; n <= 4; ++n) {
    const TrigPoly f = TrigPoly::monomial(n);
    const double r = divdiff_bound_ratio(f, n, 1000);
    // f^{[n]} of z^n is identically 1 and sup |f^{(n)}| = n!.
    EXPECT_NEAR(r, 1.0 / detail::factorial(n), 1e-8 / detail::factorial(n)) << n;
  }
}

TEST(DivDiffBound, ConstantGivesZero) {
  EXPECT_EQ(divdiff_bound_ratio(TrigPoly::constant(3.0), 2, 100), 0.0);
}

TEST(DivDiffBound, TriangleStackRatioStableUnderResampling) {
  TriangleStack f(2);
  const double small = divdiff_bound_ratio(f, 2, 500, 1);
  const double large = divdiff_bound_ratio(f, 2, 2000, 2);
  EXPECT_GT(small, 0.0);
  EXPECT_TRUE(std::isfinite(large));
  EXPECT_LE(std::abs(large - small), 0.2 * std::max(small, large));
}

TEST(CayleyExpansion, FirstOrderIdentityMatchesDirectQuotient) {
  const TrigPoly f = TrigPoly::monomial(1);
  const std::vector<double> xs{-0.4, 1.3};
  auto g = [](double t) { return (t + kI) / (t - kI); };
  const Complex direct = (g(xs[0]) - g(xs[1])) / (xs[0] - xs[1]);
  EXPECT_LT(rel(cayley_divdiff_expansion(f, 1, xs), direct), 1e-13);
}

TEST(CayleyExpansion, CoincidentNodesGiveChainRule) {
  const TrigPoly f = random_trig(3, 4);
  const double t = 0.6;
  const std::vector<double> xs{t, t};
  const Complex chain = f.deriv(1, cayley(t)) * (-2.0 * kI) / ((t - kI) * (t - kI));
  EXPECT_LT(rel(cayley_divdiff_expansion(f, 1, xs), chain), 1e-12);
}

TEST(CayleyExpansion, AgreesWithPullbackDividedDifference) {
  for (int m = 1; m <= 3; ++m)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto f = make_trig(random_trig(3, seed));
      const auto g = cayley_pullback(f);
      Rng rng(seed, "cayley-nodes");
      std::vector<double> xs(m + 1);
      for (auto& x : xs) x = rng.uniform(-3.0, 3.0);
      if (seed == 5 && m >= 2) xs[1] = xs[0];
      EXPECT_LE(rel(cayley_divdiff_expansion(*f, m, xs), divided_difference(*g, xs)), 1e-8) << "m=" << m;
    }
}

TEST(CayleyExpansion, PoleIsRejected) {
  const TrigPoly f = TrigPoly::monomial(1);
  const std::vector<double> xs{0.0, 1e9};
  EXPECT_THROW(cayley_divdiff_expansion(f, 1, xs), DomainError);
}
