#include <gtest/gtest.h>

#include "opcalc/calculus.hpp"
#include "oracles.hpp"

using namespace opcalc;

namespace {

TrigPoly random_trig(int degree, std::uint64_t seed) {
  Rng rng(seed, "trig");
  std::vector<Complex> c(2 * degree + 1);
  for (auto& z : c) z = rng.complex_gaussian();
  return TrigPoly(degree, c);
}

std::vector<Matrix> random_inputs(std::size_t dim, int count, Rng& rng) {
  std::vector<Matrix> ks;
  for (int i = 0; i < count; ++i) ks.push_back(gaussian_matrix(dim, rng));
  return ks;
}

PathPtr exp_path(std::size_t dim, std::uint64_t seed, double scale = 1.5) {
  Rng rng(seed, "exp-path");
  Matrix a = random_hermitian(dim, rng, scale);
  Matrix u0 = haar_unitary(dim, rng);
  return std::make_shared<ExpPath>(std::move(a), std::move(u0));
}

PathPtr product_path(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed, "product-path");
  Matrix a1 = random_hermitian(dim, rng, 1.5);
  Matrix a2 = random_hermitian(dim, rng, 1.5);
  Matrix u0 = haar_unitary(dim, rng);
  return std::make_shared<ProductExpPath>(std::move(a1), std::move(a2), std::move(u0));
}

Matrix fd_of(const std::function<Matrix(double)>& f, double t, int k) { return oracle::richardson_derivative(f, t, k); }

}  // namespace

// ----------------------------------------------------------------------------- compositions

TEST(Compositions, SmallCases) {
  const auto c32 = compositions(3, 2);
  ASSERT_EQ(c32.size(), 2u);
  EXPECT_EQ(c32[0].parts, (std::vector<int>{1, 2}));
  EXPECT_EQ(c32[1].parts, (std::vector<int>{2, 1}));
  const auto c41 = compositions(4, 1);
  ASSERT_EQ(c41.size(), 1u);
  EXPECT_EQ(c41[0].parts, (std::vector<int>{4}));
  EXPECT_EQ(compositions(5, 3).size(), 6u);
  EXPECT_THROW(compositions(2, 3), DomainError);
}

TEST(Compositions, CountsSumsAndWeights) {
  for (int k = 1; k <= 7; ++k) {
    const auto all = all_compositions(k);
    EXPECT_EQ(all.size(), std::size_t(1) << (k - 1));
    double multinomial_total = 0.0;
    for (const auto& c : all) {
      int s = 0;
      for (int l : c.parts) {
        EXPECT_GE(l, 1);
        s += l;
      }
      EXPECT_EQ(s, k);
      if (c.length() == 2) multinomial_total += c.weight();
    }
    // sum over (l1, l2) of C(k, l1) = 2^k - 2
    if (k >= 2) {
      EXPECT_DOUBLE_EQ(multinomial_total, std::pow(2.0, k) - 2.0);
    }
    for (int m = 1; m <= k; ++m) {
      const auto cs = compositions(k, m);
      EXPECT_EQ(double(cs.size()), detail::binomial(k - 1, m - 1));
      for (std::size_t i = 1; i < cs.size(); ++i) EXPECT_LT(cs[i - 1].parts, cs[i].parts);
    }
  }
}

// ----------------------------------------------------------------------------- derivative_unitary

TEST(DerivativeUnitary, IdentityFunctionReturnsPathDerivative) {
  const auto path = exp_path(4, 1);
  const auto f = make_trig(TrigPoly::monomial(1));
  for (int k = 1; k <= 3; ++k) {
    const auto rep = derivative_unitary(f, *path, 0.3, k);
    EXPECT_LT(oracle::rel_err(rep.value, path->deriv(k, 0.3)), 1e-12) << k;
  }
}

TEST(DerivativeUnitary, SquareFollowsProductRule) {
  const auto path = exp_path(3, 2);
  const auto rep = derivative_unitary(make_trig(TrigPoly::monomial(2)), *path, 0.0, 1);
  const Matrix u = path->eval(0.0), du = path->deriv(1, 0.0);
  EXPECT_LT(oracle::rel_err(rep.value, du * u + u * du), 1e-12);
}

TEST(DerivativeUnitary, ValueIsSumOfTerms) {
  const auto path = product_path(4, 3);
  const auto rep = derivative_unitary(make_triangle(3), *path, 0.2, 3);
  EXPECT_EQ(rep.terms.size(), 4u);
  EXPECT_LE(frobenius_norm(rep.value - rep.sum_of_terms()), 1e-13 * std::max(1.0, frobenius_norm(rep.value)));
}

TEST(DerivativeUnitary, TriangleStackMatchesFiniteDifferences) {
  const auto f = make_triangle(3);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto path = product_path(4, seed);
    const auto direct = unitary_function_path(f, path);
    for (int k = 1; k <= 3; ++k) {
      const auto rep = derivative_unitary(f, *path, 0.1, k);
      const double tol = k == 1 ? 1e-6 : 1e-4;
      EXPECT_LE(oracle::rel_err(rep.value, fd_of(direct, 0.1, k)), tol) << "seed=" << seed << " k=" << k;
    }
  }
}

TEST(DerivativeUnitary, TrigPolyMatchesFiniteDifferencesOnExpPath) {
  const auto f = make_trig(random_trig(4, 5));
  const auto path = exp_path(5, 5);
  const auto direct = unitary_function_path(f, path);
  for (int k = 1; k <= 3; ++k) {
    auto rep = derivative_unitary(f, *path, -0.4, k);
    rep.attach_fd(fd_of(direct, -0.4, k));
    EXPECT_LE(rep.rel_error, k == 1 ? 1e-6 : 1e-4) << k;
  }
}

TEST(DerivativeUnitary, LinearInTheFunction) {
  const auto f = make_trig(random_trig(3, 11));
  const auto g = make_triangle(2);
  const Complex alpha(0.7, -1.3);
  const auto h = std::make_shared<LinearCombination>(
      std::vector<std::pair<Complex, CircleFn>>{{alpha, f}, {1.0, g}});
  const auto path = exp_path(4, 12);
  for (int k = 1; k <= 2; ++k) {
    const Matrix lhs = derivative_unitary(h, *path, 0.5, k).value;
    const Matrix rhs = alpha * derivative_unitary(f, *path, 0.5, k).value + derivative_unitary(g, *path, 0.5, k).value;
    EXPECT_LE(frobenius_norm(lhs - rhs), 1e-12 * std::max(1.0, frobenius_norm(lhs))) << k;
  }
}

TEST(DerivativeUnitary, RealFunctionGivesSelfAdjointShadow) {
  // f(z) = sum c_k z^k with c_{-k} = conj(c_k) is real on the circle; f(U)^* = g(U^*) with g_k = c_{-k}.
  const int deg = 3;
  Rng rng(21, "real-trig");
  std::vector<Complex> c(2 * deg + 1);
  c[deg] = rng.gaussian();
  for (int k = 1; k <= deg; ++k) {
    c[deg + k] = rng.complex_gaussian();
    c[deg - k] = std::conj(c[deg + k]);
  }
  std::vector<Complex> rev(c.rbegin(), c.rend());
  const auto f = make_trig(TrigPoly(deg, c));
  const auto g = make_trig(TrigPoly(deg, rev));
  const auto path = exp_path(4, 22);
  const auto adj = std::make_shared<AdjointPath>(path);
  const Matrix d1 = derivative_unitary(f, *path, 0.25, 1).value;
  const Matrix d1_adj = derivative_unitary(g, *adj, 0.25, 1).value;
  EXPECT_LE(frobenius_norm(d1.adjoint() - d1_adj), 1e-10 * frobenius_norm(d1));
  EXPECT_LE(frobenius_norm(d1.adjoint() - d1), 1e-10 * frobenius_norm(d1));
}

TEST(DerivativeUnitary, RejectsInsufficientOrder) {
  const auto path = exp_path(3, 1);
  EXPECT_THROW(derivative_unitary(make_triangle(1), *path, 0.0, 2), DomainError);
  EXPECT_THROW(derivative_unitary(make_triangle(1), *path, 0.0, 0), DomainError);
  const auto sa = std::make_shared<LinearSAPath>(Matrix::identity(3), Matrix::identity(3));
  EXPECT_THROW(derivative_unitary(make_triangle(2), *sa, 0.0, 1), DomainError);
}

// ----------------------------------------------------------------------------- derivative_selfadjoint

TEST(DerivativeSelfAdjoint, PolynomialCases) {
  Rng rng(31);
  const Matrix a0 = random_hermitian(4, rng), k = random_hermitian(4, rng);
  const LinearSAPath path(a0, k);
  const auto x = std::make_shared<LinePolynomial>(std::vector<Complex>{0.0, 1.0});
  EXPECT_LT(oracle::rel_err(derivative_selfadjoint(x, path, 0.7, 1).value, k), 1e-12);
  const auto x2 = std::make_shared<LinePolynomial>(std::vector<Complex>{0.0, 0.0, 1.0});
  EXPECT_LT(oracle::rel_err(derivative_selfadjoint(x2, path, 0.7, 2).value, 2.0 * (k * k)), 1e-12);
  EXPECT_LT(frobenius_norm(derivative_selfadjoint(x2, path, 0.7, 3).value), 1e-11);
}

TEST(DerivativeSelfAdjoint, CayleyPullbackMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed, "sa");
    const auto g = cayley_pullback(make_trig(random_trig(3, seed)));
    const auto path = std::make_shared<LinearSAPath>(random_hermitian(5, rng), random_hermitian(5, rng));
    const auto direct = selfadjoint_function_path(g, path);
    for (int k = 1; k <= 3; ++k) {
      const auto rep = derivative_selfadjoint(g, *path, 0.2, k);
      EXPECT_LE(oracle::rel_err(rep.value, fd_of(direct, 0.2, k)), k == 1 ? 1e-6 : 1e-4) << seed << " " << k;
    }
  }
}

// ----------------------------------------------------------------------------- moi_path_derivative

TEST(MoiPathDerivative, ConstantPathsGiveZero) {
  Rng rng(41);
  const auto a = std::make_shared<LinearSAPath>(random_hermitian(3, rng), Matrix(3));
  const std::vector<PathPtr> s{std::make_shared<LinearSAPath>(random_hermitian(3, rng), Matrix(3))};
  const auto g = cayley_pullback(make_trig(random_trig(2, 4)));
  EXPECT_EQ(frobenius_norm(moi_path_derivative(g, *a, s, 0.0)), 0.0);
}

TEST(MoiPathDerivative, MatchesFiniteDifferences) {
  for (int n = 1; n <= 3; ++n) {
    Rng rng(50 + n, "moi-path");
    const auto a = std::make_shared<LinearSAPath>(random_hermitian(4, rng), random_hermitian(4, rng));
    std::vector<PathPtr> s;
    for (int i = 0; i < n - 1; ++i)
      s.push_back(std::make_shared<LinearSAPath>(random_hermitian(4, rng), random_hermitian(4, rng)));
    const auto g = cayley_pullback(make_trig(random_trig(3, 60 + n)));
    auto value = [&](double t) { return moi_path_value(g, *a, s, t); };
    for (double t : {0.0, 0.35})
      EXPECT_LE(oracle::rel_err(moi_path_derivative(g, *a, s, t), fd_of(value, t, 1)), 1e-6) << n << " " << t;
  }
}

TEST(MoiPathDerivative, QuadraticByHandAtDimensionTwo) {
  // g(x) = x^2: g^{[1]}(x, y) = x + y and g^{[2]} = 1, so
  // Gamma^{A,A}(g^{[1]})(S) = A S + S A and the derivative is A'S + A S' + S'A + S A'.
  Rng rng(71);
  const auto a = std::make_shared<LinearSAPath>(random_hermitian(2, rng), random_hermitian(2, rng));
  const auto sp = std::make_shared<LinearSAPath>(random_hermitian(2, rng), random_hermitian(2, rng));
  const auto g = std::make_shared<LinePolynomial>(std::vector<Complex>{0.0, 0.0, 1.0});
  const double t = 0.4;
  const Matrix av = a->eval(t), ad = a->deriv(1, t), sv = sp->eval(t), sd = sp->deriv(1, t);
  const Matrix hand = ad * sv + av * sd + sd * av + sv * ad;
  EXPECT_LE(oracle::rel_err(moi_path_derivative(g, *a, {sp}, t), hand), 1e-12);
}

// ----------------------------------------------------------------------------- perturbation identities

TEST(PerturbationIdentity, EqualUnitariesGiveZero) {
  Rng rng(81);
  const Matrix u = haar_unitary(3, rng);
  const auto rec = perturbation_identity(make_trig(random_trig(3, 1)), {haar_unitary(3, rng)}, u, u,
                                         random_inputs(3, 1, rng), 1);
  EXPECT_EQ(rec.lhs_norm, 0.0);
  EXPECT_EQ(rec.rhs_norm, 0.0);
  EXPECT_TRUE(rec.pass);
}

TEST(PerturbationIdentity, FirstOrder) {
  Rng rng(82);
  const Matrix u = haar_unitary(4, rng), v = haar_unitary(4, rng);
  const auto f = make_trig(random_trig(3, 2));
  const auto rec = perturbation_identity(f, {}, u, v, {}, 1, 2.0, 1e-10);
  EXPECT_LE(rec.rel_err, 1e-10);
  const Matrix direct = apply_function([&](Complex z) { return (*f)(z); }, unitary_eig(u)) -
                        apply_function([&](Complex z) { return (*f)(z); }, unitary_eig(v));
  EXPECT_NEAR(rec.lhs_norm, schatten_norm(direct, 2.0), 1e-12 * rec.lhs_norm);
}

TEST(PerturbationIdentity, AllInsertionIndicesTriangleStack) {
  const auto f = make_triangle(3);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Rng rng(seed, "pert");
    std::vector<Matrix> others{haar_unitary(4, rng), haar_unitary(4, rng)};
    const Matrix u = haar_unitary(4, rng), v = haar_unitary(4, rng);
    const auto ks = random_inputs(4, 2, rng);
    for (int i = 1; i <= 3; ++i) {
      const auto rec = perturbation_identity(f, others, u, v, ks, i, 2.0, 1e-10);
      EXPECT_TRUE(rec.pass) << "seed=" << seed << " i=" << i << " rel=" << rec.rel_err;
    }
  }
}

TEST(TelescopingIdentity, RandomCases) {
  Rng rng(91);
  const Matrix u = haar_unitary(3, rng), v = haar_unitary(3, rng);
  EXPECT_EQ(telescoping_identity(make_trig(random_trig(2, 3)), u, u, random_inputs(3, 1, rng)).lhs_norm, 0.0);
  for (int n = 1; n <= 3; ++n) {
    const auto ks = random_inputs(3, n - 1, rng);
    EXPECT_LE(telescoping_identity(make_trig(random_trig(4, 9)), u, v, ks).rel_err, 1e-10) << n;
    EXPECT_LE(telescoping_identity(make_triangle(3), u, v, ks, 4.0).rel_err, 1e-10) << n;
  }
}

TEST(TelescopingIdentity, AgreesWithRepeatedPerturbationSteps) {
  // For n = 2: Gamma^{U,U} - Gamma^{V,V} = (Gamma^{U,U} - Gamma^{U,V}) + (Gamma^{U,V} - Gamma^{V,V}).
  Rng rng(92);
  const Matrix u = haar_unitary(3, rng), v = haar_unitary(3, rng);
  const auto ks = random_inputs(3, 1, rng);
  const auto f = make_trig(random_trig(3, 7));
  const auto a = perturbation_identity(f, {u}, u, v, ks, 2);
  const auto b = perturbation_identity(f, {v}, u, v, ks, 1);
  const auto tel = telescoping_identity(f, u, v, ks);
  EXPECT_TRUE(a.pass);
  EXPECT_TRUE(b.pass);
  EXPECT_TRUE(tel.pass);
}

TEST(LipschitzReport, IdenticalTuplesGiveZero) {
  Rng rng(101);
  const std::vector<Matrix> us{haar_unitary(3, rng), haar_unitary(3, rng)};
  const auto rep = lipschitz_bound_report(make_trig(random_trig(3, 1)), us, us, 2.0, 5, rng);
  EXPECT_EQ(rep.max, 0.0);
}

TEST(LipschitzReport, StableAcrossPerturbationScales) {
  const auto f = make_trig(random_trig(3, 4));
  Rng rng(102);
  const std::vector<Matrix> us{haar_unitary(4, rng), haar_unitary(4, rng)};
  const Matrix h1 = random_hermitian(4, rng), h2 = random_hermitian(4, rng);
  std::vector<double> ratios;
  for (double eps : {1e-2, 1e-3}) {
    const std::vector<Matrix> vs{expm_hermitian(eps * h1) * us[0], expm_hermitian(eps * h2) * us[1]};
    Rng probe(103, "probe");
    ratios.push_back(lipschitz_bound_report(f, us, vs, 2.0, 20, probe).max);
  }
  EXPECT_GT(ratios[0], 0.0);
  EXPECT_LE(std::max(ratios[0], ratios[1]) / std::min(ratios[0], ratios[1]), 2.0);
}

TEST(LipschitzReport, DimensionSweep) {
  const auto f = make_triangle(2);
  std::vector<double> ratios;
  for (std::size_t dim : {3u, 6u}) {
    Rng rng(104, "dim" + std::to_string(dim));
    const std::vector<Matrix> us{haar_unitary(dim, rng), haar_unitary(dim, rng)};
    const std::vector<Matrix> vs{expm_hermitian(random_hermitian(dim, rng, 0.05)) * us[0],
                                 expm_hermitian(random_hermitian(dim, rng, 0.05)) * us[1]};
    ratios.push_back(lipschitz_bound_report(f, us, vs, 2.0, 20, rng).max);
  }
  EXPECT_LE(ratios[1], 2.0 * ratios[0]);
}

// ----------------------------------------------------------------------------- Taylor remainders

TEST(TaylorRemainder, TrivialCases) {
  const auto path = exp_path(3, 111);
  const auto f = make_trig(random_trig(3, 2));
  const auto fu = unitary_function_path(f, path);
  EXPECT_LT(oracle::rel_err(taylor_remainder_direct(f, path, 0.4, 1), fu(0.4) - fu(0.0)), 1e-14);
  EXPECT_EQ(frobenius_norm(taylor_remainder_direct(f, path, 0.0, 3)), 0.0);
  EXPECT_LE(oracle::rel_err(taylor_remainder_moi(f, path, 0.4, 1), fu(0.4) - fu(0.0)), 1e-12);
}

TEST(TaylorRemainder, IdentityFunctionOnScalarPathIsExponentialTail) {
  const double a = 0.8;
  const Complex u0 = std::polar(1.0, 0.3);
  Matrix am(1), um(1);
  am(0, 0) = a;
  um(0, 0) = u0;
  const auto path = std::make_shared<ExpPath>(am, um);
  const auto f = make_trig(TrigPoly::monomial(1));
  const double t = 0.6;
  for (int n = 1; n <= 4; ++n) {
    Complex tail = std::exp(kI * a * t) - 1.0;
    Complex term = 1.0;
    for (int k = 1; k < n; ++k) {
      term *= kI * a * t / double(k);
      tail -= term;
    }
    tail *= u0;
    EXPECT_LE(std::abs(taylor_remainder_direct(f, path, t, n)(0, 0) - tail), 1e-14 + 1e-12 * std::abs(tail)) << n;
  }
}

TEST(TaylorRemainder, RepresentationMatchesDirect) {
  for (int n = 1; n <= 3; ++n) {
    const auto e = exp_path(3, 120 + n);
    const auto pe = product_path(4, 130 + n);
    const auto trig = make_trig(random_trig(4, n));
    const auto tri = make_triangle(3);
    for (double t : {0.3, 1.0}) {
      EXPECT_LE(oracle::rel_err(taylor_remainder_moi(trig, e, t, n), taylor_remainder_direct(trig, e, t, n)), 1e-10)
          << n << " " << t;
      EXPECT_LE(oracle::rel_err(taylor_remainder_moi(tri, pe, t, n), taylor_remainder_direct(tri, pe, t, n)), 1e-10)
          << n << " " << t;
    }
  }
}

TEST(TaylorRemainder, OrderOfVanishing) {
  const auto f = make_triangle(3);
  const auto path = exp_path(4, 140, 1.0);
  std::vector<double> ts, norms;
  for (int i = 0; i < 8; ++i) ts.push_back(std::pow(10.0, -3.0 + 2.0 * i / 7.0));
  for (int n = 1; n <= 3; ++n) {
    norms.clear();
    for (double t : ts) norms.push_back(schatten_norm(taylor_remainder_direct(f, path, t, n), 2.0));
    EXPECT_GE(loglog_slope(ts, norms), n - 0.15) << n;
  }
}

TEST(RemainderEstimate, ZeroGenerator) {
  Rng rng(150);
  const auto rep = remainder_estimate_report(make_trig(random_trig(4, 1)), Matrix(4), haar_unitary(4, rng), 4.0, 2);
  EXPECT_EQ(rep.remainder_norm, 0.0);
  EXPECT_EQ(rep.ratio, 0.0);
}

TEST(RemainderEstimate, ScalingExponent) {
  Rng rng(151);
  const Matrix a = random_hermitian(4, rng, 0.1, 4.0);
  const Matrix u0 = haar_unitary(4, rng);
  const auto sw = remainder_scale_sweep(make_trig(random_trig(4, 2)), a, u0, 4.0, 2, {0.25, 0.5, 1.0});
  EXPECT_GE(sw.slope, 1.8);
  EXPECT_LE(sw.slope, 2.2);
}

TEST(RemainderEstimate, TriangleEnsembleFinite) {
  const auto f = make_triangle(2);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed, "remainder");
    const auto rep = remainder_estimate_report(f, random_hermitian(4, rng, 1.0, 4.0), haar_unitary(4, rng), 4.0, 2);
    EXPECT_FALSE(rep.quasi);
    EXPECT_TRUE(std::isfinite(rep.ratio));
    worst = std::max(worst, rep.ratio);
  }
  EXPECT_GT(worst, 0.0);
  const auto q = remainder_estimate_report(f, Matrix::identity(2), Matrix::identity(2), 1.0, 2);
  EXPECT_TRUE(q.quasi);
}

// ----------------------------------------------------------------------------- truncation

TEST(TruncationIdentity, FullProjectionIsTrivial) {
  Rng rng(161);
  const Matrix v = haar_unitary(4, rng);
  const ProjectionTruncation tr(v, 100000);
  ASSERT_TRUE(tr.covers_spectrum());
  const auto rec = truncation_identity(make_triangle(2), random_hermitian(4, rng), tr, random_inputs(4, 2, rng));
  EXPECT_TRUE(rec.pass) << rec.rel_err;
}

TEST(TruncationIdentity, RandomInputsAcrossArcs) {
  const auto f = make_trig(random_trig(3, 5));
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Rng rng(seed, "trunc-id");
    const Matrix v = haar_unitary(4, rng);
    const Matrix a = random_hermitian(4, rng);
    for (int n = 1; n <= 3; ++n) {
      const auto ks = random_inputs(4, n, rng);
      for (int j : {2, 3, 5, 20}) {
        const ProjectionTruncation tr(v, j);
        if (tr.rank() == 0) continue;
        const auto rec = truncation_identity(f, a, tr, ks);
        EXPECT_TRUE(rec.pass) << "seed=" << seed << " n=" << n << " j=" << j << " rel=" << rec.rel_err;
      }
    }
  }
}

TEST(TruncationConvergence, DecaysToZero) {
  Rng rng(171);
  std::vector<double> args{0.4, 2.0, 4.1, 0.95 * 2.0 * kPi};
  const Matrix v = spectral_unitary(args, rng);
  const auto f = make_trig(random_trig(3, 8));
  std::vector<int> js;
  for (int j = 10; j <= 40; ++j) js.push_back(j);
  for (int n = 1; n <= 2; ++n) {
    const auto sw = truncation_convergence(f, v, random_inputs(4, n, rng), js);
    EXPECT_TRUE(sw.nonincreasing()) << n;
    EXPECT_GT(sw.errors.front(), 0.0);
    EXPECT_LE(sw.errors.back(), 1e-10);
    EXPECT_EQ(sw.ranks.back(), 4u);
  }
}

// ----------------------------------------------------------------------------- Cayley consistency

TEST(CayleyConsistency, IdentityFunction) {
  const auto path = exp_path(3, 181);
  const auto rec = cayley_consistency(make_trig(TrigPoly::monomial(1)), path, 0.0, 1);
  EXPECT_TRUE(rec.pass) << rec.rel_err;
}

TEST(CayleyConsistency, SmoothAndTriangle) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto path = exp_path(3, 190 + seed);
    EXPECT_TRUE(cayley_consistency(make_trig(random_trig(3, seed)), path, 0.0, 2).pass);
    const auto rec = cayley_consistency(make_triangle(2), path, 0.0, 2, 2.0, 1e-7);
    EXPECT_TRUE(rec.pass) << rec.rel_err;
  }
}

TEST(CayleyConsistency, GapFailureIsReported) {
  Matrix u = Matrix::identity(2);
  u(1, 1) = -1.0;
  const auto path = std::make_shared<ExpPath>(Matrix(2), u);
  EXPECT_THROW(cayley_consistency(make_trig(TrigPoly::monomial(1)), path, 0.0, 1, 2.0, 1e-8, 0.0), DomainError);
}
