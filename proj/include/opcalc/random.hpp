#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "opcalc/linalg.hpp"

namespace opcalc {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a cell label, so cells get streams independent of their position in a list.
inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/**
 * Seedable 64-bit generator (mt19937_64).
 *
 * Streams are split by hashing a label into the seed: Rng(seed, "cell/3") never depends on
 * which other cells exist, so adding cells to a suite leaves existing draws untouched.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::string_view stream) : eng_(splitmix64(seed ^ splitmix64(hash_label(stream)))) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double gaussian() { return normal_(eng_); }
  Complex complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
  }
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Matrix gaussian_matrix(std::size_t n, Rng& rng) {
  Matrix m(n);
  for (auto& z : m.data()) z = rng.complex_gaussian();
  return m;
}

/// Random Hermitian matrix rescaled to Schatten-p norm `scale` (scale <= 0 leaves the raw draw).
inline Matrix random_hermitian(std::size_t n, Rng& rng, double scale = 1.0, double p = 2.0) {
  Matrix g = gaussian_matrix(n, rng);
  Matrix h = 0.5 * (g + g.adjoint());
  if (scale > 0.0) {
    const double nrm = schatten_norm(h, p);
    if (nrm > 0.0) h *= scale / nrm;
  }
  return h;
}

/// Haar-like unitary: modified Gram-Schmidt QR of a complex Gaussian matrix. MGS yields a
/// positive real R diagonal, which is the phase normalization.
inline Matrix haar_unitary(std::size_t n, Rng& rng) {
  const Matrix g = gaussian_matrix(n, rng);
  std::vector<std::vector<Complex>> cols(n, std::vector<Complex>(n));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r) cols[c][r] = g(r, c);
  for (std::size_t c = 0; c < n; ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < c; ++k) {
        Complex proj{};
        for (std::size_t r = 0; r < n; ++r) proj += std::conj(cols[k][r]) * cols[c][r];
        for (std::size_t r = 0; r < n; ++r) cols[c][r] -= proj * cols[k][r];
      }
    double nrm = 0.0;
    for (const auto& z : cols[c]) nrm += std::norm(z);
    nrm = std::sqrt(nrm);
    for (auto& z : cols[c]) z /= nrm;
  }
  Matrix q(n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r) q(r, c) = cols[c][r];
  return q;
}

/// Unitary with prescribed eigenvalue arguments (radians), in a Haar-random eigenbasis.
inline Matrix spectral_unitary(std::span<const double> args, Rng& rng) {
  const std::size_t n = args.size();
  const Matrix w = haar_unitary(n, rng);
  std::vector<Complex> lam(n);
  for (std::size_t i = 0; i < n; ++i) lam[i] = std::polar(1.0, args[i]);
  return w * Matrix::diagonal(lam) * w.adjoint();
}

enum class UnitaryKind { haar_like, spectral };

/// Reproducible ensemble description: identical spec gives bit-identical matrices.
struct EnsembleSpec {
  std::size_t dim = 4;
  std::uint64_t seed = 7;
  UnitaryKind unitary_kind = UnitaryKind::haar_like;
  std::vector<double> spectral_args;  // used when unitary_kind == spectral
  double perturbation_scale = 1.0;    // Schatten-p norm target for Hermitian draws
  double p = 2.0;

  Matrix unitary(std::string_view stream) const {
    Rng rng(seed, stream);
    if (unitary_kind == UnitaryKind::spectral) {
      if (spectral_args.size() != dim) throw DomainError("EnsembleSpec: spectral_args size must equal dim");
      return spectral_unitary(spectral_args, rng);
    }
    return haar_unitary(dim, rng);
  }
  Matrix hermitian(std::string_view stream) const {
    Rng rng(seed, stream);
    return random_hermitian(dim, rng, perturbation_scale, p);
  }
  Matrix general(std::string_view stream) const {
    Rng rng(seed, stream);
    return gaussian_matrix(dim, rng);
  }
};

}  // namespace opcalc
