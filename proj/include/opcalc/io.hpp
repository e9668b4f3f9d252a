#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "opcalc/paths.hpp"

namespace opcalc {

/// Malformed input given to the command-line layer or its file formats.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// TrigPoly: {"degree": d, "coeffs": [[k, re, im], ...]}
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json trig_to_json(const TrigPoly& p) {
  nlohmann::ordered_json j;
  j["degree"] = p.degree();
  auto coeffs = nlohmann::ordered_json::array();
  for (int k = -p.degree(); k <= p.degree(); ++k) {
    const Complex c = p.coeff(k);
    if (c != Complex{}) coeffs.push_back({k, c.real(), c.imag()});
  }
  j["coeffs"] = std::move(coeffs);
  return j;
}

/// Unlisted coefficients are zero; listed indices must satisfy |k| <= degree.
inline TrigPoly trig_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("degree").get<int>();
    if (d < 0) throw InputError("TrigPoly JSON: degree must be >= 0");
    std::vector<Complex> c(2 * d + 1);
    for (const auto& e : j.at("coeffs")) {
      if (!e.is_array() || e.size() != 3) throw InputError("TrigPoly JSON: each coefficient is [k, re, im]");
      const int k = e[0].get<int>();
      if (std::abs(k) > d) throw InputError("TrigPoly JSON: index " + std::to_string(k) + " exceeds degree");
      c[k + d] += Complex(e[1].get<double>(), e[2].get<double>());
    }
    return TrigPoly(d, std::move(c));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("TrigPoly JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Path specification: {"kind": "exp"|"linear_sa"|"product_exp", "dim": N, "seed": s, "norm_scale": r}
// ---------------------------------------------------------------------------

struct PathSpec {
  std::string kind = "exp";
  std::size_t dim = 4;
  std::uint64_t seed = 7;
  double norm_scale = 1.5;

  PathPtr build() const { return make_path(kind, dim, seed, norm_scale); }
};

inline nlohmann::ordered_json path_spec_to_json(const PathSpec& s) {
  nlohmann::ordered_json j;
  j["kind"] = s.kind;
  j["dim"] = s.dim;
  j["seed"] = s.seed;
  j["norm_scale"] = s.norm_scale;
  return j;
}

/// Missing fields keep their defaults.
inline PathSpec path_spec_from_json(const nlohmann::json& j) {
  try {
    PathSpec s;
    s.kind = j.value("kind", s.kind);
    s.dim = j.value("dim", s.dim);
    s.seed = j.value("seed", s.seed);
    s.norm_scale = j.value("norm_scale", s.norm_scale);
    if (s.kind != "exp" && s.kind != "linear_sa" && s.kind != "product_exp")
      throw InputError("path JSON: unknown kind '" + s.kind + "'");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("path JSON: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Function families by name
// ---------------------------------------------------------------------------

/// TrigPoly with complex Gaussian coefficients damped by 1/(1 + |k|).
inline TrigPoly random_trig(int degree, Rng& rng) {
  std::vector<Complex> c(2 * degree + 1);
  for (int k = -degree; k <= degree; ++k) c[k + degree] = rng.complex_gaussian() / (1.0 + std::abs(k));
  return TrigPoly(degree, std::move(c));
}

/**
 * Circle function from a family spec:
 *   z            the identity,
 *   trig:D       random TrigPoly of degree D drawn from `rng`,
 *   triangle:N   TriangleStack of order N,
 *   json:PATH    TrigPoly read from a JSON file.
 */
inline CircleFn parse_function(const std::string& spec, Rng& rng) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto as_int = [&](int lo, int hi) {
    int v = 0;
    std::istringstream is(arg);
    if (!(is >> v) || !is.eof() || v < lo || v > hi)
      throw InputError("function '" + spec + "': expected an integer in [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    return v;
  };
  if (head == "z" && arg.empty()) return make_trig(TrigPoly::monomial(1));
  if (head == "trig") return make_trig(random_trig(as_int(0, 64), rng));
  if (head == "triangle") return make_triangle(as_int(1, 16));
  if (head == "json") return make_trig(trig_from_json(read_json_file(arg)));
  throw InputError("unknown function family '" + spec + "' (expected z, trig:D, triangle:N or json:PATH)");
}

}  // namespace opcalc
