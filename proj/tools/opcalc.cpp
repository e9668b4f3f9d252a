#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "opcalc/opcalc.hpp"

using namespace opcalc;

namespace {

constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

/// "5..50" (inclusive range) or "4,8,16".
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  const auto dots = s.find("..");
  try {
    if (dots != std::string::npos) {
      const int lo = std::stoi(s.substr(0, dots)), hi = std::stoi(s.substr(dots + 2));
      if (hi < lo) throw InputError("empty range '" + s + "'");
      for (int v = lo; v <= hi; ++v) out.push_back(v);
      return out;
    }
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoi(item));
  } catch (const std::logic_error&) {
    throw InputError("cannot parse integer list '" + s + "'");
  }
  if (out.empty()) throw InputError("empty integer list");
  return out;
}

void check_range(const char* what, long v, long lo, long hi) {
  if (v < lo || v > hi)
    throw InputError(std::string(what) + " = " + std::to_string(v) + " is outside the supported range [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

/// OPCALC_SEED, when set, replaces the seed given on the command line.
std::uint64_t effective_seed(std::uint64_t seed) {
  if (const char* env = std::getenv("OPCALC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::logic_error&) {
      throw InputError(std::string("OPCALC_SEED: not an unsigned integer: '") + env + "'");
    }
  }
  return seed;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + out + "' failed");
}

// ----------------------------------------------------------------------------- verify

struct VerifyArgs {
  SuiteConfig cfg;
};

int cmd_verify(VerifyArgs& a) {
  a.cfg.seed = effective_seed(a.cfg.seed);
  const auto res = run_suite(a.cfg);
  emit(format_report(res, a.cfg.format), a.cfg.out);
  std::cerr << "opcalc verify: " << res.records.size() << " records, " << res.failures() << " failed\n";
  return res.exit_status() == 0 ? 0 : kExitFailures;
}

// ----------------------------------------------------------------------------- derivative

struct DerivativeArgs {
  std::string path = "exp";
  std::size_t dim = 4;
  int k = 1;
  std::string f = "trig:3";
  double t = 0.0;
  std::uint64_t seed = 7;
  double norm_scale = 1.5;
};

int cmd_derivative(DerivativeArgs& a) {
  a.seed = effective_seed(a.seed);
  PathSpec spec;
  if (a.path.rfind("json:", 0) == 0) {
    spec = path_spec_from_json(read_json_file(a.path.substr(5)));
  } else {
    spec.kind = a.path;
    spec.dim = a.dim;
    spec.seed = a.seed;
    spec.norm_scale = a.norm_scale;
  }
  check_range("dim", long(spec.dim), 1, long(SuiteConfig::kMaxDim));
  check_range("k", a.k, 1, SuiteConfig::kMaxOrder);
  Rng rng(a.seed, "cli/f");
  const CircleFn f = parse_function(a.f, rng);
  const PathPtr path = spec.build();

  DerivativeReport rep;
  if (path->flavor() == PathFlavor::unitary) {
    rep = derivative_unitary(f, *path, a.t, a.k);
    rep.attach_fd(fd_derivative(unitary_function_path(f, path), a.t, a.k));
  } else {
    const LineFn g = cayley_pullback(f);
    rep = derivative_selfadjoint(g, *path, a.t, a.k);
    rep.attach_fd(fd_derivative(selfadjoint_function_path(g, path), a.t, a.k));
  }

  std::ostringstream os;
  os << "# derivative path=" << path->name() << " dim=" << spec.dim << " k=" << a.k << " f=" << f->name()
     << " t=" << a.t << " seed=" << spec.seed << "\n";
  os << "# rel_error_vs_fd=" << num(rep.rel_error) << "\n";
  os << "m,composition,weight,term_norm_2\n";
  for (const auto& term : rep.terms)
    os << term.composition.length() << ",\"" << term.composition.label() << "\"," << term.composition.weight() << ","
       << num(schatten_norm(term.contribution, 2.0)) << "\n";
  os << "\ni,j,value_re,value_im,fd_re,fd_im\n";
  const Matrix& fd = *rep.fd_reference;
  for (std::size_t i = 0; i < rep.value.dim(); ++i)
    for (std::size_t j = 0; j < rep.value.dim(); ++j)
      os << i << "," << j << "," << num(rep.value(i, j).real()) << "," << num(rep.value(i, j).imag()) << ","
         << num(fd(i, j).real()) << "," << num(fd(i, j).imag()) << "\n";
  std::cout << os.str();
  return 0;
}

// ----------------------------------------------------------------------------- remainder

struct RemainderArgs {
  int n = 2;
  double p = 4.0;
  std::vector<double> scales{0.25, 0.5, 1.0};
  std::size_t dim = 4;
  std::string f = "trig:4";
  std::uint64_t seed = 7;
  double norm_scale = 0.1;
  int ensemble = 20;
};

int cmd_remainder(RemainderArgs& a) {
  a.seed = effective_seed(a.seed);
  check_range("dim", long(a.dim), 1, long(SuiteConfig::kMaxDim));
  check_range("n", a.n, 1, SuiteConfig::kMaxOrder);
  check_range("ensemble", a.ensemble, 0, 10000);
  if (!(a.p > 0.0)) throw InputError("p must be > 0");
  if (a.scales.size() < 2) throw InputError("need at least two scales");
  Rng frng(a.seed, "cli/f");
  const CircleFn f = parse_function(a.f, frng);

  EnsembleSpec spec;
  spec.dim = a.dim;
  spec.seed = a.seed;
  spec.p = a.p;
  spec.perturbation_scale = a.norm_scale;
  const Matrix gen = spec.hermitian("cli/A"), u0 = spec.unitary("cli/U0");

  std::ostringstream os;
  os << "# remainder n=" << a.n << " p=" << a.p << " dim=" << a.dim << " f=" << f->name() << " seed=" << a.seed
     << " norm_scale=" << a.norm_scale << " norm_exponent=" << a.p / a.n << (a.p / a.n < 1.0 ? " (quasi-norm)" : "")
     << "\n";
  os << "scale,remainder_norm,denominator,ratio\n";
  std::vector<double> norms;
  for (double s : a.scales) {
    const auto rep = remainder_estimate_report(f, Complex(s) * gen, u0, a.p, a.n);
    norms.push_back(rep.remainder_norm);
    os << s << "," << num(rep.remainder_norm) << "," << num(rep.denominator) << "," << num(rep.ratio) << "\n";
  }
  os << "# fitted_exponent=" << num(loglog_slope(a.scales, norms)) << "\n";
  if (a.ensemble > 0) {
    os << "\nensemble_seed,ratio\n";
    double worst = 0.0;
    bool finite = true;
    for (int s = 1; s <= a.ensemble; ++s) {
      EnsembleSpec e = spec;
      e.seed = a.seed + std::uint64_t(s);
      const auto rep = remainder_estimate_report(f, e.hermitian("cli/A"), e.unitary("cli/U0"), a.p, a.n);
      finite = finite && std::isfinite(rep.ratio);
      worst = std::max(worst, rep.ratio);
      os << e.seed << "," << num(rep.ratio) << "\n";
    }
    os << "# ensemble_max_ratio=" << num(worst) << " finite=" << (finite ? "true" : "false") << "\n";
  }
  std::cout << os.str();
  return 0;
}

// ----------------------------------------------------------------------------- smooth

struct SmoothArgs {
  std::string family = "triangle:2";
  std::string js = "4,8,16,32,64";
  std::string method = "fejer";
  std::uint64_t seed = 7;
  int grid = 2048;
};

int cmd_smooth(SmoothArgs& a) {
  a.seed = effective_seed(a.seed);
  Rng rng(a.seed, "cli/f");
  const CircleFn f = parse_function(a.family, rng);
  const auto js = parse_int_list(a.js);
  if (a.method != "fejer" && a.method != "steklov") throw InputError("method must be fejer or steklov");
  check_range("grid", a.grid, 16, 1 << 16);
  const int kmax = std::min(f->order(), SuiteConfig::kMaxOrder);
  std::ostringstream os;
  os << "# smooth f=" << f->name() << " method=" << a.method << " grid=" << a.grid << "\n";
  os << "j,k,sup_distance,sup_norm_smoothed,sup_norm_original\n";
  std::vector<double> orig(kmax + 1);
  for (int k = 0; k <= kmax; ++k) orig[k] = sup_norm(*f, k, a.grid);
  for (int j : js) {
    check_range("j", j, 1, 4096);
    const CircleFn fj = a.method == "fejer" ? make_trig(fejer_smooth(*f, j)) : steklov_smooth(f, j);
    for (int k = 0; k <= kmax; ++k)
      os << j << "," << k << "," << num(sup_distance(*f, *fj, k, a.grid)) << "," << num(sup_norm(*fj, k, a.grid))
         << "," << num(orig[k]) << "\n";
  }
  std::cout << os.str();
  return 0;
}

// ----------------------------------------------------------------------------- truncate

struct TruncateArgs {
  std::size_t dim = 4;
  std::string js = "5..50";
  int n = 1;
  double p = 2.0;
  std::string f = "trig:3";
  std::uint64_t seed = 7;
  std::string spectrum = "edge";
};

int cmd_truncate(TruncateArgs& a) {
  a.seed = effective_seed(a.seed);
  check_range("dim", long(a.dim), 1, long(SuiteConfig::kMaxDim));
  check_range("n", a.n, 1, SuiteConfig::kMaxOrder);
  const auto js = parse_int_list(a.js);
  for (int j : js) check_range("j", j, 1, 1 << 20);
  Rng frng(a.seed, "cli/f");
  const CircleFn f = parse_function(a.f, frng);
  Rng rng(a.seed, "cli/truncate");
  Matrix v;
  if (a.spectrum == "edge") {
    std::vector<double> args(a.dim);
    for (auto& x : args) x = rng.uniform(0.0, 2.0 * kPi);
    args.back() = 0.95 * 2.0 * kPi;
    v = spectral_unitary(args, rng);
  } else if (a.spectrum == "haar") {
    v = haar_unitary(a.dim, rng);
  } else {
    throw InputError("spectrum must be edge or haar");
  }
  std::vector<Matrix> ks;
  for (int i = 0; i < a.n; ++i) ks.push_back(gaussian_matrix(a.dim, rng));
  const auto sw = truncation_convergence(f, v, ks, js, a.p);
  std::ostringstream os;
  os << "# truncate dim=" << a.dim << " n=" << a.n << " p=" << a.p << " f=" << f->name() << " spectrum=" << a.spectrum
     << " seed=" << a.seed << "\n";
  os << "j,rank,error\n";
  for (std::size_t i = 0; i < sw.js.size(); ++i) os << sw.js[i] << "," << sw.ranks[i] << "," << num(sw.errors[i]) << "\n";
  os << "# nonincreasing=" << (sw.nonincreasing() ? "true" : "false") << " final_error=" << num(sw.errors.back())
     << "\n";
  std::cout << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opcalc: higher-order derivatives of operator functions via multiple operator integrals"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run the identity and finite-difference suite and write a report");
  verify->add_option("--dims", va.cfg.dims, "Matrix dimensions")->delimiter(',');
  verify->add_option("--orders", va.cfg.orders, "Orders n")->delimiter(',');
  verify->add_option("--p", va.cfg.ps, "Schatten exponents for the error norms")->delimiter(',');
  verify->add_option("--families", va.cfg.families, "Function families: trig, triangle")->delimiter(',');
  verify->add_option("--identities", va.cfg.identities,
                     "Identities: perturbation, telescoping, taylor, truncation, derivative")
      ->delimiter(',');
  verify->add_option("--trials", va.cfg.trials, "Trials per cell");
  verify->add_option("--seed", va.cfg.seed, "Master seed (OPCALC_SEED overrides)");
  verify->add_option("--tol-identity", va.cfg.tol_identity, "Relative tolerance for exact identities");
  verify->add_option("--tol-fd1", va.cfg.tol_fd1, "Relative tolerance for first-derivative checks");
  verify->add_option("--tol-fd2", va.cfg.tol_fd2, "Relative tolerance for higher-derivative checks");
  verify->add_option("--format", va.cfg.format, "Report format: csv or json");
  verify->add_option("--out", va.cfg.out, "Report path (stdout when omitted)");
  verify->add_option("--jobs", va.cfg.jobs, "Worker threads");

  DerivativeArgs da;
  auto* deriv = app.add_subcommand("derivative", "k-th derivative of t -> f(X(t)) with its per-term breakdown");
  deriv->add_option("--path", da.path, "exp, linear_sa, product_exp or json:PATH");
  deriv->add_option("--dim", da.dim, "Matrix dimension");
  deriv->add_option("--k", da.k, "Derivative order");
  deriv->add_option("--f", da.f, "Function: z, trig:D, triangle:N or json:PATH");
  deriv->add_option("--t", da.t, "Evaluation time");
  deriv->add_option("--seed", da.seed, "Seed (OPCALC_SEED overrides)");
  deriv->add_option("--norm-scale", da.norm_scale, "Frobenius norm of the path generators");

  RemainderArgs ra;
  auto* rem = app.add_subcommand("remainder", "Taylor remainder of f(e^{itA}U0) at t = 1 under A -> sA");
  rem->add_option("--n", ra.n, "Taylor order");
  rem->add_option("--p", ra.p, "Schatten exponent; the remainder is measured in the p/n norm");
  rem->add_option("--scales", ra.scales, "Scales s")->delimiter(',');
  rem->add_option("--dim", ra.dim, "Matrix dimension");
  rem->add_option("--f", ra.f, "Function: z, trig:D, triangle:N or json:PATH");
  rem->add_option("--seed", ra.seed, "Seed (OPCALC_SEED overrides)");
  rem->add_option("--norm-scale", ra.norm_scale, "Schatten-p norm of A");
  rem->add_option("--ensemble", ra.ensemble, "Number of extra seeds for the ratio ensemble");

  SmoothArgs sa;
  auto* smooth = app.add_subcommand("smooth", "Sup-distances of Fejer or Steklov approximants over a j sweep");
  smooth->add_option("--family", sa.family, "Function: z, trig:D, triangle:N or json:PATH");
  smooth->add_option("--j", sa.js, "Smoothing indices, e.g. 4,8,16 or 4..64");
  smooth->add_option("--method", sa.method, "fejer or steklov");
  smooth->add_option("--seed", sa.seed, "Seed (OPCALC_SEED overrides)");
  smooth->add_option("--grid", sa.grid, "Sampling grid size on the circle");

  TruncateArgs ta;
  auto* trunc = app.add_subcommand("truncate", "Spectral truncation error over a j sweep");
  trunc->add_option("--dim", ta.dim, "Matrix dimension");
  trunc->add_option("--j", ta.js, "Truncation indices, e.g. 5..50");
  trunc->add_option("--n", ta.n, "Number of inputs (order of the divided difference)");
  trunc->add_option("--p", ta.p, "Schatten exponent");
  trunc->add_option("--f", ta.f, "Function: z, trig:D, triangle:N or json:PATH");
  trunc->add_option("--seed", ta.seed, "Seed (OPCALC_SEED overrides)");
  trunc->add_option("--spectrum", ta.spectrum, "edge (one eigenvalue at 0.95 turn) or haar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(va);
    if (*deriv) return cmd_derivative(da);
    if (*rem) return cmd_remainder(ra);
    if (*smooth) return cmd_smooth(sa);
    if (*trunc) return cmd_truncate(ta);
  } catch (const ConfigError& e) {
    std::cerr << "opcalc: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "opcalc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "opcalc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "opcalc: error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
