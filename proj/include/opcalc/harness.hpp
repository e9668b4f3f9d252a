#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/io.hpp"

namespace opcalc {

/// Invalid suite configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Identities known to the suite runner.
inline const std::vector<std::string>& suite_identities() {
  static const std::vector<std::string> names{"perturbation", "telescoping", "taylor", "truncation", "derivative"};
  return names;
}

struct SuiteConfig {
  std::vector<std::size_t> dims{2, 3, 4, 6};
  std::vector<int> orders{1, 2, 3};
  std::vector<double> ps{2.0};
  std::vector<std::string> families{"trig", "triangle"};
  std::vector<std::string> identities = suite_identities();
  int trials = 50;
  std::uint64_t seed = 7;
  double tol_identity = 1e-10;
  double tol_fd1 = 1e-6;
  double tol_fd2 = 1e-4;
  std::string format = "csv";
  std::string out;
  unsigned jobs = 1;

  static constexpr std::size_t kMaxDim = 32;
  static constexpr int kMaxOrder = 4;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); };
    if (trials < 1) fail("trials", "must be >= 1");
    if (!(tol_identity > 0.0)) fail("tol_identity", "must be > 0");
    if (!(tol_fd1 > 0.0)) fail("tol_fd1", "must be > 0");
    if (!(tol_fd2 > 0.0)) fail("tol_fd2", "must be > 0");
    if (jobs < 1) fail("jobs", "must be >= 1");
    if (format != "csv" && format != "json") fail("format", "must be csv or json");
    if (dims.empty()) fail("dims", "must not be empty");
    for (auto d : dims)
      if (d < 1 || d > kMaxDim) fail("dims", "entries must lie in [1, " + std::to_string(kMaxDim) + "]");
    if (orders.empty()) fail("orders", "must not be empty");
    for (int n : orders)
      if (n < 1 || n > kMaxOrder) fail("orders", "entries must lie in [1, " + std::to_string(kMaxOrder) + "]");
    if (ps.empty()) fail("p", "must not be empty");
    for (double p : ps)
      if (!(p > 0.0) || !std::isfinite(p)) fail("p", "entries must be finite and > 0");
    if (families.empty()) fail("families", "must not be empty");
    for (const auto& f : families)
      if (f != "trig" && f != "triangle") fail("families", "unknown family '" + f + "' (expected trig or triangle)");
    if (identities.empty()) fail("identities", "must not be empty");
    for (const auto& id : identities)
      if (std::find(suite_identities().begin(), suite_identities().end(), id) == suite_identities().end())
        fail("identities", "unknown identity '" + id + "'");
  }
};

/// One (identity, dim, n, p, family, trial) cell of a suite.
struct SuiteCell {
  std::string identity;
  std::size_t dim = 0;
  int n = 0;
  double p = 2.0;
  std::string family;
  int trial = 0;

  /// Stream label hashed into the generator, so each cell draws independently of all others.
  std::string stream() const {
    char pbuf[32];
    std::snprintf(pbuf, sizeof pbuf, "%g", p);
    return "suite/" + identity + "/N" + std::to_string(dim) + "/n" + std::to_string(n) + "/p" + pbuf + "/" + family +
           "/t" + std::to_string(trial);
  }
};

/// Cells in report order: identity, dim, n, p, family, trial.
inline std::vector<SuiteCell> enumerate_cells(const SuiteConfig& cfg) {
  std::vector<SuiteCell> cells;
  for (const auto& id : cfg.identities)
    for (auto dim : cfg.dims)
      for (int n : cfg.orders)
        for (double p : cfg.ps)
          for (const auto& fam : cfg.families)
            for (int t = 0; t < cfg.trials; ++t) cells.push_back({id, dim, n, p, fam, t});
  return cells;
}

namespace detail {

inline std::vector<Matrix> unitaries(std::size_t dim, int count, Rng& rng) {
  std::vector<Matrix> us;
  for (int i = 0; i < count; ++i) us.push_back(haar_unitary(dim, rng));
  return us;
}

inline std::vector<Matrix> gaussians(std::size_t dim, int count, Rng& rng) {
  std::vector<Matrix> ks;
  for (int i = 0; i < count; ++i) ks.push_back(gaussian_matrix(dim, rng));
  return ks;
}

/// Trig family: degree 1..5 cycling with the trial. Triangle family: order exactly n.
inline CircleFn suite_function(const SuiteCell& c, Rng& rng) {
  if (c.family == "trig") return make_trig(random_trig(1 + c.trial % 5, rng));
  return make_triangle(std::max(c.n, 1));
}

/// ExpPath on even trials, ProductExpPath on odd trials; generators of Frobenius norm 1.5.
inline PathPtr suite_path(const SuiteCell& c, Rng& rng) {
  const Matrix u0 = haar_unitary(c.dim, rng);
  const Matrix a1 = random_hermitian(c.dim, rng, 1.5);
  if (c.trial % 2 == 0) return std::make_shared<ExpPath>(a1, u0);
  return std::make_shared<ProductExpPath>(a1, random_hermitian(c.dim, rng, 1.5), u0);
}

inline constexpr int kFdRedraws = 32;
inline constexpr double kFdClearance = 2e-2;

inline CheckRecord run_identity(const SuiteCell& c, const SuiteConfig& cfg, Rng& rng) {
  const auto f = suite_function(c, rng);
  const int n = c.n;
  const double tol = cfg.tol_identity;
  if (c.identity == "perturbation") {
    const auto others = unitaries(c.dim, n - 1, rng);
    const auto uv = unitaries(c.dim, 2, rng);
    const auto ks = gaussians(c.dim, n - 1, rng);
    return perturbation_identity(f, others, uv[0], uv[1], ks, 1 + c.trial % n, c.p, tol);
  }
  if (c.identity == "telescoping") {
    const auto uv = unitaries(c.dim, 2, rng);
    return telescoping_identity(f, uv[0], uv[1], gaussians(c.dim, n - 1, rng), c.p, tol);
  }
  if (c.identity == "taylor") {
    const auto path = suite_path(c, rng);
    const double t = rng.uniform(0.1, 1.0);
    auto rec = make_check("taylor", taylor_remainder_moi(f, path, t, n), taylor_remainder_direct(f, path, t, n), c.p, tol);
    rec.params.emplace_back("path", path->name());
    rec.params.emplace_back("t", std::to_string(t));
    return rec;
  }
  if (c.identity == "truncation") {
    const Matrix v = haar_unitary(c.dim, rng);
    const Matrix a = random_hermitian(c.dim, rng);
    const ProjectionTruncation tr(v, 2 + c.trial % 9);
    return truncation_identity(f, a, tr, gaussians(c.dim, n, rng), c.p, tol);
  }
  // derivative: k = n against Richardson finite differences
  const auto path = suite_path(c, rng);
  // Redraw t until the spectrum stays kFdClearance away from the singular angles of f over the stencil window.
  double t = rng.uniform(-0.5, 0.5);
  for (int attempt = 0; attempt < kFdRedraws && singular_clearance(*f, *path, t, 4e-3 * n) < kFdClearance; ++attempt)
    t = rng.uniform(-0.5, 0.5);
  const Matrix value = derivative_unitary(f, *path, t, n).value;
  const Matrix fd = fd_derivative(unitary_function_path(f, path), t, n);
  auto rec = make_check("derivative", fd, value, c.p, n == 1 ? cfg.tol_fd1 : cfg.tol_fd2);
  rec.params.emplace_back("path", path->name());
  rec.params.emplace_back("t", std::to_string(t));
  return rec;
}

}  // namespace detail

/// Evaluates one cell; failures inside the numerics are reported as failing records.
inline CheckRecord run_cell(const SuiteCell& c, const SuiteConfig& cfg) {
  Rng rng(cfg.seed, c.stream());
  CheckRecord rec;
  try {
    rec = detail::run_identity(c, cfg, rng);
  } catch (const std::exception& e) {
    rec = CheckRecord{};
    rec.name = c.identity;
    rec.rel_err = std::numeric_limits<double>::quiet_NaN();
    rec.abs_err = rec.rel_err;
    rec.tol = c.identity == "derivative" ? (c.n == 1 ? cfg.tol_fd1 : cfg.tol_fd2) : cfg.tol_identity;
    rec.params.emplace_back("error", e.what());
    rec.pass = false;
  }
  rec.name = c.identity;
  rec.dim = c.dim;
  rec.n = c.n;
  rec.p = c.p;
  rec.family = c.family;
  rec.seed = cfg.seed;
  rec.trial = c.trial;
  return rec;
}

struct SuiteResult {
  std::vector<CheckRecord> records;

  std::size_t failures() const {
    std::size_t k = 0;
    for (const auto& r : records) k += r.pass ? 0 : 1;
    return k;
  }
  /// Nonzero exactly when some record failed.
  int exit_status() const { return failures() == 0 ? 0 : 1; }
};

/// Runs every cell; records are stored by cell index, so output order does not depend on jobs.
inline SuiteResult run_suite(const SuiteConfig& cfg) {
  cfg.validate();
  const auto cells = enumerate_cells(cfg);
  SuiteResult res;
  res.records.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) res.records[i] = run_cell(cells[i], cfg);
  };
  const unsigned jobs = std::min<std::size_t>(cfg.jobs, std::max<std::size_t>(cells.size(), 1));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return res;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "name,dim,n,p,family,seed,trial,lhs_norm,rhs_norm,abs_err,rel_err,tol,pass";

namespace detail {

inline std::string fmt_double(double x, const char* spec = "%.10e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

}  // namespace detail

inline std::string csv_row(const CheckRecord& r) {
  std::string s = r.name + "," + std::to_string(r.dim) + "," + std::to_string(r.n) + "," +
                  detail::fmt_double(r.p, "%g") + "," + r.family + "," + std::to_string(r.seed) + "," +
                  std::to_string(r.trial);
  for (double v : {r.lhs_norm, r.rhs_norm, r.abs_err, r.rel_err, r.tol}) s += "," + detail::fmt_double(v);
  return s + "," + (r.pass ? "true" : "false");
}

inline std::string to_csv(const std::vector<CheckRecord>& records) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) s += csv_row(r) + "\n";
  return s;
}

/// CheckRecord as {"name", "params", "lhs_norm", "rhs_norm", "abs_err", "rel_err", "tol", "pass"}.
inline nlohmann::ordered_json record_to_json(const CheckRecord& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  nlohmann::ordered_json params;
  params["dim"] = r.dim;
  params["n"] = r.n;
  params["p"] = r.p;
  params["family"] = r.family;
  params["seed"] = r.seed;
  params["trial"] = r.trial;
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = std::move(params);
  j["lhs_norm"] = r.lhs_norm;
  j["rhs_norm"] = r.rhs_norm;
  j["abs_err"] = r.abs_err;
  j["rel_err"] = r.rel_err;
  j["tol"] = r.tol;
  j["pass"] = r.pass;
  return j;
}

inline std::string to_json(const std::vector<CheckRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr.dump(2) + "\n";
}

inline std::string format_report(const SuiteResult& res, const std::string& format) {
  if (format == "json") return to_json(res.records);
  if (format == "csv") return to_csv(res.records);
  throw ConfigError("format: must be csv or json");
}

}  // namespace opcalc
