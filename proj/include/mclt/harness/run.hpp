#ifndef MCLT_HARNESS_RUN_HPP
#define MCLT_HARNESS_RUN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mclt/charfn/ks.hpp"
#include "mclt/charfn/model.hpp"
#include "mclt/charfn/scan.hpp"
#include "mclt/dpp/experiment.hpp"
#include "mclt/dpp/variance.hpp"
#include "mclt/harness/config.hpp"
#include "mclt/harness/registry.hpp"
#include "mclt/harness/report.hpp"
#include "mclt/numeric/parallel.hpp"
#include "mclt/numeric/random.hpp"
#include "mclt/spin/exact.hpp"
#include "mclt/spin/experiment.hpp"

namespace mclt::harness {

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"iid_rate", "spin_clt",    "spin_leeyang",
                                             "dpp_clt",  "dpp_variance", "ks_bound_audit"};
  return k;
}

// ---- schemas ---------------------------------------------------------------

namespace detail {

inline KeySpec req(ValueType t, std::string help = {}) { return {t, true, {}, {}, std::move(help)}; }
inline KeySpec opt(ValueType t, std::string fallback, std::string help = {}) {
  return {t, false, std::move(fallback), {}, std::move(help)};
}
inline KeySpec choice(std::vector<std::string> c, std::string fallback) {
  return {ValueType::Choice, false, std::move(fallback), std::move(c), {}};
}

inline void add_kernel_keys(Schema& s, const std::string& phi) {
  s["dpp.kernel"] = choice({"gaussian", "ball_fourier", "projection"}, "gaussian");
  s["dpp.dim"] = opt(ValueType::Int, "1");
  s["dpp.scale"] = opt(ValueType::Double, "1");
  s["dpp.amplitude"] = opt(ValueType::Double, "", "kernel amplitude; family default when absent");
  s["dpp.rank"] = opt(ValueType::Int, "8");
  s["dpp.half_width"] = opt(ValueType::Double, "1");
  s["dpp.alpha"] = opt(ValueType::Double, "-1");
  s["dpp.phi"] = choice({"indicator", "bump"}, phi);
  s["dpp.L"] = req(ValueType::DoubleList, "window scales");
  s["dpp.spacing"] = opt(ValueType::Double, "0", "grid spacing, 0 = family default");
}

}  // namespace detail

inline Schema schema_for(const std::string& kind) {
  using detail::choice;
  using detail::opt;
  using detail::req;
  Schema s;
  s["kind"] = {ValueType::Choice, true, {}, experiment_kinds(), {}};
  s["seed"] = opt(ValueType::UInt64, "");
  s["out.dir"] = opt(ValueType::String, "");
  s["out.name"] = opt(ValueType::String, "");
  s["run.concurrent_rows"] = opt(ValueType::Bool, "false");
  if (kind == "iid_rate") {
    s["seed"] = req(ValueType::UInt64, "required for stochastic kinds");
    s["iid.base"] = choice({"rademacher", "bernoulli"}, "rademacher");
    s["iid.p"] = opt(ValueType::Double, "0.5");
    s["iid.n"] = req(ValueType::IntList, "summand counts");
    s["iid.samples"] = opt(ValueType::Int, "1000000");
    s["iid.r_scale"] = opt(ValueType::Double, "0.5", "r = r_scale·sqrt(n)");
    s["iid.calibration_n"] = opt(ValueType::IntList, "", "sizes used to calibrate A; default the two smallest");
    s["gate.slope_lo"] = opt(ValueType::Double, "-0.65");
    s["gate.slope_hi"] = opt(ValueType::Double, "-0.40");
  } else if (kind == "spin_clt") {
    s["seed"] = req(ValueType::UInt64, "required for stochastic kinds");
    s["spin.dim"] = opt(ValueType::Int, "1");
    s["spin.measure"] = choice({"ising", "xy", "heisenberg"}, "ising");
    s["spin.J"] = opt(ValueType::Double, "1");
    s["spin.h"] = opt(ValueType::Double, "0");
    s["spin.beta"] = req(ValueType::Double);
    s["spin.periodic"] = opt(ValueType::Bool, "false");
    s["spin.sides"] = req(ValueType::IntList, "side lengths");
    s["spin.exact_bound"] = opt(ValueType::Bool, "true");
    s["mc.samples"] = opt(ValueType::Int, "10000");
    s["mc.burn_in"] = opt(ValueType::Int, "1000");
    s["mc.thinning"] = opt(ValueType::Int, "1");
    s["mc.chains"] = opt(ValueType::Int, "1");
    s["mc.target_ess"] = opt(ValueType::Double, "10000");
    s["mc.max_doublings"] = opt(ValueType::Int, "8");
    s["gate.variance_lo"] = opt(ValueType::Double, "0.85");
    s["gate.variance_hi"] = opt(ValueType::Double, "1.15");
    s["gate.ks_lo"] = opt(ValueType::Double, "-0.8");
    s["gate.ks_hi"] = opt(ValueType::Double, "-0.3");
  } else if (kind == "spin_leeyang") {
    s["spin.dim"] = opt(ValueType::Int, "1");
    s["spin.J"] = opt(ValueType::Double, "1");
    s["spin.h"] = opt(ValueType::Double, "0");
    s["spin.beta"] = req(ValueType::Double);
    s["spin.periodic"] = opt(ValueType::Bool, "false");
    s["spin.sides"] = req(ValueType::IntList, "side lengths");
    s["gate.circle_tol"] = opt(ValueType::Double, "1e-8");
  } else if (kind == "dpp_clt") {
    detail::add_kernel_keys(s, "indicator");
    s["dpp.backend"] = choice({"cumulant", "sampling"}, "cumulant");
    s["dpp.samples"] = opt(ValueType::Int, "20000");
    s["dpp.zero_scan"] = opt(ValueType::Bool, "true");
    s["dpp.scan_cap"] = opt(ValueType::Double, "12.566370614359172");
    s["gate.skewness_final"] = opt(ValueType::Double, "0.1");
    s["gate.radius_spread"] = opt(ValueType::Double, "0.2");
    s["gate.poisson_tol"] = opt(ValueType::Double, "1e-8");
  } else if (kind == "dpp_variance") {
    detail::add_kernel_keys(s, "bump");
    s["dpp.tolerance"] = opt(ValueType::Double, "0.02", "allowed |Var(h) - Var(2h)|/Var(h)");
    s["gate.exponent_tol"] = opt(ValueType::Double, "0.2");
  } else if (kind == "ks_bound_audit") {
    s["model"] = req(ValueType::String, "registry spec, e.g. binomial:n=30,p=0.3");
    s["audit.standardize"] = opt(ValueType::Bool, "true");
    s["audit.r_fraction"] = opt(ValueType::DoubleList, "0.25,0.5,0.75,0.9");
    s["audit.A"] = opt(ValueType::Double, "1");
    s["audit.scan_cap"] = opt(ValueType::Double, "25.132741228718345");
  }
  return s;
}

inline bool is_stochastic(const Config& cfg) {
  const std::string kind = cfg.get("kind", "");
  return kind == "iid_rate" || kind == "spin_clt" ||
         (kind == "dpp_clt" && cfg.get("dpp.backend", "cumulant") == "sampling");
}

/// Schema check plus range checks; every offending key is collected before
/// the single ConfigError is thrown.
inline ExperimentConfig validate_experiment(const Config& cfg) {
  const std::string kind = cfg.get("kind", "");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    const std::vector<std::string> keys = {"kind"};
    const std::string msg = "invalid config:\n  kind: " +
                      (kind.empty() ? std::string("missing") : "unknown experiment kind '" + kind + "'") +
                      " (iid_rate|spin_clt|spin_leeyang|dpp_clt|dpp_variance|ks_bound_audit)";
    throw ConfigError(msg, keys);
  }
  Schema schema = schema_for(kind);
  if (is_stochastic(cfg)) schema["seed"].required = true;

  std::vector<std::string> keys;
  std::string lines;
  try {
    validate(cfg, schema);
  } catch (const ConfigError& e) {
    keys = e.keys();
    const std::string w = e.what();
    lines = w.substr(w.find('\n'));
  }
  auto bad = [&](const std::string& key, const std::string& why) {
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return;
    keys.push_back(key);
    lines += "\n  " + key + ": " + why;
  };
  auto parsed = [&](const std::string& key) {
    return cfg.has(key) && std::find(keys.begin(), keys.end(), key) == keys.end();
  };
  auto positive_ints = [&](const std::string& key, long min_value, std::size_t min_count) {
    if (!parsed(key)) return;
    const auto v = *parse_int_list(cfg.at(key));
    if (v.size() < min_count) bad(key, "need at least " + std::to_string(min_count) + " values");
    for (long x : v)
      if (x < min_value) return bad(key, "values must be at least " + std::to_string(min_value));
  };
  auto positive_doubles = [&](const std::string& key, std::size_t min_count) {
    if (!parsed(key)) return;
    const auto v = *parse_double_list(cfg.at(key));
    if (v.size() < min_count) bad(key, "need at least " + std::to_string(min_count) + " values");
    for (double x : v)
      if (!(x > 0.0)) return bad(key, "values must be positive");
  };
  auto positive = [&](const std::string& key) {
    if (parsed(key) && !(*detail::parse_number<double>(cfg.at(key)) > 0.0)) bad(key, "must be positive");
  };
  if (kind == "iid_rate") {
    positive_ints("iid.n", 1, 3);
    positive_ints("iid.calibration_n", 1, 1);
    for (const char* k : {"iid.samples", "iid.r_scale"}) positive(k);
    if (parsed("iid.p")) {
      const double p = *detail::parse_number<double>(cfg.at("iid.p"));
      if (!(p > 0.0 && p < 1.0)) bad("iid.p", "must lie in (0, 1)");
    }
  } else if (kind == "spin_clt") {
    positive_ints("spin.sides", 2, 2);
    for (const char* k : {"spin.beta", "spin.dim", "mc.samples", "mc.thinning", "mc.chains", "mc.target_ess"}) positive(k);
  } else if (kind == "spin_leeyang") {
    positive_ints("spin.sides", 1, 1);
    for (const char* k : {"spin.beta", "spin.dim", "gate.circle_tol"}) positive(k);
  } else if (kind == "dpp_clt" || kind == "dpp_variance") {
    positive_doubles("dpp.L", kind == "dpp_variance" ? 3 : 1);
    for (const char* k : {"dpp.dim", "dpp.scale", "dpp.rank", "dpp.half_width"}) positive(k);
    if (kind == "dpp_clt") positive("dpp.samples");
  } else if (kind == "ks_bound_audit") {
    positive_doubles("audit.r_fraction", 1);
    for (const char* k : {"audit.A", "audit.scan_cap"}) positive(k);
    if (parsed("model")) try {
        parse_model_spec(cfg.at("model"));
      } catch (const std::exception& e) {
        bad("model", e.what());
      }
  }
  if (!keys.empty()) {
    throw ConfigError("invalid config (" + std::to_string(keys.size()) + " offending key" +
                          (keys.size() == 1 ? "" : "s") + "):" + lines,
                      keys);
  }
  return ExperimentConfig(cfg, std::move(schema));
}

// ---- run ---------------------------------------------------------------------

struct RunOptions {
  std::filesystem::path out_dir;  // empty: out.dir from the config, else no files
  std::size_t jobs = 0;           // 0: default_jobs()
};

namespace detail {

/// What a kind contributes: its columns, the sorted sweep and a row body.
struct Plan {
  std::vector<std::string> columns;
  std::vector<double> sweep;
  std::function<std::vector<double>(std::size_t i, std::size_t jobs)> row;
  std::function<void(RunReport&)> finish;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::string fmt(double v) { return format_number(v); }

inline std::string fmt_tol(double v) {
  // 1e-08 → 1e-8
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  std::string s = buf;
  if (const auto e = s.find("e-0"); e != std::string::npos) s.erase(e + 2, 1);
  return s;
}

/// Rows without error and with finite values in every named column.
inline std::vector<std::size_t> usable(const RunReport& rep, std::initializer_list<const char*> cols) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (!rep.rows[i].error.empty()) continue;
    bool ok = true;
    for (const char* c : cols) ok = ok && std::isfinite(rep.rows[i].values[rep.column(c)]);
    if (ok) out.push_back(i);
  }
  return out;
}

inline std::optional<LinearFit> add_loglog_fit(RunReport& rep, const std::string& name, const std::string& x,
                                               const std::string& y) {
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows) {
    if (!r.error.empty()) continue;
    const double a = r.values[rep.column(x)], b = r.values[rep.column(y)];
    if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) {
      xs.push_back(a);
      ys.push_back(b);
    }
  }
  if (xs.size() < 2) return std::nullopt;
  const auto f = loglog_fit(xs, ys);
  rep.fits.push_back({name, x, y, f});
  return f;
}

inline std::string ci_text(const LinearFit& f) {
  const auto [lo, hi] = f.slope_ci();
  return "slope " + fmt(f.slope) + " (95% CI " + fmt(lo) + " to " + fmt(hi) + ")";
}

inline void range_gate(RunReport& rep, const std::string& name, const std::string& invariant,
                       const std::optional<LinearFit>& f, double lo, double hi) {
  if (!f) {
    rep.gates.push_back({name, invariant, false, "fewer than two usable rows"});
    return;
  }
  rep.gates.push_back({name, invariant, f->slope >= lo && f->slope <= hi, ci_text(*f)});
}

inline std::uint64_t row_seed(std::uint64_t seed, std::size_t i) {
  // splitmix64 of (seed, i), so neighbouring seeds give unrelated rows
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// -- iid_rate

/// Standardized Σ of n Bernoulli(p) (Rademacher: p = 1/2, same law after
/// standardization); 10⁶-scale samples of the binomial count, KS after
/// studentizing, the exact KS from the lattice law, and the bound terms.
inline Plan plan_iid_rate(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"n", "empirical_ks", "exact_ks", "r", "zero_free_radius", "sigma_term", "bracket_term", "bound_A1"};
  auto ns = c.ints("iid.n");
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (long n : ns) p.sweep.push_back(static_cast<double>(n));
  const double prob = c.str("iid.base") == "rademacher" ? 0.5 : c.number("iid.p");
  const auto samples = static_cast<std::size_t>(c.integer("iid.samples"));
  const double r_scale = c.number("iid.r_scale");
  const std::uint64_t seed = *c.seed();
  p.row = [=](std::size_t i, std::size_t jobs) {
    const int n = static_cast<int>(ns[i]);
    const CharFnModel model = models::standardized(models::binomial(n, prob));
    constexpr std::size_t chunk = 1 << 16;
    const std::size_t blocks = (samples + chunk - 1) / chunk;
    std::vector<double> x(samples);
    const std::uint64_t rs = row_seed(seed, i);
    parallel_for(blocks, jobs, [&](std::size_t b) {
      auto g = Xoshiro256pp::stream(rs, b);
      std::binomial_distribution<long> bd(n, prob);
      for (std::size_t k = b * chunk; k < std::min(samples, (b + 1) * chunk); ++k) x[k] = static_cast<double>(bd(g));
    });
    const double emp = empirical_ks(std::move(x)).studentized;
    const double r = r_scale * std::sqrt(static_cast<double>(n));
    // Ψ_n(t) = Ψ₁(t/√n)^n: the zeros are √n times those of one standardized
    // summand, where they are simple (here they have multiplicity n)
    const auto scan = expanding_zero_scan(models::standardized(models::binomial(1, prob)), 0.25, 16.0, 24, 1);
    const double zfr = std::sqrt(static_cast<double>(n)) * scan.zero_free_radius;
    const std::optional<double> cert = scan.certified ? std::optional<double>(zfr) : std::nullopt;
    const auto b = ks_bound(model, r, 1.0, cert, jobs);
    return std::vector<double>{double(n), emp, exact_ks(model), r, zfr, b.sigma_term, b.bracket_term, b.bound};
  };
  std::vector<long> cal = c.has("iid.calibration_n") ? c.ints("iid.calibration_n")
                                                      : std::vector<long>(ns.begin(), ns.begin() + std::min<std::size_t>(2, ns.size()));
  const double lo = c.number("gate.slope_lo"), hi = c.number("gate.slope_hi");
  p.finish = [=](RunReport& rep) {
    const auto f = add_loglog_fit(rep, "empirical_ks_vs_n", "n", "empirical_ks");
    add_loglog_fit(rep, "exact_ks_vs_n", "n", "exact_ks");
    add_loglog_fit(rep, "bracket_term_vs_n", "n", "bracket_term");
    range_gate(rep, "ks slope in [" + fmt(lo) + ", " + fmt(hi) + "]",
               "log-log slope of the empirical KS distance against n lies in the Berry-Esseen window", f, lo, hi);
    // A calibrated on small members of the family, then checked on all of them
    const int ks = rep.column("empirical_ks"), sg = rep.column("sigma_term"), br = rep.column("bracket_term");
    double A = 0.0;
    std::vector<double> used;
    for (const auto i : usable(rep, {"empirical_ks", "sigma_term", "bracket_term"})) {
      const auto& v = rep.rows[i].values;
      if (std::find(cal.begin(), cal.end(), static_cast<long>(v[0])) == cal.end()) continue;
      A = std::max(A, (v[ks] - v[sg]) / v[br]);
      used.push_back(v[0]);
    }
    rep.summary["A_calibrated"] = A;
    rep.summary["calibration_n"] = used;
    bool holds = !used.empty();
    double worst = 0.0;
    for (const auto i : usable(rep, {"empirical_ks", "sigma_term", "bracket_term"})) {
      const auto& v = rep.rows[i].values;
      const double bound = v[sg] + A * v[br];
      worst = std::max(worst, v[ks] / bound);
      holds = holds && v[ks] <= bound;
    }
    rep.gates.push_back({"calibrated bound holds",
                         "empirical KS <= 2|sigma-1| + A*(1+log+ log M_r)/r at every n, with A calibrated on the "
                         "smallest sizes",
                         holds, "A = " + fmt(A) + ", max KS/bound = " + fmt(worst)});
  };
  return p;
}

// -- spin_clt

inline spin::SpinFamily spin_family(const ExperimentConfig& c, bool with_measure) {
  spin::SpinFamily fam;
  fam.dim = static_cast<int>(c.integer("spin.dim"));
  fam.measure = with_measure ? make_measure(c.str("spin.measure")) : spin::SpinMeasure::ising();
  const double J = c.number("spin.J");
  fam.coupling = {J, J, J};
  fam.field = {c.number("spin.h"), 0.0, 0.0};
  fam.beta = c.number("spin.beta");
  fam.periodic = c.flag("spin.periodic");
  return fam;
}

inline Plan plan_spin_clt(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"sites", "side",  "samples",  "ess",            "acceptance",       "variance", "variance_se",
               "empirical_ks", "exact_variance", "exact_ks", "zero_free_radius", "bound"};
  auto sides = c.ints("spin.sides");
  std::sort(sides.begin(), sides.end());
  sides.erase(std::unique(sides.begin(), sides.end()), sides.end());
  const auto fam = spin_family(c, true);
  for (long s : sides) p.sweep.push_back(std::pow(static_cast<double>(s), fam.dim));
  spin::SpinCltOptions o;
  o.mc.n_samples = static_cast<std::size_t>(c.integer("mc.samples"));
  o.mc.burn_in = static_cast<std::size_t>(c.integer("mc.burn_in"));
  o.mc.thinning = static_cast<std::size_t>(c.integer("mc.thinning"));
  o.mc.chains = static_cast<std::size_t>(c.integer("mc.chains"));
  o.target_ess = c.number("mc.target_ess");
  o.max_doublings = static_cast<int>(c.integer("mc.max_doublings"));
  o.exact_bound = c.flag("spin.exact_bound");
  const std::uint64_t seed = *c.seed();
  p.row = [=](std::size_t i, std::size_t jobs) {
    auto opt = o;
    opt.mc.seed = row_seed(seed, i);
    opt.mc.jobs = jobs;
    const auto r = spin::spin_clt_row(fam, static_cast<int>(sides[i]), opt);
    return std::vector<double>{double(r.sites), double(r.side), double(r.samples), r.ess, r.acceptance,
                               r.variance, r.variance_se, *r.report.empirical_ks,
                               r.exact_variance.value_or(kNaN), r.exact_ks.value_or(kNaN),
                               r.zero_free_radius.value_or(kNaN), r.has_bound ? r.report.bound : kNaN};
  };
  const double vlo = c.number("gate.variance_lo"), vhi = c.number("gate.variance_hi");
  const double klo = c.number("gate.ks_lo"), khi = c.number("gate.ks_hi");
  const double target = o.target_ess;
  p.finish = [=](RunReport& rep) {
    const auto vf = add_loglog_fit(rep, "variance_vs_sites", "sites", "variance");
    const auto kf = add_loglog_fit(rep, "empirical_ks_vs_sites", "sites", "empirical_ks");
    range_gate(rep, "variance exponent in [" + fmt(vlo) + ", " + fmt(vhi) + "]",
               "Var S_L grows linearly in |L| (log-log slope near 1)", vf, vlo, vhi);
    range_gate(rep, "ks exponent in [" + fmt(klo) + ", " + fmt(khi) + "]",
               "empirical KS of the studentized total spin decays polynomially in |L|", kf, klo, khi);
    const auto ks = rep.series("empirical_ks");
    bool dec = ks.size() >= 2;
    for (std::size_t i = 1; i < ks.size(); ++i) dec = dec && ks[i] < ks[i - 1];
    std::string d;
    for (double v : ks) d += (d.empty() ? "" : " > ") + fmt(v);
    rep.gates.push_back({"ks decreasing", "empirical KS strictly decreases along the |L| sweep", dec, d});
    double min_ess = std::numeric_limits<double>::infinity();
    for (double e : rep.series("ess")) min_ess = std::min(min_ess, std::isnan(e) ? 0.0 : e);
    rep.gates.push_back({"ess >= " + fmt(target), "every size reaches the target effective sample size",
                         min_ess >= target, "min ESS = " + fmt(min_ess)});
  };
  return p;
}

// -- spin_leeyang

inline Plan plan_spin_leeyang(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"sites", "side", "zeros", "max_circle_deviation", "zero_free_field_radius"};
  auto sides = c.ints("spin.sides");
  std::sort(sides.begin(), sides.end());
  sides.erase(std::unique(sides.begin(), sides.end()), sides.end());
  const auto fam = spin_family(c, false);
  for (long s : sides) p.sweep.push_back(std::pow(static_cast<double>(s), fam.dim));
  p.row = [=](std::size_t i, std::size_t) {
    const auto m = fam.at(static_cast<int>(sides[i]));
    const auto z = spin::lee_yang_zeros(m);
    return std::vector<double>{double(m.sites()), double(sides[i]), double(z.fugacity_zeros.size()),
                               z.max_abs_deviation_from_unit_circle, z.zero_free_field_radius};
  };
  const double tol = c.number("gate.circle_tol");
  p.finish = [=](RunReport& rep) {
    double worst = 0.0;
    bool ok = !usable(rep, {"max_circle_deviation"}).empty();
    for (const auto i : usable(rep, {"max_circle_deviation"}))
      worst = std::max(worst, rep.rows[i].values[rep.column("max_circle_deviation")]);
    ok = ok && worst <= tol;
    rep.gates.push_back({"unit-circle ≤ " + fmt_tol(tol),
                         "every fugacity zero of the Ising partition function lies within " + fmt_tol(tol) +
                             " of |z| = 1",
                         ok, "max deviation " + fmt(worst)});
  };
  return p;
}

// -- DPP kinds

inline dpp::KernelSpec kernel_from(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv;
  for (const char* k : {"dim", "scale", "amplitude", "rank", "half_width", "alpha"})
    if (c.has(std::string("dpp.") + k)) kv[k] = c.str(std::string("dpp.") + k);
  kv["dim"] = c.str("dpp.dim");
  return make_kernel(c.str("dpp.kernel"), Params(kv));
}

inline std::vector<double> sorted_scales(const ExperimentConfig& c) {
  auto Ls = c.numbers("dpp.L");
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  return Ls;
}

inline Plan plan_dpp_clt(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"L",        "grid_points",     "rank",         "variance",         "mean",
               "skewness", "excess_kurtosis", "empirical_ks", "zero_free_radius", "radius_certified",
               "poisson_skewness"};
  const auto Ls = sorted_scales(c);
  p.sweep = Ls;
  const auto k = kernel_from(c);
  const auto phi = make_test_function(c.str("dpp.phi"));
  dpp::DppCltOptions o;
  o.backend = c.str("dpp.backend") == "sampling" ? dpp::DppBackend::Sampling : dpp::DppBackend::Cumulant;
  o.spacing = c.number("dpp.spacing");
  o.zero_scan = c.flag("dpp.zero_scan");
  o.scan_cap = c.number("dpp.scan_cap");
  o.samples = static_cast<std::size_t>(c.integer("dpp.samples"));
  const std::uint64_t seed = c.seed().value_or(0);
  p.row = [=](std::size_t i, std::size_t jobs) {
    auto opt = o;
    opt.jobs = jobs;
    const auto r = dpp::dpp_clt_row(k, phi, Ls[i], opt, row_seed(seed, i));
    double poisson = kNaN;
    if (k.alpha == 0.0) {
      // κ_j = Σ φ^j M_ii for independent Poisson cells
      const double h = o.spacing > 0.0 ? o.spacing : k.scale / 4.0;
      const auto dk = dpp::discretize_window(k, Ls[i], h);
      const auto f = dpp::phi_values(dk, phi, Ls[i]);
      double k2 = 0.0, k3 = 0.0;
      for (int j = 0; j < dk.size(); ++j) {
        k2 += f(j) * f(j) * dk.matrix(j, j);
        k3 += f(j) * f(j) * f(j) * dk.matrix(j, j);
      }
      poisson = k3 / std::pow(k2, 1.5);
    }
    const auto& cu = r.cumulants;
    return std::vector<double>{Ls[i],
                               double(r.grid_points),
                               double(r.rank),
                               cu ? cu->variance : r.variance_formula,
                               cu ? cu->mean : kNaN,
                               cu ? cu->skewness : kNaN,
                               cu ? cu->excess_kurtosis : kNaN,
                               r.empirical_ks.value_or(kNaN),
                               r.zero_free_radius.value_or(kNaN),
                               r.zero_free_radius ? double(r.radius_certified) : kNaN,
                               poisson};
  };
  const double skew_tol = c.number("gate.skewness_final"), spread_tol = c.number("gate.radius_spread");
  const double poisson_tol = c.number("gate.poisson_tol");
  const bool cumulant = o.backend == dpp::DppBackend::Cumulant;
  const double alpha = k.alpha;
  p.finish = [=](RunReport& rep) {
    if (cumulant) {
      std::vector<double> abs_skew;
      for (double s : rep.series("skewness")) abs_skew.push_back(std::abs(s));
      std::vector<double> xs, ys;
      for (const auto i : usable(rep, {"skewness"})) {
        xs.push_back(rep.rows[i].values[0]);
        ys.push_back(std::abs(rep.rows[i].values[rep.column("skewness")]));
      }
      if (xs.size() >= 2 && std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; }))
        rep.fits.push_back({"abs_skewness_vs_L", "L", "skewness", loglog_fit(xs, ys)});
      bool dec = abs_skew.size() >= 2;
      std::string d;
      for (std::size_t i = 0; i < abs_skew.size(); ++i) {
        if (i > 0) dec = dec && abs_skew[i] < abs_skew[i - 1];
        d += (d.empty() ? "" : " > ") + fmt(abs_skew[i]);
      }
      rep.gates.push_back({"skewness decreasing", "standardized |kappa3| strictly decreases in L", dec, d});
      const double last = abs_skew.empty() ? kNaN : abs_skew.back();
      rep.gates.push_back({"final skewness < " + fmt(skew_tol),
                           "standardized |kappa3| at the largest L is below the tolerance", last < skew_tol,
                           "final " + fmt(last)});
      if (alpha == 0.0) {
        double worst = 0.0;
        bool ok = !rep.rows.empty();
        for (const auto& r : rep.rows) {
          const double e = std::abs(r.values[rep.column("skewness")] - r.values[rep.column("poisson_skewness")]);
          worst = std::isnan(e) ? e : std::max(worst, e);
          ok = ok && e <= poisson_tol;
        }
        rep.gates.push_back({"poisson skewness closed form",
                             "alpha = 0 skewness equals sum(phi^3 rho) / (sum(phi^2 rho))^(3/2) to " +
                                 fmt_tol(poisson_tol),
                             ok, "max deviation " + fmt(worst)});
      }
    } else {
      const auto f = add_loglog_fit(rep, "empirical_ks_vs_L", "L", "empirical_ks");
      rep.gates.push_back({"ks decays", "empirical KS of the studentized linear statistic decreases with L",
                           f && f->slope < 0.0, f ? ci_text(*f) : "fewer than two usable rows"});
    }
    const auto radii_rows = usable(rep, {"zero_free_radius"});
    if (!radii_rows.empty()) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      bool certified = true;
      for (const auto i : radii_rows) {
        const double r = rep.rows[i].values[rep.column("zero_free_radius")];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        certified = certified && rep.rows[i].values[rep.column("radius_certified")] == 1.0;
      }
      const double spread = lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity();
      rep.summary["radius_spread"] = number_json(spread);
      rep.gates.push_back({"zero-free radius spread < " + fmt(spread_tol),
                           "zero-free radius of the characteristic function stays uniform in L (max/min - 1)",
                           spread < spread_tol, "radii " + fmt(lo) + " to " + fmt(hi) + ", spread " + fmt(spread)});
      rep.gates.push_back({"zero-free radii certified", "every measured radius is a certified lower bound",
                           certified, certified ? "all certified" : "some scans hit the cap or were not certified"});
    }
  };
  return p;
}

inline Plan plan_dpp_variance(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"L", "variance", "coarse_variance", "resolution_error", "cells"};
  const auto Ls = sorted_scales(c);
  p.sweep = Ls;
  const auto k = kernel_from(c);
  const auto phi = make_test_function(c.str("dpp.phi"));
  dpp::VarianceScalingOptions o;
  o.spacing = c.number("dpp.spacing");
  o.tolerance = c.number("dpp.tolerance");
  p.row = [=](std::size_t i, std::size_t jobs) {
    auto opt = o;
    opt.jobs = jobs;
    const auto v = dpp::variance_at_scale(k, phi, Ls[i], opt);
    return std::vector<double>{v.L, v.variance, v.coarse_variance, v.resolution_error, double(v.cells)};
  };
  std::string cls;
  const double predicted = dpp::predicted_variance_exponent(k, &cls);
  const double tol = c.number("gate.exponent_tol");
  p.finish = [=](RunReport& rep) {
    rep.summary["predicted_exponent"] = predicted;
    rep.summary["model_class"] = cls;
    const auto f = add_loglog_fit(rep, "variance_vs_L", "L", "variance");
    range_gate(rep, "variance exponent within " + fmt(tol) + " of " + fmt(predicted),
               "Var Lambda(phi_L) ~ L^gamma with gamma = " + fmt(predicted) + " for model class " + cls, f,
               predicted - tol, predicted + tol);
  };
  return p;
}

// -- ks_bound_audit

inline Plan plan_ks_bound_audit(const ExperimentConfig& c) {
  Plan p;
  p.columns = {"r", "sigma_term", "bracket_term", "bound", "log_circle_max", "exact_ks", "holds"};
  auto spec = parse_model_spec(c.str("model"));
  CharFnModel m = make_charfn_model(spec);
  if (c.flag("audit.standardize") && m.std_dev > 0.0) m = models::standardized(m);
  const double cap = std::min(c.number("audit.scan_cap"), 0.999 * m.validity_radius);
  const auto scan = expanding_zero_scan(m, std::min(0.5, cap), cap, 24, 0);
  auto fr = c.numbers("audit.r_fraction");
  std::sort(fr.begin(), fr.end());
  fr.erase(std::unique(fr.begin(), fr.end()), fr.end());
  for (double f : fr) p.sweep.push_back(f * scan.zero_free_radius);
  const double A = c.number("audit.A");
  const bool has_law = !m.atoms.empty();
  const double exact = has_law ? exact_ks(m) : kNaN;
  const auto radius = scan.zero_free_radius;
  const bool certified = scan.certified;
  const auto sweep = p.sweep;
  p.row = [=](std::size_t i, std::size_t jobs) {
    const double r = sweep[i];
    const auto b = ks_bound(m, r, A, certified ? std::optional<double>(radius) : std::nullopt, jobs);
    return std::vector<double>{r, b.sigma_term, b.bracket_term, b.bound, b.log_circle_max, exact,
                               has_law ? double(exact <= b.bound) : kNaN};
  };
  p.finish = [=](RunReport& rep) {
    rep.summary["model"] = m.description;
    rep.summary["zero_free_radius"] = number_json(radius);
    rep.summary["radius_certified"] = certified;
    bool floor = !rep.rows.empty();
    for (const auto& r : rep.rows)
      floor = floor && r.error.empty() && r.values[2] >= 1.0 / r.values[0] * (1.0 - 1e-12);
    rep.gates.push_back({"bracket >= 1/r", "(1 + log+ log max|Psi|)/r is never below 1/r", floor,
                         std::to_string(rep.rows.size()) + " radii"});
    rep.gates.push_back({"radii inside zero-free disk",
                         "every audited r lies inside a certified zero-free disk of Psi", certified,
                         "radius " + fmt(radius) + (certified ? " (certified)" : " (scan cap reached, not certified)")});
    if (has_law) {
      bool ok = !rep.rows.empty();
      for (const auto& r : rep.rows) ok = ok && r.values[6] == 1.0;
      rep.gates.push_back({"exact ks <= bound", "exact KS of the lattice law is below the bound with A = " + fmt(A),
                           ok, "exact KS " + fmt(exact)});
    }
  };
  return p;
}

inline Plan make_plan(const ExperimentConfig& c) {
  const auto& k = c.kind();
  if (k == "iid_rate") return plan_iid_rate(c);
  if (k == "spin_clt") return plan_spin_clt(c);
  if (k == "spin_leeyang") return plan_spin_leeyang(c);
  if (k == "dpp_clt") return plan_dpp_clt(c);
  if (k == "dpp_variance") return plan_dpp_variance(c);
  return plan_ks_bound_audit(c);
}

}  // namespace detail

inline std::filesystem::path output_dir(const Config& cfg, const RunOptions& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  return cfg.get("out.dir", "");
}

inline std::string output_stem(const Config& cfg) { return cfg.get("out.name", cfg.get("kind", "report")); }

/// Validates, runs every sweep point (a failing point becomes an error row),
/// streams the CSV in sweep order and writes the JSON report atomically.
inline RunReport run(const Config& cfg, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = validate_experiment(cfg);
  RunReport rep;
  rep.kind = c.kind();
  rep.config = cfg;
  rep.seed = c.seed();
  rep.jobs = opt.jobs == 0 ? default_jobs() : opt.jobs;

  detail::Plan plan = detail::make_plan(c);
  rep.columns = plan.columns;
  const std::size_t n = plan.sweep.size();

  const auto dir = output_dir(cfg, opt);
  const std::string stem = output_stem(cfg);
  CsvWriter csv;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    csv = CsvWriter(dir / (stem + ".csv"), rep.columns);
  }

  const bool concurrent = c.flag("run.concurrent_rows");
  const std::size_t outer = concurrent ? rep.jobs : 1;
  const std::size_t inner = concurrent ? 1 : rep.jobs;
  rep.rows.assign(n, Row{});
  std::vector<bool> done(n, false);
  std::size_t flushed = 0;
  std::mutex mu;
  parallel_for(n, outer, [&](std::size_t i) {
    Row row;
    try {
      row.values = plan.row(i, inner);
    } catch (const std::exception& e) {
      row.values.assign(rep.columns.size(), detail::kNaN);
      row.values[0] = plan.sweep[i];
      row.error = e.what();
    }
    std::lock_guard lock(mu);
    rep.rows[i] = std::move(row);
    done[i] = true;
    while (flushed < n && done[flushed]) csv.write(rep.rows[flushed++]);
  });

  std::size_t failed = 0;
  for (const auto& r : rep.rows) failed += !r.error.empty();
  rep.gates.push_back({"all rows completed", "every sweep point was evaluated without error", failed == 0,
                       std::to_string(n - failed) + " of " + std::to_string(n) + " rows"});
  plan.finish(rep);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!dir.empty()) write_report_json(rep, dir / (stem + ".json"));
  return rep;
}

inline RunReport run_file(const std::string& path, const RunOptions& opt = {}) { return run(Config::load(path), opt); }

}  // namespace mclt::harness

#endif  // MCLT_HARNESS_RUN_HPP
