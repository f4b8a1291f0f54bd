#ifndef MCLT_HARNESS_REGISTRY_HPP
#define MCLT_HARNESS_REGISTRY_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mclt/charfn/model.hpp"
#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/harness/config.hpp"
#include "mclt/spin/exact.hpp"

namespace mclt::harness {

/// Named parameters with typed lookups; remembers which keys were read so
/// leftovers can be reported as unknown.
class Params {
public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> v) : values_(std::move(v)) {}

  bool has(const std::string& k) const { return values_.count(k) > 0; }
  std::string str(const std::string& k, const std::string& fallback) const {
    used_.insert(k);
    return has(k) ? values_.at(k) : fallback;
  }
  double number(const std::string& k, double fallback) const {
    used_.insert(k);
    if (!has(k)) return fallback;
    const auto v = detail::parse_number<double>(values_.at(k));
    if (!v) throw ArgumentError("parameter " + k + ": not a number: '" + values_.at(k) + "'");
    return *v;
  }
  int integer(const std::string& k, int fallback) const {
    used_.insert(k);
    if (!has(k)) return fallback;
    const auto v = detail::parse_number<int>(values_.at(k));
    if (!v) throw ArgumentError("parameter " + k + ": not an integer: '" + values_.at(k) + "'");
    return *v;
  }
  bool flag(const std::string& k, bool fallback) const {
    used_.insert(k);
    if (!has(k)) return fallback;
    const auto v = parse_bool(values_.at(k));
    if (!v) throw ArgumentError("parameter " + k + ": not a boolean: '" + values_.at(k) + "'");
    return *v;
  }
  /// Throws listing every key never read.
  void reject_unused(const std::string& context) const {
    std::vector<std::string> extra;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) extra.push_back(k);
    if (extra.empty()) return;
    std::string msg = context + ": unknown parameter" + (extra.size() > 1 ? "s" : "");
    for (const auto& k : extra) msg += " " + k;
    throw ConfigError(msg, extra);
  }
  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

struct ModelSpec {
  std::string name;
  Params params;
};

/// `name` or `name:key=value,key=value`.
inline ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec s;
  const auto colon = text.find(':');
  s.name = detail::trim(text.substr(0, colon));
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    for (const auto& item : detail::split(std::string_view(text).substr(colon + 1), ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ArgumentError("model spec: expected key=value, got '" + item + "'");
      kv[detail::trim(item.substr(0, eq))] = detail::trim(item.substr(eq + 1));
    }
  }
  if (s.name.empty()) throw ArgumentError("model spec: empty name");
  s.params = Params(std::move(kv));
  return s;
}

inline const std::vector<std::string>& registered_models() {
  static const std::vector<std::string> names = {"gaussian",      "rademacher", "binomial",  "poisson_centered",
                                                 "iid_sum",       "spin_total", "dpp_linstat"};
  return names;
}

// ---- kernels and test functions --------------------------------------------

/// gaussian (dim, scale, amplitude), ball_fourier (dim, amplitude),
/// or projection (rank, half_width); `alpha` defaults to −1.
inline dpp::KernelSpec make_kernel(const std::string& family, const Params& p) {
  const double alpha = p.number("alpha", -1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (family == "gaussian") return dpp::gaussian_kernel(p.integer("dim", 1), p.number("scale", 1.0), alpha, p.number("amplitude", nan));
  if (family == "ball_fourier") return dpp::ball_fourier_kernel(p.integer("dim", 2), alpha, p.number("amplitude", nan));
  if (family == "projection") return dpp::projection_kernel(p.integer("rank", 8), p.number("half_width", 1.0), alpha);
  throw ArgumentError("unknown kernel family '" + family + "' (gaussian|ball_fourier|projection)");
}

inline dpp::TestFunction make_test_function(const std::string& name) {
  if (name == "indicator") return dpp::indicator();
  if (name == "bump") return dpp::bump();
  throw ArgumentError("unknown test function '" + name + "' (indicator|bump)");
}

// ---- spin models -----------------------------------------------------------

inline spin::SpinMeasure make_measure(const std::string& name) {
  if (name == "ising") return spin::SpinMeasure::ising();
  if (name == "xy") return spin::SpinMeasure::circle();
  if (name == "heisenberg") return spin::SpinMeasure::sphere();
  throw ArgumentError("unknown spin measure '" + name + "' (ising|xy|heisenberg)");
}

/// Isotropic coupling J on every component, field h along e₁.
inline spin::SpinModel make_spin_model(const Params& p) {
  const double J = p.number("J", 1.0);
  return spin::make_model(p.integer("dim", 1), p.integer("side", 4), make_measure(p.str("measure", "ising")),
                          {J, J, J}, {p.number("h", 0.0), 0.0, 0.0}, p.number("beta", 0.5),
                          p.flag("periodic", false));
}

// ---- charfn models ---------------------------------------------------------

namespace detail {

inline CharFnModel base_model(const std::string& name, const Params& p) {
  using namespace mclt::models;
  if (name == "gaussian") return gaussian(p.number("mu", 0.0), p.number("sigma", 1.0));
  if (name == "rademacher") return rademacher();
  if (name == "binomial") return binomial(p.integer("n", 10), p.number("p", 0.5));
  if (name == "poisson_centered") return poisson_centered(p.number("lambda", 1.0));
  throw ArgumentError("unknown base model '" + name + "'");
}

}  // namespace detail

/// Builds a registered model; unknown names or parameters are errors.
/// `standardize=true` (any model) rescales to mean 0, variance 1.
inline CharFnModel make_charfn_model(const ModelSpec& spec) {
  const Params& p = spec.params;
  CharFnModel m;
  if (spec.name == "iid_sum") {
    // base parameters carry a `base.` prefix: iid_sum:base=binomial,base.p=0.3,n=100
    std::map<std::string, std::string> rest;
    for (const auto& [k, v] : p.values())
      if (k.rfind("base.", 0) == 0) {
        p.str(k, "");
        rest[k.substr(5)] = v;
      }
    Params bp(rest);
    m = models::iid_sum(detail::base_model(p.str("base", "rademacher"), bp), p.integer("n", 2));
    bp.reject_unused("iid_sum base");
  } else if (spec.name == "spin_total") {
    m = spin::spin_total_model(make_spin_model(p));
  } else if (spec.name == "dpp_linstat") {
    const auto k = make_kernel(p.str("kernel", "gaussian"), p);
    const double L = p.number("L", 8.0);
    const double h = p.number("spacing", k.scale / 4.0);
    auto dk = std::make_shared<const dpp::DiscretizedKernel>(dpp::discretize_window(k, L, h));
    auto op = std::make_shared<const dpp::FredholmOperator>(
        dk, dpp::phi_values(*dk, make_test_function(p.str("phi", "indicator")), L), k.alpha);
    m = dpp::fredholm_charfn_model(op);
  } else {
    m = detail::base_model(spec.name, p);
  }
  if (p.flag("standardize", false)) m = models::standardized(m);
  p.reject_unused(spec.name);
  return m;
}

inline CharFnModel make_charfn_model(const std::string& text) { return make_charfn_model(parse_model_spec(text)); }

}  // namespace mclt::harness

#endif  // MCLT_HARNESS_REGISTRY_HPP
