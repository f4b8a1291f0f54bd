// marcin-clt: command-line front end for the charfn, spin and DPP engines and
// the config-driven experiment runner.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mclt/charfn/json.hpp"
#include "mclt/charfn/ks.hpp"
#include "mclt/charfn/scan.hpp"
#include "mclt/dpp/decay.hpp"
#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/dpp/sampling.hpp"
#include "mclt/harness/plot.hpp"
#include "mclt/harness/registry.hpp"
#include "mclt/harness/run.hpp"
#include "mclt/spin/exact.hpp"
#include "mclt/spin/metropolis.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mclt;
using namespace mclt::harness;

namespace {

constexpr int kGateFailure = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_number(x);
  return s;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

/// JSON to stdout, and to <out>/<name>.json when an output directory is set.
void emit(const json& j, const std::string& out, const std::string& name) {
  std::cout << j.dump(2) << "\n";
  if (out.empty()) return;
  fs::create_directories(out);
  write_atomically(fs::path(out) / (name + ".json"), j.dump(2) + "\n");
}

void print_gates(const RunReport& rep, const fs::path& dir, const std::string& stem) {
  for (const auto& g : rep.gates)
    std::cout << (g.pass ? "PASS  " : "FAIL  ") << g.name << "  [" << g.detail << "]\n";
  for (const auto& r : rep.rows)
    if (!r.error.empty()) std::cout << "row " << format_number(r.values[0]) << " error: " << r.error << "\n";
  if (!dir.empty()) std::cout << "wrote " << (dir / (stem + ".csv")).string() << " and " << stem << ".json\n";
}

int run_config(const Config& cfg, const std::string& out, std::size_t jobs) {
  RunOptions opt;
  opt.jobs = jobs;
  opt.out_dir = out.empty() ? fs::path(cfg.get("out.dir", "results")) : fs::path(out);
  const auto rep = run(cfg, opt);
  print_gates(rep, opt.out_dir, output_stem(cfg));
  return rep.all_pass() ? 0 : kGateFailure;
}

// ---- DPP flag parsing --------------------------------------------------------

struct KernelChoice {
  std::string family;  // gaussian | ball_fourier | projection | custom
  std::string arg;
};

KernelChoice parse_kernel_flag(const std::string& s) {
  const auto c = s.find(':');
  KernelChoice k{s.substr(0, c), c == std::string::npos ? "" : s.substr(c + 1)};
  if (k.family != "gaussian" && k.family != "ball_fourier" && k.family != "projection" && k.family != "custom")
    throw ArgumentError("--kernel: expected gaussian:scale, ball_fourier:d, projection:rank or custom:file");
  if (k.family == "custom" && k.arg.empty()) throw ArgumentError("--kernel custom:file needs a path");
  return k;
}

/// Harness keys for a parametric kernel choice.
void kernel_keys(Config& cfg, const KernelChoice& k, int dim, double alpha) {
  if (k.family == "custom") throw ArgumentError("custom kernel files have a fixed grid and cannot be swept in L");
  cfg.set("dpp.kernel", k.family);
  cfg.set("dpp.alpha", format_number(alpha));
  if (k.family == "gaussian") {
    cfg.set("dpp.dim", std::to_string(dim));
    if (!k.arg.empty()) cfg.set("dpp.scale", k.arg);
  } else if (k.family == "ball_fourier") {
    cfg.set("dpp.dim", k.arg.empty() ? std::to_string(dim) : k.arg);
  } else {
    if (!k.arg.empty()) cfg.set("dpp.rank", k.arg);
  }
}

dpp::KernelSpec kernel_spec(const KernelChoice& k, int dim, double alpha, double amplitude) {
  std::map<std::string, std::string> kv{{"alpha", format_number(alpha)}, {"dim", std::to_string(dim)}};
  if (!std::isnan(amplitude)) kv["amplitude"] = format_number(amplitude);
  if (k.family == "gaussian" && !k.arg.empty()) kv["scale"] = k.arg;
  if (k.family == "ball_fourier" && !k.arg.empty()) kv["dim"] = k.arg;
  if (k.family == "projection" && !k.arg.empty()) kv["rank"] = k.arg;
  return make_kernel(k.family, Params(kv));
}

std::vector<double> read_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot read " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(f, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto t = harness::detail::trim(line);
    if (t.empty()) continue;
    const auto x = harness::detail::parse_number<double>(t);
    if (!x) throw ArgumentError(path + ": not a number: '" + t + "'");
    v.push_back(*x);
  }
  return v;
}

struct DppSetup {
  std::shared_ptr<const dpp::DiscretizedKernel> dk;
  Eigen::VectorXd phi;
  double alpha = -1.0;
};

/// Discretized kernel and φ values for the single-L commands.
DppSetup dpp_setup(const KernelChoice& kc, int dim, double alpha, double amplitude, const std::string& phi_flag,
                   double L, double grid_res) {
  DppSetup s;
  s.alpha = alpha;
  if (kc.family == "custom") {
    auto dk = dpp::read_kernel_file(kc.arg);
    s.alpha = dk.alpha;
    s.dk = std::make_shared<const dpp::DiscretizedKernel>(std::move(dk));
  } else {
    const auto k = kernel_spec(kc, dim, alpha, amplitude);
    const double h = grid_res > 0.0 ? grid_res : k.scale / 4.0;
    s.dk = std::make_shared<const dpp::DiscretizedKernel>(dpp::discretize_window(k, L, h));
  }
  if (phi_flag.rfind("custom:", 0) == 0) {
    const auto v = read_values(phi_flag.substr(7));
    if (static_cast<int>(v.size()) != s.dk->size())
      throw ArgumentError("--phi custom file has " + std::to_string(v.size()) + " values for " +
                          std::to_string(s.dk->size()) + " kernel points");
    s.phi = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    s.phi = dpp::phi_values(*s.dk, make_test_function(phi_flag), kc.family == "custom" ? 1.0 : L);
  }
  return s;
}

json cumulant_json(const dpp::CumulantReport& c) {
  return {{"mean", c.mean},         {"variance", c.variance}, {"kappa3", c.kappa3},
          {"kappa4", c.kappa4},     {"skewness", c.skewness}, {"excess_kurtosis", c.excess_kurtosis},
          {"step", c.step},         {"halvings", c.halvings}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marcin-clt: zero-free regions, KS bounds and CLT experiments for spin systems and DPPs"};
  app.require_subcommand(1);
  std::size_t jobs = 0;
  app.add_option("--jobs", jobs, "worker threads (default: MARCIN_CLT_JOBS, else 1)");

  // run
  auto* run_cmd = app.add_subcommand("run", "run an experiment config; exit 0 iff all gates pass");
  std::string config_path, run_out;
  run_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_out, "output directory (default: out.dir or ./results)");
  run_cmd->add_option("--jobs", jobs, "worker threads");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "SVG plot of one report metric against the sweep variable");
  std::string report_path, metric, plot_out;
  plot_cmd->add_option("report", report_path, "report JSON")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--metric", metric, "column to plot")->required();
  plot_cmd->add_option("--out", plot_out, "SVG path (default: <report>_<metric>.svg)");

  // charfn
  auto* cf = app.add_subcommand("charfn", "evaluate, scan or bound a registered model");
  cf->require_subcommand(1);
  std::string model_spec = "rademacher";
  std::string cf_out;
  bool standardize = false;
  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", model_spec, "registry spec, e.g. binomial:n=30,p=0.3 or iid_sum:base=rademacher,n=64")
        ->capture_default_str();
    c->add_flag("--standardize", standardize, "rescale to mean 0, variance 1");
    c->add_option("--out", cf_out, "output directory for the JSON result");
  };
  auto* cf_eval = cf->add_subcommand("eval", "log E[e^{uX}] at complex u");
  double u_re = 0.0, u_im = 0.0;
  add_model(cf_eval);
  cf_eval->add_option("--re", u_re, "real part of u");
  cf_eval->add_option("--im", u_im, "imaginary part of u");
  auto* cf_scan = cf->add_subcommand("scan", "zero-free radius of t -> E[e^{itX}]");
  double r_max = 4.0 * std::numbers::pi;
  add_model(cf_scan);
  cf_scan->add_option("--r-max", r_max, "scan cap")->capture_default_str();
  auto* cf_bound = cf->add_subcommand("bound", "KS bound at radius r");
  double r = 1.0, A = 1.0;
  add_model(cf_bound);
  cf_bound->add_option("--r", r, "radius inside the zero-free disk")->required();
  cf_bound->add_option("-A,--constant", A, "constant A")->capture_default_str();

  // spin
  auto* sp = app.add_subcommand("spin", "spin-system engines");
  sp->require_subcommand(1);
  int dim = 1, side = 4, samples = 10000, burn_in = 1000;
  std::string measure = "ising", sp_out;
  double beta = 0.5, J = 1.0, h = 0.0, target_ess = 1e4;
  bool periodic = false;
  std::uint64_t seed = 1;
  std::vector<int> sides{64, 256, 1024};
  auto add_spin = [&](CLI::App* c) {
    c->add_option("--dim", dim, "lattice dimension")->capture_default_str();
    c->add_option("--side", side, "side length")->capture_default_str();
    c->add_option("--measure", measure, "ising | xy | heisenberg")->capture_default_str();
    c->add_option("--beta", beta, "inverse temperature")->capture_default_str();
    c->add_option("--J", J, "coupling")->capture_default_str();
    c->add_option("--field", h, "external field along e1")->capture_default_str();
    c->add_flag("--periodic", periodic, "periodic boundary");
    c->add_option("--out", sp_out, "output directory");
  };
  auto* sp_exact = sp->add_subcommand("exact", "exact log Z and moments of the total spin");
  add_spin(sp_exact);
  auto* sp_sample = sp->add_subcommand("sample", "Metropolis samples of the total spin");
  add_spin(sp_sample);
  sp_sample->add_option("--samples", samples, "samples per chain")->capture_default_str();
  sp_sample->add_option("--burn-in", burn_in, "burn-in sweeps")->capture_default_str();
  sp_sample->add_option("--seed", seed, "RNG seed")->capture_default_str();
  auto* sp_ly = sp->add_subcommand("leeyang", "Lee-Yang zeros of an Ising model");
  add_spin(sp_ly);
  auto* sp_clt = sp->add_subcommand("clt", "variance and KS scaling sweep over --sides");
  add_spin(sp_clt);
  sp_clt->add_option("--sides", sides, "side lengths")->delimiter(',');
  sp_clt->add_option("--samples", samples, "initial samples per chain")->capture_default_str();
  sp_clt->add_option("--target-ess", target_ess, "target ESS")->capture_default_str();
  sp_clt->add_option("--seed", seed, "RNG seed")->required();

  // dpp
  auto* dp = app.add_subcommand("dpp", "alpha-determinantal point processes");
  dp->require_subcommand(1);
  std::string kernel_flag = "gaussian:1", phi_flag = "indicator", dp_out, backend = "cumulant";
  double alpha = -1.0, grid_res = 0.0, amplitude = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> Ls{8.0};
  int dp_samples = 20000;
  auto add_dpp = [&](CLI::App* c) {
    c->add_option("--kernel", kernel_flag, "gaussian:scale | ball_fourier:d | projection:rank | custom:file")
        ->capture_default_str();
    c->add_option("--dim", dim, "dimension for the gaussian kernel")->capture_default_str();
    c->add_option("--alpha", alpha, "alpha (ignored for custom kernel files)")->capture_default_str();
    c->add_option("--amplitude", amplitude, "kernel amplitude (default: family normalization)");
    c->add_option("--phi", phi_flag, "indicator | bump | custom:file")->capture_default_str();
    c->add_option("--L", Ls, "window scale(s)")->delimiter(',');
    c->add_option("--grid-res", grid_res, "grid spacing (default: kernel scale / 4)");
    c->add_option("--seed", seed, "RNG seed")->capture_default_str();
    c->add_option("--out", dp_out, "output directory");
  };
  auto* dp_cum = dp->add_subcommand("cumulants", "cumulants of the linear statistic at each L");
  add_dpp(dp_cum);
  auto* dp_var = dp->add_subcommand("variance", "variance scaling fit over L");
  add_dpp(dp_var);
  auto* dp_decay = dp->add_subcommand("decay-check", "kernel decay audit with the ball-Fourier example constants");
  add_dpp(dp_decay);
  auto* dp_sample = dp->add_subcommand("sample", "exact samples and correlation validation");
  add_dpp(dp_sample);
  dp_sample->add_option("--samples", dp_samples, "number of configurations")->capture_default_str();
  auto* dp_clt = dp->add_subcommand("clt", "skewness, KS and zero-free radius over L");
  add_dpp(dp_clt);
  dp_clt->add_option("--backend", backend, "cumulant | sampling")->capture_default_str();
  dp_clt->add_option("--samples", dp_samples, "samples per L (sampling backend)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run_config(Config::load(config_path), run_out, jobs);

    if (*plot_cmd) {
      const auto rep = load_report(report_path);
      fs::path out = plot_out.empty() ? fs::path(fs::path(report_path).replace_extension("").string() + "_" + metric + ".svg")
                                      : fs::path(plot_out);
      const auto info = emit_plot(rep, metric, out);
      std::cout << "wrote " << out.string() << (info.loglog ? " (log-log" : " (linear") << ", fitted slope "
                << format_number(info.fit.slope) << ")\n";
      return 0;
    }

    if (*cf) {
      auto spec = parse_model_spec(model_spec);
      CharFnModel m = make_charfn_model(spec);
      if (standardize) m = models::standardized(m);
      json j{{"model", m.description}, {"mean", m.mean}, {"std_dev", m.std_dev}};
      if (*cf_eval) {
        const cplx v = eval_charfn(m, cplx(u_re, u_im));
        j["u"] = complex_to_json(cplx(u_re, u_im));
        j["log_value"] = complex_to_json(std::log(v));
        j["value"] = complex_to_json(v);
        emit(j, cf_out, "charfn_eval");
      } else if (*cf_scan) {
        const double cap = std::min(r_max, 0.999 * m.validity_radius);
        j["scan"] = expanding_zero_scan(m, std::min(0.5, cap), cap, 24, jobs);
        emit(j, cf_out, "charfn_scan");
      } else {
        j["bound"] = ks_bound(m, r, A, std::nullopt, jobs);
        if (!m.atoms.empty()) j["exact_ks"] = exact_ks(m);
        emit(j, cf_out, "charfn_bound");
      }
      return 0;
    }

    if (*sp) {
      if (*sp_clt) {
        Config cfg;
        cfg.set("kind", "spin_clt");
        cfg.set("seed", std::to_string(seed));
        cfg.set("spin.dim", std::to_string(dim));
        cfg.set("spin.measure", measure);
        cfg.set("spin.beta", format_number(beta));
        cfg.set("spin.J", format_number(J));
        cfg.set("spin.h", format_number(h));
        cfg.set("spin.periodic", periodic ? "true" : "false");
        cfg.set("spin.sides", join(sides));
        cfg.set("mc.samples", std::to_string(samples));
        cfg.set("mc.target_ess", format_number(target_ess));
        return run_config(cfg, sp_out.empty() ? "results" : sp_out, jobs);
      }
      Params p({{"dim", std::to_string(dim)},
                {"side", std::to_string(side)},
                {"measure", measure},
                {"beta", format_number(beta)},
                {"J", format_number(J)},
                {"h", format_number(h)},
                {"periodic", periodic ? "true" : "false"}});
      const auto model = make_spin_model(p);
      json j{{"sites", model.sites()}, {"measure", measure}, {"beta", beta}, {"J", J}, {"h", h}};
      if (*sp_exact) {
        j["log_partition_function"] = complex_to_json(spin::log_partition_function(model));
        const auto tot = spin::spin_total_model(model);
        j["mean_total_spin"] = tot.mean;
        j["variance_total_spin"] = tot.std_dev * tot.std_dev;
        emit(j, sp_out, "spin_exact");
      } else if (*sp_sample) {
        spin::MetropolisOptions mo;
        mo.n_samples = static_cast<std::size_t>(samples);
        mo.burn_in = static_cast<std::size_t>(burn_in);
        mo.seed = seed;
        mo.jobs = jobs;
        const auto set = spin::metropolis_sample(model, mo);
        j["samples"] = set.total_spin.size();
        j["acceptance"] = set.acceptance_rate;
        j["ess"] = set.effective_sample_size();
        j["mean"] = mean(set.total_spin);
        j["variance"] = variance(set.total_spin);
        j["empirical_ks"] = empirical_ks(set.total_spin).studentized;
        if (!sp_out.empty()) {
          fs::create_directories(sp_out);
          std::ofstream csv(fs::path(sp_out) / "spin_samples.csv");
          csv << "sample,total_spin\n";
          for (std::size_t i = 0; i < set.total_spin.size(); ++i) csv << i << "," << format_number(set.total_spin[i]) << "\n";
        }
        emit(j, sp_out, "spin_sample");
      } else {
        const auto ly = spin::lee_yang_zeros(model);
        json zeros = json::array();
        for (const auto& z : ly.fugacity_zeros) zeros.push_back(complex_to_json(z));
        j["fugacity_zeros"] = zeros;
        j["max_abs_deviation_from_unit_circle"] = ly.max_abs_deviation_from_unit_circle;
        j["zero_free_field_radius"] = ly.zero_free_field_radius;
        emit(j, sp_out, "spin_leeyang");
      }
      return 0;
    }

    if (*dp) {
      const auto kc = parse_kernel_flag(kernel_flag);
      if (*dp_var || *dp_clt) {
        Config cfg;
        cfg.set("kind", *dp_var ? "dpp_variance" : "dpp_clt");
        kernel_keys(cfg, kc, dim, alpha);
        if (!std::isnan(amplitude)) cfg.set("dpp.amplitude", format_number(amplitude));
        if (phi_flag.rfind("custom:", 0) == 0) throw ArgumentError("sweeps need --phi indicator or bump");
        cfg.set("dpp.phi", phi_flag);
        cfg.set("dpp.L", join(Ls));
        cfg.set("dpp.spacing", format_number(grid_res));
        if (*dp_clt) {
          cfg.set("dpp.backend", backend);
          cfg.set("dpp.samples", std::to_string(dp_samples));
          cfg.set("seed", std::to_string(seed));
        }
        return run_config(cfg, dp_out.empty() ? "results" : dp_out, jobs);
      }
      if (*dp_decay) {
        if (kc.family == "custom") throw ArgumentError("decay-check needs an evaluable kernel");
        // the example constants are stated for the amplitude-1 ball-Fourier kernel
        const double amp = std::isnan(amplitude) && kc.family == "ball_fourier" ? 1.0 : amplitude;
        const auto k = kernel_spec(kc, dim, alpha, amp);
        auto params = dpp::ball_fourier_decay_params(k.dim);
        params.seed = seed;
        const auto rep = dpp::kernel_decay_check(k, params);
        json annuli = json::array();
        for (const auto& a : rep.annuli)
          annuli.push_back({{"n", a.n}, {"fraction", a.fraction}, {"std_error", a.std_error}, {"pass", a.pass}});
        json j{{"kernel", k.description}, {"iib_pass", rep.iib_pass},     {"annuli", annuli},
               {"c3", rep.c3},            {"tail_slope", rep.tail_slope}, {"predicted_slope", rep.predicted_slope},
               {"integral_pass", rep.integral_pass}};
        if (!dp_out.empty()) {
          fs::create_directories(dp_out);
          std::ofstream csv(fs::path(dp_out) / "decay_annuli.csv");
          csv << "n,fraction,std_error,pass\n";
          for (const auto& a : rep.annuli)
            csv << a.n << "," << format_number(a.fraction) << "," << format_number(a.std_error) << "," << a.pass << "\n";
        }
        emit(j, dp_out, "dpp_decay");
        return rep.iib_pass ? 0 : kGateFailure;
      }
      json rows = json::array();
      std::string csv = dp_cum ? "L,grid_points,mean,variance,skewness,excess_kurtosis\n" : "";
      for (double L : Ls) {
        const auto s = dpp_setup(kc, dim, alpha, amplitude, phi_flag, L, grid_res);
        if (*dp_cum) {
          const auto c = dpp::linstat_cumulants(dpp::FredholmOperator(s.dk, s.phi, s.alpha), 0.0, L);
          auto j = cumulant_json(c);
          j["L"] = L;
          j["grid_points"] = s.dk->size();
          rows.push_back(j);
          csv += format_number(L) + "," + std::to_string(s.dk->size()) + "," + format_number(c.mean) + "," +
                 format_number(c.variance) + "," + format_number(c.skewness) + "," + format_number(c.excess_kurtosis) +
                 "\n";
        } else {
          std::vector<dpp::Configuration> confs;
          if (s.alpha == -1.0) confs = dpp::sample_dpp(*s.dk, dp_samples, seed, jobs);
          else if (s.alpha == 2.0) confs = dpp::sample_permanental_cox(*s.dk, 2.0, dp_samples, seed, jobs);
          else if (s.alpha == 0.0) confs = dpp::sample_poisson(*s.dk, dp_samples, seed, jobs);
          else throw CapabilityError("dpp sample: samplers exist for alpha in {-1, 0, 2}");
          const auto v = dpp::correlation_validation(confs, *s.dk, s.alpha);
          std::vector<double> stat;
          csv += "L,sample,points,linear_statistic\n";
          for (std::size_t i = 0; i < confs.size(); ++i) {
            double t = 0.0;
            for (int c : confs[i]) t += s.phi(c);
            stat.push_back(t);
            csv += format_number(L) + "," + std::to_string(i) + "," + std::to_string(confs[i].size()) + "," +
                   format_number(t) + "\n";
          }
          rows.push_back({{"L", L},
                          {"samples", confs.size()},
                          {"mean", mean(stat)},
                          {"variance", variance(stat)},
                          {"variance_formula", dpp::linstat_variance_formula(*s.dk, s.phi, s.alpha)},
                          {"empirical_ks", empirical_ks(stat).studentized},
                          {"correlation_fraction_within_3se", v.fraction_within},
                          {"correlation_pass", v.pass},
                          {"low_sample_warning", v.low_sample_warning}});
        }
      }
      const std::string name = *dp_cum ? "dpp_cumulants" : "dpp_samples";
      if (!dp_out.empty()) {
        fs::create_directories(dp_out);
        write_atomically(fs::path(dp_out) / (name + ".csv"), csv);
      }
      emit(json{{"kernel", kernel_flag}, {"phi", phi_flag}, {"rows", rows}}, dp_out, name);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
