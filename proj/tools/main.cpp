// markov-approx: command-line front end for the experiments and audits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "markov_approx/chain_compare.hpp"
#include "markov_approx/config.hpp"
#include "markov_approx/rate_harness.hpp"
#include "markov_approx/sampling.hpp"
#include "markov_approx/sgd_diffusion.hpp"
#include "markov_approx/stable_ou.hpp"

namespace fs = std::filesystem;
using namespace markov_approx;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kUsage = 2;

struct Common {
  std::string config_path;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  bool quiet = false;
};

Config load_config(const Common& c, bool required) {
  if (c.config_path.empty()) {
    if (required) throw ConfigError("--config is required for this subcommand");
    return Config{};
  }
  return Config::load(c.config_path);
}

// seed: flag > config > 0
std::uint64_t pick_seed(const Common& c, const Config& cfg, const std::string& section) {
  if (c.seed) return *c.seed;
  if (auto v = cfg.find(section, "seed")) return parse_unsigned(*v, "seed");
  return 0;
}

std::size_t pick_paths(const Common& c, const Config& cfg, const std::string& section, std::size_t fallback) {
  if (c.paths) return *c.paths;
  if (auto v = cfg.find(section, "n_paths")) return parse_unsigned(*v, "n_paths");
  return fallback;
}

double number_or(const Config& cfg, const std::string& section, const std::string& key, double fallback) {
  auto v = cfg.find(section, key);
  return v ? parse_number(*v, key) : fallback;
}

std::vector<double> list_or(const Config& cfg, const std::string& section, const std::string& key,
                            std::vector<double> fallback) {
  auto v = cfg.find(section, key);
  return v ? parse_list(*v, key) : fallback;
}

void write_json(const Common& c, const std::string& name, const json& j) {
  fs::create_directories(c.out_dir);
  const fs::path path = fs::path(c.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

QuadraticModel model_from(const Config& cfg, const std::string& section) {
  const auto h = list_or(cfg, section, "h", {1.0, 2.0});
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  const std::string model = cfg.find(section, "model").value_or("example1");
  if (model == "example1") return make_example1(diag.asDiagonal());
  if (model == "example2") {
    return make_example2(Matrix::Identity(diag.size(), diag.size()), diag, number_or(cfg, section, "gamma", 1.0));
  }
  throw ConfigError("unknown model: " + model);
}

VectorState x0_from(const Config& cfg, const std::string& section, int dim, double fallback) {
  const auto v = list_or(cfg, section, "x0", {fallback});
  if (v.size() == 1) return VectorState::Constant(dim, v[0]);
  if (static_cast<int>(v.size()) != dim) throw ConfigError("x0 has the wrong dimension");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

int run_verify_framework(const Common& c, int trials) {
  const Config cfg = load_config(c, false);
  const int max_states = static_cast<int>(number_or(cfg, "framework", "max_states", 8));
  const int max_horizon = static_cast<int>(number_or(cfg, "framework", "max_horizon", 12));
  RngStream rng(pick_seed(c, cfg, "framework"), 0);
  const IdentityCheck check = verify_identity(trials, max_states, max_horizon, rng);
  const bool pass = check.max_abs_residual <= 1e-10;
  std::printf("max |lhs - rhs| = %.3e over %d instances (tolerance 1e-10): %s\n", check.max_abs_residual,
              check.trials, pass ? "PASS" : "FAIL");
  json j;
  j["trials"] = check.trials;
  j["max_states"] = max_states;
  j["max_horizon"] = max_horizon;
  j["max_abs_residual"] = check.max_abs_residual;
  j["pass"] = pass;
  write_json(c, "verify_framework.json", j);
  return pass ? kOk : kAssertionFailed;
}

int run_rate(const Common& c, Experiment experiment) {
  const Config cfg = load_config(c, true);
  SweepSpec spec = sweep_from_config(experiment, cfg);
  if (c.seed) spec.seed = *c.seed;
  if (c.paths) spec.n_paths = *c.paths;
  const SweepTable table = run_sweep(spec);
  const ExpectedRate want = expected_rate(spec);
  std::optional<RateFit> fit;
  try {
    fit = fit_rate(table, want.correction);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "fit skipped: %s\n", e.what());
  }
  fs::create_directories(c.out_dir);
  emit(spec, table, fit, fs::path(c.out_dir) / (to_string(experiment) + "_rate"));

  const json summary = json::parse(summary_json(spec, table, fit));
  if (!c.quiet) {
    std::printf("%12s %14s %12s %12s %s\n", "param", "w1", "stderr", "floor", "");
    for (const auto& r : table.rows) {
      std::printf("%12.6g %14.6e %12.4e %12.4e %s\n", r.param, r.w1, r.std_error, r.floor,
                  r.excluded ? "(excluded: within 2x floor)" : "");
    }
  }
  if (fit) {
    std::printf("slope %.4f +- %.4f (%s), expected %.4f, accept [%.4f, %.4f]: %s\n", fit->slope, fit->half_width,
                to_string(fit->log_correction).c_str(), want.exponent, want.low, want.high,
                summary["pass"].get<bool>() ? "PASS" : "FAIL");
  } else {
    std::printf("no slope fitted: FAIL\n");
  }
  return summary["pass"].get<bool>() ? kOk : kAssertionFailed;
}

int run_sampler_audit(const Common& c) {
  const Config cfg = load_config(c, false);
  const std::string sec = "sampler";
  const auto alphas = list_or(cfg, sec, "alpha", {1.2, 1.5, 1.8});
  const auto dims = list_or(cfg, sec, "d", {1, 2});
  const auto lambdas = list_or(cfg, sec, "lambda", {0.5, 1.0, 2.0});
  const std::size_t m_cf = pick_paths(c, cfg, sec, 1000000);
  const auto m_ks = static_cast<std::size_t>(number_or(cfg, sec, "ks_samples", 100000));
  const RngStream root(pick_seed(c, cfg, sec), 0);

  bool pass = true;
  json j;
  j["cf_samples"] = m_cf;
  j["ks_samples"] = m_ks;
  json cf = json::array(), ks = json::array();
  std::uint64_t case_id = 0;
  for (double a : alphas) {
    for (double dd : dims) {
      const StableParams params = stable_constants(a, static_cast<int>(dd));
      for (double lam : lambdas) {
        const double emp = empirical_cf(params, lam, m_cf, root.child(case_id++));
        const double target = std::exp(-std::pow(lam, a));
        const double tol = 3.0 / std::sqrt(static_cast<double>(m_cf));
        const bool ok = std::abs(emp - target) <= tol;
        pass = pass && ok;
        cf.push_back({{"alpha", a}, {"d", params.dim}, {"lambda", lam}, {"empirical", emp}, {"target", target},
                      {"tolerance", tol}, {"pass", ok}});
        if (!c.quiet) {
          std::printf("cf     alpha=%.2f d=%d |lambda|=%.2f  emp=%.6f target=%.6f  %s\n", a, params.dim, lam, emp,
                      target, ok ? "ok" : "FAIL");
        }
      }
      const ParetoAudit audit = pareto_radius_audit(params, m_ks, root.child(1000 + case_id++));
      pass = pass && audit.passed();
      ks.push_back({{"alpha", a},
                    {"d", params.dim},
                    {"ks_statistic", audit.ks_statistic},
                    {"critical_1pct", audit.critical_1pct},
                    {"support_violations", audit.support_violations},
                    {"pass", audit.passed()}});
      if (!c.quiet) {
        std::printf("pareto alpha=%.2f d=%d  D=%.5f crit=%.5f violations=%zu  %s\n", a, params.dim,
                    audit.ks_statistic, audit.critical_1pct, audit.support_violations, audit.passed() ? "ok" : "FAIL");
      }
    }
  }
  j["cf"] = cf;
  j["pareto"] = ks;
  j["pass"] = pass;
  write_json(c, "sampler_audit.json", j);
  std::printf("sampler audit: %s\n", pass ? "PASS" : "FAIL");
  return pass ? kOk : kAssertionFailed;
}

json constants_json(const AssumptionConstants& k) {
  return {{"theta", k.theta}, {"delta", k.delta}, {"kappa", k.kappa}, {"ell0", k.ell0}};
}

int run_assumptions(const Common& c) {
  const Config cfg = load_config(c, false);
  const std::string sec = "assumptions";
  const QuadraticModel model = model_from(cfg, sec);
  const int probes = static_cast<int>(pick_paths(c, cfg, sec, static_cast<std::size_t>(
                                                                       number_or(cfg, sec, "probes", 10000))));
  RngStream rng(pick_seed(c, cfg, sec), 0);
  const AssumptionReport r = check_assumptions(model, probes, rng);
  json j;
  j["model"] = to_string(model.variant);
  j["probes"] = r.probes;
  j["constants"] = constants_json(r.constants);
  j["violations"] = {{"dissipativity", r.dissipativity},
                     {"monotonicity", r.monotonicity},
                     {"curvature", r.curvature},
                     {"ellipticity", r.ellipticity},
                     {"fourth_moment_lipschitz", r.fourth_moment_lipschitz},
                     {"sigma_gradient", r.sigma_gradient}};
  j["admissible_eta"] = admissible_eta(r.constants);
  j["pass"] = r.passed();
  write_json(c, "assumptions.json", j);
  if (!c.quiet) {
    std::printf("theta = [%g, %g, %g, %g, %g, %g], delta = %g, kappa = %g\n", r.constants.theta[0],
                r.constants.theta[1], r.constants.theta[2], r.constants.theta[3], r.constants.theta[4],
                r.constants.theta[5], r.constants.delta, r.constants.kappa);
  }
  std::printf("assumption probes: %d, worst relative violation %.3e: %s\n", r.probes, r.max_violation(),
              r.passed() ? "PASS" : "FAIL");
  return r.passed() ? kOk : kAssertionFailed;
}

int run_moments(const Common& c) {
  const Config cfg = load_config(c, false);
  const int steps = static_cast<int>(number_or(cfg, "moments", "steps", 10000));
  bool pass = true;
  json j;

  {
    const std::string sec = "sgd_moments";
    const QuadraticModel model = model_from(cfg, sec);
    RngStream krng(pick_seed(c, cfg, sec), 1);
    const AssumptionConstants k = claimed_constants(model, krng);
    SgdConfig sc;
    sc.eta = number_or(cfg, sec, "eta", admissible_eta(k));
    sc.x0 = x0_from(cfg, sec, model.dim(), 1.0);
    sc.n_paths = pick_paths(c, cfg, sec, 2000);
    const MomentAudit a = moment_audit(model, sc, RngStream(pick_seed(c, cfg, sec), 2), steps);
    pass = pass && !a.flagged;
    j["sgd"] = {{"eta", sc.eta}, {"budget", a.budget}, {"max_fourth_moment", a.max_value}, {"flagged", a.flagged}};
    std::printf("sgd   E|w_k|^4: max %.4g, budget %.4g over %d steps: %s\n", a.max_value, a.budget, steps,
                a.flagged ? "FLAGGED" : "ok");
  }
  {
    const std::string sec = "stable_moments";
    StableOuConfig oc;
    oc.params = stable_constants(number_or(cfg, sec, "alpha", 1.5), static_cast<int>(number_or(cfg, sec, "d", 1)));
    oc.eta = number_or(cfg, sec, "eta", 0.5);
    oc.x0 = x0_from(cfg, sec, oc.params.dim, 1.0);
    oc.n_paths = pick_paths(c, cfg, sec, 2000);
    const RngStream root(pick_seed(c, cfg, sec), 3);
    const FirstMomentAudit a = em_moment_audit(oc, root, steps, number_or(cfg, sec, "multiple", 10.0));
    const MomentScaling s = em_moment_scaling(oc, root, number_or(cfg, sec, "factor", 10.0), steps);
    pass = pass && !a.flagged && s.passed;
    j["stable"] = {{"eta", oc.eta},
                   {"bound", a.bound},
                   {"max_first_moment", a.robust_max},
                   {"max_first_moment_plain_mean", a.max_value},
                   {"flagged", a.flagged},
                   {"scaling_ratio", s.ratio},
                   {"linear_ratio", s.linear_ratio},
                   {"scaling_pass", s.passed}};
    std::printf("stable E|Y_k|: max %.4g, bound %.4g; x0 scaling ratio %.3f vs linear %.3f: %s\n", a.robust_max,
                a.bound, s.ratio, s.linear_ratio, (!a.flagged && s.passed) ? "ok" : "FLAGGED");
  }
  j["steps"] = steps;
  j["pass"] = pass;
  write_json(c, "moments.json", j);
  return pass ? kOk : kAssertionFailed;
}

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config_path, "Config file (key = value with [sections])");
  if (config_required) opt->required();
  sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed; overrides the config");
  sub->add_option("--paths", c.paths, "Number of paths; overrides the config")->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", c.quiet, "Print only the verdict");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-chain approximation experiments: framework identity, SGD diffusion limit, "
               "stable Euler-Maruyama, normal CLT"};
  app.require_subcommand(1);
  Common c;
  int trials = 500;

  auto* verify = app.add_subcommand("verify-framework", "Check the telescoping identity on random finite chains");
  add_common(verify, c, false);
  verify->add_option("--trials", trials, "Random instances")->check(CLI::PositiveNumber)->capture_default_str();
  auto* sgd = app.add_subcommand("sgd-rate", "SGD vs diffusion W1 over an eta grid");
  add_common(sgd, c, true);
  auto* stable = app.add_subcommand("stable-rate", "Stable OU Euler-Maruyama W1 over an eta grid");
  add_common(stable, c, true);
  auto* clt = app.add_subcommand("clt-rate", "Normalized sums vs N(0, I) over an n grid");
  add_common(clt, c, true);
  auto* sampler = app.add_subcommand("sampler-audit", "Stable characteristic function and Pareto KS tests");
  add_common(sampler, c, false);
  auto* assumptions = app.add_subcommand("assumptions", "Probe the SGD model assumptions");
  add_common(assumptions, c, false);
  auto* moments = app.add_subcommand("moments", "SGD fourth-moment and EM first-moment audits");
  add_common(moments, c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*verify) return run_verify_framework(c, trials);
    if (*sgd) return run_rate(c, Experiment::kSgd);
    if (*stable) return run_rate(c, Experiment::kStable);
    if (*clt) return run_rate(c, Experiment::kClt);
    if (*sampler) return run_sampler_audit(c);
    if (*assumptions) return run_assumptions(c);
    if (*moments) return run_moments(c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kAssertionFailed;
  }
  return kUsage;
}
