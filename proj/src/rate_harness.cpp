#include "markov_approx/rate_harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include "json.hpp"

#include "markov_approx/chain_compare.hpp"
#include "markov_approx/config.hpp"
#include "markov_approx/normal_clt.hpp"
#include "markov_approx/sampling.hpp"
#include "markov_approx/sgd_diffusion.hpp"
#include "markov_approx/stable_ou.hpp"

namespace markov_approx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed_or(const SweepSpec& spec, const std::string& key, const std::string& fallback) {
  auto it = spec.fixed.find(key);
  return it == spec.fixed.end() ? fallback : it->second;
}

double fixed_number(const SweepSpec& spec, const std::string& key, double fallback) {
  auto it = spec.fixed.find(key);
  return it == spec.fixed.end() ? fallback : parse_number(it->second, key);
}

int as_count(double v, const std::string& what) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v)) || r < 1) {
    throw std::invalid_argument(what + " must be a positive integer, got " + std::to_string(v));
  }
  return static_cast<int>(r);
}

VectorState vector_or_zero(const SweepSpec& spec, const std::string& key, int dim) {
  auto it = spec.fixed.find(key);
  if (it == spec.fixed.end()) return VectorState::Zero(dim);
  const auto v = parse_list(it->second, key);
  if (v.size() == 1) return VectorState::Constant(dim, v[0]);
  if (static_cast<int>(v.size()) != dim) throw std::invalid_argument(key + " has the wrong dimension");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

W1Options w1_options(const SweepSpec& spec) {
  W1Options o;
  o.method = spec.w1_method;
  o.n_projections = spec.n_projections;
  o.bootstrap_resamples = spec.bootstrap_resamples;
  return o;
}

// (w1, se) between a and b plus the floor W1(ref, ref2); projections for the
// sliced estimator are shared between the two measurements.
void measure_row(const SweepSpec& spec, const SampleSet& a, const SampleSet& b, const SampleSet& ref,
                 const SampleSet& ref2, const RngStream& stream, SweepRow& row) {
  RngStream s1 = stream.child(10);
  RngStream s2 = stream.child(10);
  const W1Estimate est = estimate_w1(a, b, w1_options(spec), s1);
  W1Options floor_opts = w1_options(spec);
  floor_opts.bootstrap_resamples = 0;
  row.w1 = est.value;
  row.std_error = est.std_error;
  row.floor = estimate_w1(ref, ref2, floor_opts, s2).value;
}

QuadraticModel sgd_model(const SweepSpec& spec) {
  const auto h_diag = parse_list(fixed_or(spec, "h", "1"), "h");
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(h_diag.data(), static_cast<Eigen::Index>(h_diag.size()));
  const std::string model = fixed_or(spec, "model", "example1");
  if (model == "example1") return make_example1(diag.asDiagonal());
  if (model == "example2") {
    const Matrix q = Matrix::Identity(diag.size(), diag.size());
    return make_example2(q, diag, fixed_number(spec, "gamma", 1.0));
  }
  throw std::invalid_argument("unknown model: " + model);
}

SweepRow sgd_row(const SweepSpec& spec, double eta, const RngStream& stream) {
  const QuadraticModel model = sgd_model(spec);
  SgdConfig cfg;
  cfg.eta = eta;
  cfg.horizon_n = as_count(fixed_number(spec, "T", 2.0) / eta, "T / eta");
  cfg.x0 = vector_or_zero(spec, "x0", model.dim());
  cfg.n_paths = spec.n_paths;
  cfg.dt_ratio = fixed_number(spec, "dt_ratio", cfg.dt_ratio);
  const auto [sgd, sde] = simulate_pair_marginals(model, cfg, stream.child(0));
  const SampleSet sde2 = simulate_sde_marginal(model, cfg, eta * cfg.horizon_n, stream.child(1));
  SweepRow row;
  measure_row(spec, sgd, sde, sde, sde2, stream, row);
  return row;
}

SweepRow stable_row(const SweepSpec& spec, double param, const RngStream& stream) {
  StableOuConfig cfg;
  const int d = static_cast<int>(fixed_number(spec, "d", 1));
  cfg.params = stable_constants(fixed_number(spec, "alpha", 1.5), d);
  const std::string vary = fixed_or(spec, "vary", "eta");
  if (vary == "eta") {
    cfg.eta = param;
    cfg.horizon_n = as_count(fixed_number(spec, "T", 2.0) / param, "T / eta");
  } else if (vary == "horizon") {
    cfg.eta = fixed_number(spec, "eta", 1.0 / 32.0);
    cfg.horizon_n = as_count(param, "horizon");
  } else {
    throw std::invalid_argument("vary must be eta or horizon, got " + vary);
  }
  const std::string scaling = fixed_or(spec, "scaling", "levy");
  if (scaling == "levy") {
    cfg.scaling = EmScaling::kLevyConsistent;
  } else if (scaling == "closed_form") {
    cfg.scaling = EmScaling::kClosedForm;
  } else {
    throw std::invalid_argument("scaling must be levy or closed_form, got " + scaling);
  }
  cfg.x0 = vector_or_zero(spec, "x0", d);
  cfg.n_paths = spec.n_paths;
  const auto [exact, em] = simulate_pair_marginals(cfg, stream.child(0));
  const SampleSet exact2 = sample_exact_marginal(cfg, cfg.eta * cfg.horizon_n, stream.child(1));
  SweepRow row;
  measure_row(spec, em, exact, exact, exact2, stream, row);
  return row;
}

SweepRow clt_row(const SweepSpec& spec, double param, const RngStream& stream) {
  CltConfig cfg;
  cfg.dim = static_cast<int>(fixed_number(spec, "d", 1));
  cfg.innovation = parse_innovation(fixed_or(spec, "innovation", "rademacher"));
  const int n = as_count(param, "n");
  cfg.n_grid = {n};
  cfg.n_paths = spec.n_paths;
  const CltGap gap = measure_gap(cfg, n, stream, spec.bootstrap_resamples);
  SweepRow row;
  row.w1 = gap.w1.value;
  row.std_error = gap.w1.std_error;
  row.floor = gap.floor;
  row.bound = gap.bound;
  return row;
}

SweepRow framework_row(const SweepSpec& spec, double param, const RngStream& stream) {
  const int horizon = as_count(param, "horizon");
  if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
  const int trials = as_count(fixed_number(spec, "trials", 100), "trials");
  const int max_states = as_count(fixed_number(spec, "max_states", 8), "max_states");
  RngStream rng = stream;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int s = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_states));
    const FiniteChainPair pair = random_chain_pair(s, horizon, rng);
    const TestFunction h = random_test_function(s, rng);
    for (std::size_t x = 0; x < pair.size(); ++x) {
      worst = std::max(worst, std::abs(lhs(pair, h, x) - rhs_telescope(pair, h, x)));
    }
  }
  SweepRow row;
  row.w1 = worst;
  return row;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double read_double(const std::string& s) {
  double v = 0.0;
  if (s == "nan") return kNaN;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("table csv: bad number '" + s + "'");
  }
  return v;
}

std::uint64_t read_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("table csv: bad integer '" + s + "'");
  }
  return v;
}

constexpr const char* kCsvHeader = "experiment,param,w1,stderr,n_paths,seed,floor,excluded,bound";

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kSgd: return "sgd";
    case Experiment::kStable: return "stable";
    case Experiment::kClt: return "clt";
    case Experiment::kFramework: return "framework";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::kSgd, Experiment::kStable, Experiment::kClt, Experiment::kFramework}) {
    if (to_string(e) == name) return e;
  }
  throw std::invalid_argument("unknown experiment: " + name);
}

std::string to_string(LogCorrection c) {
  return c == LogCorrection::kNone ? "none" : "divide_1_plus_log";
}

LogCorrection parse_log_correction(const std::string& name) {
  if (name == "none") return LogCorrection::kNone;
  if (name == "divide_1_plus_log") return LogCorrection::kDivideOnePlusLog;
  throw std::invalid_argument("unknown log correction: " + name);
}

void validate(const SweepSpec& spec) {
  if (spec.grid.size() < 4) throw std::invalid_argument("sweep: grid needs at least 4 points");
  const bool up = spec.grid[1] > spec.grid[0];
  for (std::size_t i = 1; i < spec.grid.size(); ++i) {
    const bool step_up = spec.grid[i] > spec.grid[i - 1];
    if (spec.grid[i] == spec.grid[i - 1] || step_up != up) {
      throw std::invalid_argument("sweep: grid must be strictly monotone");
    }
  }
  for (double g : spec.grid) {
    if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("sweep: grid values must be positive");
  }
  if (spec.n_paths < 1) throw std::invalid_argument("sweep: n_paths must be >= 1");
}

SweepTable run_sweep(const SweepSpec& spec) {
  validate(spec);
  const RngStream root(spec.seed, 0);
  SweepTable table;
  table.experiment = spec.experiment;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double p = spec.grid[i];
    const RngStream stream = root.child(i);
    SweepRow row;
    try {
      switch (spec.experiment) {
        case Experiment::kSgd: row = sgd_row(spec, p, stream); break;
        case Experiment::kStable: row = stable_row(spec, p, stream); break;
        case Experiment::kClt: row = clt_row(spec, p, stream); break;
        case Experiment::kFramework: row = framework_row(spec, p, stream); break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(to_string(spec.experiment) + " sweep at grid point " + format_double(p) + ": " +
                               e.what());
    }
    if (spec.experiment != Experiment::kClt) row.bound = kNaN;
    row.param = p;
    row.n_paths = spec.experiment == Experiment::kFramework ? 0 : spec.n_paths;
    row.seed = spec.seed;
    row.excluded = spec.experiment != Experiment::kFramework && row.w1 <= 2.0 * row.floor;
    table.rows.push_back(row);
  }
  return table;
}

RateFit fit_rate(const SweepTable& table, LogCorrection correction) {
  RateFit fit;
  fit.log_correction = correction;
  std::vector<double> xs, ys;
  std::vector<double> all_x, all_y;
  for (const SweepRow& r : table.rows) {
    if (!(r.w1 > 0.0)) throw std::invalid_argument("fit_rate: w1 must be positive to take logs");
    if (!(r.param > 0.0)) throw std::invalid_argument("fit_rate: parameters must be positive");
    const double x = std::log(r.param);
    double y = std::log(r.w1);
    if (correction == LogCorrection::kDivideOnePlusLog) y -= std::log1p(std::abs(x));
    all_x.push_back(x);
    all_y.push_back(y);
    if (!r.excluded) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const std::size_t m = xs.size();
  if (m < 3) throw std::invalid_argument("fit_rate: need at least 3 usable rows");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: parameters must not all coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += e * e;
  }
  for (std::size_t i = 0; i < all_x.size(); ++i) {
    fit.residuals.push_back(all_y[i] - fit.intercept - fit.slope * all_x[i]);
  }
  const double dof = static_cast<double>(m) - 2.0;
  const double se = std::sqrt(ssr / dof / sxx);
  const boost::math::students_t dist(dof);
  fit.half_width = boost::math::quantile(dist, 0.975) * se;
  fit.points_used = m;
  return fit;
}

ExpectedRate expected_rate(const SweepSpec& spec) {
  switch (spec.experiment) {
    case Experiment::kSgd:
      return {1.0, 0.75, 1.25, LogCorrection::kDivideOnePlusLog};
    case Experiment::kStable: {
      const double a = fixed_number(spec, "alpha", 1.5);
      const double e = (2.0 - a) / a;
      return {e, e - 0.30, e + 0.30, LogCorrection::kNone};
    }
    case Experiment::kClt:
      return {-0.5, -0.65, -0.38, LogCorrection::kDivideOnePlusLog};
    case Experiment::kFramework:
      break;
  }
  return {0.0, 0.0, 0.0, LogCorrection::kNone};
}

void write_table_csv(std::ostream& out, const SweepTable& table) {
  out << kCsvHeader << '\n';
  const std::string name = to_string(table.experiment);
  for (const SweepRow& r : table.rows) {
    out << name << ',' << format_double(r.param) << ',' << format_double(r.w1) << ','
        << format_double(r.std_error) << ',' << r.n_paths << ',' << r.seed << ',' << format_double(r.floor) << ','
        << (r.excluded ? 1 : 0) << ',' << (std::isnan(r.bound) ? std::string("nan") : format_double(r.bound))
        << '\n';
  }
}

SweepTable read_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("table csv: missing header");
  SweepTable table;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 9) throw std::runtime_error("table csv: expected 9 columns");
    const Experiment e = parse_experiment(cells[0]);
    if (first) {
      table.experiment = e;
      first = false;
    } else if (e != table.experiment) {
      throw std::runtime_error("table csv: mixed experiments");
    }
    SweepRow r;
    r.param = read_double(cells[1]);
    r.w1 = read_double(cells[2]);
    r.std_error = read_double(cells[3]);
    r.n_paths = read_unsigned(cells[4]);
    r.seed = read_unsigned(cells[5]);
    r.floor = read_double(cells[6]);
    r.excluded = cells[7] == "1";
    r.bound = read_double(cells[8]);
    table.rows.push_back(r);
  }
  return table;
}

std::string summary_json(const SweepSpec& spec, const SweepTable& table, const std::optional<RateFit>& fit) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(spec.experiment);
  j["seed"] = spec.seed;
  j["n_paths"] = spec.n_paths;
  j["w1_method"] = to_string(spec.w1_method);
  j["fixed"] = spec.fixed;
  j["grid"] = spec.grid;
  std::vector<double> excluded;
  for (const auto& r : table.rows) {
    if (r.excluded) excluded.push_back(r.param);
  }
  j["excluded"] = excluded;

  if (spec.experiment == Experiment::kFramework) {
    double worst = 0.0;
    for (const auto& r : table.rows) worst = std::max(worst, r.w1);
    j["max_abs_residual"] = worst;
    j["tolerance"] = 1e-10;
    j["pass"] = worst <= 1e-10;
    return j.dump(2) + "\n";
  }

  const ExpectedRate want = expected_rate(spec);
  j["expected_exponent"] = want.exponent;
  j["accept_low"] = want.low;
  j["accept_high"] = want.high;
  if (fit) {
    j["correction"] = to_string(fit->log_correction);
    j["slope"] = fit->slope;
    j["intercept"] = fit->intercept;
    j["ci_half_width"] = fit->half_width;
    j["ci"] = {fit->slope - fit->half_width, fit->slope + fit->half_width};
    j["points_used"] = fit->points_used;
    nlohmann::json res = nlohmann::json::array();
    for (double r : fit->residuals) res.push_back(number_or_null(r));
    j["residuals"] = res;
  } else {
    j["correction"] = to_string(want.correction);
    j["slope"] = nullptr;
  }
  bool pass = fit && want.accepts(fit->slope);
  if (spec.experiment == Experiment::kClt) {
    bool bounded = true;
    for (const auto& r : table.rows) bounded = bounded && r.w1 <= r.bound + 3.0 * r.std_error + r.floor;
    j["within_bound"] = bounded;
    pass = pass && bounded;
  }
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

void emit(const SweepSpec& spec, const SweepTable& table, const std::optional<RateFit>& fit,
          const std::filesystem::path& stem) {
  if (table.rows.empty()) throw std::invalid_argument("emit: empty table");
  auto csv_path = stem;
  csv_path += ".csv";
  auto json_path = stem;
  json_path += ".json";
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("emit: cannot write " + csv_path.string());
    write_table_csv(out, table);
    if (!out) throw std::runtime_error("emit: write failed for " + csv_path.string());
  }
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("emit: cannot write " + json_path.string());
  out << summary_json(spec, table, fit);
  if (!out) throw std::runtime_error("emit: write failed for " + json_path.string());
}

}  // namespace markov_approx
