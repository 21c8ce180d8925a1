#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "markov_approx/wasserstein.hpp"

namespace markov_approx {

enum class Experiment { kSgd, kStable, kClt, kFramework };
enum class LogCorrection { kNone, kDivideOnePlusLog };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);
std::string to_string(LogCorrection c);
LogCorrection parse_log_correction(const std::string& name);

/// A parameter sweep. `fixed` carries the held-constant settings as text:
///   sgd:       model (example1|example2), h (diagonal, comma list), gamma,
///              T, x0, dt_ratio
///   stable:    alpha, d, T, x0, scaling (levy|closed_form), vary (eta|horizon),
///              eta (when vary = horizon)
///   clt:       d, innovation
///   framework: trials, max_states
/// The grid holds eta (sgd, stable), N (stable with vary = horizon,
/// framework) or n (clt).
struct SweepSpec {
  Experiment experiment = Experiment::kSgd;
  std::vector<double> grid;
  std::map<std::string, std::string> fixed;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  W1Method w1_method = W1Method::kExact1d;
  int n_projections = 64;
  int bootstrap_resamples = 200;
};

/// Grid strictly monotone with at least 4 points, n_paths >= 1.
void validate(const SweepSpec& spec);

struct SweepRow {
  double param = 0.0;
  double w1 = 0.0;
  double std_error = 0.0;
  double floor = 0.0;     // W1 between two independent samples of the reference law
  bool excluded = false;  // w1 within 2x floor
  double bound = 0.0;     // theoretical bound where one is explicit (clt), else NaN
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct SweepTable {
  Experiment experiment = Experiment::kSgd;
  std::vector<SweepRow> rows;
};

/// One row per grid point; grid point i draws from RngStream(seed, 0).child(i).
/// The framework experiment stores the identity residual max |lhs - rhs| in w1.
SweepTable run_sweep(const SweepSpec& spec);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;  // one per table row, excluded rows included
  double half_width = 0.0;        // 95% CI half-width of the slope
  LogCorrection log_correction = LogCorrection::kNone;
  std::size_t points_used = 0;
};

/// OLS of log w1 (optionally minus log(1 + |ln param|)) on log param over the
/// rows not flagged as excluded. Requires all w1 > 0 and at least 3 usable rows.
RateFit fit_rate(const SweepTable& table, LogCorrection correction);

/// Exponent the theory predicts and the band the slope must fall in.
struct ExpectedRate {
  double exponent = 0.0;
  double low = 0.0;
  double high = 0.0;
  LogCorrection correction = LogCorrection::kNone;

  bool accepts(double slope) const { return slope >= low && slope <= high; }
};

/// sgd: 1 +- 0.25 with log correction; stable: (2 - alpha)/alpha +- 0.30;
/// clt: -1/2 within [-0.65, -0.38] with log correction.
ExpectedRate expected_rate(const SweepSpec& spec);

/// CSV columns: experiment,param,w1,stderr,n_paths,seed,floor,excluded,bound.
/// Values are written in shortest round-trip form.
void write_table_csv(std::ostream& out, const SweepTable& table);
SweepTable read_table_csv(std::istream& in);

/// Writes <stem>.csv and <stem>.json. Throws on an empty table or I/O failure.
void emit(const SweepSpec& spec, const SweepTable& table, const std::optional<RateFit>& fit,
          const std::filesystem::path& stem);

/// JSON summary text (the content emit writes to <stem>.json).
std::string summary_json(const SweepSpec& spec, const SweepTable& table, const std::optional<RateFit>& fit);

}  // namespace markov_approx
