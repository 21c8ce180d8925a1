#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "markov_approx/rng.hpp"
#include "markov_approx/types.hpp"

namespace markov_approx {

struct SampleMeta {
  std::uint64_t seed = 0;
  std::string tag;
};

/// i.i.d. draws of a d-dimensional law, stored column-wise (dim x count).
struct SampleSet {
  Matrix points;
  SampleMeta meta;

  int dim() const { return static_cast<int>(points.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
};

/// Validates dim >= 1 and a non-empty sample.
SampleSet make_sample_set(Matrix points, SampleMeta meta = {});

/// kMarginalSum is the sum over coordinates of the exact 1-D W1 between
/// marginals; it is at most sqrt(d) times the true W1.
enum class W1Method { kExact1d, kAssignment, kSliced, kMarginalSum };

std::string to_string(W1Method method);
W1Method parse_w1_method(const std::string& name);

struct W1Estimate {
  double value = 0.0;
  double std_error = 0.0;
  W1Method method = W1Method::kExact1d;
  int n_projections = 0;
};

/// Exact W1 between 1-D empirical laws. Equal sizes use the sorted (quantile)
/// coupling; unequal sizes integrate |F_a - F_b| piecewise.
W1Estimate w1_exact_1d(const SampleSet& a, const SampleSet& b);

/// Largest sample size accepted by the assignment solver.
inline constexpr std::size_t kAssignmentCap = 4096;

/// Exact W1 between equal-size empirical laws in any dimension, solved as a
/// linear assignment problem with Euclidean costs.
W1Estimate w1_assignment(const SampleSet& a, const SampleSet& b);

/// Minimum-cost perfect matching for a dense square cost matrix by shortest
/// augmenting paths with dual potentials. Returns row -> column.
std::vector<int> solve_assignment(const Matrix& cost);

/// Mean 1-D W1 over n_proj uniformly random unit directions (dim >= 2).
W1Estimate w1_sliced(const SampleSet& a, const SampleSet& b, int n_proj, RngStream& stream);

using W1Estimator = std::function<double(const SampleSet&, const SampleSet&)>;

/// Standard deviation of `estimator` over `resamples` independent
/// with-replacement resamples of (a, b). Requires resamples >= 50.
double bootstrap_stderr(const SampleSet& a, const SampleSet& b, const W1Estimator& estimator,
                        int resamples, RngStream& stream);

struct W1Options {
  W1Method method = W1Method::kExact1d;
  int n_projections = 64;
  int bootstrap_resamples = 200;  // 0 disables the error bar
};

/// W1 value plus bootstrap error bar. The exact 1-D and sliced paths resample
/// in O(n) per resample from pre-sorted data; the assignment path uses the
/// generic bootstrap.
W1Estimate estimate_w1(const SampleSet& a, const SampleSet& b, const W1Options& options,
                       RngStream& stream);

/// Ratio w1_assignment / w1_sliced on the first `subsample` points of each
/// set; multiplies sliced values onto the assignment scale.
double calibrate_sliced(const SampleSet& a, const SampleSet& b, std::size_t subsample, int n_proj,
                        RngStream& stream);

// CSV: "dim,count" header line, then "<dim>,<count>", then one row per point.
void write_samples_csv(std::ostream& out, const SampleSet& s);
SampleSet read_samples_csv(std::istream& in);
void save_samples(const std::filesystem::path& path, const SampleSet& s);
SampleSet load_samples(const std::filesystem::path& path);

// Flat binary: "MASS" magic, u32 version, u64 dim, u64 count, u64 seed, then
// count*dim native doubles, point-major.
void write_samples_binary(std::ostream& out, const SampleSet& s);
SampleSet read_samples_binary(std::istream& in);

}  // namespace markov_approx
