#pragma once

#include <string>
#include <vector>

#include "markov_approx/rng.hpp"
#include "markov_approx/types.hpp"
#include "markov_approx/wasserstein.hpp"

namespace markov_approx {

/// Standardized innovation laws (mean 0, identity covariance), coordinates
/// i.i.d.:
///   kRademacher           +-1 with probability 1/2
///   kUniformScaled        uniform on [-sqrt 3, sqrt 3]
///   kCenteredExponential  E - 1, E ~ Exp(1)
///   kGaussian             N(0, 1); S_n is then exactly N(0, I)
enum class Innovation { kRademacher, kUniformScaled, kCenteredExponential, kGaussian };

std::string to_string(Innovation innovation);
Innovation parse_innovation(const std::string& name);

struct CltConfig {
  int dim = 1;
  Innovation innovation = Innovation::kRademacher;
  std::vector<int> n_grid;
  std::size_t n_paths = 10000;
};

/// One innovation vector xi.
VectorState draw_innovation(const CltConfig& cfg, RngStream& stream);

/// One draw of S_n = sum_{i<=n} xi_i / sqrt(n). Requires n >= 1.
VectorState partial_sum(const CltConfig& cfg, int n, RngStream& stream);

/// n_paths draws of S_n. Rademacher, exponential and Gaussian sums are drawn
/// from their exact laws (binomial bit count, Gamma(n), one normal) rather
/// than summed term by term.
SampleSet sample_partial_sums(const CltConfig& cfg, int n, const RngStream& root);

/// n_paths draws of N(0, I_d).
SampleSet sample_gaussian(int dim, std::size_t n_paths, const RngStream& root);

struct InnovationMoments {
  double abs1 = 0.0;  // E|xi|
  double abs3 = 0.0;  // E|xi|^3
  bool exact = true;  // false when estimated by Monte Carlo
};

/// E|xi| and E|xi|^3: closed form where available (all laws in d = 1,
/// Rademacher and Gaussian in any d), otherwise Monte Carlo with `mc_draws`.
InnovationMoments innovation_moments(Innovation innovation, int dim, RngStream& stream,
                                     std::size_t mc_draws = 1000000);

/// E|B| for B ~ N(0, I_d): sqrt 2 Gamma((d+1)/2) / Gamma(d/2).
double expected_gaussian_norm(int dim);

/// [(2d/3 + 1) E|B| + E|xi|^3 / 3 + E|xi|] n^{-1/2} (1 + ln n).
double theorem_bound(int dim, int n, double e_abs_b, double e_abs_xi3, double e_abs_xi);

struct CltGap {
  int n = 0;
  W1Estimate w1;
  double bound = 0.0;
  double floor = 0.0;  // W1 between two independent N(0, I) samples
  bool within_bound = false;  // w1 <= bound + 3 stderr + floor
};

/// W1 between n_paths draws of S_n and n_paths draws of N(0, I_d): exact 1-D
/// in d = 1, sliced with 64 projections otherwise. Requires n in cfg.n_grid.
CltGap measure_gap(const CltConfig& cfg, int n, const RngStream& root, int bootstrap_resamples = 200);

}  // namespace markov_approx
