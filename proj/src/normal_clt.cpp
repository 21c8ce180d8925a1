#include "markov_approx/normal_clt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "markov_approx/parallel.hpp"

namespace markov_approx {

namespace {

const double kSqrt3 = std::sqrt(3.0);

double draw_scalar(Innovation innovation, RngStream& stream) {
  switch (innovation) {
    case Innovation::kRademacher:
      return (stream() >> 63) ? 1.0 : -1.0;
    case Innovation::kUniformScaled:
      return kSqrt3 * (2.0 * stream.uniform() - 1.0);
    case Innovation::kCenteredExponential:
      return stream.exponential() - 1.0;
    case Innovation::kGaussian:
      return stream.normal();
  }
  throw std::logic_error("unhandled innovation");
}

// sum of n Rademacher signs = 2 * (number of set bits among n fair bits) - n
double rademacher_sum(int n, RngStream& stream) {
  int ones = 0;
  int left = n;
  while (left >= 64) {
    ones += std::popcount(stream());
    left -= 64;
  }
  if (left > 0) ones += std::popcount(stream() >> (64 - left));
  return 2.0 * ones - n;
}

double scalar_sum(Innovation innovation, int n, RngStream& stream) {
  switch (innovation) {
    case Innovation::kRademacher:
      return rademacher_sum(n, stream);
    case Innovation::kCenteredExponential:
      return std::gamma_distribution<double>(n, 1.0)(stream) - n;
    case Innovation::kGaussian:
      return std::sqrt(static_cast<double>(n)) * stream.normal();
    case Innovation::kUniformScaled: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += draw_scalar(innovation, stream);
      return s;
    }
  }
  throw std::logic_error("unhandled innovation");
}

void check_config(const CltConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("clt: dim must be >= 1");
  if (cfg.n_paths < 1) throw std::invalid_argument("clt: n_paths must be >= 1");
}

}  // namespace

std::string to_string(Innovation innovation) {
  switch (innovation) {
    case Innovation::kRademacher: return "rademacher";
    case Innovation::kUniformScaled: return "uniform_scaled";
    case Innovation::kCenteredExponential: return "centered_exponential";
    case Innovation::kGaussian: return "gaussian";
  }
  return "unknown";
}

Innovation parse_innovation(const std::string& name) {
  for (auto v : {Innovation::kRademacher, Innovation::kUniformScaled, Innovation::kCenteredExponential,
                 Innovation::kGaussian}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown innovation: " + name);
}

VectorState draw_innovation(const CltConfig& cfg, RngStream& stream) {
  check_config(cfg);
  VectorState xi(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) xi[i] = draw_scalar(cfg.innovation, stream);
  return xi;
}

VectorState partial_sum(const CltConfig& cfg, int n, RngStream& stream) {
  if (n < 1) throw std::invalid_argument("partial_sum: n must be >= 1");
  VectorState s = VectorState::Zero(cfg.dim);
  for (int i = 0; i < n; ++i) s += draw_innovation(cfg, stream);
  return s / std::sqrt(static_cast<double>(n));
}

SampleSet sample_partial_sums(const CltConfig& cfg, int n, const RngStream& root) {
  check_config(cfg);
  if (n < 1) throw std::invalid_argument("sample_partial_sums: n must be >= 1");
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix out(cfg.dim, static_cast<Eigen::Index>(cfg.n_paths));
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    for (std::size_t p = begin; p < end; ++p) {
      for (int i = 0; i < cfg.dim; ++i) {
        out(i, static_cast<Eigen::Index>(p)) = scalar_sum(cfg.innovation, n, rng) * inv_sqrt_n;
      }
    }
  });
  return make_sample_set(std::move(out), SampleMeta{root.seed(), "clt-" + to_string(cfg.innovation)});
}

SampleSet sample_gaussian(int dim, std::size_t n_paths, const RngStream& root) {
  if (dim < 1 || n_paths < 1) throw std::invalid_argument("sample_gaussian: empty request");
  Matrix out(dim, static_cast<Eigen::Index>(n_paths));
  parallel_chunks(n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    for (std::size_t p = begin; p < end; ++p) {
      for (int i = 0; i < dim; ++i) out(i, static_cast<Eigen::Index>(p)) = rng.normal();
    }
  });
  return make_sample_set(std::move(out), SampleMeta{root.seed(), "gaussian"});
}

double expected_gaussian_norm(int dim) {
  if (dim < 1) throw std::invalid_argument("expected_gaussian_norm: dim must be >= 1");
  return std::sqrt(2.0) * std::exp(std::lgamma((dim + 1) / 2.0) - std::lgamma(dim / 2.0));
}

InnovationMoments innovation_moments(Innovation innovation, int dim, RngStream& stream, std::size_t mc_draws) {
  if (dim < 1) throw std::invalid_argument("innovation_moments: dim must be >= 1");
  const double d = dim;
  switch (innovation) {
    case Innovation::kRademacher:
      return {std::sqrt(d), d * std::sqrt(d), true};
    case Innovation::kGaussian:
      // E|B|^3 = 2^{3/2} Gamma((d+3)/2) / Gamma(d/2) = (d+1) E|B|
      return {expected_gaussian_norm(dim), (d + 1.0) * expected_gaussian_norm(dim), true};
    default:
      break;
  }
  if (dim == 1) {
    if (innovation == Innovation::kUniformScaled) return {kSqrt3 / 2.0, 3.0 * kSqrt3 / 4.0, true};
    const double inv_e = std::exp(-1.0);
    return {2.0 * inv_e, 12.0 * inv_e - 2.0, true};
  }
  if (mc_draws < 1) throw std::invalid_argument("innovation_moments: mc_draws must be >= 1");
  double s1 = 0.0, s3 = 0.0;
  for (std::size_t k = 0; k < mc_draws; ++k) {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double x = draw_scalar(innovation, stream);
      r2 += x * x;
    }
    const double r = std::sqrt(r2);
    s1 += r;
    s3 += r * r2;
  }
  return {s1 / mc_draws, s3 / mc_draws, false};
}

double theorem_bound(int dim, int n, double e_abs_b, double e_abs_xi3, double e_abs_xi) {
  if (n < 1) throw std::invalid_argument("theorem_bound: n must be >= 1");
  const double lead = (2.0 * dim / 3.0 + 1.0) * e_abs_b + e_abs_xi3 / 3.0 + e_abs_xi;
  return lead * (1.0 + std::log(static_cast<double>(n))) / std::sqrt(static_cast<double>(n));
}

CltGap measure_gap(const CltConfig& cfg, int n, const RngStream& root, int bootstrap_resamples) {
  check_config(cfg);
  if (std::find(cfg.n_grid.begin(), cfg.n_grid.end(), n) == cfg.n_grid.end()) {
    throw std::invalid_argument("measure_gap: n is not in the configured grid");
  }
  W1Options opts;
  opts.method = cfg.dim == 1 ? W1Method::kExact1d : W1Method::kSliced;
  opts.n_projections = 64;
  opts.bootstrap_resamples = bootstrap_resamples;

  const SampleSet sums = sample_partial_sums(cfg, n, root.child(0));
  const SampleSet gauss = sample_gaussian(cfg.dim, cfg.n_paths, root.child(1));
  const SampleSet gauss2 = sample_gaussian(cfg.dim, cfg.n_paths, root.child(2));

  // projections for the sliced estimator come from a fixed stream
  RngStream proj = root.child(3);
  RngStream proj_floor = root.child(3);
  CltGap gap;
  gap.n = n;
  gap.w1 = estimate_w1(sums, gauss, opts, proj);
  W1Options floor_opts = opts;
  floor_opts.bootstrap_resamples = 0;
  gap.floor = estimate_w1(gauss, gauss2, floor_opts, proj_floor).value;

  RngStream moment_stream = root.child(4);
  const InnovationMoments m = innovation_moments(cfg.innovation, cfg.dim, moment_stream);
  gap.bound = theorem_bound(cfg.dim, n, expected_gaussian_norm(cfg.dim), m.abs3, m.abs1);
  gap.within_bound = gap.w1.value <= gap.bound + 3.0 * gap.w1.std_error + gap.floor;
  return gap;
}

}  // namespace markov_approx
