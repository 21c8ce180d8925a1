#include "markov_approx/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "markov_approx/parallel.hpp"

namespace markov_approx {

double sphere_area(int dim) {
  if (dim < 1) throw std::invalid_argument("sphere_area: invalid dimension " + std::to_string(dim));
  const double d = dim;
  return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

double stable_normalizer(double alpha, int dim) {
  if (dim < 1) throw std::invalid_argument("stable_normalizer: invalid dimension " + std::to_string(dim));
  const double d = dim;
  return alpha * std::pow(2.0, alpha) * std::tgamma((d + alpha) / 2.0) /
         (std::tgamma(d / 2.0) * std::tgamma((2.0 - alpha) / 2.0));
}

StableParams stable_constants(double alpha, int dim) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw std::domain_error("stable_constants: alpha must lie in (1, 2), got " + std::to_string(alpha));
  }
  if (dim < 1) throw std::invalid_argument("stable_constants: invalid dimension " + std::to_string(dim));
  StableParams p;
  p.alpha = alpha;
  p.dim = dim;
  p.d_alpha = stable_normalizer(alpha, dim);
  p.sphere_area = sphere_area(dim);
  p.sigma = std::pow(alpha / (p.sphere_area * p.d_alpha), 1.0 / alpha);
  p.levy_density = p.d_alpha / p.sphere_area;
  p.em_sigma = std::pow(alpha / (p.sphere_area * p.levy_density), 1.0 / alpha);
  return p;
}

VectorState gaussian_vector(RngStream& stream, int dim) {
  if (dim < 1) throw std::invalid_argument("gaussian_vector: invalid dimension " + std::to_string(dim));
  VectorState g(dim);
  gaussian_into(stream, {g.data(), static_cast<std::size_t>(dim)});
  return g;
}

void gaussian_into(RngStream& stream, std::span<double> out) {
  for (double& v : out) v = stream.normal();
}

double positive_stable(RngStream& stream, double a) {
  const double u = std::numbers::pi * stream.uniform();
  const double w = stream.exponential();
  const double lead = std::sin(a * u) / std::pow(std::sin(u), 1.0 / a);
  return lead * std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
}

void stable_into(RngStream& stream, const StableParams& params, std::span<double> out) {
  const double scale = std::sqrt(2.0 * positive_stable(stream, params.alpha / 2.0));
  for (double& v : out) v = scale * stream.normal();
}

VectorState stable_vector(RngStream& stream, const StableParams& params) {
  VectorState z(params.dim);
  stable_into(stream, params, {z.data(), static_cast<std::size_t>(params.dim)});
  return z;
}

void pareto_into(RngStream& stream, const StableParams& params, std::span<double> out) {
  double r;
  do {
    r = pareto_radius(stream.uniform(), params.alpha);
  } while (!(r > 1.0));  // only rounding of u near 1 can produce r == 1
  if (out.size() == 1) {
    out[0] = (stream() >> 63) ? r : -r;
    return;
  }
  double norm2;
  do {
    norm2 = 0.0;
    for (double& v : out) {
      v = stream.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  const double scale = r / std::sqrt(norm2);
  for (double& v : out) v *= scale;
}

VectorState pareto_vector(RngStream& stream, const StableParams& params) {
  VectorState z(params.dim);
  pareto_into(stream, params, {z.data(), static_cast<std::size_t>(params.dim)});
  return z;
}

double empirical_cf(const StableParams& params, double lambda, std::size_t m, const RngStream& root) {
  if (m < 1) throw std::invalid_argument("empirical_cf: m must be >= 1");
  const double coef = lambda / std::sqrt(static_cast<double>(params.dim));
  const std::size_t n_chunks = (m + kPathChunk - 1) / kPathChunk;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_chunks(m, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    std::vector<double> z(static_cast<std::size_t>(params.dim));
    double acc = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      stable_into(rng, params, z);
      double dot = 0.0;
      for (double v : z) dot += v;
      acc += std::cos(coef * dot);
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(m);
}

ParetoAudit pareto_radius_audit(const StableParams& params, std::size_t m, const RngStream& root) {
  if (m < 1) throw std::invalid_argument("pareto_radius_audit: m must be >= 1");
  std::vector<double> radii(m);
  parallel_chunks(m, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    std::vector<double> z(static_cast<std::size_t>(params.dim));
    for (std::size_t k = begin; k < end; ++k) {
      pareto_into(rng, params, z);
      double r2 = 0.0;
      for (double v : z) r2 += v * v;
      radii[k] = std::sqrt(r2);
    }
  });
  std::sort(radii.begin(), radii.end());
  ParetoAudit audit;
  const double n = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(radii[i] > 1.0)) ++audit.support_violations;
    const double f = radii[i] > 1.0 ? 1.0 - std::pow(radii[i], -params.alpha) : 0.0;
    audit.ks_statistic = std::max({audit.ks_statistic, (i + 1) / n - f, f - i / n});
  }
  audit.critical_1pct = 1.628 / std::sqrt(n);
  return audit;
}

}  // namespace markov_approx
