#pragma once

#include <cmath>
#include <span>

#include "markov_approx/rng.hpp"
#include "markov_approx/types.hpp"

namespace markov_approx {

/// Constants of the rotationally symmetric alpha-stable law in R^d.
///
/// `d_alpha` and `sigma` are the closed-form normalizer and Pareto scale
/// constant as usually quoted:
///   d_alpha = alpha 2^alpha Gamma((d+alpha)/2) / (Gamma(d/2) Gamma((2-alpha)/2))
///   sigma   = (alpha / (sphere_area d_alpha))^(1/alpha)
/// The closed form overstates the Levy-measure density of the law with
/// characteristic function exp(-|lambda|^alpha) by exactly the factor
/// sphere_area. `levy_density` is the consistent density constant
/// (d_alpha / sphere_area) and `em_sigma` the Pareto scale that matches it;
/// the Euler-Maruyama chain uses `em_sigma` unless told otherwise.
struct StableParams {
  double alpha = 1.5;
  int dim = 1;
  double d_alpha = 0.0;
  double sigma = 0.0;
  double sphere_area = 0.0;
  double levy_density = 0.0;
  double em_sigma = 0.0;
};

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int dim);

/// The closed-form d_alpha for any alpha in (0, 2); no range check on alpha.
double stable_normalizer(double alpha, int dim);

/// Fully populated StableParams. Throws std::domain_error unless 1 < alpha < 2
/// and std::invalid_argument if dim < 1.
StableParams stable_constants(double alpha, int dim);

/// One draw of N(0, I_d). Throws std::invalid_argument if dim < 1.
VectorState gaussian_vector(RngStream& stream, int dim);

/// Positive (a)-stable draw with Laplace transform E exp(-u S) = exp(-u^a),
/// 0 < a < 1 (Kanter's representation of the Chambers-Mallows-Stuck method).
double positive_stable(RngStream& stream, double a);

/// Rotationally symmetric alpha-stable vector Z_1 with
/// E exp(i<lambda, Z_1>) = exp(-|lambda|^alpha), via Z = sqrt(2 S) G.
VectorState stable_vector(RngStream& stream, const StableParams& params);

/// Pareto radius by inverse CDF: P(R > r) = r^{-alpha} for r >= 1.
inline double pareto_radius(double u, double alpha) { return std::pow(u, -1.0 / alpha); }

/// Pareto vector with density alpha / (|S^{d-1}| |z|^{alpha+d}) on |z| > 1.
VectorState pareto_vector(RngStream& stream, const StableParams& params);

// Allocation-free forms used by the path simulators; `out` has params.dim
// (or dim) entries.
void gaussian_into(RngStream& stream, std::span<double> out);
void stable_into(RngStream& stream, const StableParams& params, std::span<double> out);
void pareto_into(RngStream& stream, const StableParams& params, std::span<double> out);

/// Empirical E cos<lambda u, Z_1> over m draws, u = (1, ..., 1)/sqrt(d).
/// Draws are split into chunks as in the path simulators.
double empirical_cf(const StableParams& params, double lambda, std::size_t m, const RngStream& root);

struct ParetoAudit {
  double ks_statistic = 0.0;  // sup |F_m(r) - (1 - r^{-alpha})|
  double critical_1pct = 0.0; // 1.628 / sqrt(m), asymptotic Kolmogorov quantile
  std::size_t support_violations = 0;  // draws with |z| <= 1
  bool passed() const { return ks_statistic <= critical_1pct && support_violations == 0; }
};

/// KS test of |Z~| from m Pareto vectors against P(R <= r) = 1 - r^{-alpha}.
ParetoAudit pareto_radius_audit(const StableParams& params, std::size_t m, const RngStream& root);

}  // namespace markov_approx
