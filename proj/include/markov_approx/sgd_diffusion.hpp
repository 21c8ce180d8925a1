#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "markov_approx/rng.hpp"
#include "markov_approx/types.hpp"
#include "markov_approx/wasserstein.hpp"

namespace markov_approx {

enum class ModelVariant { kExample1, kExample2 };

/// Quadratic loss models for online SGD.
///
/// Example1: psi(x, zeta) = |H^{1/2}(x - zeta)|^2 / 2, zeta ~ N(0, I).
/// Example2: psi(x, (a, b)) = (Q^T x)^T [D + diag(a)] (Q^T x) / 2 + gamma |x - b|^2 / 2,
///           a, b ~ N(0, I) independent, H = Q D Q^T.
struct QuadraticModel {
  ModelVariant variant = ModelVariant::kExample1;
  Matrix h;
  Matrix q;
  Eigen::VectorXd d;  // eigenvalues of H (Example2)
  double gamma = 0.0;

  int dim() const { return static_cast<int>(h.rows()); }
};

/// Throws std::invalid_argument unless H is symmetric positive definite.
QuadraticModel make_example1(Matrix h);
/// Validates Q^T Q = I and gamma > 0; H is formed as Q diag(d) Q^T.
QuadraticModel make_example2(Matrix q, Eigen::VectorXd d, double gamma);
/// Diagonalises a symmetric positive-definite H.
QuadraticModel make_example2_from_h(const Matrix& h, double gamma);

std::string to_string(ModelVariant v);

/// One sample of the data noise: `a` is zeta (Example1) or alpha (Example2);
/// `b` is beta (Example2 only).
struct GradientNoise {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

GradientNoise draw_noise(const QuadraticModel& model, RngStream& stream);

Eigen::VectorXd grad_psi(const QuadraticModel& model, const VectorState& x, const GradientNoise& noise);
Eigen::VectorXd grad_p(const QuadraticModel& model, const VectorState& x);
/// Hessian of P (constant for both models).
Matrix hessian_p(const QuadraticModel& model);

/// w - eta grad_psi(w, zeta) with fresh noise. Requires 0 <= eta <= 1.
VectorState sgd_step(const QuadraticModel& model, double eta, const VectorState& w, RngStream& stream);
VectorState sgd_step(const QuadraticModel& model, double eta, const VectorState& w, const GradientNoise& noise);

/// Sigma(x)^{1/2}: H for Example1, Q [diag(Q^T x)^2 + gamma^2 I]^{1/2} Q^T for Example2.
Matrix sigma_sqrt(const QuadraticModel& model, const VectorState& x);
/// Covariance of grad_psi(x, .): H^2 or Q diag(Q^T x)^2 Q^T + gamma^2 I.
Matrix sigma(const QuadraticModel& model, const VectorState& x);

/// One Euler step of dX = -grad P(X) dt + (eta Sigma(X))^{1/2} dB.
VectorState sde_step(const QuadraticModel& model, double eta, double dt, const VectorState& x, RngStream& stream);

/// Gaussian law of the Example1 SDE at time t: mean e^{-Ht} x0,
/// covariance (eta/2) H (I - e^{-2Ht}).
struct GaussianLaw {
  Eigen::VectorXd mean;
  Matrix cov;
  Matrix cov_sqrt;
};
GaussianLaw example1_sde_law(const QuadraticModel& model, double eta, double t, const VectorState& x0);
/// Exact Gaussian law of the Example1 SGD iterate w_N (AR(1) recursion).
GaussianLaw example1_sgd_law(const QuadraticModel& model, double eta, int n_steps, const VectorState& x0);

struct SgdConfig {
  double eta = 0.1;
  int horizon_n = 2;
  VectorState x0;
  std::size_t n_paths = 1000;
  double dt_ratio = 1.0 / 64.0;  // reference Euler step, as a fraction of eta (Example2)
};

/// n_paths draws of w_N and, independently, of the SDE at time eta N
/// (exact Gaussian for Example1, Euler with dt = eta * dt_ratio for Example2).
/// Path simulators take the root stream by const reference: chunk k of the
/// paths draws from root.child(k), so the output is independent of threading.
std::pair<SampleSet, SampleSet> simulate_pair_marginals(const QuadraticModel& model, const SgdConfig& cfg,
                                                        const RngStream& root);

/// n_paths draws of the SDE marginal at time t (the reference law).
SampleSet simulate_sde_marginal(const QuadraticModel& model, const SgdConfig& cfg, double t, const RngStream& root);

struct AssumptionConstants {
  std::array<double, 6> theta{};  // theta0 .. theta5
  double delta = 0.0;
  double kappa = 0.0;
  std::array<double, 4> ell0{};  // ell0[j-1] = E|grad psi(0, zeta)|^j, j = 1..4
};

/// Constants for which the model satisfies the dissipativity, smoothness,
/// ellipticity and moment assumptions. Odd moments of |H zeta| in d > 1 are
/// Monte Carlo estimates drawn from `stream`.
AssumptionConstants claimed_constants(const QuadraticModel& model, RngStream& stream);

/// Largest eta for which the fourth-moment bound on the SGD iterates is
/// guaranteed: min{1, theta0 / (2 (10 + 7 kappa^4 + 7 ell0^4))}.
double admissible_eta(const AssumptionConstants& c);

struct AssumptionReport {
  AssumptionConstants constants;
  int probes = 0;
  // worst relative violation per probed inequality (0 when it always holds)
  double dissipativity = 0.0;       // <v, grad_v grad P(x) v> >= theta0 |v|^2
  double monotonicity = 0.0;        // <x - y, grad P(x) - grad P(y)> >= theta0 |x - y|^2
  double curvature = 0.0;           // |grad_v1 grad_v2 grad P| <= theta1 |v1||v2|
  double ellipticity = 0.0;         // xi^T Sigma^{1/2}(x) xi >= delta |xi|^2
  double fourth_moment_lipschitz = 0.0;  // E|grad psi(x) - grad psi(y)|^4 <= kappa^4 |x - y|^4
  double sigma_gradient = 0.0;      // ||grad_v Sigma^{1/2}(x)||_HS <= theta3 |v|
  double max_violation() const;
  bool passed(double tolerance = 1e-8) const { return max_violation() <= tolerance; }
};

/// Probes the assumptions at n_probe random points; never throws on violation.
AssumptionReport check_assumptions(const QuadraticModel& model, int n_probe, RngStream& stream);

/// Exact E|grad psi(x, .) - grad psi(y, .)|^4.
double fourth_moment_gap(const QuadraticModel& model, const VectorState& x, const VectorState& y);

struct MomentAudit {
  std::vector<double> fourth_moment;  // running estimate of E|w_k|^4, k = 0..steps
  double budget = 0.0;                // |w0|^4 + C_budget
  double max_value = 0.0;
  bool flagged = false;
};

/// Runs cfg.n_paths SGD chains for `steps` steps and flags any estimate above
/// |w0|^4 + c_budget. c_budget <= 0 selects 10 (1 + ell0^4 / theta0).
/// Throws std::invalid_argument if cfg.eta exceeds admissible_eta.
MomentAudit moment_audit(const QuadraticModel& model, const SgdConfig& cfg, const RngStream& root,
                         int steps = 10000, double c_budget = 0.0);

/// 1-Lipschitz test functions (the constant is 0-Lipschitz).
struct LipschitzFunction {
  enum class Kind { kConstant, kCoordinate, kNorm, kSoftplus };
  Kind kind = Kind::kCoordinate;
  int index = 0;

  double operator()(const VectorState& x) const;
};

struct ContractionConfig {
  double eta = 0.1;    // noise scale of the SDE
  double t = 1.0;
  double eps = 1e-4;   // finite-difference step
  std::size_t n_paths = 20000;
  int n_probes = 20;
  double dt_ratio = 1.0 / 64.0;  // Euler step for Example2, fraction of eta
};

struct ContractionProbe {
  VectorState x;
  VectorState v;
  double estimate = 0.0;  // |P_t h(x + eps v) - P_t h(x)| / eps
  double std_error = 0.0;
  double bound = 0.0;     // e^{-theta0 t / 8} |v|
  bool passed = false;
};

struct ContractionReport {
  std::vector<ContractionProbe> probes;
  bool passed = true;
};

/// Common-random-number finite-difference estimate of |grad_v P_t h(x)|
/// against e^{-theta0 t/8}|v|; each probe passes when the estimate is within
/// the bound plus 5 standard errors.
ContractionReport check_semigroup_contraction(const QuadraticModel& model, const ContractionConfig& cfg,
                                              const LipschitzFunction& h, const RngStream& root);

}  // namespace markov_approx
