#include "markov_approx/sgd_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "markov_approx/parallel.hpp"
#include "markov_approx/sampling.hpp"

namespace markov_approx {

namespace {

constexpr double kStructureTolerance = 1e-10;

void require_dim(const QuadraticModel& model, const VectorState& x, const char* who) {
  if (x.size() != model.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" + std::to_string(x.size()) +
                                " vs model " + std::to_string(model.dim()) + ")");
  }
}

void require_spd(const Matrix& h) {
  if (h.rows() < 1 || h.rows() != h.cols()) throw std::invalid_argument("H must be a non-empty square matrix");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > kStructureTolerance * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("H must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("H must be positive definite");
}

// E|g|^j for g ~ N(0, I_d)
double gaussian_norm_moment(int d, int j) {
  return std::pow(2.0, j / 2.0) * std::tgamma((d + j) / 2.0) / std::tgamma(d / 2.0);
}

// Applies f elementwise to the eigenvalues of the symmetric matrix h.
template <typename F>
Matrix spectral(const Eigen::SelfAdjointEigenSolver<Matrix>& es, F f) {
  const Eigen::VectorXd vals = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

// Scratch buffers for allocation-free stepping.
struct StepScratch {
  explicit StepScratch(int d) : a(d), b(d), t1(d), t2(d) {}
  Eigen::VectorXd a, b, t1, t2;
};

void draw_noise_into(const QuadraticModel& model, RngStream& stream, StepScratch& s) {
  for (Eigen::Index i = 0; i < s.a.size(); ++i) s.a[i] = stream.normal();
  if (model.variant == ModelVariant::kExample2) {
    for (Eigen::Index i = 0; i < s.b.size(); ++i) s.b[i] = stream.normal();
  }
}

// w <- w - eta grad_psi(w, noise in s)
void sgd_update(const QuadraticModel& model, double eta, Eigen::VectorXd& w, StepScratch& s) {
  if (model.variant == ModelVariant::kExample1) {
    s.t1 = w - s.a;
    s.t2.noalias() = model.h * s.t1;
  } else {
    s.t1.noalias() = model.q.transpose() * w;
    s.t1.array() *= (model.d + s.a).array();
    s.t2.noalias() = model.q * s.t1;
    s.t2 += model.gamma * (w - s.b);
  }
  w -= eta * s.t2;
}

// x <- one Euler step of the SDE, fresh Gaussian increment from stream
void euler_update(const QuadraticModel& model, double eta, double dt, Eigen::VectorXd& x, RngStream& stream,
                  StepScratch& s) {
  for (Eigen::Index i = 0; i < s.a.size(); ++i) s.a[i] = stream.normal();
  const double noise_scale = std::sqrt(eta * dt);
  if (model.variant == ModelVariant::kExample1) {
    s.t1.noalias() = model.h * x;
    s.t2.noalias() = model.h * s.a;
    x += -dt * s.t1 + noise_scale * s.t2;
  } else {
    s.t1.noalias() = model.q.transpose() * x;  // Q^T x
    s.t2.noalias() = model.q.transpose() * s.a;
    s.t2.array() *= (s.t1.array().square() + model.gamma * model.gamma).sqrt();
    s.b.noalias() = model.q * s.t2;  // Sigma^{1/2} G
    s.t2.noalias() = model.h * x;
    x += -dt * (s.t2 + model.gamma * x) + noise_scale * s.b;
  }
}

double relative_shortfall(double lhs, double rhs) {
  // violation of lhs >= rhs, relative to |rhs|
  if (lhs >= rhs) return 0.0;
  return (rhs - lhs) / std::max(std::abs(rhs), std::numeric_limits<double>::min());
}

}  // namespace

std::string to_string(ModelVariant v) { return v == ModelVariant::kExample1 ? "example1" : "example2"; }

QuadraticModel make_example1(Matrix h) {
  require_spd(h);
  QuadraticModel m;
  m.variant = ModelVariant::kExample1;
  m.h = std::move(h);
  return m;
}

QuadraticModel make_example2(Matrix q, Eigen::VectorXd d, double gamma) {
  if (q.rows() < 1 || q.rows() != q.cols() || d.size() != q.rows()) {
    throw std::invalid_argument("example2: Q must be square and match the eigenvalue count");
  }
  if ((q.transpose() * q - Matrix::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff() > kStructureTolerance) {
    throw std::invalid_argument("example2: Q must be orthogonal");
  }
  if ((d.array() <= 0.0).any()) throw std::invalid_argument("example2: eigenvalues must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("example2: gamma must be positive");
  QuadraticModel m;
  m.variant = ModelVariant::kExample2;
  m.h = q * d.asDiagonal() * q.transpose();
  m.h = 0.5 * (m.h + m.h.transpose());
  m.q = std::move(q);
  m.d = std::move(d);
  m.gamma = gamma;
  return m;
}

QuadraticModel make_example2_from_h(const Matrix& h, double gamma) {
  require_spd(h);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return make_example2(es.eigenvectors(), es.eigenvalues(), gamma);
}

GradientNoise draw_noise(const QuadraticModel& model, RngStream& stream) {
  GradientNoise n;
  n.a = gaussian_vector(stream, model.dim());
  if (model.variant == ModelVariant::kExample2) n.b = gaussian_vector(stream, model.dim());
  return n;
}

Eigen::VectorXd grad_psi(const QuadraticModel& model, const VectorState& x, const GradientNoise& noise) {
  require_dim(model, x, "grad_psi");
  if (noise.a.size() != model.dim() ||
      (model.variant == ModelVariant::kExample2 && noise.b.size() != model.dim())) {
    throw std::invalid_argument("grad_psi: noise dimension mismatch");
  }
  if (model.variant == ModelVariant::kExample1) return model.h * (x - noise.a);
  const Eigen::VectorXd qx = model.q.transpose() * x;
  return model.q * ((model.d + noise.a).cwiseProduct(qx)) + model.gamma * (x - noise.b);
}

Eigen::VectorXd grad_p(const QuadraticModel& model, const VectorState& x) {
  require_dim(model, x, "grad_p");
  return hessian_p(model) * x;
}

Matrix hessian_p(const QuadraticModel& model) {
  if (model.variant == ModelVariant::kExample1) return model.h;
  return model.h + model.gamma * Matrix::Identity(model.dim(), model.dim());
}

VectorState sgd_step(const QuadraticModel& model, double eta, const VectorState& w, const GradientNoise& noise) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("sgd_step: eta must lie in [0, 1]");
  return w - eta * grad_psi(model, w, noise);
}

VectorState sgd_step(const QuadraticModel& model, double eta, const VectorState& w, RngStream& stream) {
  return sgd_step(model, eta, w, draw_noise(model, stream));
}

Matrix sigma_sqrt(const QuadraticModel& model, const VectorState& x) {
  require_dim(model, x, "sigma_sqrt");
  if (model.variant == ModelVariant::kExample1) return model.h;
  const Eigen::VectorXd qx = model.q.transpose() * x;
  const Eigen::VectorXd s = (qx.array().square() + model.gamma * model.gamma).sqrt();
  return model.q * s.asDiagonal() * model.q.transpose();
}

Matrix sigma(const QuadraticModel& model, const VectorState& x) {
  require_dim(model, x, "sigma");
  if (model.variant == ModelVariant::kExample1) return model.h * model.h;
  const Eigen::VectorXd qx = model.q.transpose() * x;
  return model.q * qx.array().square().matrix().asDiagonal() * model.q.transpose() +
         model.gamma * model.gamma * Matrix::Identity(model.dim(), model.dim());
}

VectorState sde_step(const QuadraticModel& model, double eta, double dt, const VectorState& x, RngStream& stream) {
  require_dim(model, x, "sde_step");
  if (!(dt >= 0.0) || !(eta >= 0.0)) throw std::invalid_argument("sde_step: dt and eta must be non-negative");
  VectorState out = x;
  StepScratch s(model.dim());
  euler_update(model, eta, dt, out, stream, s);
  return out;
}

GaussianLaw example1_sde_law(const QuadraticModel& model, double eta, double t, const VectorState& x0) {
  if (model.variant != ModelVariant::kExample1) throw std::invalid_argument("example1_sde_law: Example1 only");
  require_dim(model, x0, "example1_sde_law");
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
  GaussianLaw law;
  law.mean = spectral(es, [t](double l) { return std::exp(-l * t); }) * x0;
  law.cov = spectral(es, [=](double l) { return 0.5 * eta * l * -std::expm1(-2.0 * l * t); });
  law.cov_sqrt = spectral(es, [=](double l) { return std::sqrt(0.5 * eta * l * -std::expm1(-2.0 * l * t)); });
  return law;
}

GaussianLaw example1_sgd_law(const QuadraticModel& model, double eta, int n_steps, const VectorState& x0) {
  if (model.variant != ModelVariant::kExample1) throw std::invalid_argument("example1_sgd_law: Example1 only");
  require_dim(model, x0, "example1_sgd_law");
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
  auto variance = [=](double l) {
    const double a = 1.0 - eta * l;
    const double a2 = a * a;
    if (a2 == 1.0) return eta * eta * l * l * n_steps;
    return eta * eta * l * l * (1.0 - std::pow(a2, n_steps)) / (1.0 - a2);
  };
  GaussianLaw law;
  law.mean = spectral(es, [=](double l) { return std::pow(1.0 - eta * l, n_steps); }) * x0;
  law.cov = spectral(es, variance);
  law.cov_sqrt = spectral(es, [&](double l) { return std::sqrt(variance(l)); });
  return law;
}

SampleSet simulate_sde_marginal(const QuadraticModel& model, const SgdConfig& cfg, double t, const RngStream& stream) {
  require_dim(model, cfg.x0, "simulate_sde_marginal");
  if (cfg.n_paths < 1) throw std::invalid_argument("simulate_sde_marginal: n_paths must be >= 1");
  const int d = model.dim();
  Matrix out(d, static_cast<Eigen::Index>(cfg.n_paths));
  if (model.variant == ModelVariant::kExample1) {
    const GaussianLaw law = example1_sde_law(model, cfg.eta, t, cfg.x0);
    parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
      RngStream rng = stream.child(c);
      Eigen::VectorXd g(d);
      for (std::size_t p = begin; p < end; ++p) {
        for (int i = 0; i < d; ++i) g[i] = rng.normal();
        out.col(static_cast<Eigen::Index>(p)).noalias() = law.mean + law.cov_sqrt * g;
      }
    });
  } else {
    const double dt_target = cfg.eta * cfg.dt_ratio;
    if (!(dt_target > 0.0)) throw std::invalid_argument("simulate_sde_marginal: eta * dt_ratio must be positive");
    const auto steps = static_cast<long>(std::ceil(t / dt_target - 1e-9));
    const double dt = steps > 0 ? t / static_cast<double>(steps) : 0.0;
    parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
      RngStream rng = stream.child(c);
      StepScratch s(d);
      Eigen::VectorXd x(d);
      for (std::size_t p = begin; p < end; ++p) {
        x = cfg.x0;
        for (long k = 0; k < steps; ++k) euler_update(model, cfg.eta, dt, x, rng, s);
        out.col(static_cast<Eigen::Index>(p)) = x;
      }
    });
  }
  return make_sample_set(std::move(out), SampleMeta{stream.seed(), "sde"});
}

std::pair<SampleSet, SampleSet> simulate_pair_marginals(const QuadraticModel& model, const SgdConfig& cfg,
                                                        const RngStream& stream) {
  require_dim(model, cfg.x0, "simulate_pair_marginals");
  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw std::invalid_argument("simulate_pair_marginals: eta must lie in (0, 1]");
  if (cfg.horizon_n < 1) throw std::invalid_argument("simulate_pair_marginals: horizon must be >= 1");
  if (cfg.n_paths < 1) throw std::invalid_argument("simulate_pair_marginals: n_paths must be >= 1");
  const int d = model.dim();
  const RngStream sgd_root = stream.child(0);
  const RngStream sde_root = stream.child(1);

  Matrix w_out(d, static_cast<Eigen::Index>(cfg.n_paths));
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = sgd_root.child(c);
    StepScratch s(d);
    Eigen::VectorXd w(d);
    for (std::size_t p = begin; p < end; ++p) {
      w = cfg.x0;
      for (int k = 0; k < cfg.horizon_n; ++k) {
        draw_noise_into(model, rng, s);
        sgd_update(model, cfg.eta, w, s);
      }
      w_out.col(static_cast<Eigen::Index>(p)) = w;
    }
  });
  SampleSet sgd = make_sample_set(std::move(w_out), SampleMeta{stream.seed(), "sgd"});
  SampleSet sde = simulate_sde_marginal(model, cfg, cfg.eta * cfg.horizon_n, sde_root);
  return {std::move(sgd), std::move(sde)};
}

AssumptionConstants claimed_constants(const QuadraticModel& model, RngStream& stream) {
  AssumptionConstants c;
  const int d = model.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
  const double lmin = es.eigenvalues().minCoeff();
  const double h_hs = model.h.norm();  // Frobenius = Hilbert-Schmidt
  if (model.variant == ModelVariant::kExample1) {
    c.theta = {lmin, 0, 0, 0, 0, 0};
    c.delta = lmin;
    c.kappa = h_hs;
    // grad psi(0, zeta) = -H zeta
    const Matrix h2 = model.h * model.h;
    c.ell0[1] = h2.trace();
    c.ell0[3] = h2.trace() * h2.trace() + 2.0 * (h2 * h2).trace();
    if (d == 1) {
      const double h = std::abs(model.h(0, 0));
      c.ell0[0] = h * gaussian_norm_moment(1, 1);
      c.ell0[2] = h * h * h * gaussian_norm_moment(1, 3);
    } else {
      constexpr int kDraws = 200000;
      double m1 = 0.0, m3 = 0.0;
      Eigen::VectorXd g(d);
      for (int k = 0; k < kDraws; ++k) {
        for (int i = 0; i < d; ++i) g[i] = stream.normal();
        const double r = (model.h * g).norm();
        m1 += r;
        m3 += r * r * r;
      }
      c.ell0[0] = m1 / kDraws;
      c.ell0[2] = m3 / kDraws;
    }
  } else {
    const double g = model.gamma;
    const double q_hs = model.q.norm();
    const double sd = std::sqrt(static_cast<double>(d));
    c.theta = {lmin + g,
               0.0,
               0.0,
               sd * std::pow(q_hs, 3),
               sd * std::pow(q_hs, 4) * (1.0 + 1.0 / g + std::pow(g, -3)),
               3.0 * sd * std::pow(q_hs, 5) * (2.0 + std::pow(g, -3) + std::pow(g, -5))};
    c.delta = g;
    c.kappa = std::pow(27.0 * (std::pow(h_hs, 4) + 3.0 * std::pow(d, 6) + std::pow(g, 4)), 0.25);
    // grad psi(0, zeta) = -gamma beta
    for (int j = 1; j <= 4; ++j) c.ell0[j - 1] = std::pow(g, j) * gaussian_norm_moment(d, j);
  }
  return c;
}

double admissible_eta(const AssumptionConstants& c) {
  return std::min(1.0, c.theta[0] / (2.0 * (10.0 + 7.0 * std::pow(c.kappa, 4) + 7.0 * c.ell0[3])));
}

double AssumptionReport::max_violation() const {
  return std::max({dissipativity, monotonicity, curvature, ellipticity, fourth_moment_lipschitz, sigma_gradient});
}

double fourth_moment_gap(const QuadraticModel& model, const VectorState& x, const VectorState& y) {
  require_dim(model, x, "fourth_moment_gap");
  require_dim(model, y, "fourth_moment_gap");
  const Eigen::VectorXd v = x - y;
  if (model.variant == ModelVariant::kExample1) {
    const double r2 = (model.h * v).squaredNorm();
    return r2 * r2;
  }
  // |diff|^2 = sum_i (c_i + alpha_i)^2 w_i^2 with w = Q^T v, c = D + gamma
  const Eigen::VectorXd w = model.q.transpose() * v;
  double mean_term = 0.0, var_term = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double c = model.d[i] + model.gamma;
    const double a = w[i] * w[i];
    mean_term += a * (c * c + 1.0);
    var_term += a * a * (4.0 * c * c + 2.0);
  }
  return mean_term * mean_term + var_term;
}

AssumptionReport check_assumptions(const QuadraticModel& model, int n_probe, RngStream& stream) {
  if (n_probe < 1) throw std::invalid_argument("check_assumptions: n_probe must be >= 1");
  AssumptionReport r;
  r.constants = claimed_constants(model, stream);
  const auto& c = r.constants;
  const int d = model.dim();
  const Matrix hess = hessian_p(model);
  const double hess_scale = std::max(1.0, hess.norm());
  constexpr double kSpread = 3.0;
  constexpr double kFdStep = 1e-5;
  for (int k = 0; k < n_probe; ++k) {
    const VectorState x = kSpread * gaussian_vector(stream, d);
    const VectorState y = kSpread * gaussian_vector(stream, d);
    const VectorState v1 = gaussian_vector(stream, d);
    const VectorState v2 = gaussian_vector(stream, d);
    const VectorState xi = gaussian_vector(stream, d);

    // directional derivative of grad P along v1, by exact differencing of the affine map
    const Eigen::VectorXd dv1 = grad_p(model, x + v1) - grad_p(model, x);
    r.dissipativity = std::max(r.dissipativity, relative_shortfall(v1.dot(dv1), c.theta[0] * v1.squaredNorm()));

    const Eigen::VectorXd diff = x - y;
    r.monotonicity = std::max(
        r.monotonicity, relative_shortfall(diff.dot(grad_p(model, x) - grad_p(model, y)), c.theta[0] * diff.squaredNorm()));

    const Eigen::VectorXd second = grad_p(model, x + v1 + v2) - grad_p(model, x + v1) - grad_p(model, x + v2) + grad_p(model, x);
    const double scale12 = v1.norm() * v2.norm();
    r.curvature = std::max(r.curvature, std::max(0.0, second.norm() - c.theta[1] * scale12) / (scale12 * hess_scale));

    r.ellipticity = std::max(r.ellipticity, relative_shortfall(xi.dot(sigma_sqrt(model, x) * xi), c.delta * xi.squaredNorm()));

    const double gap4 = fourth_moment_gap(model, x, y);
    const double allowed4 = std::pow(c.kappa, 4) * std::pow(diff.norm(), 4);
    r.fourth_moment_lipschitz = std::max(r.fourth_moment_lipschitz, relative_shortfall(allowed4, gap4));

    const Matrix dsig = (sigma_sqrt(model, x + kFdStep * v1) - sigma_sqrt(model, x - kFdStep * v1)) / (2.0 * kFdStep);
    r.sigma_gradient = std::max(r.sigma_gradient, relative_shortfall(c.theta[3] * v1.norm(), dsig.norm()));
    ++r.probes;
  }
  return r;
}

MomentAudit moment_audit(const QuadraticModel& model, const SgdConfig& cfg, const RngStream& stream, int steps,
                         double c_budget) {
  require_dim(model, cfg.x0, "moment_audit");
  RngStream const_stream = stream.child(0);
  const AssumptionConstants c = claimed_constants(model, const_stream);
  const double max_eta = admissible_eta(c);
  if (!(cfg.eta >= 0.0) || cfg.eta > max_eta) {
    throw std::invalid_argument("moment_audit: eta=" + std::to_string(cfg.eta) + " exceeds admissible " +
                                std::to_string(max_eta));
  }
  if (steps < 0 || cfg.n_paths < 1) throw std::invalid_argument("moment_audit: bad steps or n_paths");
  if (c_budget <= 0.0) c_budget = 10.0 * (1.0 + c.ell0[3] / c.theta[0]);

  const int d = model.dim();
  const std::size_t n_chunks = (cfg.n_paths + kPathChunk - 1) / kPathChunk;
  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(static_cast<std::size_t>(steps) + 1, 0.0));
  const RngStream root = stream.child(1);
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t ch, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(ch);
    StepScratch s(d);
    Eigen::VectorXd w(d);
    auto& acc = partial[ch];
    for (std::size_t p = begin; p < end; ++p) {
      w = cfg.x0;
      double r2 = w.squaredNorm();
      acc[0] += r2 * r2;
      for (int k = 1; k <= steps; ++k) {
        draw_noise_into(model, rng, s);
        sgd_update(model, cfg.eta, w, s);
        r2 = w.squaredNorm();
        acc[static_cast<std::size_t>(k)] += r2 * r2;
      }
    }
  });
  MomentAudit audit;
  audit.fourth_moment.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t k = 0; k < acc.size(); ++k) audit.fourth_moment[k] += acc[k];
  }
  for (double& m : audit.fourth_moment) m /= static_cast<double>(cfg.n_paths);
  const double r0 = cfg.x0.squaredNorm();
  audit.budget = r0 * r0 + c_budget;
  audit.max_value = *std::max_element(audit.fourth_moment.begin(), audit.fourth_moment.end());
  audit.flagged = audit.max_value > audit.budget;
  return audit;
}

double LipschitzFunction::operator()(const VectorState& x) const {
  switch (kind) {
    case Kind::kConstant: return 1.0;
    case Kind::kCoordinate: return x[index];
    case Kind::kNorm: return x.norm();
    case Kind::kSoftplus: {
      // log(1 + e^{x_i}) - log 2, written to avoid overflow
      const double z = x[index];
      return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - std::numbers::ln2;
    }
  }
  return 0.0;
}

ContractionReport check_semigroup_contraction(const QuadraticModel& model, const ContractionConfig& cfg,
                                              const LipschitzFunction& h, const RngStream& stream) {
  if (!(cfg.t > 0.0) || !(cfg.eps > 0.0)) throw std::invalid_argument("contraction: t and eps must be positive");
  if (cfg.n_paths < 2 || cfg.n_probes < 1) throw std::invalid_argument("contraction: need >= 2 paths and >= 1 probe");
  const int d = model.dim();
  if ((h.kind == LipschitzFunction::Kind::kCoordinate || h.kind == LipschitzFunction::Kind::kSoftplus) &&
      (h.index < 0 || h.index >= d)) {
    throw std::invalid_argument("contraction: test function index out of range");
  }
  RngStream const_stream = stream.child(0);
  const double theta0 = claimed_constants(model, const_stream).theta[0];
  const double decay = std::exp(-theta0 * cfg.t / 8.0);

  long euler_steps = 0;
  double dt = 0.0;
  if (model.variant == ModelVariant::kExample2) {
    euler_steps = static_cast<long>(std::ceil(cfg.t / (cfg.eta * cfg.dt_ratio) - 1e-9));
    dt = cfg.t / static_cast<double>(euler_steps);
  }

  ContractionReport report;
  RngStream probe_stream = stream.child(1);
  for (int k = 0; k < cfg.n_probes; ++k) {
    ContractionProbe probe;
    probe.x = gaussian_vector(probe_stream, d);
    Eigen::VectorXd v = gaussian_vector(probe_stream, d);
    probe.v = v / v.norm();
    const VectorState x_shift = probe.x + cfg.eps * probe.v;

    // common random numbers: both starting points see identical noise
    const RngStream root = stream.child(2).child(static_cast<std::uint64_t>(k));
    const std::size_t n_chunks = (cfg.n_paths + kPathChunk - 1) / kPathChunk;
    std::vector<double> sum(n_chunks, 0.0), sum_sq(n_chunks, 0.0);
    GaussianLaw law0, law1;
    if (model.variant == ModelVariant::kExample1) {
      law0 = example1_sde_law(model, cfg.eta, cfg.t, probe.x);
      law1 = example1_sde_law(model, cfg.eta, cfg.t, x_shift);
    }
    parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t ch, std::size_t begin, std::size_t end) {
      Eigen::VectorXd g(d), a(d), b(d);
      StepScratch s(d);
      RngStream rng = root.child(ch);
      for (std::size_t p = begin; p < end; ++p) {
        if (model.variant == ModelVariant::kExample1) {
          for (int i = 0; i < d; ++i) g[i] = rng.normal();
          a = law0.mean + law0.cov_sqrt * g;
          b = law1.mean + law1.cov_sqrt * g;
        } else {
          RngStream path_rng = rng;
          a = probe.x;
          b = x_shift;
          for (long step = 0; step < euler_steps; ++step) euler_update(model, cfg.eta, dt, a, rng, s);
          for (long step = 0; step < euler_steps; ++step) euler_update(model, cfg.eta, dt, b, path_rng, s);
        }
        const double q = (h(b) - h(a)) / cfg.eps;
        sum[ch] += q;
        sum_sq[ch] += q * q;
      }
    });
    double total = 0.0, total_sq = 0.0;
    for (std::size_t ch = 0; ch < n_chunks; ++ch) {
      total += sum[ch];
      total_sq += sum_sq[ch];
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double mean = total / n;
    const double var = std::max(0.0, (total_sq - n * mean * mean) / (n - 1.0));
    probe.estimate = std::abs(mean);
    probe.std_error = std::sqrt(var / n);
    probe.bound = decay * probe.v.norm();
    probe.passed = probe.estimate <= probe.bound + 5.0 * probe.std_error;
    report.passed = report.passed && probe.passed;
    report.probes.push_back(std::move(probe));
  }
  return report;
}

}  // namespace markov_approx
