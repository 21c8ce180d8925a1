#include "markov_approx/stable_ou.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "markov_approx/parallel.hpp"

namespace markov_approx {

double StableOuConfig::em_scale() const {
  const double s = scaling == EmScaling::kLevyConsistent ? params.em_sigma : params.sigma;
  return std::pow(eta, 1.0 / params.alpha) / s;
}

void validate(const StableOuConfig& cfg) {
  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw std::invalid_argument("stable OU: eta must lie in (0, 1]");
  if (cfg.horizon_n < 1) throw std::invalid_argument("stable OU: horizon must be >= 1");
  if (cfg.n_paths < 1) throw std::invalid_argument("stable OU: n_paths must be >= 1");
  if (cfg.x0.size() != cfg.params.dim) throw std::invalid_argument("stable OU: x0 dimension mismatch");
  if (!(cfg.params.alpha > 1.0 && cfg.params.alpha < 2.0)) throw std::domain_error("stable OU: alpha must lie in (1, 2)");
}

VectorState exact_ou_marginal(const StableOuConfig& cfg, double t, RngStream& stream) {
  if (!(t >= 0.0)) throw std::invalid_argument("exact_ou_marginal: t must be >= 0");
  if (cfg.x0.size() != cfg.params.dim) throw std::invalid_argument("exact_ou_marginal: x0 dimension mismatch");
  const double a = cfg.params.alpha;
  VectorState out = cfg.x0 * std::exp(-t / a);
  if (t == 0.0) return out;
  return out + std::pow(-std::expm1(-t), 1.0 / a) * stable_vector(stream, cfg.params);
}

VectorState em_step(const StableOuConfig& cfg, const VectorState& y, const VectorState& pareto_jump) {
  if (y.size() != cfg.params.dim || pareto_jump.size() != cfg.params.dim) {
    throw std::invalid_argument("em_step: dimension mismatch");
  }
  // eta = 0 is allowed here so the degenerate step can be tested
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw std::invalid_argument("em_step: eta must lie in [0, 1]");
  return (1.0 - cfg.eta / cfg.params.alpha) * y + cfg.em_scale() * pareto_jump;
}

VectorState em_step(const StableOuConfig& cfg, const VectorState& y, RngStream& stream) {
  return em_step(cfg, y, pareto_vector(stream, cfg.params));
}

SampleSet sample_exact_marginal(const StableOuConfig& cfg, double t, const RngStream& root) {
  validate(cfg);
  if (!(t >= 0.0)) throw std::invalid_argument("sample_exact_marginal: t must be >= 0");
  const int d = cfg.params.dim;
  const double decay = std::exp(-t / cfg.params.alpha);
  const double scale = std::pow(-std::expm1(-t), 1.0 / cfg.params.alpha);
  Matrix out(d, static_cast<Eigen::Index>(cfg.n_paths));
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    for (std::size_t p = begin; p < end; ++p) {
      double* col = out.col(static_cast<Eigen::Index>(p)).data();
      stable_into(rng, cfg.params, {col, static_cast<std::size_t>(d)});
      for (int i = 0; i < d; ++i) col[i] = cfg.x0[i] * decay + scale * col[i];
    }
  });
  return make_sample_set(std::move(out), SampleMeta{root.seed(), "stable-ou-exact"});
}

SampleSet sample_em_endpoint(const StableOuConfig& cfg, int steps, const RngStream& root) {
  validate(cfg);
  if (steps < 0) throw std::invalid_argument("sample_em_endpoint: steps must be >= 0");
  const int d = cfg.params.dim;
  const double contraction = 1.0 - cfg.eta / cfg.params.alpha;
  const double jump_scale = cfg.em_scale();
  Matrix out(d, static_cast<Eigen::Index>(cfg.n_paths));
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    std::vector<double> jump(static_cast<std::size_t>(d));
    for (std::size_t p = begin; p < end; ++p) {
      double* y = out.col(static_cast<Eigen::Index>(p)).data();
      for (int i = 0; i < d; ++i) y[i] = cfg.x0[i];
      for (int k = 0; k < steps; ++k) {
        pareto_into(rng, cfg.params, jump);
        for (int i = 0; i < d; ++i) y[i] = contraction * y[i] + jump_scale * jump[static_cast<std::size_t>(i)];
      }
    }
  });
  return make_sample_set(std::move(out), SampleMeta{root.seed(), "stable-ou-em"});
}

std::pair<SampleSet, SampleSet> simulate_pair_marginals(const StableOuConfig& cfg, const RngStream& root) {
  validate(cfg);
  SampleSet exact = sample_exact_marginal(cfg, cfg.eta * cfg.horizon_n, root.child(0));
  SampleSet em = sample_em_endpoint(cfg, cfg.horizon_n, root.child(1));
  return {std::move(exact), std::move(em)};
}

FirstMomentAudit em_moment_audit(const StableOuConfig& cfg, const RngStream& root, int steps, double multiple,
                                 bool zero_innovations) {
  validate(cfg);
  if (steps < 0) throw std::invalid_argument("em_moment_audit: steps must be >= 0");
  const int d = cfg.params.dim;
  const double contraction = 1.0 - cfg.eta / cfg.params.alpha;
  const double jump_scale = zero_innovations ? 0.0 : cfg.em_scale();
  const std::size_t n_chunks = (cfg.n_paths + kPathChunk - 1) / kPathChunk;
  const auto len = static_cast<std::size_t>(steps) + 1;
  constexpr std::size_t kGroups = 10;
  // per chunk: kGroups interleaved path groups, each with a running sum per step
  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(len * kGroups, 0.0));
  parallel_chunks(cfg.n_paths, kPathChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    RngStream rng = root.child(c);
    std::vector<double> y(static_cast<std::size_t>(d)), jump(static_cast<std::size_t>(d));
    auto& acc = partial[c];
    for (std::size_t p = begin; p < end; ++p) {
      for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = cfg.x0[i];
      auto norm = [&] {
        double s = 0.0;
        for (double v : y) s += v * v;
        return std::sqrt(s);
      };
      double* row = acc.data() + (p % kGroups) * len;
      row[0] += norm();
      for (int k = 1; k <= steps; ++k) {
        if (!zero_innovations) pareto_into(rng, cfg.params, jump);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = contraction * y[i] + jump_scale * jump[i];
        row[k] += norm();
      }
    }
  });
  FirstMomentAudit audit;
  std::vector<double> group(len * kGroups, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < group.size(); ++i) group[i] += acc[i];
  }
  std::array<double, kGroups> sizes{};
  for (std::size_t g = 0; g < kGroups; ++g) {
    sizes[g] = static_cast<double>(cfg.n_paths / kGroups + (g < cfg.n_paths % kGroups ? 1 : 0));
  }
  audit.mean_abs.assign(len, 0.0);
  audit.robust_mean_abs.assign(len, 0.0);
  std::vector<double> means;
  for (std::size_t k = 0; k < len; ++k) {
    means.clear();
    for (std::size_t g = 0; g < kGroups; ++g) {
      audit.mean_abs[k] += group[g * len + k];
      if (sizes[g] > 0) means.push_back(group[g * len + k] / sizes[g]);
    }
    audit.mean_abs[k] /= static_cast<double>(cfg.n_paths);
    std::nth_element(means.begin(), means.begin() + static_cast<long>(means.size() / 2), means.end());
    audit.robust_mean_abs[k] = means[means.size() / 2];
  }
  audit.bound = multiple * (1.0 + cfg.x0.norm());
  audit.max_value = *std::max_element(audit.mean_abs.begin(), audit.mean_abs.end());
  audit.robust_max = *std::max_element(audit.robust_mean_abs.begin(), audit.robust_mean_abs.end());
  audit.flagged = audit.robust_max > audit.bound;
  return audit;
}

}  // namespace markov_approx

namespace markov_approx {

MomentScaling em_moment_scaling(const StableOuConfig& cfg, const RngStream& root, double factor, int steps) {
  if (!(factor > 0.0)) throw std::invalid_argument("em_moment_scaling: factor must be positive");
  StableOuConfig scaled = cfg;
  scaled.x0 = cfg.x0 * factor;
  MomentScaling out;
  out.base_max = em_moment_audit(cfg, root, steps).robust_max;
  out.scaled_max = em_moment_audit(scaled, root, steps).robust_max;
  out.ratio = out.scaled_max / out.base_max;
  const double r = cfg.x0.norm();
  out.linear_ratio = (1.0 + factor * r) / (1.0 + r);
  out.passed = out.ratio <= 2.0 * out.linear_ratio && out.ratio >= 0.5 * out.linear_ratio;
  return out;
}

}  // namespace markov_approx
