#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "markov_approx/chain_compare.hpp"
#include "markov_approx/normal_clt.hpp"
#include "markov_approx/rate_harness.hpp"
#include "markov_approx/sampling.hpp"
#include "markov_approx/sgd_diffusion.hpp"
#include "markov_approx/stable_ou.hpp"
#include "markov_approx/wasserstein.hpp"

namespace py = pybind11;
using namespace markov_approx;

namespace {

// Python side uses (n, d) arrays; SampleSet stores points as columns.
SampleSet to_samples(const Matrix& rows) { return make_sample_set(rows.transpose()); }
Matrix to_rows(const SampleSet& s) { return s.points.transpose(); }

Matrix as_2d(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() == 1) {
    Matrix m(a.shape(0), 1);
    for (py::ssize_t i = 0; i < a.shape(0); ++i) m(i, 0) = a.at(i);
    return m;
  }
  if (a.ndim() != 2) throw std::invalid_argument("expected a 1-D or 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = a.at(i, j);
  }
  return m;
}

py::dict row_dict(const SweepRow& r) {
  py::dict d;
  d["param"] = r.param;
  d["w1"] = r.w1;
  d["stderr"] = r.std_error;
  d["floor"] = r.floor;
  d["excluded"] = r.excluded;
  d["bound"] = r.bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Markov-chain approximation experiments";

  py::class_<StableParams>(m, "StableParams")
      .def_readonly("alpha", &StableParams::alpha)
      .def_readonly("dim", &StableParams::dim)
      .def_readonly("d_alpha", &StableParams::d_alpha)
      .def_readonly("sigma", &StableParams::sigma)
      .def_readonly("sphere_area", &StableParams::sphere_area)
      .def_readonly("levy_density", &StableParams::levy_density)
      .def_readonly("em_sigma", &StableParams::em_sigma);

  m.def("stable_constants", &stable_constants, py::arg("alpha"), py::arg("dim"));
  m.def("sphere_area", &sphere_area, py::arg("dim"));

  m.def(
      "stable_samples",
      [](double alpha, int dim, std::size_t n, std::uint64_t seed) {
        const StableParams p = stable_constants(alpha, dim);
        RngStream rng(seed, 0);
        Matrix out(static_cast<Eigen::Index>(n), dim);
        for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = stable_vector(rng, p).transpose();
        return out;
      },
      py::arg("alpha"), py::arg("dim"), py::arg("n"), py::arg("seed") = 0,
      "n draws of the rotationally symmetric alpha-stable law, shape (n, dim).");
  m.def(
      "pareto_samples",
      [](double alpha, int dim, std::size_t n, std::uint64_t seed) {
        const StableParams p = stable_constants(alpha, dim);
        RngStream rng(seed, 0);
        Matrix out(static_cast<Eigen::Index>(n), dim);
        for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = pareto_vector(rng, p).transpose();
        return out;
      },
      py::arg("alpha"), py::arg("dim"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "empirical_cf",
      [](double alpha, int dim, double lambda, std::size_t m, std::uint64_t seed) {
        return empirical_cf(stable_constants(alpha, dim), lambda, m, RngStream(seed, 0));
      },
      py::arg("alpha"), py::arg("dim"), py::arg("lam"), py::arg("m"), py::arg("seed") = 0);

  m.def(
      "w1",
      [](py::array_t<double> a, py::array_t<double> b, const std::string& method, int n_projections,
         int bootstrap, std::uint64_t seed) {
        RngStream rng(seed, 0);
        const W1Estimate e = estimate_w1(to_samples(as_2d(a)), to_samples(as_2d(b)),
                                         W1Options{parse_w1_method(method), n_projections, bootstrap}, rng);
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("a"), py::arg("b"), py::arg("method") = "exact1d", py::arg("n_projections") = 64,
      py::arg("bootstrap") = 0, py::arg("seed") = 0,
      "Empirical W1 between samples of shape (n, d) or (n,). Returns (value, stderr).");
  m.def(
      "solve_assignment", [](const Matrix& cost) { return solve_assignment(cost); }, py::arg("cost"));

  m.def(
      "chain_identity",
      [](const Matrix& p1, const Matrix& q1, int horizon, const Eigen::VectorXd& h, std::size_t x) {
        const FiniteChainPair pair = make_chain_pair(p1, q1, horizon);
        const TestFunction f{h};
        return py::make_tuple(lhs(pair, f, x), rhs_telescope(pair, f, x));
      },
      py::arg("p1"), py::arg("q1"), py::arg("horizon"), py::arg("h"), py::arg("x"),
      "(E h(X_N) - E h(Y_N), telescoped sum) from state x.");
  m.def(
      "verify_identity",
      [](int trials, int max_states, int max_horizon, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return verify_identity(trials, max_states, max_horizon, rng).max_abs_residual;
      },
      py::arg("trials") = 500, py::arg("max_states") = 8, py::arg("max_horizon") = 12, py::arg("seed") = 0);

  m.def(
      "sgd_pair",
      [](const Eigen::VectorXd& h_diag, double eta, int horizon, const Eigen::VectorXd& x0, std::size_t n_paths,
         std::uint64_t seed) {
        const QuadraticModel model = make_example1(h_diag.asDiagonal().toDenseMatrix());
        SgdConfig c;
        c.eta = eta;
        c.horizon_n = horizon;
        c.x0 = x0;
        c.n_paths = n_paths;
        const auto [sgd, sde] = simulate_pair_marginals(model, c, RngStream(seed, 0));
        return py::make_tuple(to_rows(sgd), to_rows(sde));
      },
      py::arg("h_diag"), py::arg("eta"), py::arg("horizon"), py::arg("x0"), py::arg("n_paths"),
      py::arg("seed") = 0, "SGD iterates w_N and SDE draws at eta N for H = diag(h_diag).");

  m.def(
      "stable_ou_pair",
      [](double alpha, double eta, int horizon, const Eigen::VectorXd& x0, std::size_t n_paths,
         std::uint64_t seed) {
        StableOuConfig c;
        c.params = stable_constants(alpha, static_cast<int>(x0.size()));
        c.eta = eta;
        c.horizon_n = horizon;
        c.x0 = x0;
        c.n_paths = n_paths;
        const auto [exact, em] = simulate_pair_marginals(c, RngStream(seed, 0));
        return py::make_tuple(to_rows(exact), to_rows(em));
      },
      py::arg("alpha"), py::arg("eta"), py::arg("horizon"), py::arg("x0"), py::arg("n_paths"),
      py::arg("seed") = 0, "Exact OU marginal at eta N and the Euler-Maruyama endpoint.");

  m.def(
      "clt_partial_sums",
      [](int dim, const std::string& innovation, int n, std::size_t n_paths, std::uint64_t seed) {
        CltConfig c;
        c.dim = dim;
        c.innovation = parse_innovation(innovation);
        c.n_paths = n_paths;
        c.n_grid = {n};
        return to_rows(sample_partial_sums(c, n, RngStream(seed, 0)));
      },
      py::arg("dim"), py::arg("innovation"), py::arg("n"), py::arg("n_paths"), py::arg("seed") = 0);
  m.def("theorem_bound", &theorem_bound, py::arg("dim"), py::arg("n"), py::arg("e_b"), py::arg("e_xi3"),
        py::arg("e_xi"));
  m.def("expected_gaussian_norm", &expected_gaussian_norm, py::arg("dim"));

  m.def(
      "run_sweep",
      [](const std::string& experiment, const std::vector<double>& grid,
         const std::map<std::string, std::string>& fixed, std::size_t n_paths, std::uint64_t seed,
         const std::string& w1_method) {
        SweepSpec s;
        s.experiment = parse_experiment(experiment);
        s.grid = grid;
        s.fixed = fixed;
        s.n_paths = n_paths;
        s.seed = seed;
        s.w1_method = parse_w1_method(w1_method);
        const SweepTable t = run_sweep(s);
        py::list rows;
        for (const auto& r : t.rows) rows.append(row_dict(r));
        py::dict out;
        out["rows"] = rows;
        if (s.experiment != Experiment::kFramework) {
          const ExpectedRate e = expected_rate(s);
          try {
            const RateFit f = fit_rate(t, e.correction);
            out["slope"] = f.slope;
            out["ci_half_width"] = f.half_width;
            out["pass"] = e.accepts(f.slope);
          } catch (const std::invalid_argument&) {
            out["slope"] = py::none();
            out["pass"] = false;
          }
          out["expected_exponent"] = e.exponent;
        }
        return out;
      },
      py::arg("experiment"), py::arg("grid"), py::arg("fixed") = std::map<std::string, std::string>{},
      py::arg("n_paths") = 10000, py::arg("seed") = 0, py::arg("w1_method") = "exact1d",
      "Runs a sweep and fits the log-log slope. Returns a dict with rows, slope and pass.");
}
