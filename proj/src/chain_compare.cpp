#include "markov_approx/chain_compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace markov_approx {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_stochastic(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + " must be square");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < 0.0).any() || !m.row(i).allFinite()) {
      throw std::invalid_argument(std::string(name) + ": row " + std::to_string(i) +
                                  " has a negative or non-finite entry");
    }
    if (std::abs(m.row(i).sum() - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument(std::string(name) + ": row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
}

void check_state(const FiniteChainPair& pair, std::size_t x) {
  if (x >= pair.size()) {
    throw std::out_of_range("unknown state index " + std::to_string(x));
  }
}

void check_function(const FiniteChainPair& pair, const TestFunction& h) {
  if (static_cast<std::size_t>(h.values.size()) != pair.size()) {
    throw std::invalid_argument("test function has " + std::to_string(h.values.size()) +
                                " values for " + std::to_string(pair.size()) + " states");
  }
}

Eigen::RowVectorXd dirichlet_row(int n, RngStream& stream) {
  Eigen::RowVectorXd row(n);
  for (int j = 0; j < n; ++j) row[j] = stream.exponential();
  return row / row.sum();
}

}  // namespace

std::size_t FiniteChainPair::index_of(const std::string& label) const {
  const auto it = std::find(states.begin(), states.end(), label);
  if (it == states.end()) throw std::out_of_range("unknown state '" + label + "'");
  return static_cast<std::size_t>(it - states.begin());
}

FiniteChainPair make_chain_pair(Matrix p1, Matrix q1, int horizon, std::vector<std::string> states) {
  check_stochastic(p1, "P1");
  check_stochastic(q1, "Q1");
  if (p1.rows() != q1.rows()) throw std::invalid_argument("P1 and Q1 differ in size");
  if (p1.rows() == 0) throw std::invalid_argument("empty state space");
  if (horizon < 2) throw std::invalid_argument("horizon must be at least 2");
  if (states.empty()) {
    for (Eigen::Index i = 0; i < p1.rows(); ++i) states.push_back(std::to_string(i));
  } else if (static_cast<Eigen::Index>(states.size()) != p1.rows()) {
    throw std::invalid_argument("state labels do not match matrix size");
  }
  return FiniteChainPair{std::move(states), std::move(p1), std::move(q1), horizon};
}

FiniteChainPair random_chain_pair(int n_states, int horizon, RngStream& stream) {
  Matrix p(n_states, n_states), q(n_states, n_states);
  for (int i = 0; i < n_states; ++i) p.row(i) = dirichlet_row(n_states, stream);
  for (int i = 0; i < n_states; ++i) q.row(i) = dirichlet_row(n_states, stream);
  // renormalisation can leave row sums a few ulps from 1
  return make_chain_pair(std::move(p), std::move(q), horizon);
}

TestFunction random_test_function(int n_states, RngStream& stream) {
  TestFunction h{Eigen::VectorXd(n_states)};
  for (int i = 0; i < n_states; ++i) h.values[i] = stream.normal();
  return h;
}

TestFunction u_k(const FiniteChainPair& pair, const TestFunction& h, int k) {
  check_function(pair, h);
  if (k < 0 || k > pair.horizon) {
    throw std::out_of_range("u_k: k=" + std::to_string(k) + " outside [0, " +
                            std::to_string(pair.horizon) + "]");
  }
  Eigen::VectorXd u = h.values;
  for (int i = 0; i < k; ++i) u = pair.p1 * u;
  return {std::move(u)};
}

double lhs(const FiniteChainPair& pair, const TestFunction& h, std::size_t x) {
  check_state(pair, x);
  check_function(pair, h);
  Eigen::VectorXd ux = h.values, uy = h.values;
  for (int i = 0; i < pair.horizon; ++i) {
    ux = pair.p1 * ux;
    uy = pair.q1 * uy;
  }
  return ux[static_cast<Eigen::Index>(x)] - uy[static_cast<Eigen::Index>(x)];
}

double lhs(const FiniteChainPair& pair, const TestFunction& h, const std::string& x) {
  return lhs(pair, h, pair.index_of(x));
}

double rhs_telescope(const FiniteChainPair& pair, const TestFunction& h, std::size_t x) {
  check_state(pair, x);
  check_function(pair, h);
  const int n = pair.horizon;
  // u[k] = P1^k h for k = 0..N-1
  std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(n));
  u[0] = h.values;
  for (int k = 1; k < n; ++k) u[k] = pair.p1 * u[k - 1];

  const Matrix gap = pair.p1 - pair.q1;
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(pair.size()));
  law[static_cast<Eigen::Index>(x)] = 1.0;
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    total += law * (gap * u[n - j]);
    law = law * pair.q1;
  }
  return total;
}

double rhs_telescope(const FiniteChainPair& pair, const TestFunction& h, const std::string& x) {
  return rhs_telescope(pair, h, pair.index_of(x));
}

double generator_gap(const FiniteChainPair& pair, const TestFunction& h, int k, std::size_t y) {
  check_state(pair, y);
  if (k < 1 || k > pair.horizon - 1) {
    throw std::out_of_range("generator_gap: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(pair.horizon - 1) + "]");
  }
  const Eigen::VectorXd u = u_k(pair, h, k).values;
  const auto yi = static_cast<Eigen::Index>(y);
  const double ax = pair.p1.row(yi).dot(u) - u[yi];
  const double ay = pair.q1.row(yi).dot(u) - u[yi];
  return ax - ay;
}

Eigen::RowVectorXd chain_law(const FiniteChainPair& pair, std::size_t x, int j) {
  check_state(pair, x);
  if (j < 0) throw std::out_of_range("chain_law: negative step");
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(pair.size()));
  law[static_cast<Eigen::Index>(x)] = 1.0;
  for (int i = 0; i < j; ++i) law = law * pair.q1;
  return law;
}

Matrix transition_power(const Matrix& kernel, int k) {
  if (k < 0) throw std::out_of_range("transition_power: negative exponent");
  Matrix out = Matrix::Identity(kernel.rows(), kernel.cols());
  for (int i = 0; i < k; ++i) out = out * kernel;
  return out;
}

ChainFile parse_chain_file(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::runtime_error("chain file line " + std::to_string(line_no) +
                                 ": not a number: '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty() || rows[0].size() != 2) {
    throw std::runtime_error("chain file: first line must be 'S N'");
  }
  const double s_raw = rows[0][0], n_raw = rows[0][1];
  if (s_raw < 1 || s_raw != std::floor(s_raw) || n_raw != std::floor(n_raw)) {
    throw std::runtime_error("chain file: S and N must be positive integers");
  }
  const auto s = static_cast<std::size_t>(s_raw);
  const std::size_t expected = 1 + 2 * s;
  if (rows.size() != expected && rows.size() != expected + 1) {
    throw std::runtime_error("chain file: expected " + std::to_string(2 * s) +
                             " matrix rows and an optional h row, found " +
                             std::to_string(rows.size() - 1) + " rows");
  }
  auto read_matrix = [&](std::size_t first) {
    Matrix m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i) {
      const auto& r = rows[first + i];
      if (r.size() != s) {
        throw std::runtime_error("chain file: matrix row has " + std::to_string(r.size()) +
                                 " entries, expected " + std::to_string(s));
      }
      for (std::size_t j = 0; j < s; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
    return m;
  };
  ChainFile out{make_chain_pair(read_matrix(1), read_matrix(1 + s), static_cast<int>(n_raw)), std::nullopt};
  if (rows.size() == expected + 1) {
    const auto& r = rows.back();
    if (r.size() != s) throw std::runtime_error("chain file: h row must have S entries");
    out.h = TestFunction{Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(s))};
  }
  return out;
}

ChainFile load_chain_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open chain file " + path.string());
  return parse_chain_file(in);
}

void write_chain_file(std::ostream& out, const FiniteChainPair& pair, const TestFunction* h) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << pair.size() << ' ' << pair.horizon << '\n';
  auto write_rows = [&](const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
      out << '\n';
    }
  };
  write_rows(pair.p1);
  write_rows(pair.q1);
  if (h) {
    for (Eigen::Index j = 0; j < h->values.size(); ++j) out << (j ? " " : "") << h->values[j];
    out << '\n';
  }
  out.precision(old);
}

IdentityCheck verify_identity(int trials, int max_states, int max_horizon, RngStream& stream) {
  IdentityCheck check;
  for (int t = 0; t < trials; ++t) {
    const int s = 1 + static_cast<int>(stream() % static_cast<std::uint64_t>(max_states));
    const int n = 2 + static_cast<int>(stream() % static_cast<std::uint64_t>(max_horizon - 1));
    const FiniteChainPair pair = random_chain_pair(s, n, stream);
    const TestFunction h = random_test_function(s, stream);
    for (std::size_t x = 0; x < pair.size(); ++x) {
      check.max_abs_residual =
          std::max(check.max_abs_residual, std::abs(lhs(pair, h, x) - rhs_telescope(pair, h, x)));
    }
    ++check.trials;
  }
  return check;
}

}  // namespace markov_approx
