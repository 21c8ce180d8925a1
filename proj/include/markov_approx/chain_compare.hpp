#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "markov_approx/rng.hpp"
#include "markov_approx/types.hpp"

namespace markov_approx {

/// Two time-homogeneous Markov structures on a shared finite state space.
/// `p1` is the unit-time kernel of the continuous process X (P_{0,1}),
/// `q1` the one-step kernel of the chain Y. Both are row-stochastic.
struct FiniteChainPair {
  std::vector<std::string> states;
  Matrix p1;
  Matrix q1;
  int horizon = 2;

  std::size_t size() const { return states.size(); }
  std::size_t index_of(const std::string& label) const;
};

/// h evaluated on every state.
struct TestFunction {
  Eigen::VectorXd values;
};

/// Validates shapes, stochasticity (rows sum to 1 within 1e-12, entries >= 0)
/// and horizon >= 2. Labels default to "0".."S-1" when empty.
FiniteChainPair make_chain_pair(Matrix p1, Matrix q1, int horizon,
                                std::vector<std::string> states = {});

/// Random instance with Dirichlet(1,...,1) rows for both kernels.
FiniteChainPair random_chain_pair(int n_states, int horizon, RngStream& stream);
TestFunction random_test_function(int n_states, RngStream& stream);

/// u_k = P1^k h. Throws std::out_of_range unless 0 <= k <= horizon.
TestFunction u_k(const FiniteChainPair& pair, const TestFunction& h, int k);

/// E h(X_N^x) - E h(Y_N^x).
double lhs(const FiniteChainPair& pair, const TestFunction& h, std::size_t x);
double lhs(const FiniteChainPair& pair, const TestFunction& h, const std::string& x);

/// sum_{j=1}^{N} [E u_{N-j}(X_1^{Y_{j-1}}) - E u_{N-j}(Y_1^{Y_{j-1}})], accumulated
/// by propagating the law of Y_{j-1} forward from x.
double rhs_telescope(const FiniteChainPair& pair, const TestFunction& h, std::size_t x);
double rhs_telescope(const FiniteChainPair& pair, const TestFunction& h, const std::string& x);

/// ((P1 - I) u_k)(y) - ((Q1 - I) u_k)(y), for 1 <= k <= N-1.
double generator_gap(const FiniteChainPair& pair, const TestFunction& h, int k, std::size_t y);

/// Law of Y_j started at x (row x of Q1^j).
Eigen::RowVectorXd chain_law(const FiniteChainPair& pair, std::size_t x, int j);

/// Dense matrix power by repeated multiplication.
Matrix transition_power(const Matrix& kernel, int k);

struct ChainFile {
  FiniteChainPair pair;
  std::optional<TestFunction> h;
};

/// Plain-text chain file: first line "S N", then S rows of P1, S rows of Q1,
/// and optionally one row of S values of h. Blank lines and '#' comments are
/// skipped. Throws std::runtime_error on malformed input.
ChainFile parse_chain_file(std::istream& in);
ChainFile load_chain_file(const std::filesystem::path& path);
void write_chain_file(std::ostream& out, const FiniteChainPair& pair, const TestFunction* h = nullptr);

struct IdentityCheck {
  int trials = 0;
  double max_abs_residual = 0.0;
};

/// Checks |lhs - rhs_telescope| over random instances with S in [1, max_states],
/// N in [2, max_horizon], every starting state.
IdentityCheck verify_identity(int trials, int max_states, int max_horizon, RngStream& stream);

}  // namespace markov_approx
