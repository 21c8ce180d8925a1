#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "markov_approx/config.hpp"

using namespace markov_approx;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

}  // namespace

TEST_CASE("sections and top-level defaults") {
  const Config c = parse(
      "seed = 5\n"
      "n_paths = 100  # default\n"
      "[clt]\n"
      "n_paths = 200\n"
      "; a comment\n"
      "d = 3\n");
  CHECK(c.has_section("clt"));
  CHECK_FALSE(c.has_section("sgd"));
  CHECK(c.find("clt", "n_paths") == "200");
  CHECK(c.find("clt", "seed") == "5");
  CHECK(c.find("sgd", "n_paths") == "100");
  CHECK_FALSE(c.find("clt", "alpha").has_value());
  const auto s = c.section("clt");
  CHECK(s.size() == 3);
  CHECK(s.at("d") == "3");
}

TEST_CASE("numbers") {
  CHECK(parse_number("0.125", "x") == 0.125);
  CHECK(parse_number(" 2e-3 ", "x") == 2e-3);
  CHECK_THROWS_AS(parse_number("1.5x", "x"), ConfigError);
  CHECK_THROWS_AS(parse_number("", "x"), ConfigError);
  CHECK(parse_unsigned("20240501", "seed") == 20240501u);
  CHECK_THROWS_AS(parse_unsigned("-1", "seed"), ConfigError);
  CHECK(parse_list("1, 2,3 4", "h") == std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(parse_list("1,,x", "h"), ConfigError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(Config::load("/nonexistent/markov_approx.ini"), ConfigError);
}

TEST_CASE("sweep from config") {
  const Config c = parse(
      "[stable]\n"
      "seed = 9\n"
      "n_paths = 1000\n"
      "alpha = 1.2\n"
      "eta_grid = 0.25, 0.125, 0.0625, 0.03125\n"
      "[clt]\n"
      "d = 3\n"
      "innovation = centered_exponential\n"
      "n_grid = 4 8 16 32\n"
      "[sgd]\n"
      "eta_grid = 0.1 0.05 0.025 0.0125\n");
  const SweepSpec s = sweep_from_config(Experiment::kStable, c);
  CHECK(s.seed == 9);
  CHECK(s.n_paths == 1000);
  CHECK(s.grid.size() == 4);
  CHECK(s.fixed.at("alpha") == "1.2");
  CHECK(s.fixed.count("seed") == 0);
  CHECK(s.w1_method == W1Method::kExact1d);
  CHECK(expected_rate(s).exponent == doctest::Approx(0.8 / 1.2));

  const SweepSpec k = sweep_from_config(Experiment::kClt, c);
  CHECK(k.w1_method == W1Method::kSliced);
  CHECK(k.grid.back() == 32);
  CHECK(sweep_from_config(Experiment::kSgd, c).w1_method == W1Method::kMarginalSum);
}

TEST_CASE("sweep config errors") {
  CHECK_THROWS_AS(sweep_from_config(Experiment::kClt, parse("[clt]\nd = 1\n")), ConfigError);
  CHECK_THROWS_AS(sweep_from_config(Experiment::kClt, parse("[clt]\nn_grid = 4 8 16 32\neta_grid = 1 2 3 4\n")),
                  ConfigError);
  CHECK_THROWS_AS(sweep_from_config(Experiment::kClt, parse("[clt]\nn_grid = 4 8 16 32\nn_paths = lots\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse("[clt\nd = 1\n"), ConfigError);
}
