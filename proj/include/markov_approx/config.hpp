#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "markov_approx/rate_harness.hpp"

namespace markov_approx {

/// Unreadable file, malformed syntax or a bad value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// key = value text with [section] headers; '#' and ';' start comments.
/// Keys outside any section are defaults for every section.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::filesystem::path& path);

  /// Value of section.key, falling back to the top-level key.
  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  /// Top-level keys overlaid with the keys of `section`.
  std::map<std::string, std::string> section(const std::string& name) const;
  bool has_section(const std::string& name) const;

 private:
  std::map<std::string, std::string> top_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Strict number parsing; the whole string must be consumed.
double parse_number(const std::string& text, const std::string& what);
std::uint64_t parse_unsigned(const std::string& text, const std::string& what);
/// Comma- or whitespace-separated numbers.
std::vector<double> parse_list(const std::string& text, const std::string& what);

/// Builds a sweep from section [<experiment>] (sgd, stable, clt, framework).
/// Reserved keys: seed, n_paths, w1_method, n_projections, bootstrap and the
/// grid key (eta_grid, n_grid or horizon_grid); the rest become fixed settings.
SweepSpec sweep_from_config(Experiment experiment, const Config& config);

}  // namespace markov_approx
