#include "markov_approx/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace markov_approx {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ini_parser keeps trailing comments as part of the value
std::string strip_comment(const std::string& v) {
  const auto pos = v.find_first_of("#;");
  return trim(pos == std::string::npos ? v : v.substr(0, pos));
}

}  // namespace

Config Config::parse(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Config cfg;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      cfg.top_[key] = strip_comment(node.data());
    } else {
      auto& sec = cfg.sections_[key];
      for (const auto& [k, v] : node) sec[k] = strip_comment(v.data());
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse(in);
}

std::optional<std::string> Config::find(const std::string& section, const std::string& key) const {
  if (auto s = sections_.find(section); s != sections_.end()) {
    if (auto it = s->second.find(key); it != s->second.end()) return it->second;
  }
  if (auto it = top_.find(key); it != top_.end()) return it->second;
  return std::nullopt;
}

std::map<std::string, std::string> Config::section(const std::string& name) const {
  auto out = top_;
  if (auto s = sections_.find(name); s != sections_.end()) {
    for (const auto& [k, v] : s->second) out[k] = v;
  }
  return out;
}

bool Config::has_section(const std::string& name) const { return sections_.count(name) > 0; }

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config: bad number for " + what + ": '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config: bad unsigned integer for " + what + ": '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  std::vector<double> out;
  for (std::string tok; in >> tok;) out.push_back(parse_number(tok, what));
  return out;
}

SweepSpec sweep_from_config(Experiment experiment, const Config& config) {
  const std::string name = to_string(experiment);
  auto keys = config.section(name);
  SweepSpec spec;
  spec.experiment = experiment;

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = keys.find(key);
    if (it == keys.end()) return std::nullopt;
    std::string v = it->second;
    keys.erase(it);
    return v;
  };

  if (auto v = take("seed")) spec.seed = parse_unsigned(*v, "seed");
  if (auto v = take("n_paths")) spec.n_paths = parse_unsigned(*v, "n_paths");
  if (auto v = take("n_projections")) spec.n_projections = static_cast<int>(parse_unsigned(*v, "n_projections"));
  if (auto v = take("bootstrap")) spec.bootstrap_resamples = static_cast<int>(parse_unsigned(*v, "bootstrap"));
  const auto method = take("w1_method");
  try {
    if (method) spec.w1_method = parse_w1_method(*method);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  std::optional<std::string> grid;
  for (const char* key : {"eta_grid", "n_grid", "horizon_grid"}) {
    if (auto v = take(key)) {
      if (grid) throw ConfigError("config: more than one grid key in [" + name + "]");
      grid = v;
    }
  }
  if (!grid) throw ConfigError("config: [" + name + "] has no grid (eta_grid, n_grid or horizon_grid)");
  spec.grid = parse_list(*grid, "grid");

  if (!method) {
    int d = 1;
    if (auto it = keys.find("d"); it != keys.end()) d = static_cast<int>(parse_number(it->second, "d"));
    if (experiment == Experiment::kSgd) {
      spec.w1_method = W1Method::kMarginalSum;
    } else {
      spec.w1_method = d == 1 ? W1Method::kExact1d : W1Method::kSliced;
    }
  }
  spec.fixed = std::move(keys);
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return spec;
}

}  // namespace markov_approx
