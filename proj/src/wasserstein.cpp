#include "markov_approx/wasserstein.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "markov_approx/parallel.hpp"

namespace markov_approx {

namespace {

void require_same_dim(const SampleSet& a, const SampleSet& b, const char* who) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument(std::string(who) + ": empty sample set");
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
  }
}

std::vector<double> sorted_copy(const double* data, std::size_t n, std::size_t stride) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = data[i * stride];
  std::stable_sort(v.begin(), v.end());
  return v;
}

// W1 between two sorted 1-D samples.
double w1_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() == b.size()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
  }
  // integral of |F_a - F_b| over the merged support
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x_prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = (j == b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - x_prev);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    x_prev = x;
  }
  return total;
}

inline std::size_t uniform_index(RngStream& stream, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(stream()) * n) >> 64);
}

// Bootstrap multiplicities for resamples [0, reps) of an n-point sample,
// point-major: counts[i * reps + r] is how often point i appears in resample
// r. Each resample is drawn contiguously and then transposed in groups.
// Multinomial(n, 1/n) cells exceed 255 with negligible probability; that case
// is reported rather than wrapped.
void draw_counts(RngStream& stream, std::size_t n, std::size_t reps, std::uint8_t* counts) {
  constexpr std::size_t kGroup = 16;
  std::vector<std::uint8_t> tmp(n * kGroup);
  for (std::size_t first = 0; first < reps; first += kGroup) {
    const std::size_t width = std::min(kGroup, reps - first);
    std::fill(tmp.begin(), tmp.end(), std::uint8_t{0});
    for (std::size_t r = 0; r < width; ++r) {
      std::uint8_t* c = tmp.data() + r * n;
      for (std::size_t k = 0; k < n; ++k) {
        std::uint8_t& cell = c[uniform_index(stream, n)];
        if (cell == 255) throw std::runtime_error("bootstrap: resample multiplicity overflow");
        ++cell;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < width; ++r) counts[i * reps + first + r] = tmp[r * n + i];
    }
  }
}

// W1 between weighted versions of two sorted 1-D samples, for `reps` weightings
// at once. Point k of `sa` is original point oa[k] (k itself when oa is null).
// The merge order does not depend on the weights, so one pass serves all reps.
void weighted_w1(const std::vector<double>& sa, const std::vector<std::uint32_t>* oa, const std::uint8_t* ca,
                 const std::vector<double>& sb, const std::vector<std::uint32_t>* ob, const std::uint8_t* cb,
                 std::size_t reps, double* out) {
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  // diff[r] = na nb (F_a - F_b) just left of the current point
  std::vector<double> diff(reps, 0.0), total(reps, 0.0);
  std::size_t i = 0, j = 0;
  double x_prev = std::min(sa.front(), sb.front());
  while (i < sa.size() || j < sb.size()) {
    const bool from_a = j == sb.size() || (i < sa.size() && sa[i] <= sb[j]);
    const double x = from_a ? sa[i] : sb[j];
    const double dx = x - x_prev;
    x_prev = x;
    const std::uint8_t* row;
    double w;
    if (from_a) {
      row = ca + (oa ? (*oa)[i] : i) * reps;
      w = nb;
      ++i;
    } else {
      row = cb + (ob ? (*ob)[j] : j) * reps;
      w = -na;
      ++j;
    }
    double* __restrict d = diff.data();
    double* __restrict t = total.data();
    for (std::size_t r = 0; r < reps; ++r) {
      t[r] += std::abs(d[r]) * dx;
      d[r] += w * row[r];
    }
  }
  for (std::size_t r = 0; r < reps; ++r) out[r] = total[r] / (na * nb);
}

double sample_sd(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<Eigen::VectorXd> random_directions(int dim, int n_proj, RngStream& stream) {
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(n_proj));
  while (static_cast<int>(dirs.size()) < n_proj) {
    Eigen::VectorXd g(dim);
    for (int i = 0; i < dim; ++i) g[i] = stream.normal();
    const double norm = g.norm();
    if (norm > 0.0) dirs.push_back(g / norm);
  }
  return dirs;
}

std::vector<double> project(const SampleSet& s, const Eigen::VectorXd& dir) {
  Eigen::VectorXd p = s.points.transpose() * dir;
  return {p.data(), p.data() + p.size()};
}

// Sorts v in place and returns the original index of each sorted entry.
std::vector<std::uint32_t> sort_with_order(std::vector<double>& v) {
  std::vector<std::pair<double, std::uint32_t>> keyed(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) keyed[i] = {v[i], static_cast<std::uint32_t>(i)};
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> order(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = keyed[i].first;
    order[i] = keyed[i].second;
  }
  return order;
}

// Mean over `dirs` of the exact 1-D W1 between projections, with a bootstrap
// error bar whose resampled point multiplicities are shared by all directions.
std::pair<double, double> projected_w1(const SampleSet& a, const SampleSet& b,
                                       const std::vector<Eigen::VectorXd>& dirs, int resamples,
                                       RngStream& stream) {
  const auto n_dirs = static_cast<double>(dirs.size());
  const auto reps = static_cast<std::size_t>(resamples);
  std::vector<std::uint8_t> ca(a.size() * reps), cb(b.size() * reps);
  draw_counts(stream, a.size(), reps, ca.data());
  draw_counts(stream, b.size(), reps, cb.data());
  std::vector<double> value(dirs.size());
  std::vector<std::vector<double>> boot(dirs.size(), std::vector<double>(reps));
  parallel_chunks(dirs.size(), 1, [&](std::size_t k, std::size_t, std::size_t) {
    auto sa = project(a, dirs[k]);
    auto sb = project(b, dirs[k]);
    if (reps == 0) {
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      value[k] = w1_sorted(sa, sb);
      return;
    }
    const auto oa = sort_with_order(sa);
    const auto ob = sort_with_order(sb);
    value[k] = w1_sorted(sa, sb);
    weighted_w1(sa, &oa, ca.data(), sb, &ob, cb.data(), reps, boot[k].data());
  });
  const double mean = std::accumulate(value.begin(), value.end(), 0.0) / n_dirs;
  if (reps == 0) return {mean, 0.0};
  std::vector<double> stats(reps, 0.0);
  for (const auto& per_dir : boot) {
    for (std::size_t r = 0; r < reps; ++r) stats[r] += per_dir[r];
  }
  for (double& s : stats) s /= n_dirs;
  return {mean, sample_sd(stats)};
}

}  // namespace

SampleSet make_sample_set(Matrix points, SampleMeta meta) {
  if (points.rows() < 1) throw std::invalid_argument("sample set: dimension must be >= 1");
  if (points.cols() < 1) throw std::invalid_argument("sample set: empty");
  return SampleSet{std::move(points), std::move(meta)};
}

std::string to_string(W1Method method) {
  switch (method) {
    case W1Method::kExact1d: return "exact1d";
    case W1Method::kAssignment: return "assignment";
    case W1Method::kSliced: return "sliced";
    case W1Method::kMarginalSum: return "marginal_sum";
  }
  return "unknown";
}

W1Method parse_w1_method(const std::string& name) {
  if (name == "exact1d") return W1Method::kExact1d;
  if (name == "assignment") return W1Method::kAssignment;
  if (name == "sliced") return W1Method::kSliced;
  if (name == "marginal_sum") return W1Method::kMarginalSum;
  throw std::invalid_argument("unknown W1 method '" + name + "'");
}

W1Estimate w1_exact_1d(const SampleSet& a, const SampleSet& b) {
  require_same_dim(a, b, "w1_exact_1d");
  if (a.dim() != 1) throw std::invalid_argument("w1_exact_1d: samples must be one-dimensional");
  const auto sa = sorted_copy(a.points.data(), a.size(), 1);
  const auto sb = sorted_copy(b.points.data(), b.size(), 1);
  return {w1_sorted(sa, sb), 0.0, W1Method::kExact1d, 0};
}

std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source of each augmentation
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return row_to_col;
}

W1Estimate w1_assignment(const SampleSet& a, const SampleSet& b) {
  require_same_dim(a, b, "w1_assignment");
  if (a.size() != b.size()) throw std::invalid_argument("w1_assignment: sample sizes differ");
  if (a.size() > kAssignmentCap) {
    throw std::invalid_argument("w1_assignment: n=" + std::to_string(a.size()) + " exceeds cap " +
                                std::to_string(kAssignmentCap));
  }
  // Degenerate problems (1-D data especially) have several optimal matchings
  // whose sums round differently; a canonical orientation and a sorted
  // summation make the value exactly symmetric.
  const bool swap = std::lexicographical_compare(b.points.data(), b.points.data() + b.points.size(),
                                                 a.points.data(), a.points.data() + a.points.size());
  const Matrix& rows = swap ? b.points : a.points;
  const Matrix& cols = swap ? a.points : b.points;
  const auto n = static_cast<Eigen::Index>(a.size());
  Matrix cost(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) cost(i, j) = (rows.col(i) - cols.col(j)).norm();
  }
  const auto match = solve_assignment(cost);
  std::vector<double> matched(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) matched[static_cast<std::size_t>(i)] = cost(i, match[static_cast<std::size_t>(i)]);
  std::sort(matched.begin(), matched.end());
  const double total = std::accumulate(matched.begin(), matched.end(), 0.0);
  return {total / static_cast<double>(n), 0.0, W1Method::kAssignment, 0};
}

W1Estimate w1_sliced(const SampleSet& a, const SampleSet& b, int n_proj, RngStream& stream) {
  require_same_dim(a, b, "w1_sliced");
  if (a.dim() < 2) throw std::invalid_argument("w1_sliced: requires dim >= 2");
  if (n_proj < 1) throw std::invalid_argument("w1_sliced: n_proj must be >= 1");
  const auto dirs = random_directions(a.dim(), n_proj, stream);
  std::vector<double> per_dir(dirs.size());
  parallel_chunks(dirs.size(), 1, [&](std::size_t k, std::size_t, std::size_t) {
    auto pa = project(a, dirs[k]);
    auto pb = project(b, dirs[k]);
    std::stable_sort(pa.begin(), pa.end());
    std::stable_sort(pb.begin(), pb.end());
    per_dir[k] = w1_sorted(pa, pb);
  });
  const double mean = std::accumulate(per_dir.begin(), per_dir.end(), 0.0) / n_proj;
  return {mean, 0.0, W1Method::kSliced, n_proj};
}

double bootstrap_stderr(const SampleSet& a, const SampleSet& b, const W1Estimator& estimator,
                        int resamples, RngStream& stream) {
  require_same_dim(a, b, "bootstrap_stderr");
  if (resamples < 50) throw std::invalid_argument("bootstrap_stderr: resamples must be >= 50");
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  auto resample = [&](const SampleSet& s) {
    Matrix pts(s.points.rows(), s.points.cols());
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      pts.col(k) = s.points.col(static_cast<Eigen::Index>(uniform_index(stream, s.size())));
    }
    return SampleSet{std::move(pts), s.meta};
  };
  for (int r = 0; r < resamples; ++r) {
    const SampleSet ra = resample(a);
    const SampleSet rb = resample(b);
    stats.push_back(estimator(ra, rb));
  }
  return sample_sd(stats);
}

W1Estimate estimate_w1(const SampleSet& a, const SampleSet& b, const W1Options& options,
                       RngStream& stream) {
  require_same_dim(a, b, "estimate_w1");
  const int resamples = options.bootstrap_resamples;
  if (resamples != 0 && resamples < 50) {
    throw std::invalid_argument("estimate_w1: bootstrap needs at least 50 resamples");
  }
  if (std::max(a.size(), b.size()) > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("estimate_w1: sample too large");
  }

  switch (options.method) {
    case W1Method::kAssignment: {
      W1Estimate est = w1_assignment(a, b);
      if (resamples > 0) {
        est.std_error = bootstrap_stderr(
            a, b, [](const SampleSet& x, const SampleSet& y) { return w1_assignment(x, y).value; },
            resamples, stream);
      }
      return est;
    }
    case W1Method::kExact1d: {
      if (a.dim() != 1) throw std::invalid_argument("estimate_w1: exact1d requires dim 1");
      const auto sa = sorted_copy(a.points.data(), a.size(), 1);
      const auto sb = sorted_copy(b.points.data(), b.size(), 1);
      W1Estimate est{w1_sorted(sa, sb), 0.0, W1Method::kExact1d, 0};
      if (resamples > 0) {
        // resamples in blocks to bound the count tables
        constexpr std::size_t kBlock = 32;
        const auto reps = static_cast<std::size_t>(resamples);
        std::vector<double> stats(reps);
        std::vector<std::uint8_t> ca(a.size() * kBlock), cb(b.size() * kBlock);
        for (std::size_t first = 0; first < reps; first += kBlock) {
          const std::size_t width = std::min(kBlock, reps - first);
          draw_counts(stream, a.size(), width, ca.data());
          draw_counts(stream, b.size(), width, cb.data());
          weighted_w1(sa, nullptr, ca.data(), sb, nullptr, cb.data(), width, stats.data() + first);
        }
        est.std_error = sample_sd(stats);
      }
      return est;
    }
    case W1Method::kSliced: {
      if (a.dim() < 2) throw std::invalid_argument("estimate_w1: sliced requires dim >= 2");
      if (options.n_projections < 1) throw std::invalid_argument("estimate_w1: n_projections must be >= 1");
      const auto dirs = random_directions(a.dim(), options.n_projections, stream);
      auto [value, se] = projected_w1(a, b, dirs, resamples, stream);
      return {value, se, W1Method::kSliced, options.n_projections};
    }
    case W1Method::kMarginalSum: {
      std::vector<Eigen::VectorXd> axes;
      for (int i = 0; i < a.dim(); ++i) axes.push_back(Eigen::VectorXd::Unit(a.dim(), i));
      auto [value, se] = projected_w1(a, b, axes, resamples, stream);
      return {value * a.dim(), se * a.dim(), W1Method::kMarginalSum, 0};
    }
  }
  throw std::logic_error("estimate_w1: unhandled method");
}

double calibrate_sliced(const SampleSet& a, const SampleSet& b, std::size_t subsample, int n_proj,
                        RngStream& stream) {
  require_same_dim(a, b, "calibrate_sliced");
  subsample = std::min({subsample, a.size(), b.size(), kAssignmentCap});
  const auto n = static_cast<Eigen::Index>(subsample);
  const SampleSet sa{a.points.leftCols(n), a.meta};
  const SampleSet sb{b.points.leftCols(n), b.meta};
  const double sliced = w1_sliced(sa, sb, n_proj, stream).value;
  if (sliced <= 0.0) throw std::runtime_error("calibrate_sliced: sliced distance is zero");
  return w1_assignment(sa, sb).value / sliced;
}

namespace {

void put_double(std::ostream& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.write(buf, res.ptr - buf);
}

double get_double(const std::string& tok) {
  double x = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw std::runtime_error("sample CSV: not a number: '" + tok + "'");
  }
  return x;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

constexpr char kMagic[4] = {'M', 'A', 'S', 'S'};
constexpr std::uint32_t kBinaryVersion = 1;

}  // namespace

void write_samples_csv(std::ostream& out, const SampleSet& s) {
  out << "dim,count\n" << s.dim() << ',' << s.size() << '\n';
  for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
      if (i) out << ',';
      put_double(out, s.points(i, j));
    }
    out << '\n';
  }
}

SampleSet read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "dim,count") throw std::runtime_error("sample CSV: missing 'dim,count' header");
  if (!std::getline(in, line)) throw std::runtime_error("sample CSV: missing size line");
  const auto head = split_commas(line);
  if (head.size() != 2) throw std::runtime_error("sample CSV: malformed size line");
  const auto dim = static_cast<Eigen::Index>(get_double(head[0]));
  const auto count = static_cast<Eigen::Index>(get_double(head[1]));
  if (dim < 1 || count < 1) throw std::runtime_error("sample CSV: dim and count must be positive");
  Matrix pts(dim, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error("sample CSV: truncated at row " + std::to_string(j));
    const auto fields = split_commas(line);
    if (static_cast<Eigen::Index>(fields.size()) != dim) {
      throw std::runtime_error("sample CSV: row " + std::to_string(j) + " has wrong arity");
    }
    for (Eigen::Index i = 0; i < dim; ++i) pts(i, j) = get_double(fields[static_cast<std::size_t>(i)]);
  }
  return make_sample_set(std::move(pts));
}

void write_samples_binary(std::ostream& out, const SampleSet& s) {
  const std::uint64_t dim = static_cast<std::uint64_t>(s.dim()), count = s.size(), seed = s.meta.seed;
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kBinaryVersion), sizeof kBinaryVersion);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
  out.write(reinterpret_cast<const char*>(s.points.data()),
            static_cast<std::streamsize>(sizeof(double) * dim * count));
}

SampleSet read_samples_binary(std::istream& in) {
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t dim = 0, count = 0, seed = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  in.read(reinterpret_cast<char*>(&seed), sizeof seed);
  if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kBinaryVersion) {
    throw std::runtime_error("sample binary: bad header");
  }
  if (dim < 1 || count < 1) throw std::runtime_error("sample binary: empty sample set");
  Matrix pts(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(pts.data()), static_cast<std::streamsize>(sizeof(double) * dim * count));
  if (!in) throw std::runtime_error("sample binary: truncated payload");
  return make_sample_set(std::move(pts), SampleMeta{seed, {}});
}

void save_samples(const std::filesystem::path& path, const SampleSet& s) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binary ? write_samples_binary(out, s) : write_samples_csv(out, s);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SampleSet load_samples(const std::filesystem::path& path) {
  const bool binary = path.extension() == ".bin";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return binary ? read_samples_binary(in) : read_samples_csv(in);
}

}  // namespace markov_approx
