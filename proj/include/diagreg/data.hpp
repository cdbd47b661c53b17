#ifndef DIAGREG_DATA_HPP
#define DIAGREG_DATA_HPP

// Synthetic generators, label noise, file ingestion, standardization and
// train/test splitting.

#include "model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace diagreg {

class parse_error : public error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class label_error : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  using error::error;
};

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed by
/// the standard) with hand-written transforms, since the standard
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw invalid_argument("Rng::below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Independent seed for a named sub-stream (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

inline Dataset take_rows(const Dataset& data,
                         const std::vector<std::size_t>& rows) {
  Matrix x(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(data.d()));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) =
        data.points().row(static_cast<Eigen::Index>(rows[k]));
    y(static_cast<Eigen::Index>(k)) = data.label(rows[k]);
  }
  return Dataset(std::move(x), std::move(y));
}

inline constexpr double anchor_filler_buffer = 0.1;
inline constexpr double anchor_box = 3.0;

/// The four anchors (1/2, 3/2), (3/2, 1/2) with label +1 and their negatives
/// with label -1, followed by n_total - 4 fillers with alternating labels
/// (+1 first). Fillers are drawn uniformly from [-3, 3]^2 and kept only if
/// y <w*, z> >= 1.1 for w* = (1/2, 1/2).
inline Dataset gen_support_anchor(std::size_t n_total, std::uint64_t seed) {
  if (n_total < 4)
    throw invalid_argument("gen_support_anchor: n_total must be >= 4");
  const auto n = static_cast<Eigen::Index>(n_total);
  Matrix x(n, 2);
  Vector y(n);
  x.row(0) << 0.5, 1.5;
  x.row(1) << 1.5, 0.5;
  x.row(2) << -0.5, -1.5;
  x.row(3) << -1.5, -0.5;
  y.head(4) << 1.0, 1.0, -1.0, -1.0;
  Rng rng(seed);
  for (Eigen::Index i = 4; i < n; ++i) {
    const double label = (i - 4) % 2 == 0 ? 1.0 : -1.0;
    for (;;) {
      const double a = rng.uniform(-anchor_box, anchor_box);
      const double b = rng.uniform(-anchor_box, anchor_box);
      if (label * 0.5 * (a + b) >= 1.0 + anchor_filler_buffer) {
        x(i, 0) = a;
        x(i, 1) = b;
        break;
      }
    }
    y(i) = label;
  }
  return Dataset(std::move(x), std::move(y));
}

/// n_total / 2 points around +(1/2, 1/2) with label +1, then n_total / 2
/// around -(1/2, 1/2) with label -1, isotropic with standard deviation `std`.
inline Dataset gen_gaussian_blobs(std::size_t n_total, double std_dev,
                                  std::uint64_t seed) {
  if (n_total == 0 || n_total % 2 != 0)
    throw invalid_argument("gen_gaussian_blobs: n_total must be even and > 0");
  if (!(std_dev >= 0.0))
    throw invalid_argument("gen_gaussian_blobs: std must be >= 0");
  const auto n = static_cast<Eigen::Index>(n_total);
  Matrix x(n, 2);
  Vector y(n);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double label = i < n / 2 ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < 2; ++j)
      x(i, j) = label * 0.5 + std_dev * rng.normal();
    y(i) = label;
  }
  return Dataset(std::move(x), std::move(y));
}

/// Negates exactly round(p n) labels at indices drawn without replacement.
inline Dataset flip_labels(const Dataset& data, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0))
    throw invalid_argument("flip_labels: p must be in [0, 1)");
  const std::size_t n = data.n();
  const auto k = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  Vector y = data.labels();
  for (std::size_t i = 0; i < k; ++i) y(static_cast<Eigen::Index>(idx[i])) *= -1.0;
  return Dataset(data.points(), std::move(y));
}

enum class FileFormat { csv, libsvm };

inline std::optional<FileFormat> parse_file_format(std::string_view s) {
  if (s == "csv") return FileFormat::csv;
  if (s == "libsvm") return FileFormat::libsvm;
  return std::nullopt;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

/// Two distinct raw labels are mapped to -1 (smaller) and +1 (larger). Labels
/// that already lie in {-1, +1} are kept, even if only one class is present.
inline Vector map_labels(const std::vector<double>& raw) {
  std::vector<double> distinct(raw);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const bool signed_already =
      std::all_of(distinct.begin(), distinct.end(),
                  [](double v) { return v == 1.0 || v == -1.0; });
  if (!signed_already && distinct.size() != 2)
    throw label_error("expected exactly two distinct labels, found " +
                      std::to_string(distinct.size()));
  Vector y(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i)
    y(static_cast<Eigen::Index>(i)) =
        signed_already ? raw[i] : (raw[i] == distinct[0] ? -1.0 : 1.0);
  return y;
}

inline Dataset parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_on(body, ',');
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      const auto v = to_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = fields.size();  // header line
        continue;
      }
      throw parse_error("non-numeric field", lineno);
    }
    if (values.size() < 2)
      throw parse_error("a row needs at least one feature and a label", lineno);
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw parse_error("expected " + std::to_string(width) + " fields, got " +
                            std::to_string(values.size()),
                        lineno);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw parse_error("no data rows", lineno);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width - 1);
  Matrix x(n, d);
  std::vector<double> raw(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = r[static_cast<std::size_t>(j)];
    raw[static_cast<std::size_t>(i)] = r.back();
  }
  return Dataset(std::move(x), map_labels(raw));
}

inline Dataset parse_libsvm(std::istream& in) {
  std::vector<std::map<std::size_t, double>> rows;
  std::vector<double> raw;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos)
      body = trim(body.substr(0, hash));
    if (body.empty()) continue;
    const auto tokens = split_ws(body);
    const auto label = to_double(tokens[0]);
    if (!label) throw parse_error("bad label '" + std::string(tokens[0]) + "'", lineno);
    std::map<std::size_t, double> features;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto colon = tokens[k].find(':');
      if (colon == std::string_view::npos)
        throw parse_error("expected index:value, got '" + std::string(tokens[k]) + "'",
                          lineno);
      const auto idx_text = tokens[k].substr(0, colon);
      std::size_t idx = 0;
      auto [ptr, ec] =
          std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc{} || ptr != idx_text.data() + idx_text.size() || idx == 0)
        throw parse_error("bad feature index '" + std::string(idx_text) + "'", lineno);
      const auto v = to_double(tokens[k].substr(colon + 1));
      if (!v) throw parse_error("bad feature value", lineno);
      features[idx] = *v;
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(features));
    raw.push_back(*label);
  }
  if (rows.empty()) throw parse_error("no data rows", lineno);
  if (max_index == 0) throw parse_error("no features", lineno);
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(max_index));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, v] : rows[i])
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx - 1)) = v;
  return Dataset(std::move(x), map_labels(raw));
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in, FileFormat format) {
  return format == FileFormat::csv ? detail::parse_csv(in)
                                   : detail::parse_libsvm(in);
}

inline Dataset load_file(const std::string& path, FileFormat format) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return parse_dataset(in, format);
}

/// Header x1,...,xd,y followed by one row per point; values use the shortest
/// round-trip decimal form.
inline void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.d(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < data.points().rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points().cols(); ++j)
      out << format_double(data.points()(i, j)) << ',';
    out << (data.labels()(i) > 0 ? "1" : "-1") << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  write_csv(out, data);
  if (!out) throw io_error("write failed for '" + path + "'");
}

/// Per-feature affine map x -> (x - mean) / scale fitted on training data.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Dataset& train) {
    const Matrix& x = train.points();
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    s.scale = (centered.colwise().squaredNorm().transpose() /
               static_cast<double>(x.rows()))
                  .cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
    return s;
  }

  Dataset apply(const Dataset& data) const {
    if (static_cast<std::size_t>(mean.size()) != data.d())
      throw dimension_error("Standardizer: dimension mismatch");
    Matrix x = (data.points().rowwise() - mean.transpose()).array().rowwise() /
               scale.transpose().array();
    return Dataset(std::move(x), data.labels());
  }
};

struct TrainTest {
  Dataset train;
  std::optional<Dataset> test;
};

struct StandardizeResult {
  Dataset train;
  std::optional<Dataset> test;
  Standardizer transform;
};

inline StandardizeResult standardize(const Dataset& train,
                                     const std::optional<Dataset>& test) {
  auto s = Standardizer::fit(train);
  std::optional<Dataset> t;
  if (test) t = s.apply(*test);
  return {s.apply(train), std::move(t), std::move(s)};
}

/// Seeded permutation; the first ceil(fraction n) points form the training set.
inline TrainTest split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw invalid_argument("split: fraction must be in (0, 1]");
  const std::size_t n = data.n();
  auto n_train = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n);
  Rng rng(seed);
  const auto perm = permutation(n, rng);
  std::vector<std::size_t> a(perm.begin(),
                             perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                             perm.end());
  std::optional<Dataset> test;
  if (!b.empty()) test = take_rows(data, b);
  return {take_rows(data, a), std::move(test)};
}

enum class SourceKind { support_anchor, gaussian_blobs, file };

inline std::optional<SourceKind> parse_source_kind(std::string_view s) {
  if (s == "support_anchor") return SourceKind::support_anchor;
  if (s == "gaussian_blobs") return SourceKind::gaussian_blobs;
  if (s == "file") return SourceKind::file;
  return std::nullopt;
}

inline std::string to_string(SourceKind k) {
  switch (k) {
    case SourceKind::support_anchor: return "support_anchor";
    case SourceKind::gaussian_blobs: return "gaussian_blobs";
    case SourceKind::file: return "file";
  }
  return "unknown";
}

struct DataConfig {
  SourceKind source = SourceKind::support_anchor;
  std::size_t n_total = 80;
  double std_dev = 0.4;
  std::string path;
  FileFormat format = FileFormat::csv;
  double noise_p = 0.0;
  double split = 1.0;
  bool standardize = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise_p >= 0.0 && noise_p < 1.0))
      throw invalid_argument("data.noise_p must be in [0, 1)");
    if (!(split > 0.0 && split <= 1.0))
      throw invalid_argument("data.split must be in (0, 1]");
    if (source == SourceKind::file && path.empty())
      throw invalid_argument("data.path is required for a file source");
  }
};

/// Generates or loads the data, splits it, flips training labels and
/// optionally standardizes. Each step draws from its own sub-stream of the
/// seed.
inline TrainTest make_dataset(const DataConfig& c) {
  c.validate();
  Dataset full = [&] {
    switch (c.source) {
      case SourceKind::support_anchor:
        return gen_support_anchor(c.n_total, derive_seed(c.seed, 0));
      case SourceKind::gaussian_blobs:
        return gen_gaussian_blobs(c.n_total, c.std_dev, derive_seed(c.seed, 0));
      case SourceKind::file:
        break;
    }
    return load_file(c.path, c.format);
  }();
  TrainTest tt = c.split < 1.0 ? split(full, c.split, derive_seed(c.seed, 1))
                               : TrainTest{std::move(full), std::nullopt};
  if (c.noise_p > 0.0)
    tt.train = flip_labels(tt.train, c.noise_p, derive_seed(c.seed, 2));
  if (c.standardize) {
    auto s = standardize(tt.train, tt.test);
    return {std::move(s.train), std::move(s.test)};
  }
  return tt;
}

}  // namespace diagreg

#endif  // DIAGREG_DATA_HPP
