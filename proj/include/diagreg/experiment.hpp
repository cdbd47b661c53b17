#ifndef DIAGREG_EXPERIMENT_HPP
#define DIAGREG_EXPERIMENT_HPP

// Experiment runner behind the command-line tool: JSON configuration, runs of
// the dual solvers and baselines, CSV traces and a JSON summary.
//
// Needs nlohmann/json in addition to Eigen.

#include "baselines.hpp"
#include "data.hpp"
#include "metrics.hpp"
#include "oracle.hpp"
#include "solvers.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace diagreg {

class config_error : public error {
 public:
  using error::error;
};

using json = nlohmann::json;

/// Smallest regularization parameter accepted from a configuration.
inline constexpr double min_lambda = 1e-300;

enum class AlgorithmKind { alg1, alg2, tikhonov_path, gd_margin, subgrad_hinge };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::alg1;
  std::string name;
  double alpha = 3.0;
  std::vector<double> lambdas;
  MarginLossKind loss = MarginLossKind::logistic;
  std::optional<double> step;  ///< baseline step; nullopt: 1 / |Q|_op
  StepRule::kind step_rule = StepRule::kind::constant;
  std::optional<Vector> w0;
};

struct Sweep {
  std::vector<double> lambda0;
  std::vector<double> noise_p;
};

struct OracleOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10'000'000;
};

struct ExperimentConfig {
  DataConfig data;
  Kernel kernel = Kernel::linear();
  std::vector<AlgorithmSpec> algorithms;
  Schedule schedule;
  std::optional<double> gamma;
  std::size_t iterations = 1000;
  std::string output_dir = "out";
  bool compute_oracle = true;
  std::uint64_t seed = 0;
  Sweep sweep;
  OracleOptions oracle;
};

/// One documented configuration key.
struct ConfigKey {
  const char* key;
  const char* description;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data.source", "support_anchor | gaussian_blobs | file (default support_anchor)"},
      {"data.n_total", "number of generated points (default 80)"},
      {"data.std", "standard deviation of each blob (default 0.4)"},
      {"data.path", "input file for source=file"},
      {"data.format", "csv | libsvm (default csv)"},
      {"data.noise_p", "fraction of training labels flipped, in [0,1) (default 0)"},
      {"data.split", "training fraction in (0,1]; the rest is the test set (default 1)"},
      {"data.standardize", "standardize features with training statistics (default false)"},
      {"data.seed", "data seed (default: top-level seed)"},
      {"kernel.type", "linear | gaussian (default linear); a bare string is also accepted"},
      {"kernel.sigma2", "gaussian bandwidth sigma^2 in exp(-|x-x'|^2/(2 sigma^2))"},
      {"algorithms", "list of names or objects; names: alg1, alg2, tikhonov_path, gd_margin, subgrad_hinge"},
      {"algorithms[].type", "algorithm kind (one of the names above)"},
      {"algorithms[].name", "output name; default derived from type and parameters"},
      {"algorithms[].alpha", "alg2 inertia parameter, >= 3 (default 3)"},
      {"algorithms[].lambdas", "tikhonov_path: list of fixed lambda values"},
      {"algorithms[].loss", "gd_margin: exponential | logistic (default logistic)"},
      {"algorithms[].gamma", "gd_margin / subgrad_hinge step (default 1/|Q|_op)"},
      {"algorithms[].step", "subgrad_hinge: constant | inv_sqrt (default constant)"},
      {"algorithms[].w0", "gd_margin / subgrad_hinge start point (default 0)"},
      {"schedule.family", "constant | log | sqrt | linear | quadratic | exponential (default linear)"},
      {"schedule.lambda0", "lambda_0 > 0; lambda_t = lambda_0 / max(1, g(t)) (default 1)"},
      {"gamma", "\"auto\" (0.999/|Q|_op) or a step size <= 1/|Q|_op"},
      {"iterations", "number of iterations T >= 1; traces have T+1 rows (default 1000)"},
      {"output_dir", "directory for traces and summary.json (default out)"},
      {"compute_oracle", "compute w* and the gap columns (default true)"},
      {"seed", "64-bit seed (default 0)"},
      {"sweep.lambda0", "optional list of lambda_0 values, one run per value"},
      {"sweep.noise_p", "optional list of noise levels, one dataset per value"},
      {"oracle.tol", "oracle stopping tolerance (default 1e-10)"},
      {"oracle.max_iter", "oracle iteration cap (default 1e7)"},
  };
  return keys;
}

namespace detail {

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw config_error(where + ": expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw config_error("unknown key '" + where + "." + item.key() + "'");
  }
}

template <class T>
T get_value(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("bad value for '" + where + "." + key + "': " +
                       obj.at(key).dump());
  }
}

inline double get_number(const json& obj, const char* key, const std::string& where,
                         double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw config_error("'" + where + "." + key + "' must be a number");
  return obj.at(key).get<double>();
}

inline std::size_t get_count(const json& obj, const char* key,
                             const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19)
      return static_cast<std::size_t>(x);
  }
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::size_t>(v.get<long long>());
  throw config_error("'" + where + "." + key + "' must be a non-negative integer");
}

inline std::vector<double> get_number_list(const json& obj, const char* key,
                                           const std::string& where) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) throw config_error("'" + where + "." + key + "' must be a list");
  for (const auto& x : v) {
    if (!x.is_number())
      throw config_error("'" + where + "." + key + "' must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline DataConfig parse_data(const json& j, std::uint64_t seed) {
  DataConfig c;
  c.seed = seed;
  if (j.is_null()) return c;
  check_keys(j, "data", {"source", "n_total", "std", "path", "format", "noise_p",
                         "split", "standardize", "seed"});
  const auto source = get_value<std::string>(j, "source", "data", "support_anchor");
  const auto kind = parse_source_kind(source);
  if (!kind) throw config_error("unknown data.source '" + source + "'");
  c.source = *kind;
  c.n_total = get_count(j, "n_total", "data", c.n_total);
  c.std_dev = get_number(j, "std", "data", c.std_dev);
  c.path = get_value<std::string>(j, "path", "data", "");
  const auto format = get_value<std::string>(j, "format", "data", "csv");
  const auto f = parse_file_format(format);
  if (!f) throw config_error("unknown data.format '" + format + "'");
  c.format = *f;
  c.noise_p = get_number(j, "noise_p", "data", 0.0);
  c.split = get_number(j, "split", "data", 1.0);
  c.standardize = get_value<bool>(j, "standardize", "data", false);
  c.seed = get_value<std::uint64_t>(j, "seed", "data", seed);
  try {
    c.validate();
  } catch (const invalid_argument& e) {
    throw config_error(e.what());
  }
  if (c.source == SourceKind::support_anchor && c.n_total < 4)
    throw config_error("data.n_total must be >= 4 for support_anchor");
  if (c.source == SourceKind::gaussian_blobs &&
      (c.n_total == 0 || c.n_total % 2 != 0))
    throw config_error("data.n_total must be even for gaussian_blobs");
  if (c.source == SourceKind::gaussian_blobs && !(c.std_dev >= 0.0))
    throw config_error("data.std must be >= 0");
  return c;
}

inline Kernel parse_kernel(const json& j) {
  if (j.is_null()) return Kernel::linear();
  std::string type;
  double sigma2 = 0.0;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else {
    check_keys(j, "kernel", {"type", "sigma2"});
    type = get_value<std::string>(j, "type", "kernel", "linear");
    sigma2 = get_number(j, "sigma2", "kernel", 0.0);
  }
  if (type == "linear") return Kernel::linear();
  if (type == "gaussian") {
    if (!(sigma2 > 0.0)) throw config_error("kernel.sigma2 must be > 0");
    return Kernel::gaussian(sigma2);
  }
  throw config_error("unknown kernel.type '" + type + "'");
}

inline std::optional<AlgorithmKind> parse_algorithm_kind(const std::string& s) {
  if (s == "alg1") return AlgorithmKind::alg1;
  if (s == "alg2") return AlgorithmKind::alg2;
  if (s == "tikhonov_path") return AlgorithmKind::tikhonov_path;
  if (s == "gd_margin") return AlgorithmKind::gd_margin;
  if (s == "subgrad_hinge") return AlgorithmKind::subgrad_hinge;
  return std::nullopt;
}

inline AlgorithmSpec parse_algorithm(const json& j, std::size_t index) {
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  AlgorithmSpec a;
  std::string type;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else {
    check_keys(j, where, {"type", "name", "alpha", "lambdas", "loss", "gamma",
                          "step", "w0"});
    if (!j.contains("type")) throw config_error(where + ": missing 'type'");
    type = get_value<std::string>(j, "type", where, "");
  }
  const auto kind = parse_algorithm_kind(type);
  if (!kind) throw config_error(where + ": unknown algorithm '" + type + "'");
  a.kind = *kind;
  const json empty = json::object();
  const json& o = j.is_object() ? j : empty;
  a.alpha = get_number(o, "alpha", where, 3.0);
  a.lambdas = get_number_list(o, "lambdas", where);
  const auto loss = get_value<std::string>(o, "loss", where, "logistic");
  const auto lk = parse_margin_loss(loss);
  if (!lk || *lk == MarginLossKind::hinge)
    throw config_error(where + ".loss must be exponential or logistic");
  a.loss = *lk;
  if (o.contains("gamma")) {
    a.step = get_number(o, "gamma", where, 0.0);
    if (!(*a.step > 0.0)) throw config_error(where + ".gamma must be > 0");
  }
  const auto rule = get_value<std::string>(o, "step", where, "constant");
  if (rule == "constant") a.step_rule = StepRule::kind::constant;
  else if (rule == "inv_sqrt") a.step_rule = StepRule::kind::inv_sqrt;
  else throw config_error(where + ".step must be constant or inv_sqrt");
  if (o.contains("w0")) {
    const auto v = get_number_list(o, "w0", where);
    a.w0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  switch (a.kind) {
    case AlgorithmKind::alg1: a.name = "alg1"; break;
    case AlgorithmKind::alg2:
      if (a.alpha < 3.0) throw config_error(where + ".alpha must be >= 3");
      a.name = "alg2_alpha" + format_double(a.alpha);
      break;
    case AlgorithmKind::tikhonov_path:
      if (a.lambdas.empty()) throw config_error(where + ".lambdas must be non-empty");
      for (double l : a.lambdas)
        if (!(l >= min_lambda)) throw config_error(where + ".lambdas must be >= 1e-300");
      a.name = "tikhonov_path";
      break;
    case AlgorithmKind::gd_margin: a.name = "gd_margin_" + to_string(a.loss); break;
    case AlgorithmKind::subgrad_hinge: a.name = "subgrad_hinge"; break;
  }
  a.name = get_value<std::string>(o, "name", where, a.name);
  if (a.name.empty() || a.name.find_first_of("/\\") != std::string::npos)
    throw config_error(where + ".name must be a plain file-name stem");
  return a;
}

}  // namespace detail

/// Validates a parsed JSON document and builds the configuration.
inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, "config", {"data", "kernel", "algorithms", "schedule", "gamma",
                           "iterations", "output_dir", "compute_oracle", "seed",
                           "sweep", "oracle"});
  ExperimentConfig c;
  c.seed = get_value<std::uint64_t>(j, "seed", "config", 0);
  c.data = parse_data(j.value("data", json()), c.seed);
  c.kernel = parse_kernel(j.value("kernel", json()));

  if (!j.contains("algorithms") || !j.at("algorithms").is_array() ||
      j.at("algorithms").empty())
    throw config_error("'algorithms' must be a non-empty list");
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < j.at("algorithms").size(); ++i) {
    auto a = parse_algorithm(j.at("algorithms")[i], i);
    if (const int k = seen[a.name]++; k > 0) a.name += "_" + std::to_string(k + 1);
    if (!c.kernel.is_linear() &&
        (a.kind == AlgorithmKind::gd_margin || a.kind == AlgorithmKind::subgrad_hinge))
      throw config_error(a.name + ": primal baselines need the linear kernel");
    c.algorithms.push_back(std::move(a));
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    check_keys(s, "schedule", {"family", "lambda0"});
    const auto fam = get_value<std::string>(s, "family", "schedule", "linear");
    const auto f = parse_schedule_family(fam);
    if (!f) throw config_error("unknown schedule.family '" + fam + "'");
    c.schedule.family = *f;
    c.schedule.lambda0 = get_number(s, "lambda0", "schedule", 1.0);
  }
  if (!(c.schedule.lambda0 >= min_lambda))
    throw config_error("schedule.lambda0 must be >= 1e-300");

  if (j.contains("gamma")) {
    const json& g = j.at("gamma");
    if (g.is_string() && g.get<std::string>() == "auto") {
      c.gamma.reset();
    } else if (g.is_number() && g.get<double>() > 0.0) {
      c.gamma = g.get<double>();
    } else {
      throw config_error("gamma must be \"auto\" or a positive number");
    }
  }
  c.iterations = get_count(j, "iterations", "config", c.iterations);
  if (c.iterations < 1) throw config_error("iterations must be >= 1");
  c.output_dir = get_value<std::string>(j, "output_dir", "config", c.output_dir);
  c.compute_oracle = get_value<bool>(j, "compute_oracle", "config", true);

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"lambda0", "noise_p"});
    c.sweep.lambda0 = get_number_list(s, "lambda0", "sweep");
    c.sweep.noise_p = get_number_list(s, "noise_p", "sweep");
    for (double l : c.sweep.lambda0)
      if (!(l >= min_lambda)) throw config_error("sweep.lambda0 values must be >= 1e-300");
    for (double p : c.sweep.noise_p)
      if (!(p >= 0.0 && p < 1.0)) throw config_error("sweep.noise_p values must be in [0,1)");
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, "oracle", {"tol", "max_iter"});
    c.oracle.tol = get_number(o, "tol", "oracle", c.oracle.tol);
    c.oracle.max_iter = get_count(o, "max_iter", "oracle", c.oracle.max_iter);
    if (!(c.oracle.tol > 0.0)) throw config_error("oracle.tol must be > 0");
  }
  return c;
}

inline json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw config_error("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Applies "a.b.c=value" to the document; the value is read as JSON when it
/// parses, otherwise as a string.
inline void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw config_error("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline constexpr const char* trace_header =
    "t,lambda_t,dual_obj,dual_gap,norm_error,margin,margin_gap,angle_gap,test_error,energy";

inline void write_trace_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << format_double(*v);
  };
  out << trace_header << '\n';
  for (const auto& r : rows) {
    out << r.t;
    cell(r.lambda_t);
    cell(r.dual_obj);
    cell(r.dual_gap);
    cell(r.norm_error);
    cell(r.margin);
    cell(r.margin_gap);
    cell(r.angle_gap);
    cell(r.test_error);
    cell(r.energy);
    out << '\n';
  }
}

inline json to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline json to_json(const MetricRow& r) {
  return json{{"t", r.t},
              {"lambda_t", to_json(r.lambda_t)},
              {"dual_obj", to_json(r.dual_obj)},
              {"dual_gap", to_json(r.dual_gap)},
              {"norm_error", to_json(r.norm_error)},
              {"margin", r.margin},
              {"margin_gap", to_json(r.margin_gap)},
              {"angle_gap", to_json(r.angle_gap)},
              {"test_error", to_json(r.test_error)},
              {"energy", to_json(r.energy)}};
}

inline json to_json(const KktResiduals& k) {
  return json{{"primal_feasibility", k.primal_feasibility},
              {"dual_feasibility", k.dual_feasibility},
              {"complementary_slackness", k.complementary_slackness},
              {"stationarity", k.stationarity},
              {"projected_gradient", k.projected_gradient}};
}

inline json to_json(const OracleSolution& s) {
  json j{{"norm_w_star", s.norm_w_star},
         {"margin_at_w_star", s.margin_at_w_star},
         {"dual_value", s.dual_value},
         {"kkt", to_json(s.kkt)},
         {"iterations", s.iterations},
         {"tolerance", s.tolerance},
         {"u_star", to_json(s.u_star)}};
  j["w_star"] = s.w_star.size() > 0 ? to_json(s.w_star) : json(nullptr);
  return j;
}

/// Trace rows for a primal iterate sequence, in the same schema as the dual
/// solvers; the dual columns stay empty.
inline std::vector<MetricRow> primal_rows(const PrimalTrace& tr, const Dataset& train,
                                          const OracleSolution* sol,
                                          const Dataset* test) {
  const SignedMatrix xs = signed_matrix(train);
  std::vector<MetricRow> rows;
  rows.reserve(tr.iterates.size());
  for (std::size_t t = 0; t < tr.iterates.size(); ++t) {
    const Vector& w = tr.iterates[t];
    MetricRow r;
    r.t = t;
    r.margin = margin(w, xs);
    r.primal_norm = w.norm();
    if (sol) {
      r.norm_error = (w - sol->w_star).norm();
      if (*r.primal_norm > default_norm_floor) {
        r.margin_gap = margin_gap(w, *sol, xs);
        r.angle_gap = angle_gap(w, *sol);
      }
    }
    if (test) r.test_error = zero_one_error(test->points() * w, test->labels());
    rows.push_back(r);
  }
  return rows;
}

/// Result of one named run inside an experiment.
struct RunRecord {
  std::string name;
  std::string algorithm;
  std::optional<double> lambda0;
  std::optional<double> noise_p;
  std::optional<double> lambda;  ///< fixed lambda of a Tikhonov-path member
  std::string trace_file;
  std::vector<MetricRow> rows;
  double gamma = 0.0;
  double op_norm = 0.0;
  double wall_time = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<std::pair<double, OracleSolution>> oracles;  ///< keyed by noise_p
  json summary;
};

inline std::string sweep_suffix(const std::optional<double>& lambda0,
                                const std::optional<double>& noise_p) {
  std::string s;
  if (lambda0) s += "_lambda0-" + format_double(*lambda0);
  if (noise_p) s += "_p-" + format_double(*noise_p);
  return s;
}

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw io_error("write failed for '" + path.string() + "'");
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

using ProgressFn = std::function<void(const std::string&)>;

/// Dataset of the configuration with the given noise level applied.
inline TrainTest experiment_data(const ExperimentConfig& c, double noise_p) {
  DataConfig d = c.data;
  d.noise_p = noise_p;
  return make_dataset(d);
}

/// Runs every algorithm for every sweep point, writes one trace per run,
/// summary.json and, when `comparison` is set, comparison.csv.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const json& echo,
                                       bool comparison,
                                       const ProgressFn& progress = {}) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  auto say = [&](const std::string& m) {
    if (progress) progress(m);
  };
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw io_error("cannot create '" + c.output_dir + "': " + ec.message());
  const fs::path dir(c.output_dir);

  const bool sweep_noise = !c.sweep.noise_p.empty();
  const bool sweep_lambda = !c.sweep.lambda0.empty();
  const std::vector<double> noises =
      sweep_noise ? c.sweep.noise_p : std::vector<double>{c.data.noise_p};
  const std::vector<double> lambdas =
      sweep_lambda ? c.sweep.lambda0 : std::vector<double>{c.schedule.lambda0};

  ExperimentResult result;
  for (double noise : noises) {
    const TrainTest tt = experiment_data(c, noise);
    const DualProblem problem(tt.train, c.kernel);
    const Dataset* test = tt.test ? &*tt.test : nullptr;
    say("data: n_train=" + std::to_string(tt.train.n()) +
        " n_test=" + std::to_string(test ? test->n() : 0) +
        " op_norm=" + format_double(problem.gram.op_norm()));

    std::optional<OracleSolution> sol;
    if (c.compute_oracle) {
      sol = solve_max_margin(problem.gram, problem.rows, c.oracle.tol,
                             c.oracle.max_iter);
      say("oracle: |w*|=" + format_double(sol->norm_w_star) +
          " iterations=" + std::to_string(sol->iterations));
      result.oracles.emplace_back(noise, *sol);
    }
    const TraceInputs inputs{sol ? &*sol : nullptr, test};

    for (double lambda0 : lambdas) {
      const std::optional<double> l_tag =
          sweep_lambda ? std::optional<double>(lambda0) : std::nullopt;
      const std::optional<double> p_tag =
          sweep_noise ? std::optional<double>(noise) : std::nullopt;
      for (const auto& spec : c.algorithms) {
        SolverConfig sc;
        sc.schedule = c.schedule;
        sc.schedule.lambda0 = lambda0;
        sc.gamma = c.gamma;
        sc.alpha = spec.alpha;
        sc.iterations = c.iterations;

        auto finish = [&](RunRecord r, std::chrono::steady_clock::time_point t0) {
          r.lambda0 = l_tag;
          r.noise_p = p_tag;
          r.wall_time = detail::seconds_since(t0);
          detail::write_file(dir / r.trace_file,
                             [&](std::ostream& o) { write_trace_csv(o, r.rows); });
          say("wrote " + r.trace_file);
          result.runs.push_back(std::move(r));
        };
        const std::string stem = spec.name + sweep_suffix(l_tag, p_tag);
        const auto t0 = std::chrono::steady_clock::now();

        switch (spec.kind) {
          case AlgorithmKind::alg1:
          case AlgorithmKind::alg2: {
            const Algorithm a =
                spec.kind == AlgorithmKind::alg1 ? Algorithm::alg1 : Algorithm::alg2;
            Trace tr = run(problem, sc, a, inputs);
            RunRecord r;
            r.name = stem;
            r.algorithm = spec.kind == AlgorithmKind::alg1 ? "alg1" : "alg2";
            r.trace_file = stem + "_trace.csv";
            r.rows = std::move(tr.rows);
            r.gamma = tr.gamma;
            r.op_norm = tr.op_norm;
            finish(std::move(r), t0);
            break;
          }
          case AlgorithmKind::tikhonov_path:
            for (double lam : spec.lambdas) {
              const auto tl = std::chrono::steady_clock::now();
              SolverConfig fixed = sc;
              fixed.schedule = Schedule{ScheduleFamily::constant, lam};
              Trace tr = run(problem, fixed, Algorithm::alg1, inputs);
              RunRecord r;
              r.name = stem + "_lambda-" + format_double(lam);
              r.algorithm = "tikhonov_path";
              r.lambda = lam;
              r.trace_file = r.name + "_trace.csv";
              r.rows = std::move(tr.rows);
              r.gamma = tr.gamma;
              r.op_norm = tr.op_norm;
              finish(std::move(r), tl);
            }
            break;
          case AlgorithmKind::gd_margin:
          case AlgorithmKind::subgrad_hinge: {
            const double step = spec.step.value_or(1.0 / problem.gram.op_norm());
            const Vector w0 =
                spec.w0.value_or(Vector::Zero(static_cast<Eigen::Index>(tt.train.d())));
            if (static_cast<std::size_t>(w0.size()) != tt.train.d())
              throw config_error(spec.name + ".w0 has the wrong dimension");
            const PrimalTrace ptr =
                spec.kind == AlgorithmKind::gd_margin
                    ? gd_margin_loss(tt.train, spec.loss, step, c.iterations, w0)
                    : subgrad_hinge(tt.train, StepRule{spec.step_rule, step},
                                    c.iterations, w0);
            RunRecord r;
            r.name = stem;
            r.algorithm = spec.kind == AlgorithmKind::gd_margin ? "gd_margin"
                                                                : "subgrad_hinge";
            r.trace_file = stem + "_trace.csv";
            r.rows = primal_rows(ptr, tt.train, inputs.oracle, test);
            r.gamma = step;
            r.op_norm = problem.gram.op_norm();
            finish(std::move(r), t0);
            break;
          }
        }
      }
    }
  }

  if (comparison) {
    detail::write_file(dir / "comparison.csv", [&](std::ostream& o) {
      o << 't';
      for (const auto& r : result.runs) o << ',' << r.name << "_margin_gap," << r.name << "_test_error";
      o << '\n';
      for (std::size_t t = 0; t <= c.iterations; ++t) {
        o << t;
        for (const auto& r : result.runs) {
          const MetricRow& row = r.rows[t];
          o << ',';
          if (row.margin_gap) o << format_double(*row.margin_gap);
          o << ',';
          if (row.test_error) o << format_double(*row.test_error);
        }
        o << '\n';
      }
    });
    say("wrote comparison.csv");
  }

  json runs = json::array();
  for (const auto& r : result.runs) {
    json jr{{"name", r.name},
            {"algorithm", r.algorithm},
            {"trace", r.trace_file},
            {"gamma", r.gamma},
            {"op_norm", r.op_norm},
            {"wall_time_s", r.wall_time},
            {"final", to_json(r.rows.back())}};
    jr["lambda0"] = to_json(r.lambda0);
    jr["noise_p"] = to_json(r.noise_p);
    if (r.lambda) jr["lambda"] = *r.lambda;
    runs.push_back(std::move(jr));
  }
  json oracles = json::array();
  for (const auto& [noise, s] : result.oracles) {
    json jo = to_json(s);
    jo["noise_p"] = noise;
    oracles.push_back(std::move(jo));
  }
  json summary{{"seed", c.seed},
               {"compute_oracle", c.compute_oracle},
               {"runs", std::move(runs)},
               {"config", echo}};
  if (!result.runs.empty()) {
    summary["gamma"] = result.runs.front().gamma;
    summary["op_norm"] = result.runs.front().op_norm;
  }
  if (c.compute_oracle) summary["oracle"] = std::move(oracles);
  summary["wall_time_s"] = detail::seconds_since(start);
  detail::write_file(dir / "summary.json",
                     [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  result.summary = std::move(summary);
  return result;
}

}  // namespace diagreg

#endif  // DIAGREG_EXPERIMENT_HPP
