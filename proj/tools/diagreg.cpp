// Command-line front end: run, compare, oracle and gen.
//
// Log level comes from DIAGREG_LOG_LEVEL (trace, debug, info, warn, error,
// off; default info). Exit codes: 0 ok, 2 config error, 3 oracle failure,
// 4 I/O error.

#include "diagreg/experiment.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <iostream>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_oracle = 3;
constexpr int exit_io = 4;

void setup_logging() {
  auto logger = spdlog::stderr_color_st("diagreg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("DIAGREG_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown DIAGREG_LOG_LEVEL '{}'", env);
  }
}

std::string key_help() {
  std::string s = "\nConfiguration (JSON, comments allowed). Keys:\n";
  for (const auto& k : diagreg::config_keys()) {
    s += "  ";
    s += k.key;
    const std::size_t len = std::strlen(k.key);
    s += std::string(len < 22 ? 24 - len : 2, ' ');
    s += k.description;
    s += '\n';
  }
  s += "\nOverride any key with --set key=value (value parsed as JSON, else a string),\n"
       "e.g. --set schedule.lambda0=4 --set 'sweep.noise_p=[0,0.1]'.\n"
       "Environment: DIAGREG_LOG_LEVEL=trace|debug|info|warn|error|off.\n"
       "Exit codes: 0 ok, 2 config error, 3 oracle failure, 4 I/O error.\n";
  return s;
}

struct Overrides {
  std::vector<std::string> set;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> iterations;
  std::optional<std::uint64_t> seed;
  bool no_oracle = false;

  void add_to(CLI::App* app) {
    app->add_option("--set", set, "Override a config key: key=value")->take_all();
    app->add_option("--output-dir", output_dir, "Same as --set output_dir=DIR");
    app->add_option("--iterations", iterations, "Same as --set iterations=T");
    app->add_option("--seed", seed, "Same as --set seed=S");
    app->add_flag("--no-oracle", no_oracle, "Same as --set compute_oracle=false");
  }

  void apply(diagreg::json& j) const {
    for (const auto& s : set) diagreg::apply_override(j, s);
    if (output_dir) j["output_dir"] = *output_dir;
    if (iterations) j["iterations"] = *iterations;
    if (seed) j["seed"] = *seed;
    if (no_oracle) j["compute_oracle"] = false;
  }
};

diagreg::json load(const std::string& path, const Overrides& o) {
  diagreg::json j = diagreg::load_config_json(path);
  o.apply(j);
  return j;
}

int cmd_run(const std::string& path, const Overrides& o, bool comparison) {
  const auto j = load(path, o);
  const auto config = diagreg::parse_config(j);
  const auto result = diagreg::run_experiment(
      config, j, comparison, [](const std::string& m) { spdlog::info("{}", m); });
  spdlog::info("{} runs written to {}", result.runs.size(), config.output_dir);
  return exit_ok;
}

int cmd_oracle(const std::string& path, const Overrides& o) {
  const auto j = load(path, o);
  const auto config = diagreg::parse_config(j);
  const auto tt = diagreg::make_dataset(config.data);
  std::optional<diagreg::SignedMatrix> rows;
  if (config.kernel.is_linear()) rows = diagreg::signed_matrix(tt.train);
  const auto sol =
      diagreg::solve_max_margin(diagreg::gram(tt.train, config.kernel), rows,
                                config.oracle.tol, config.oracle.max_iter);
  std::cout << diagreg::to_json(sol).dump(2) << '\n';
  return exit_ok;
}

int cmd_gen(const std::string& path, const std::string& out, const Overrides& o) {
  diagreg::json j = load(path, o);
  const diagreg::json data = j.contains("data") ? j.at("data") : j;
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});
  auto config = diagreg::detail::parse_data(data, seed);
  config.split = 1.0;
  const auto tt = diagreg::make_dataset(config);
  diagreg::save_csv(out, tt.train);
  spdlog::info("wrote {} points to {}", tt.train.n(), out);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Iterative (diagonal) regularization for max-margin classification"};
  app.footer(key_help());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  Overrides run_o, cmp_o, orc_o, gen_o;

  auto* run = app.add_subcommand("run", "Run the configured algorithms and write traces");
  run->add_option("config", config_path, "JSON configuration file")->required();
  run_o.add_to(run);

  auto* cmp = app.add_subcommand(
      "compare", "Like run, and also write comparison.csv keyed by t");
  cmp->add_option("config", config_path, "JSON configuration file")->required();
  cmp_o.add_to(cmp);

  auto* orc = app.add_subcommand("oracle", "Print the max-margin solution as JSON");
  orc->add_option("config", config_path, "JSON configuration file")->required();
  orc_o.add_to(orc);

  auto* gen = app.add_subcommand(
      "gen", "Write the configured dataset (noise applied, no split) as CSV");
  gen->add_option("data-config", config_path,
                  "JSON file with a data section (or the data object itself)")
      ->required();
  gen->add_option("out", out_path, "Output CSV path")->required();
  gen_o.add_to(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    if (*run) return cmd_run(config_path, run_o, false);
    if (*cmp) return cmd_run(config_path, cmp_o, true);
    if (*orc) return cmd_oracle(config_path, orc_o);
    if (*gen) return cmd_gen(config_path, out_path, gen_o);
  } catch (const diagreg::non_separable& e) {
    spdlog::error("oracle: {}", e.what());
    return exit_oracle;
  } catch (const diagreg::iteration_cap_exceeded& e) {
    spdlog::error("oracle: {}", e.what());
    return exit_oracle;
  } catch (const diagreg::io_error& e) {
    spdlog::error("I/O: {}", e.what());
    return exit_io;
  } catch (const diagreg::parse_error& e) {
    spdlog::error("input data: {}", e.what());
    return exit_io;
  } catch (const diagreg::label_error& e) {
    spdlog::error("input data: {}", e.what());
    return exit_io;
  } catch (const diagreg::error& e) {
    spdlog::error("config: {}", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    spdlog::error("config: {}", e.what());
    return exit_config;
  }
  return exit_config;
}
