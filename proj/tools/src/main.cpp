#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("govid");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("GOVID_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

void add_common(CLI::App* cmd, govid::cli::Options& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--subsystem", o.subsystem, "subsystem number 1-5 or name");
  cmd->add_option("--optimizer", o.optimizer, "cs, ga or pso")->check(CLI::IsMember({"cs", "ga", "pso"}, CLI::ignore_case));
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_flag("--no-ls-seed", o.no_ls_seed, "start the search from a uniform population");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  using govid::cli::Options;
  Options o;
  CLI::App app{"Governor and exciter parameter identification"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "simulate the configured model over an input record");
  add_common(simulate, o);
  simulate->add_option("--input", o.input, "input CSV");

  auto* identify = app.add_subcommand("identify", "identify subsystem parameters from a training record");
  add_common(identify, o);
  identify->add_option("--training", o.training, "training CSV");

  auto* validate = app.add_subcommand("validate", "validate fitted parameters on held-out data");
  add_common(validate, o);
  validate->add_option("--fitted", o.fitted, "fitted parameter file from identify");
  validate->add_option("--validation", o.validation, "validation CSV");

  auto* compare = app.add_subcommand("compare", "compare optimizers over several seeds");
  add_common(compare, o);
  compare->add_option("--training", o.training, "training CSV");
  compare->add_option("--validation", o.validation, "validation CSV");
  compare->add_option("--seeds", o.seeds, "comma-separated seed list");

  auto* gen = app.add_subcommand("gen-signal", "write a square-pulse excitation file");
  add_common(gen, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return govid::cli::kConfigError;
  }

  try {
    if (*simulate) return govid::cli::cmd_simulate(o);
    if (*identify) return govid::cli::cmd_identify(o);
    if (*validate) return govid::cli::cmd_validate(o);
    if (*compare) return govid::cli::cmd_compare(o);
    return govid::cli::cmd_gen_signal(o);
  } catch (const govid::cli::CliError& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return govid::cli::kSimulationError;
  }
}
