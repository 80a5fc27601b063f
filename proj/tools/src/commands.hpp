#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace govid::cli {

/// Command-line overrides shared by every verb.
struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> subsystem;
  std::optional<std::string> optimizer;
  std::optional<std::uint64_t> seed;
  bool no_ls_seed = false;
  std::optional<std::string> out_dir;
  std::optional<std::string> input;
  std::optional<std::string> training;
  std::optional<std::string> validation;
  std::optional<std::string> fitted;
  std::optional<std::string> seeds;  // comma-separated
};

/// Loads the config file and applies the overrides. Throws CliError.
[[nodiscard]] RunConfig resolve_config(const Options& options);

// Each command returns its exit code and throws CliError on failure.
int cmd_simulate(const Options& options);
int cmd_identify(const Options& options);
int cmd_validate(const Options& options);
int cmd_compare(const Options& options);
int cmd_gen_signal(const Options& options);

}  // namespace govid::cli
