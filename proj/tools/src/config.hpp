#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "govid/identify.hpp"
#include "govid/validate.hpp"

namespace govid::cli {

/// Process exit codes.
enum Exit : int {
  kOk = 0,
  kValidationFailed = 1,
  kConfigError = 2,
  kDataError = 3,
  kSimulationError = 4,
  kStopCriterionUnmet = 5,
};

/// Error carrying the exit code it maps to.
class CliError : public std::runtime_error {
 public:
  CliError(int exit_code, const std::string& message) : std::runtime_error(message), exit_code_(exit_code) {}
  [[nodiscard]] int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

struct PulseChannel {
  std::string name;
  double period = 20.0;
  double duty = 0.5;
  double low = 0.0;
  double high = 0.0;
};

struct Preprocessing {
  double lowpass_hz = 40.0;
  int order = 2;
  bool filter_identify = true;
  bool filter_validate = false;
  std::map<std::string, double, std::less<>> bases;
};

struct ValidationSettings {
  double index_threshold_percent = 0.5;
  WhitenessOptions whiteness;
  bool whiteness_required = true;
};

struct CompareSettings {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<Algorithm> algorithms{Algorithm::CS, Algorithm::GA, Algorithm::PSO};
  bool ls_seed = false;
  bool fixed_budget = true;
};

struct SignalSettings {
  double dt = 1e-3;
  double duration = 60.0;
  std::vector<PulseChannel> channels;
  std::optional<double> noise_snr_db;
  std::vector<std::string> noise_channels;
};

/// Paths as written in the config or on the command line.
struct DataPaths {
  std::string input;
  std::string training;
  std::string validation;
  std::string fitted;
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  ModelKind model = ModelKind::GGOV1;
  ParamVector params = default_ggov1_params();
  OperatingPoint op;
  IdentifyConfig identify;
  std::vector<SubsystemId> subsystems;
  Preprocessing preprocessing;
  ValidationSettings validation;
  CompareSettings compare;
  SignalSettings signal;
  DataPaths data;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  [[nodiscard]] std::filesystem::path resolve(const std::string& path) const;
};

/// Parses and validates a config document. Throws CliError(kConfigError).
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Reads a config file; no file means defaults with the working directory as base.
[[nodiscard]] RunConfig load_config(const std::optional<std::filesystem::path>& path);

/// Re-checks cross-field constraints after command-line overrides.
void validate_config(const RunConfig& cfg);

/// Fully resolved config in a fixed key order.
[[nodiscard]] nlohmann::ordered_json canonical_json(const RunConfig& cfg);
/// Hex SHA-256 of the canonical form.
[[nodiscard]] std::string config_digest(const RunConfig& cfg);

}  // namespace govid::cli
