#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "govid/optim.hpp"
#include "govid/plants.hpp"

namespace govid {

enum class WhitenessThreshold {
  Density,    // beta^2 from the normal-density equation phi(beta) = alpha
  ChiSquare,  // upper alpha quantile of chi^2 with max_lag degrees of freedom
};

struct WhitenessOptions {
  std::size_t max_lag = 25;
  double alpha = 0.01;
  WhitenessThreshold threshold = WhitenessThreshold::Density;
  bool remove_mean = true;
};

struct WhitenessResult {
  std::vector<double> autocorr;  // lags 0..M
  double statistic = 0.0;
  double beta_squared = 0.0;     // from the density equation, reported in both modes
  double threshold = 0.0;        // value the statistic is compared against
  double confidence_alpha = 0.0;
  double band = 0.0;             // per-lag band on autocorr[tau] / autocorr[0]
  std::size_t samples = 0;
  WhitenessThreshold kind = WhitenessThreshold::Density;
  bool pass = false;
};

/// R(tau) = (1/N) sum_{t=tau}^{N-1} e(t) e(t-tau), tau = 0..max_lag.
/// Throws TooFewSamples unless N > max_lag >= 1.
[[nodiscard]] std::vector<double> autocorrelation(std::span<const double> e, std::size_t max_lag);

/// Positive root of (1/sqrt(2 pi)) exp(-beta^2 / 2) = alpha, by bisection.
/// Throws AlphaOutOfRange unless 0 < alpha < 1/sqrt(2 pi).
[[nodiscard]] double density_beta(double alpha);
[[nodiscard]] double density_beta_squared(double alpha);
[[nodiscard]] double chi_square_threshold(double alpha, std::size_t dof);

/// statistic = N / R(0)^2 * sum_{tau=1}^{M} R(tau)^2; pass iff statistic < threshold.
[[nodiscard]] WhitenessResult whiteness_test(std::span<const double> e, const WhitenessOptions& options = {});

struct SubsystemRun {
  SubsystemId id = SubsystemId::Valve;
  std::optional<double> training_index;
  std::optional<double> validation_index;
  std::optional<WhitenessResult> whiteness;
  std::map<std::string, double> parameters;
  std::vector<GenerationRecord> history;
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::string> data_files;
  std::string optimizer;
};

struct ParameterColumn {
  std::string label;
  std::map<std::string, double> values;
};

struct ValidationReport {
  std::vector<SubsystemRun> subsystems;
  std::vector<ParameterColumn> parameter_table;
  RunMetadata metadata;
  double index_threshold = 0.5;
  /// When false the whiteness result is reported but does not gate pass().
  bool whiteness_required = true;

  /// Validation index below threshold and whiteness passed, per subsystem.
  [[nodiscard]] bool subsystem_pass(const SubsystemRun& run) const;
  [[nodiscard]] bool pass() const;
};

/// Throws IncompleteRun for an empty run list, a run with no error index, or
/// missing metadata.
[[nodiscard]] ValidationReport build_report(std::vector<SubsystemRun> runs, RunMetadata metadata,
                                            std::vector<ParameterColumn> table = {}, double index_threshold = 0.5);

[[nodiscard]] std::string report_json(const ValidationReport& report);
/// Columns: subsystem, lag, autocorr, normalized, band.
[[nodiscard]] std::string autocorr_csv(const ValidationReport& report);
/// Columns: subsystem, generation, best_fitness, mean_fitness, evaluations.
[[nodiscard]] std::string history_csv(const ValidationReport& report);
/// Writes report.json, autocorr.csv and history.csv into `dir`.
void write_report(const ValidationReport& report, const std::filesystem::path& dir);

}  // namespace govid
