#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "govid/optim.hpp"
#include "govid/params.hpp"
#include "govid/plants.hpp"
#include "govid/signals.hpp"

namespace govid {

struct IdentifyConfig {
  /// The optimizer's stop threshold is replaced by stop_index_percent / 100.
  OptimizerConfig optimizer;
  bool ls_seed = true;
  std::size_t max_rounds = 3;
  /// Stop once the fitted error index (percent) falls below this value.
  double stop_index_percent = std::exp(-2.0);
  /// Points per parameter for the coordinate grid scan of parameters the
  /// least-squares stage does not reach.
  std::size_t grid_points = 11;
  /// Objective value returned when a candidate cannot be simulated.
  double failure_penalty = 1e6;
};

struct LsSeed {
  std::map<std::string, double> values;  // clipped into bounds
  std::vector<std::string> grid_scanned;
  double condition = 0.0;
};

struct IdentifyResult {
  SubsystemId id = SubsystemId::Valve;
  ParamVector params;
  std::vector<std::string> free_names;
  double objective = 0.0;        // mean over output taps of the MSE
  double index_percent = 0.0;    // 100 * objective
  std::map<std::string, double> output_mse;
  bool reached_threshold = false;
  std::optional<std::size_t> generations_to_threshold;  // counted across rounds
  std::size_t generations = 0;
  std::size_t evaluations = 0;
  std::optional<LsSeed> ls;
  std::string ls_failure;
  std::vector<std::vector<GenerationRecord>> rounds;
};

/// Mean over the view's output taps of mse(recorded, simulated).
[[nodiscard]] double subsystem_objective(SubsystemId id, const ParamVector& params, const TimeSeries& data);
[[nodiscard]] std::map<std::string, double> subsystem_output_mse(SubsystemId id, const ParamVector& params,
                                                                 const TimeSeries& data);

/**
 * Least-squares pre-identification of the subsystem's linear structure.
 * Free parameters that the regression does not determine are filled by a
 * one-at-a-time grid scan over their bounds. Throws when no parameter could
 * be estimated by regression.
 */
[[nodiscard]] LsSeed ls_seed(SubsystemId id, const TimeSeries& data, const ParamVector& base,
                             std::size_t grid_points = 11);

/**
 * Least squares, then the configured metaheuristic seeded with the LS
 * solution (one nest; the rest uniform), restarted from its final population
 * until the stop threshold is met or max_rounds is spent. A failed LS stage
 * is logged and the search starts from a uniform population.
 */
[[nodiscard]] IdentifyResult hybrid_identify(ModelKind kind, SubsystemId id, const TimeSeries& data,
                                             const ParamVector& base, const IdentifyConfig& cfg);

}  // namespace govid
