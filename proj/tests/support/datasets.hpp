#pragma once

#include <cstdint>
#include <limits>

#include "govid/plants.hpp"
#include "govid/signals.hpp"

namespace govid::testdata {

inline constexpr double kDt = 1e-3;
inline constexpr double kDuration = 60.0;
inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

enum class Split { Training, Validation };

/// Operating point the GGOV1 records start from.
[[nodiscard]] OperatingPoint ggov1_operating_point(Split split);

/// Exogenous inputs (square pulses) for each model and split.
[[nodiscard]] TimeSeries ggov1_inputs(Split split, double duration = kDuration);
[[nodiscard]] TimeSeries st6b_inputs(Split split, double duration = kDuration);

/// Full-model simulation at the default parameters, every tap.
[[nodiscard]] TimeSeries model_record(ModelKind kind, Split split, double duration = kDuration);

/**
 * Channels of one subsystem (inputs, optional inputs, outputs) cut from the
 * full-model record. Noise at `snr_db` is added to the subsystem outputs only.
 */
[[nodiscard]] TimeSeries subsystem_record(SubsystemId id, Split split, double snr_db = kNoiseless,
                                          std::uint64_t seed = 1, double duration = kDuration);

}  // namespace govid::testdata
