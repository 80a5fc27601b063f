#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "govid/params.hpp"
#include "govid/signals.hpp"

namespace govid {

enum class SubsystemId {
  Valve = 1,
  ElectricalPower = 2,
  SpeedController = 3,
  TemperatureController = 4,
  Exciter = 5,
};

[[nodiscard]] std::string_view to_string(SubsystemId id) noexcept;
/// Accepts the number 1..5 or the enumerator name.
[[nodiscard]] SubsystemId subsystem_from_string(std::string_view text);
[[nodiscard]] ModelKind model_of(SubsystemId id) noexcept;
[[nodiscard]] std::vector<SubsystemId> subsystems_of(ModelKind kind);

/**
 * Signals one identification subsystem consumes and produces. `outputs[0]`
 * is the primary output named by the partition; further outputs are internal
 * taps that make the subsystem's parameters separately observable.
 */
struct SubsystemView {
  SubsystemId id;
  std::vector<std::string> inputs;
  std::vector<std::string> optional_inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> free_params;

  [[nodiscard]] const std::string& output() const { return outputs.front(); }
};

namespace taps {
// GGOV1
inline constexpr const char* p_ref = "p_ref";
inline constexpr const char* speed = "speed";
inline constexpr const char* exhaust_temp = "exhaust_temp";
inline constexpr const char* p_elec = "p_elec";
inline constexpr const char* pe_meas = "pe_meas";
inline constexpr const char* gov_err = "gov_err";
inline constexpr const char* fsrn = "fsrn";
inline constexpr const char* t_meas = "t_meas";
inline constexpr const char* fsrt = "fsrt";
inline constexpr const char* fsra = "fsra";
inline constexpr const char* fsr = "fsr";
inline constexpr const char* valve = "valve";
inline constexpr const char* fuel_delayed = "fuel_delayed";
inline constexpr const char* fuel_leadlag = "fuel_leadlag";
inline constexpr const char* pmech = "pmech";
// ST6B
inline constexpr const char* v_ref = "v_ref";
inline constexpr const char* v_c = "v_c";
inline constexpr const char* i_fd = "i_fd";
inline constexpr const char* v_a = "v_a";
inline constexpr const char* v_g = "v_g";
inline constexpr const char* v_r = "v_r";
inline constexpr const char* efd = "efd";
}  // namespace taps

/**
 * GGOV1 (grid connected: speed is an input) or ST6B in AVR mode, assembled
 * from blocks and placed at rest at the operating point.
 *
 * GGOV1 inputs: p_ref (required), speed (default 1 pu), exhaust_temp
 * (default: the electrical power tap stands in for exhaust temperature).
 * ST6B inputs: v_ref (required), v_c (when absent the terminal voltage is
 * closed through a first-order lag of E_FD), i_fd (default E_FD).
 *
 * When the acceleration loop is disabled the fsra tap is +inf.
 */
class PlantModel {
 public:
  [[nodiscard]] ModelKind kind() const noexcept { return params_.kind(); }
  [[nodiscard]] const ParamVector& params() const noexcept { return params_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] const OperatingPoint& operating_point() const noexcept { return op_; }

  /// Steady values of every tap at the operating point.
  [[nodiscard]] const std::vector<std::pair<std::string, double>>& initial_taps() const noexcept { return initial_; }
  [[nodiscard]] double initial(std::string_view tap) const;

  [[nodiscard]] std::vector<std::string> tap_names() const;
  [[nodiscard]] std::vector<std::string> required_inputs() const;
  [[nodiscard]] std::vector<std::string> optional_inputs() const;

 private:
  friend PlantModel build_model(ModelKind kind, const ParamVector& params, double dt, const OperatingPoint& op);
  ParamVector params_;
  double dt_ = 0.0;
  OperatingPoint op_;
  std::vector<std::pair<std::string, double>> initial_;
};

/// Throws InvalidParams, NoSteadyState, NonPositiveDt, DelayShorterThanDt.
[[nodiscard]] PlantModel build_model(ModelKind kind, const ParamVector& params, double dt,
                                     const OperatingPoint& op = {});

/// Runs the model over the input record; returns every tap (inputs included).
/// Throws RateMismatch, MissingChannel.
[[nodiscard]] TimeSeries simulate(const PlantModel& model, const TimeSeries& inputs);

[[nodiscard]] SubsystemView subsystem_view(ModelKind kind, SubsystemId id);
[[nodiscard]] SubsystemView subsystem_view(const PlantModel& model, SubsystemId id);

/**
 * Simulates one subsystem driven by the recorded inputs in `data`. Lags start
 * at rest for the mean of the first ten input samples; integrating states are
 * primed so the outputs start at the mean of the first ten recorded output
 * samples. Returns the view's output taps.
 */
[[nodiscard]] TimeSeries simulate_subsystem(SubsystemId id, const ParamVector& params, const TimeSeries& data);

/// Number of leading samples averaged for subsystem initial conditions.
inline constexpr std::size_t kInitSamples = 10;

}  // namespace govid
