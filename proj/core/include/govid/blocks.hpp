#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace govid::blocks {

enum class BlockKind {
  Gain,
  FirstOrderLag,
  LeadLag,
  PID,
  LimitedIntegrator,
  PureDelay,
  LowValueGate,
  HighValueGate,
  Saturation,
  RateLimiter,
};

[[nodiscard]] std::string_view to_string(BlockKind kind) noexcept;

struct Limits {
  double min = 0.0;
  double max = 0.0;
};

/// Slew bounds in per-unit per second; `down` is the most negative rate allowed.
struct RateLimits {
  double down = 0.0;
  double up = 0.0;
};

/**
 * Declarative description of one dynamic primitive.
 *
 * Parameter names by kind (missing gains default to 1, everything else is required):
 *   Gain              K
 *   FirstOrderLag     K, T                   K / (1 + sT)
 *   LeadLag           K, T_lead, T_lag       K (1 + s T_lead) / (1 + s T_lag)
 *   PID               K_p, K_i, K_d, T_d     K_p + K_i/s + K_d s / (1 + s T_d)
 *   LimitedIntegrator K                      K / s, state clamped to limits
 *   PureDelay         T                      e^{-sT}, quantized to round(T/dt) samples
 *
 * A time constant of exactly zero bypasses its dynamics (lag becomes a gain,
 * the derivative path of the PID disappears when K_d is also zero).
 */
struct BlockSpec {
  BlockKind kind = BlockKind::Gain;
  std::map<std::string, double, std::less<>> parameters;
  std::optional<Limits> limits;
  std::optional<RateLimits> rate_limits;

  [[nodiscard]] double param(std::string_view name) const;
  [[nodiscard]] double param_or(std::string_view name, double fallback) const;
};

/// y(k) = sum_i a[i] y(k-1-i) + sum_j b[j] u(k-j)
struct DifferenceEquation {
  std::vector<double> a;
  std::vector<double> b;
};

/**
 * Runtime state of one block, discretized with the trapezoidal (bilinear)
 * rule at a fixed step. Instances are independent values; step one instance
 * from one thread at a time.
 */
class BlockState {
 public:
  [[nodiscard]] const BlockSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] double last_output() const noexcept { return last_output_; }
  [[nodiscard]] std::span<const double> internal_state() const noexcept { return state_; }
  [[nodiscard]] std::size_t delay_samples() const noexcept { return delay_.size(); }

  /// Advances one sample. Throws DtMismatch when `dt` differs from construction.
  double step(double input, double dt);
  /// Two-input form used by the gates.
  double step(double first, double second, double dt);

  /// Unchecked fast path for model inner loops (dt fixed by the owner).
  double advance(double input);
  double advance(double first, double second);

  /**
   * Places the block at rest for a constant input `input` while producing
   * `output`. Only integrating blocks (PID, LimitedIntegrator) can hold an
   * arbitrary output for a given input; for the others `output` must match
   * the static response and is otherwise recomputed from `input`.
   */
  void prime(double input, double output);

  /// Value of the static input that holds `output` at rest (0 for integrators).
  [[nodiscard]] double steady_input_for(double output) const;

 private:
  friend BlockState make_block(const BlockSpec& spec, double dt, double initial_output);

  BlockState(BlockSpec spec, double dt);

  BlockSpec spec_;
  double dt_ = 0.0;
  double last_output_ = 0.0;

  // first-order sections: y = a1*y1 + b0*u + b1*u1
  double a1_ = 0.0;
  double b0_ = 0.0;
  double b1_ = 0.0;
  // PID pieces
  double kp_ = 0.0;
  double ki_half_dt_ = 0.0;
  double d_pole_ = 0.0;
  double d_gain_ = 0.0;
  bool has_derivative_ = false;

  // Integrator / lag output, previous input, derivative state (kind-dependent).
  std::vector<double> state_;
  std::vector<double> delay_;
  std::size_t delay_head_ = 0;
};

[[nodiscard]] BlockState make_block(const BlockSpec& spec, double dt, double initial_output);

/// Free-function form of BlockState::step.
double step_block(BlockState& state, double input, double dt);

/// Difference equation equivalent to stepping the block; throws NonlinearBlock
/// for gates, saturation, rate limiting and any block carrying limits.
[[nodiscard]] DifferenceEquation discretize_linear(const BlockSpec& spec, double dt);

/// Runs a difference equation from zero initial conditions.
[[nodiscard]] std::vector<double> filter(const DifferenceEquation& eq, std::span<const double> input);

// Spec helpers used throughout the plant models.
[[nodiscard]] BlockSpec gain(double k);
[[nodiscard]] BlockSpec lag(double t, double k = 1.0);
[[nodiscard]] BlockSpec lead_lag(double t_lead, double t_lag, double k = 1.0);
[[nodiscard]] BlockSpec pid(double kp, double ki, double kd, double td);
[[nodiscard]] BlockSpec integrator(double k);
[[nodiscard]] BlockSpec delay(double t);
[[nodiscard]] BlockSpec low_value_gate();
[[nodiscard]] BlockSpec high_value_gate();
[[nodiscard]] BlockSpec saturation(double min, double max);
[[nodiscard]] BlockSpec rate_limiter(double down, double up);

}  // namespace govid::blocks
