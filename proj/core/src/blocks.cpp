#include "govid/blocks.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "govid/error.hpp"

namespace govid::blocks {

namespace {

bool is_gate(BlockKind kind) {
  return kind == BlockKind::LowValueGate || kind == BlockKind::HighValueGate;
}

double clamp_to(const std::optional<Limits>& limits, double value) {
  if (!limits) return value;
  return std::clamp(value, limits->min, limits->max);
}

void require_non_negative(const BlockSpec& spec, std::string_view name, double value) {
  if (!(value >= 0.0)) {
    throw Error(Errc::InvalidParams,
                fmt::format("{} block: {} = {} must be >= 0", to_string(spec.kind), name, value));
  }
}

std::size_t delay_length(double t, double dt) {
  if (t > 0.0 && t < dt) {
    throw Error(Errc::DelayShorterThanDt, fmt::format("delay {} s is shorter than dt {} s", t, dt));
  }
  return static_cast<std::size_t>(std::llround(t / dt));
}

// Coefficients of the first-order section used by Lag and LeadLag, so that a
// lead-lag with T_lead = 0 produces bit-identical numbers to a plain lag.
struct FirstOrder {
  double a1;
  double b0;
  double b1;
};

FirstOrder first_order(double k, double t_lead, double t_lag, double dt) {
  if (t_lag == 0.0) {
    return {0.0, k, 0.0};
  }
  const double den = 2.0 * t_lag + dt;
  return {(2.0 * t_lag - dt) / den, k * (2.0 * t_lead + dt) / den, k * (dt - 2.0 * t_lead) / den};
}

}  // namespace

std::string_view to_string(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::Gain: return "Gain";
    case BlockKind::FirstOrderLag: return "FirstOrderLag";
    case BlockKind::LeadLag: return "LeadLag";
    case BlockKind::PID: return "PID";
    case BlockKind::LimitedIntegrator: return "LimitedIntegrator";
    case BlockKind::PureDelay: return "PureDelay";
    case BlockKind::LowValueGate: return "LowValueGate";
    case BlockKind::HighValueGate: return "HighValueGate";
    case BlockKind::Saturation: return "Saturation";
    case BlockKind::RateLimiter: return "RateLimiter";
  }
  return "Unknown";
}

double BlockSpec::param(std::string_view name) const {
  auto it = parameters.find(name);
  if (it == parameters.end()) {
    throw Error(Errc::InvalidParams, fmt::format("{} block is missing parameter {}", to_string(kind), name));
  }
  return it->second;
}

double BlockSpec::param_or(std::string_view name, double fallback) const {
  auto it = parameters.find(name);
  return it == parameters.end() ? fallback : it->second;
}

BlockState::BlockState(BlockSpec spec, double dt) : spec_(std::move(spec)), dt_(dt) {}

BlockState make_block(const BlockSpec& spec, double dt, double initial_output) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(Errc::NonPositiveDt, fmt::format("dt must be positive, got {}", dt));
  }
  if (spec.limits && !(spec.limits->min < spec.limits->max)) {
    throw Error(Errc::InvalidLimits,
                fmt::format("{} block: min {} >= max {}", to_string(spec.kind), spec.limits->min, spec.limits->max));
  }
  if (spec.rate_limits && !(spec.rate_limits->down < spec.rate_limits->up)) {
    throw Error(Errc::InvalidLimits, fmt::format("rate limits: down {} >= up {}", spec.rate_limits->down,
                                                 spec.rate_limits->up));
  }
  if (spec.limits && (initial_output < spec.limits->min || initial_output > spec.limits->max)) {
    throw Error(Errc::InitialOutputOutOfLimits,
                fmt::format("{} block: initial output {} outside [{}, {}]", to_string(spec.kind), initial_output,
                            spec.limits->min, spec.limits->max));
  }

  BlockState b(spec, dt);
  switch (spec.kind) {
    case BlockKind::Gain:
      b.b0_ = spec.param_or("K", 1.0);
      break;
    case BlockKind::FirstOrderLag: {
      const double t = spec.param("T");
      require_non_negative(spec, "T", t);
      const auto c = first_order(spec.param_or("K", 1.0), 0.0, t, dt);
      b.a1_ = c.a1;
      b.b0_ = c.b0;
      b.b1_ = c.b1;
      b.state_.assign(2, 0.0);
      break;
    }
    case BlockKind::LeadLag: {
      const double t_lead = spec.param("T_lead");
      const double t_lag = spec.param("T_lag");
      require_non_negative(spec, "T_lead", t_lead);
      require_non_negative(spec, "T_lag", t_lag);
      if (t_lag == 0.0 && t_lead != 0.0) {
        throw Error(Errc::InvalidParams, "LeadLag block: T_lead > 0 with T_lag = 0 is improper");
      }
      const auto c = first_order(spec.param_or("K", 1.0), t_lead, t_lag, dt);
      b.a1_ = c.a1;
      b.b0_ = c.b0;
      b.b1_ = c.b1;
      b.state_.assign(2, 0.0);
      break;
    }
    case BlockKind::PID: {
      const double kd = spec.param_or("K_d", 0.0);
      const double td = spec.param_or("T_d", 0.0);
      require_non_negative(spec, "T_d", td);
      b.kp_ = spec.param_or("K_p", 0.0);
      b.ki_half_dt_ = spec.param_or("K_i", 0.0) * dt / 2.0;
      if (kd != 0.0) {
        if (td == 0.0) {
          throw Error(Errc::InvalidParams, "PID block: K_d != 0 with T_d = 0 is a pure differentiator");
        }
        b.has_derivative_ = true;
        b.d_pole_ = (2.0 * td - dt) / (2.0 * td + dt);
        b.d_gain_ = 2.0 * kd / (2.0 * td + dt);
      }
      // integrator, derivative, previous input
      b.state_.assign(3, 0.0);
      break;
    }
    case BlockKind::LimitedIntegrator:
      b.b0_ = spec.param_or("K", 1.0) * dt / 2.0;
      b.state_.assign(2, 0.0);
      break;
    case BlockKind::PureDelay: {
      const double t = spec.param("T");
      require_non_negative(spec, "T", t);
      b.delay_.assign(delay_length(t, dt), initial_output);
      break;
    }
    case BlockKind::LowValueGate:
    case BlockKind::HighValueGate:
      break;
    case BlockKind::Saturation:
      if (!spec.limits) throw Error(Errc::InvalidLimits, "Saturation block requires limits");
      break;
    case BlockKind::RateLimiter:
      if (!spec.rate_limits) throw Error(Errc::InvalidLimits, "RateLimiter block requires rate limits");
      b.state_.assign(1, 0.0);
      break;
  }
  b.prime(b.steady_input_for(initial_output), initial_output);
  return b;
}

double BlockState::steady_input_for(double output) const {
  switch (spec_.kind) {
    case BlockKind::Gain:
    case BlockKind::FirstOrderLag:
    case BlockKind::LeadLag: {
      const double k = spec_.param_or("K", 1.0);
      return k == 0.0 ? 0.0 : output / k;
    }
    case BlockKind::PID:
      if (ki_half_dt_ != 0.0) return 0.0;
      return kp_ == 0.0 ? 0.0 : output / kp_;
    case BlockKind::LimitedIntegrator:
      return 0.0;
    default:
      return output;
  }
}

void BlockState::prime(double input, double output) {
  switch (spec_.kind) {
    case BlockKind::Gain:
      last_output_ = clamp_to(spec_.limits, b0_ * input);
      return;
    case BlockKind::FirstOrderLag:
    case BlockKind::LeadLag: {
      const double y = clamp_to(spec_.limits, spec_.param_or("K", 1.0) * input);
      state_[0] = y;
      state_[1] = input;
      last_output_ = y;
      return;
    }
    case BlockKind::PID:
      state_[0] = output - kp_ * input;
      state_[1] = 0.0;
      state_[2] = input;
      last_output_ = clamp_to(spec_.limits, output);
      return;
    case BlockKind::LimitedIntegrator:
      state_[0] = clamp_to(spec_.limits, output);
      state_[1] = input;
      last_output_ = state_[0];
      return;
    case BlockKind::PureDelay:
      std::fill(delay_.begin(), delay_.end(), input);
      delay_head_ = 0;
      last_output_ = input;
      return;
    case BlockKind::LowValueGate:
    case BlockKind::HighValueGate:
      last_output_ = output;
      return;
    case BlockKind::Saturation:
      last_output_ = clamp_to(spec_.limits, input);
      return;
    case BlockKind::RateLimiter:
      state_[0] = output;
      last_output_ = output;
      return;
  }
}

double BlockState::advance(double input) {
  double y = 0.0;
  switch (spec_.kind) {
    case BlockKind::Gain:
      y = clamp_to(spec_.limits, b0_ * input);
      break;
    case BlockKind::FirstOrderLag:
    case BlockKind::LeadLag:
      y = clamp_to(spec_.limits, a1_ * state_[0] + b0_ * input + b1_ * state_[1]);
      state_[0] = y;
      state_[1] = input;
      break;
    case BlockKind::PID: {
      double& integ = state_[0];
      double& deriv = state_[1];
      double& previous = state_[2];
      const double increment = ki_half_dt_ * (input + previous);
      if (has_derivative_) deriv = d_pole_ * deriv + d_gain_ * (input - previous);
      const double unclamped = kp_ * input + integ + increment + deriv;
      if (spec_.limits) {
        // conditional integration: freeze the integrator while the output is
        // saturated and the increment pushes further into the limit
        const bool high = unclamped > spec_.limits->max && increment > 0.0;
        const bool low = unclamped < spec_.limits->min && increment < 0.0;
        if (!high && !low) integ += increment;
        y = std::clamp(kp_ * input + integ + deriv, spec_.limits->min, spec_.limits->max);
      } else {
        integ += increment;
        y = unclamped;
      }
      previous = input;
      break;
    }
    case BlockKind::LimitedIntegrator:
      y = clamp_to(spec_.limits, state_[0] + b0_ * (input + state_[1]));
      state_[0] = y;
      state_[1] = input;
      break;
    case BlockKind::PureDelay:
      if (delay_.empty()) {
        y = input;
      } else {
        y = delay_[delay_head_];
        delay_[delay_head_] = input;
        delay_head_ = delay_head_ + 1 == delay_.size() ? 0 : delay_head_ + 1;
      }
      break;
    case BlockKind::Saturation:
      y = std::clamp(input, spec_.limits->min, spec_.limits->max);
      break;
    case BlockKind::RateLimiter: {
      const double lo = spec_.rate_limits->down * dt_;
      const double hi = spec_.rate_limits->up * dt_;
      y = state_[0] + std::clamp(input - state_[0], lo, hi);
      state_[0] = y;
      break;
    }
    case BlockKind::LowValueGate:
    case BlockKind::HighValueGate:
      throw Error(Errc::InvalidArgument, fmt::format("{} takes two inputs", to_string(spec_.kind)));
  }
  last_output_ = y;
  return y;
}

double BlockState::advance(double first, double second) {
  if (!is_gate(spec_.kind)) {
    throw Error(Errc::InvalidArgument, fmt::format("{} takes one input", to_string(spec_.kind)));
  }
  last_output_ = spec_.kind == BlockKind::LowValueGate ? std::min(first, second) : std::max(first, second);
  return last_output_;
}

double BlockState::step(double input, double dt) {
  if (std::abs(dt - dt_) > 1e-12 * dt_) {
    throw Error(Errc::DtMismatch, fmt::format("block built for dt = {}, stepped with {}", dt_, dt));
  }
  return advance(input);
}

double BlockState::step(double first, double second, double dt) {
  if (std::abs(dt - dt_) > 1e-12 * dt_) {
    throw Error(Errc::DtMismatch, fmt::format("block built for dt = {}, stepped with {}", dt_, dt));
  }
  return advance(first, second);
}

double step_block(BlockState& state, double input, double dt) { return state.step(input, dt); }

DifferenceEquation discretize_linear(const BlockSpec& spec, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::NonPositiveDt, fmt::format("dt must be positive, got {}", dt));
  const bool nonlinear_kind = is_gate(spec.kind) || spec.kind == BlockKind::Saturation ||
                              spec.kind == BlockKind::RateLimiter;
  if (nonlinear_kind || spec.limits || spec.rate_limits) {
    throw Error(Errc::NonlinearBlock, fmt::format("{} block has no linear difference equation", to_string(spec.kind)));
  }
  switch (spec.kind) {
    case BlockKind::Gain:
      return {{}, {spec.param_or("K", 1.0)}};
    case BlockKind::FirstOrderLag:
    case BlockKind::LeadLag: {
      const double t_lag = spec.kind == BlockKind::LeadLag ? spec.param("T_lag") : spec.param("T");
      const double t_lead = spec.kind == BlockKind::LeadLag ? spec.param("T_lead") : 0.0;
      require_non_negative(spec, "time constant", t_lag);
      require_non_negative(spec, "T_lead", t_lead);
      const auto c = first_order(spec.param_or("K", 1.0), t_lead, t_lag, dt);
      if (t_lag == 0.0) return {{}, {c.b0}};
      return {{c.a1}, {c.b0, c.b1}};
    }
    case BlockKind::PID: {
      const double kp = spec.param_or("K_p", 0.0);
      const double ki_half_dt = spec.param_or("K_i", 0.0) * dt / 2.0;
      const double kd = spec.param_or("K_d", 0.0);
      const double td = spec.param_or("T_d", 0.0);
      if (kd == 0.0) {
        return {{1.0}, {kp + ki_half_dt, -kp + ki_half_dt}};
      }
      if (!(td > 0.0)) throw Error(Errc::InvalidParams, "PID block: K_d != 0 with T_d = 0 is a pure differentiator");
      const double p = (2.0 * td - dt) / (2.0 * td + dt);
      const double c = 2.0 * kd / (2.0 * td + dt);
      // denominator (1 - z^-1)(1 - p z^-1)
      const double n0 = kp + ki_half_dt + c;
      const double n1 = -kp * (1.0 + p) + ki_half_dt * (1.0 - p) - 2.0 * c;
      const double n2 = kp * p - ki_half_dt * p + c;
      return {{1.0 + p, -p}, {n0, n1, n2}};
    }
    case BlockKind::LimitedIntegrator: {
      const double k = spec.param_or("K", 1.0) * dt / 2.0;
      return {{1.0}, {k, k}};
    }
    case BlockKind::PureDelay: {
      const double t = spec.param("T");
      require_non_negative(spec, "T", t);
      std::vector<double> b(delay_length(t, dt) + 1, 0.0);
      b.back() = 1.0;
      return {{}, std::move(b)};
    }
    default:
      break;
  }
  throw Error(Errc::NonlinearBlock, fmt::format("{} block has no linear difference equation", to_string(spec.kind)));
}

std::vector<double> filter(const DifferenceEquation& eq, std::span<const double> input) {
  std::vector<double> y(input.size(), 0.0);
  for (std::size_t k = 0; k < input.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < eq.a.size(); ++i) {
      if (k >= i + 1) acc += eq.a[i] * y[k - 1 - i];
    }
    for (std::size_t j = 0; j < eq.b.size(); ++j) {
      if (k >= j) acc += eq.b[j] * input[k - j];
    }
    y[k] = acc;
  }
  return y;
}

BlockSpec gain(double k) { return {BlockKind::Gain, {{"K", k}}, {}, {}}; }
BlockSpec lag(double t, double k) { return {BlockKind::FirstOrderLag, {{"K", k}, {"T", t}}, {}, {}}; }
BlockSpec lead_lag(double t_lead, double t_lag, double k) {
  return {BlockKind::LeadLag, {{"K", k}, {"T_lead", t_lead}, {"T_lag", t_lag}}, {}, {}};
}
BlockSpec pid(double kp, double ki, double kd, double td) {
  return {BlockKind::PID, {{"K_p", kp}, {"K_i", ki}, {"K_d", kd}, {"T_d", td}}, {}, {}};
}
BlockSpec integrator(double k) { return {BlockKind::LimitedIntegrator, {{"K", k}}, {}, {}}; }
BlockSpec delay(double t) { return {BlockKind::PureDelay, {{"T", t}}, {}, {}}; }
BlockSpec low_value_gate() { return {BlockKind::LowValueGate, {}, {}, {}}; }
BlockSpec high_value_gate() { return {BlockKind::HighValueGate, {}, {}, {}}; }
BlockSpec saturation(double min, double max) { return {BlockKind::Saturation, {}, Limits{min, max}, {}}; }
BlockSpec rate_limiter(double down, double up) { return {BlockKind::RateLimiter, {}, {}, RateLimits{down, up}}; }

}  // namespace govid::blocks
