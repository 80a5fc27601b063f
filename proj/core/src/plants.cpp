#include "govid/plants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "govid/blocks.hpp"
#include "govid/error.hpp"

namespace govid {

namespace {

using blocks::make_block;

struct Ggov1Steady {
  double speed, dw, p_elec, p_ref, mw, fuel, temp, t_err;
};

Ggov1Steady ggov1_steady(const Ggov1Params& p, const OperatingPoint& op) {
  Ggov1Steady s{};
  s.speed = op.speed;
  s.dw = op.speed - 1.0;
  s.p_elec = op.p_e0;
  s.mw = 0.0;
  if (!(p.K_turb > 0.0)) throw Error(Errc::NoSteadyState, fmt::format("K_turb = {} admits no steady state", p.K_turb));
  const double above_no_load = (op.p_e0 + p.Dm * s.dw) / p.K_turb;
  if (above_no_load < 0.0) {
    throw Error(Errc::NoSteadyState, fmt::format("p_e0 = {} needs fuel below W_fnl = {}", op.p_e0, p.W_fnl));
  }
  s.fuel = p.W_fnl + above_no_load;
  if (s.fuel < p.V_min || s.fuel > p.V_max) {
    throw Error(Errc::NoSteadyState,
                fmt::format("steady fuel {} outside [V_min, V_max] = [{}, {}]", s.fuel, p.V_min, p.V_max));
  }
  if (p.K_imw != 0.0 && std::abs(p.P_mwset - op.p_e0) > 1e-12) {
    throw Error(Errc::NoSteadyState, fmt::format("K_imw != 0 requires P_mwset = p_e0 = {}", op.p_e0));
  }
  s.p_ref = op.p_e0 + s.dw / p.r - s.mw;
  s.temp = op.exhaust_temp0.value_or(op.p_e0);
  s.t_err = p.L_dref - s.temp;
  if (s.t_err < 0.0) {
    throw Error(Errc::NoSteadyState,
                fmt::format("exhaust temperature {} above L_dref = {}: load limiter would not rest", s.temp, p.L_dref));
  }
  return s;
}

struct St6bSteady {
  double v_ref, v_c, i_fd, v_a, v_g, v_r, efd;
};

St6bSteady st6b_steady(const St6bParams& p, const OperatingPoint& op) {
  St6bSteady s{};
  s.v_c = op.v_t;
  s.efd = op.efd0;
  if (!(op.efd0 > 0.0) || !(op.v_t > 0.0)) {
    throw Error(Errc::NoSteadyState, fmt::format("operating point needs efd0 > 0 and v_t > 0"));
  }
  const double vb = p.K_VB * s.v_c;
  s.v_r = s.efd / vb;
  s.v_g = p.K_G * s.efd;
  if (p.K_FF + p.K_M == 0.0) throw Error(Errc::NoSteadyState, "K_FF + K_M = 0 admits no steady state");
  s.v_a = (s.v_r + p.K_M * s.v_g) / (p.K_FF + p.K_M);
  if (s.v_a < p.V_AMIN || s.v_a > p.V_AMAX) {
    throw Error(Errc::NoSteadyState, fmt::format("steady V_A = {} outside regulator limits", s.v_a));
  }
  if (s.v_r < p.V_RMIN || s.v_r > p.V_RMAX) {
    throw Error(Errc::NoSteadyState, fmt::format("steady V_R = {} outside regulator limits", s.v_r));
  }
  s.i_fd = s.efd;
  if (p.limiter_enabled && p.K_LR * (p.K_CI * p.I_LR - s.i_fd) < s.v_r) {
    throw Error(Errc::NoSteadyState, "field current limiter active at the operating point");
  }
  s.v_ref = s.v_c;
  return s;
}

const std::vector<std::string>& ggov1_taps() {
  static const std::vector<std::string> names{
      taps::p_ref, taps::speed, taps::exhaust_temp, taps::p_elec, taps::pe_meas, taps::gov_err, taps::fsrn, taps::t_meas,
      taps::fsrt,  taps::fsra,  taps::fsr,          taps::valve,  taps::fuel_delayed, taps::fuel_leadlag, taps::pmech};
  return names;
}

const std::vector<std::string>& st6b_taps() {
  static const std::vector<std::string> names{taps::v_ref, taps::v_c, taps::i_fd, taps::v_a,
                                              taps::v_g,   taps::v_r, taps::efd};
  return names;
}

blocks::BlockSpec limited(blocks::BlockSpec spec, double lo, double hi) {
  spec.limits = blocks::Limits{lo, hi};
  return spec;
}

void check_inputs(const PlantModel& model, const TimeSeries& inputs) {
  if (std::abs(inputs.dt() - model.dt()) > 1e-9 * model.dt()) {
    throw Error(Errc::RateMismatch, fmt::format("input dt {} differs from model dt {}", inputs.dt(), model.dt()));
  }
  for (const auto& name : model.required_inputs()) (void)inputs.channel(name);
}

std::span<const double> optional_channel(const TimeSeries& ts, const char* name) {
  return ts.has(name) ? ts.values(name) : std::span<const double>{};
}

TimeSeries simulate_ggov1(const PlantModel& model, const TimeSeries& inputs) {
  const auto p = Ggov1Params::from(model.params());
  const auto s = ggov1_steady(p, model.operating_point());
  const double dt = model.dt();
  const std::size_t n = inputs.length();

  auto pe_lag = make_block(blocks::lag(p.T_pelec), dt, s.p_elec);
  auto mw_int = make_block(blocks::integrator(p.K_imw), dt, s.mw);
  auto gov = make_block(limited(blocks::pid(p.K_pgov, p.K_igov, p.K_dgov, p.T_dgov), p.V_min, p.V_max), dt, s.fuel);
  gov.prime(0.0, s.fuel);
  auto t_lag = make_block(blocks::lag(p.T_fload), dt, s.temp);
  auto load = make_block(limited(blocks::pid(p.K_pload, p.K_iload, 0.0, 0.0), p.V_min, p.V_max), dt, p.V_max);
  load.prime(s.t_err, p.V_max);
  auto accel = make_block(blocks::pid(0.0, 0.0, 1.0, p.T_a > 0.0 ? p.T_a : 1.0), dt, 0.0);
  accel.prime(s.speed, 0.0);
  auto act = make_block(limited(blocks::lag(p.T_act), p.V_min, p.V_max), dt, s.fuel);
  auto eng = make_block(blocks::delay(p.T_eng), dt, s.fuel);
  auto ll = make_block(blocks::lead_lag(p.T_c, p.T_b), dt, s.fuel);

  const auto p_ref = inputs.values(taps::p_ref);
  const auto speed_in = optional_channel(inputs, taps::speed);
  const auto temp_in = optional_channel(inputs, taps::exhaust_temp);

  const auto& names = ggov1_taps();
  std::vector<std::vector<double>> out(names.size(), std::vector<double>(n));
  double pmech_prev = s.p_elec;
  double fsr_prev = s.fuel;
  for (std::size_t k = 0; k < n; ++k) {
    const double speed = speed_in.empty() ? s.speed : speed_in[k];
    const double dw = speed - 1.0;
    const double pe = pmech_prev;
    const double pe_meas = pe_lag.advance(pe);
    const double mw = p.K_imw != 0.0 ? mw_int.advance(p.P_mwset - pe_meas) : 0.0;
    const double err = p_ref[k] + mw - pe_meas - dw / p.r;
    const double fsrn = gov.advance(err);
    const double temp = temp_in.empty() ? pe : temp_in[k];
    const double t_meas = t_lag.advance(temp);
    const double fsrt = load.advance(p.L_dref - t_meas);
    double fsra = std::numeric_limits<double>::infinity();
    if (p.accel_enabled) {
      const double a = accel.advance(speed);
      fsra = fsr_prev + p.K_a * dt * (p.a_set - a);
    }
    const double fsr = std::min({fsrn, fsrt, fsra});
    const double valve = act.advance(fsr);
    const double fuel_d = eng.advance(valve);
    const double fuel_ll = ll.advance(fuel_d);
    const double pmech = p.K_turb * (fuel_ll - p.W_fnl) - p.Dm * dw;

    const double row[] = {p_ref[k], speed, temp, pe, pe_meas, err, fsrn, t_meas,
                          fsrt,     fsra,  fsr,  valve, fuel_d, fuel_ll, pmech};
    for (std::size_t i = 0; i < names.size(); ++i) out[i][k] = row[i];
    pmech_prev = pmech;
    fsr_prev = fsr;
  }
  TimeSeries ts(dt);
  for (std::size_t i = 0; i < names.size(); ++i) ts.set(names[i], std::move(out[i]));
  return ts;
}

TimeSeries simulate_st6b(const PlantModel& model, const TimeSeries& inputs) {
  const auto p = St6bParams::from(model.params());
  const auto& op = model.operating_point();
  const auto s = st6b_steady(p, op);
  const double dt = model.dt();
  const std::size_t n = inputs.length();

  auto reg = make_block(limited(blocks::pid(p.K_PA, p.K_IA, 0.0, 0.0), p.V_AMIN, p.V_AMAX), dt, s.v_a);
  reg.prime(0.0, s.v_a);
  auto g_lag = make_block(blocks::lag(p.T_G, p.K_G), dt, s.v_g);
  auto vc_lag = make_block(blocks::lag(op.terminal_time_constant, op.v_t / op.efd0), dt, s.v_c);

  const auto v_ref = inputs.values(taps::v_ref);
  const auto vc_in = optional_channel(inputs, taps::v_c);
  const auto ifd_in = optional_channel(inputs, taps::i_fd);

  const auto& names = st6b_taps();
  std::vector<std::vector<double>> out(names.size(), std::vector<double>(n));
  double efd_prev = s.efd;
  for (std::size_t k = 0; k < n; ++k) {
    const double vc = vc_in.empty() ? vc_lag.advance(efd_prev) : vc_in[k];
    const double ifd = ifd_in.empty() ? efd_prev : ifd_in[k];
    const double va = reg.advance(v_ref[k] - vc);
    const double vg = g_lag.advance(efd_prev);
    double vr = std::clamp(p.K_FF * va + p.K_M * (va - vg), p.V_RMIN, p.V_RMAX);
    if (p.limiter_enabled) vr = std::min(vr, p.K_LR * (p.K_CI * p.I_LR - ifd));
    const double efd = p.K_VB * vc * vr;

    const double row[] = {v_ref[k], vc, ifd, va, vg, vr, efd};
    for (std::size_t i = 0; i < names.size(); ++i) out[i][k] = row[i];
    efd_prev = efd;
  }
  TimeSeries ts(dt);
  for (std::size_t i = 0; i < names.size(); ++i) ts.set(names[i], std::move(out[i]));
  return ts;
}

}  // namespace

double PlantModel::initial(std::string_view tap) const {
  for (const auto& [name, value] : initial_) {
    if (name == tap) return value;
  }
  throw Error(Errc::MissingChannel, fmt::format("model has no tap '{}'", tap));
}

std::vector<std::string> PlantModel::tap_names() const {
  return kind() == ModelKind::GGOV1 ? ggov1_taps() : st6b_taps();
}

std::vector<std::string> PlantModel::required_inputs() const {
  return kind() == ModelKind::GGOV1 ? std::vector<std::string>{taps::p_ref} : std::vector<std::string>{taps::v_ref};
}

std::vector<std::string> PlantModel::optional_inputs() const {
  return kind() == ModelKind::GGOV1 ? std::vector<std::string>{taps::speed, taps::exhaust_temp}
                                    : std::vector<std::string>{taps::v_c, taps::i_fd};
}

PlantModel build_model(ModelKind kind, const ParamVector& params, double dt, const OperatingPoint& op) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::NonPositiveDt, fmt::format("dt must be positive, got {}", dt));
  if (params.kind() != kind) {
    throw Error(Errc::WrongModelKind,
                fmt::format("{} model given {} parameters", to_string(kind), to_string(params.kind())));
  }
  PlantModel m;
  m.params_ = params;
  m.dt_ = dt;
  m.op_ = op;
  if (kind == ModelKind::GGOV1) {
    const auto p = Ggov1Params::from(params);
    if (p.T_eng > 0.0 && p.T_eng < dt) {
      throw Error(Errc::DelayShorterThanDt, fmt::format("T_eng = {} s is shorter than dt = {} s", p.T_eng, dt));
    }
    const auto s = ggov1_steady(p, op);
    m.initial_ = {{taps::p_ref, s.p_ref},      {taps::speed, s.speed},   {taps::exhaust_temp, s.temp},
                  {taps::p_elec, s.p_elec},    {taps::pe_meas, s.p_elec}, {taps::gov_err, 0.0},
                  {taps::fsrn, s.fuel},        {taps::t_meas, s.temp},   {taps::fsrt, p.V_max},
                  {taps::fsra, p.accel_enabled ? s.fuel : std::numeric_limits<double>::infinity()},
                  {taps::fsr, s.fuel},         {taps::valve, s.fuel},    {taps::fuel_delayed, s.fuel},
                  {taps::fuel_leadlag, s.fuel}, {taps::pmech, s.p_elec}};
  } else {
    const auto p = St6bParams::from(params);
    const auto s = st6b_steady(p, op);
    if (!(op.terminal_time_constant >= 0.0)) {
      throw Error(Errc::InvalidParams, "terminal_time_constant must be >= 0");
    }
    m.initial_ = {{taps::v_ref, s.v_ref}, {taps::v_c, s.v_c}, {taps::i_fd, s.i_fd}, {taps::v_a, s.v_a},
                  {taps::v_g, s.v_g},     {taps::v_r, s.v_r}, {taps::efd, s.efd}};
  }
  return m;
}

TimeSeries simulate(const PlantModel& model, const TimeSeries& inputs) {
  check_inputs(model, inputs);
  return model.kind() == ModelKind::GGOV1 ? simulate_ggov1(model, inputs) : simulate_st6b(model, inputs);
}

}  // namespace govid
