#include <algorithm>
#include <cctype>
#include <numeric>

#include <fmt/format.h>

#include "govid/blocks.hpp"
#include "govid/error.hpp"
#include "govid/plants.hpp"

namespace govid {

namespace {

using blocks::make_block;

double head_mean(std::span<const double> x) {
  const std::size_t m = std::min(kInitSamples, x.size());
  if (m == 0) throw Error(Errc::InsufficientData, "empty channel");
  return std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), 0.0) / static_cast<double>(m);
}

blocks::BlockSpec limited(blocks::BlockSpec spec, double lo, double hi) {
  spec.limits = blocks::Limits{lo, hi};
  return spec;
}

TimeSeries simulate_valve(const Ggov1Params& p, const TimeSeries& data) {
  const auto fsr = data.values(taps::fsr);
  const auto speed = data.has(taps::speed) ? data.values(taps::speed) : std::span<const double>{};
  const double v0 = std::clamp(head_mean(fsr), p.V_min, p.V_max);
  const double dt = data.dt();
  auto act = make_block(limited(blocks::lag(p.T_act), p.V_min, p.V_max), dt, v0);
  auto eng = make_block(blocks::delay(p.T_eng), dt, v0);
  auto ll = make_block(blocks::lead_lag(p.T_c, p.T_b), dt, v0);
  const std::size_t n = fsr.size();
  std::vector<double> valve(n), pmech(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = speed.empty() ? 0.0 : speed[k] - 1.0;
    valve[k] = act.advance(fsr[k]);
    pmech[k] = p.K_turb * (ll.advance(eng.advance(valve[k])) - p.W_fnl) - p.Dm * dw;
  }
  TimeSeries out(dt);
  out.set(taps::valve, std::move(valve));
  out.set(taps::pmech, std::move(pmech));
  return out;
}

TimeSeries simulate_power(const Ggov1Params& p, const TimeSeries& data) {
  const auto pe = data.values(taps::p_elec);
  const auto ref = data.values(taps::p_ref);
  const auto speed = data.has(taps::speed) ? data.values(taps::speed) : std::span<const double>{};
  const double dt = data.dt();
  auto pe_lag = make_block(blocks::lag(p.T_pelec), dt, head_mean(pe));
  auto mw_int = make_block(blocks::integrator(p.K_imw), dt, 0.0);
  const std::size_t n = pe.size();
  std::vector<double> meas(n), err(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = speed.empty() ? 0.0 : speed[k] - 1.0;
    meas[k] = pe_lag.advance(pe[k]);
    const double mw = p.K_imw != 0.0 ? mw_int.advance(p.P_mwset - meas[k]) : 0.0;
    err[k] = ref[k] + mw - meas[k] - dw / p.r;
  }
  TimeSeries out(dt);
  out.set(taps::pe_meas, std::move(meas));
  out.set(taps::gov_err, std::move(err));
  return out;
}

TimeSeries simulate_speed_pid(const Ggov1Params& p, const TimeSeries& data) {
  const auto err = data.values(taps::gov_err);
  const double y0 = std::clamp(head_mean(data.values(taps::fsrn)), p.V_min, p.V_max);
  const double dt = data.dt();
  auto gov = make_block(limited(blocks::pid(p.K_pgov, p.K_igov, p.K_dgov, p.T_dgov), p.V_min, p.V_max), dt, y0);
  gov.prime(head_mean(err), y0);
  std::vector<double> y(err.size());
  for (std::size_t k = 0; k < err.size(); ++k) y[k] = gov.advance(err[k]);
  TimeSeries out(dt);
  out.set(taps::fsrn, std::move(y));
  return out;
}

TimeSeries simulate_load_limiter(const Ggov1Params& p, const TimeSeries& data) {
  const auto temp = data.values(taps::exhaust_temp);
  const double t0 = head_mean(temp);
  const double y0 = std::clamp(head_mean(data.values(taps::fsrt)), p.V_min, p.V_max);
  const double dt = data.dt();
  auto t_lag = make_block(blocks::lag(p.T_fload), dt, t0);
  auto load = make_block(limited(blocks::pid(p.K_pload, p.K_iload, 0.0, 0.0), p.V_min, p.V_max), dt, y0);
  load.prime(p.L_dref - t0, y0);
  std::vector<double> y(temp.size());
  for (std::size_t k = 0; k < temp.size(); ++k) y[k] = load.advance(p.L_dref - t_lag.advance(temp[k]));
  TimeSeries out(dt);
  out.set(taps::fsrt, std::move(y));
  return out;
}

TimeSeries simulate_exciter(const St6bParams& p, const TimeSeries& data) {
  const auto ref = data.values(taps::v_ref);
  const auto vc = data.values(taps::v_c);
  const auto ifd = data.has(taps::i_fd) ? data.values(taps::i_fd) : std::span<const double>{};
  const double dt = data.dt();
  const double va0 = std::clamp(head_mean(data.values(taps::v_a)), p.V_AMIN, p.V_AMAX);
  double efd_prev = head_mean(data.values(taps::efd));
  auto reg = make_block(limited(blocks::pid(p.K_PA, p.K_IA, 0.0, 0.0), p.V_AMIN, p.V_AMAX), dt, va0);
  reg.prime(head_mean(ref) - head_mean(vc), va0);
  auto g_lag = make_block(blocks::lag(p.T_G, p.K_G), dt, p.K_G * efd_prev);
  const std::size_t n = ref.size();
  std::vector<double> efd(n), va(n);
  for (std::size_t k = 0; k < n; ++k) {
    va[k] = reg.advance(ref[k] - vc[k]);
    const double vg = g_lag.advance(efd_prev);
    double vr = std::clamp(p.K_FF * va[k] + p.K_M * (va[k] - vg), p.V_RMIN, p.V_RMAX);
    if (p.limiter_enabled) vr = std::min(vr, p.K_LR * (p.K_CI * p.I_LR - (ifd.empty() ? efd_prev : ifd[k])));
    efd[k] = p.K_VB * vc[k] * vr;
    efd_prev = efd[k];
  }
  TimeSeries out(dt);
  out.set(taps::efd, std::move(efd));
  out.set(taps::v_a, std::move(va));
  return out;
}

}  // namespace

std::string_view to_string(SubsystemId id) noexcept {
  switch (id) {
    case SubsystemId::Valve: return "Valve";
    case SubsystemId::ElectricalPower: return "ElectricalPower";
    case SubsystemId::SpeedController: return "SpeedController";
    case SubsystemId::TemperatureController: return "TemperatureController";
    case SubsystemId::Exciter: return "Exciter";
  }
  return "Unknown";
}

SubsystemId subsystem_from_string(std::string_view text) {
  for (int i = 1; i <= 5; ++i) {
    const auto id = static_cast<SubsystemId>(i);
    std::string lower(to_string(id));
    std::string given(text);
    auto to_lower = [](std::string& s) {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    };
    to_lower(lower);
    to_lower(given);
    if (given == std::to_string(i) || given == lower) return id;
  }
  throw Error(Errc::InvalidArgument, fmt::format("unknown subsystem '{}'", text));
}

ModelKind model_of(SubsystemId id) noexcept {
  return id == SubsystemId::Exciter ? ModelKind::ST6B : ModelKind::GGOV1;
}

std::vector<SubsystemId> subsystems_of(ModelKind kind) {
  if (kind == ModelKind::ST6B) return {SubsystemId::Exciter};
  return {SubsystemId::Valve, SubsystemId::ElectricalPower, SubsystemId::SpeedController,
          SubsystemId::TemperatureController};
}

SubsystemView subsystem_view(ModelKind kind, SubsystemId id) {
  if (model_of(id) != kind) {
    throw Error(Errc::WrongModelKind, fmt::format("subsystem {} does not belong to {}", to_string(id), to_string(kind)));
  }
  switch (id) {
    case SubsystemId::Valve:
      return {id, {taps::fsr}, {taps::speed}, {taps::valve, taps::pmech},
              {"T_act", "K_turb", "T_b", "T_c", "T_eng", "W_fnl"}};
    case SubsystemId::ElectricalPower:
      return {id, {taps::p_elec, taps::p_ref}, {taps::speed}, {taps::pe_meas, taps::gov_err}, {"T_pelec", "r"}};
    case SubsystemId::SpeedController:
      return {id, {taps::gov_err}, {}, {taps::fsrn}, {"K_pgov", "K_igov", "K_dgov", "T_dgov"}};
    case SubsystemId::TemperatureController:
      return {id, {taps::exhaust_temp}, {}, {taps::fsrt}, {"T_fload", "K_pload", "K_iload", "L_dref"}};
    case SubsystemId::Exciter:
      return {id, {taps::v_ref, taps::v_c}, {taps::i_fd}, {taps::efd, taps::v_a}, {"K_PA", "K_IA", "K_M", "K_FF"}};
  }
  throw Error(Errc::InvalidArgument, "invalid subsystem id");
}

SubsystemView subsystem_view(const PlantModel& model, SubsystemId id) {
  auto view = subsystem_view(model.kind(), id);
  std::erase_if(view.free_params, [&](const std::string& n) { return !model.params().at(n).free; });
  return view;
}

TimeSeries simulate_subsystem(SubsystemId id, const ParamVector& params, const TimeSeries& data) {
  const auto view = subsystem_view(params.kind(), id);
  for (const auto& name : view.inputs) (void)data.channel(name);
  for (const auto& name : view.outputs) (void)data.channel(name);
  switch (id) {
    case SubsystemId::Valve: return simulate_valve(Ggov1Params::from(params), data);
    case SubsystemId::ElectricalPower: return simulate_power(Ggov1Params::from(params), data);
    case SubsystemId::SpeedController: return simulate_speed_pid(Ggov1Params::from(params), data);
    case SubsystemId::TemperatureController: return simulate_load_limiter(Ggov1Params::from(params), data);
    case SubsystemId::Exciter: return simulate_exciter(St6bParams::from(params), data);
  }
  throw Error(Errc::InvalidArgument, "invalid subsystem id");
}

}  // namespace govid
