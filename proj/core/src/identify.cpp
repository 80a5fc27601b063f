#include "govid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "govid/blocks.hpp"
#include "govid/error.hpp"
#include "govid/estimate.hpp"

namespace govid {

namespace {

double time_constant_from_pole(double a, double dt) { return dt * (1.0 + a) / (2.0 * (1.0 - a)); }

std::vector<double> lagged(std::span<const double> x, std::size_t shift, std::size_t first) {
  std::vector<double> out(x.size() - first);
  for (std::size_t k = first; k < x.size(); ++k) out[k - first] = x[k - shift];
  return out;
}

// Valve lag, then engine delay (scanned), lead-lag and turbine gain.
std::map<std::string, double> seed_valve(const TimeSeries& data, const ParamVector& base) {
  const double dt = data.dt();
  const auto fsr = data.values(taps::fsr);
  const auto valve = data.values(taps::valve);
  const auto pmech = data.values(taps::pmech);
  std::map<std::string, double> out;

  auto act = ls_estimate(build_regressor(fsr, valve, ArxOrder{1, 2}));
  out["T_act"] = time_constant_from_pole(act.theta(0), dt);

  const double dm = base.value("Dm");
  std::vector<double> q(pmech.begin(), pmech.end());
  if (data.has(taps::speed) && dm != 0.0) {
    const auto speed = data.values(taps::speed);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += dm * (speed[k] - 1.0);
  }
  const auto& eng = base.at("T_eng");
  const auto d_lo = static_cast<std::size_t>(std::llround(std::max(0.0, eng.min) / dt));
  const auto d_hi = static_cast<std::size_t>(std::llround(eng.max / dt));
  if (d_hi + 2 >= q.size()) throw Error(Errc::InsufficientData, "record shorter than the delay range");

  // Scan the delay with a common row window so residuals are comparable.
  const std::size_t first = d_hi + 1;
  const std::vector<double> y(q.begin() + static_cast<std::ptrdiff_t>(first), q.end());
  const std::vector<double> ones(y.size(), 1.0);
  const auto q1 = lagged(q, 1, first);
  double best_rss = std::numeric_limits<double>::infinity();
  std::size_t best_d = d_lo;
  LsResult best_fit;
  for (std::size_t d = d_lo; d <= d_hi; ++d) {
    auto reg = regressor_from_columns({"q(k-1)", "v(k-d)", "v(k-1-d)", "1"},
                                      {q1, lagged(valve, d, first), lagged(valve, d + 1, first), ones}, y);
    LsResult fit;
    try {
      fit = ls_estimate(reg);
    } catch (const Error&) {
      continue;
    }
    if (fit.residual_ss < best_rss) {
      best_rss = fit.residual_ss;
      best_d = d;
      best_fit = fit;
    }
  }
  if (!std::isfinite(best_rss)) throw Error(Errc::SingularRegressor, "no delay produced a solvable regression");
  const auto& th = best_fit.theta;
  const double a = th(0);
  const double k = (th(1) + th(2)) / (1.0 - a);
  const double tb = time_constant_from_pole(a, dt);
  const double c0 = th(1) / k;
  out["T_eng"] = static_cast<double>(best_d) * dt;
  out["K_turb"] = k;
  out["T_b"] = tb;
  out["T_c"] = (c0 * (2.0 * tb + dt) - dt) / 2.0;
  out["W_fnl"] = -th(3) / (k * (1.0 - a));
  return out;
}

std::map<std::string, double> seed_power(const TimeSeries& data, const ParamVector&) {
  const double dt = data.dt();
  const auto pe = data.values(taps::p_elec);
  const auto meas = data.values(taps::pe_meas);
  std::map<std::string, double> out;
  auto lag = ls_estimate(build_regressor(pe, meas, ArxOrder{1, 2}));
  out["T_pelec"] = time_constant_from_pole(lag.theta(0), dt);

  if (data.has(taps::speed)) {
    const auto ref = data.values(taps::p_ref);
    const auto err = data.values(taps::gov_err);
    const auto speed = data.values(taps::speed);
    std::vector<double> z(err.size()), w(err.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = err[k] - (ref[k] - meas[k]);
      w[k] = -(speed[k] - 1.0);
    }
    try {
      auto droop = ls_estimate(regressor_from_columns({"-dw"}, {w}, z));
      if (droop.theta(0) > 0.0) out["r"] = 1.0 / droop.theta(0);
    } catch (const Error& e) {
      spdlog::info("droop not estimable by least squares: {}", e.what());
    }
  }
  return out;
}

// Increment form of a discrete PI: dy(k) = b0 e(k) + b1 e(k-1).
std::pair<double, double> pi_from_increments(std::span<const double> e, std::span<const double> y, double dt) {
  std::vector<double> dy(y.size() - 1), e0(y.size() - 1), e1(y.size() - 1);
  for (std::size_t k = 1; k < y.size(); ++k) {
    dy[k - 1] = y[k] - y[k - 1];
    e0[k - 1] = e[k];
    e1[k - 1] = e[k - 1];
  }
  auto fit = ls_estimate(regressor_from_columns({"e(k)", "e(k-1)"}, {e0, e1}, dy));
  const double b0 = fit.theta(0);
  const double b1 = fit.theta(1);
  return {(b0 - b1) / 2.0, (b0 + b1) / dt};
}

std::map<std::string, double> seed_speed(const TimeSeries& data, const ParamVector&) {
  const auto fsrn = data.values(taps::fsrn);
  if (data.has(taps::fsr)) require_gate_branch(fsrn, data.values(taps::fsr));
  auto [kp, ki] = pi_from_increments(data.values(taps::gov_err), fsrn, data.dt());
  return {{"K_pgov", kp}, {"K_igov", ki}, {"K_dgov", 0.0}, {"T_dgov", 0.0}};
}

struct LoadFit {
  double rss = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta;
};

// For a trial T_fload the measured temperature is known, and the PI increment
//   dy(k) = -K_p dt_meas(k) - (K_i dt / 2) (t_meas(k) + t_meas(k-1)) + K_i dt L_dref
// is linear in the remaining parameters with exogenous regressors only.
LoadFit fit_load_limiter(std::span<const double> temp, std::span<const double> fsrt, double t_fload, double dt) {
  const std::size_t n = fsrt.size();
  auto lag = blocks::make_block(blocks::lag(t_fload), dt, temp[0]);
  std::vector<double> tm(n);
  for (std::size_t k = 0; k < n; ++k) tm[k] = lag.advance(temp[k]);
  std::vector<double> dy(n - 1), dt_meas(n - 1), sum(n - 1), ones(n - 1, 1.0);
  for (std::size_t k = 1; k < n; ++k) {
    dy[k - 1] = fsrt[k] - fsrt[k - 1];
    dt_meas[k - 1] = tm[k] - tm[k - 1];
    sum[k - 1] = tm[k] + tm[k - 1];
  }
  LoadFit out;
  try {
    auto fit = ls_estimate(regressor_from_columns({"dT_meas", "sum T_meas", "1"}, {dt_meas, sum, ones}, dy));
    out.rss = fit.residual_ss;
    out.theta = fit.theta;
  } catch (const Error&) {
    // unsolvable at this time constant; leave rss infinite
  }
  return out;
}

std::map<std::string, double> seed_load_limiter(const TimeSeries& data, const ParamVector& base) {
  const double dt = data.dt();
  const auto temp = data.values(taps::exhaust_temp);
  const auto fsrt = data.values(taps::fsrt);
  if (fsrt.size() < 8) throw Error(Errc::InsufficientData, "record too short");
  const auto& spec = base.at("T_fload");
  const double lo = std::log(std::max(spec.min, dt));
  const double hi = std::log(std::max(spec.max, 2.0 * dt));
  auto rss_at = [&](double log_t) { return fit_load_limiter(temp, fsrt, std::exp(log_t), dt).rss; };

  // Coarse log-spaced scan, then Brent refinement around the best point.
  constexpr int kScan = 25;
  int best = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double r = rss_at(lo + (hi - lo) * i / (kScan - 1));
    if (r < best_rss) {
      best_rss = r;
      best = i;
    }
  }
  if (!std::isfinite(best_rss)) throw Error(Errc::SingularRegressor, "load limiter regression unsolvable over T_fload");
  const double step = (hi - lo) / (kScan - 1);
  const auto [log_t, rss] = boost::math::tools::brent_find_minima(rss_at, std::max(lo, lo + step * (best - 1)),
                                                                  std::min(hi, lo + step * (best + 1)),
                                                                  std::numeric_limits<double>::digits / 2);
  (void)rss;
  const double t_fload = std::exp(log_t);
  const auto fit = fit_load_limiter(temp, fsrt, t_fload, dt);
  const double kp = -fit.theta(0);
  const double ki = -2.0 * fit.theta(1) / dt;
  std::map<std::string, double> out{{"T_fload", t_fload}, {"K_pload", kp}, {"K_iload", ki}};
  if (ki != 0.0) out["L_dref"] = fit.theta(2) / (ki * dt);
  return out;
}

std::map<std::string, double> seed_exciter(const TimeSeries& data, const ParamVector& base) {
  const double dt = data.dt();
  const auto ref = data.values(taps::v_ref);
  const auto vc = data.values(taps::v_c);
  const auto va = data.values(taps::v_a);
  const auto efd = data.values(taps::efd);
  std::vector<double> verr(ref.size());
  for (std::size_t k = 0; k < verr.size(); ++k) verr[k] = ref[k] - vc[k];
  auto [kp, ki] = pi_from_increments(verr, va, dt);

  const double kg = base.value("K_G");
  const double kvb = base.value("K_VB");
  auto g = blocks::make_block(blocks::lag(base.value("T_G"), kg), dt, kg * efd[0]);
  std::vector<double> vr(efd.size()), a(efd.size()), neg_vg(efd.size());
  for (std::size_t k = 0; k < efd.size(); ++k) {
    neg_vg[k] = -g.advance(k == 0 ? efd[0] : efd[k - 1]);
    vr[k] = efd[k] / (kvb * vc[k]);
    a[k] = va[k];
  }
  auto fit = ls_estimate(regressor_from_columns({"v_a", "-v_g"}, {a, neg_vg}, vr));
  return {{"K_PA", kp}, {"K_IA", ki}, {"K_M", fit.theta(1)}, {"K_FF", fit.theta(0) - fit.theta(1)}};
}

ParamVector with_values(const ParamVector& base, const std::vector<std::string>& names, std::span<const double> x) {
  ParamVector p = base;
  for (std::size_t i = 0; i < names.size(); ++i) p.set_value(names[i], x[i]);
  return p;
}

double guarded_objective(SubsystemId id, const ParamVector& params, const TimeSeries& data, double penalty) {
  try {
    const double v = subsystem_objective(id, params, data);
    return std::isfinite(v) ? v : penalty;
  } catch (const Error& e) {
    spdlog::trace("candidate rejected: {}", e.what());
    return penalty;
  }
}

}  // namespace

std::map<std::string, double> subsystem_output_mse(SubsystemId id, const ParamVector& params, const TimeSeries& data) {
  const auto sim = simulate_subsystem(id, params, data);
  std::map<std::string, double> out;
  for (const auto& name : subsystem_view(params.kind(), id).outputs) {
    out[name] = mse(data.values(name), sim.values(name));
  }
  return out;
}

double subsystem_objective(SubsystemId id, const ParamVector& params, const TimeSeries& data) {
  const auto per_output = subsystem_output_mse(id, params, data);
  double acc = 0.0;
  for (const auto& [name, v] : per_output) acc += v;
  return acc / static_cast<double>(per_output.size());
}

LsSeed ls_seed(SubsystemId id, const TimeSeries& data, const ParamVector& base, std::size_t grid_points) {
  std::map<std::string, double> raw;
  switch (id) {
    case SubsystemId::Valve: raw = seed_valve(data, base); break;
    case SubsystemId::ElectricalPower: raw = seed_power(data, base); break;
    case SubsystemId::SpeedController: raw = seed_speed(data, base); break;
    case SubsystemId::TemperatureController: raw = seed_load_limiter(data, base); break;
    case SubsystemId::Exciter: raw = seed_exciter(data, base); break;
  }
  LsSeed seed;
  ParamVector current = base;
  const auto view = subsystem_view(base.kind(), id);
  std::vector<std::string> missing;
  for (const auto& name : view.free_params) {
    const auto& spec = base.at(name);
    if (!spec.free) continue;
    auto it = raw.find(name);
    if (it == raw.end() || !std::isfinite(it->second)) {
      missing.push_back(name);
      continue;
    }
    const double v = std::clamp(it->second, spec.min, spec.max);
    seed.values[name] = v;
    current.set_value(name, v);
  }
  if (seed.values.empty() && !missing.empty()) {
    throw Error(Errc::SingularRegressor, "least squares determined none of the free parameters");
  }
  for (const auto& name : missing) {
    const auto& spec = base.at(name);
    double best_v = current.value(name);
    double best_f = std::numeric_limits<double>::infinity();
    const std::size_t m = std::max<std::size_t>(grid_points, 2);
    for (std::size_t i = 0; i < m; ++i) {
      const double v = spec.min + (spec.max - spec.min) * static_cast<double>(i) / static_cast<double>(m - 1);
      current.set_value(name, v);
      const double f = guarded_objective(id, current, data, std::numeric_limits<double>::infinity());
      if (f < best_f) {
        best_f = f;
        best_v = v;
      }
    }
    current.set_value(name, best_v);
    seed.values[name] = best_v;
    seed.grid_scanned.push_back(name);
  }
  return seed;
}

IdentifyResult hybrid_identify(ModelKind kind, SubsystemId id, const TimeSeries& data, const ParamVector& base,
                               const IdentifyConfig& cfg) {
  if (base.kind() != kind) throw Error(Errc::WrongModelKind, "parameter table does not match the model kind");
  const auto view = subsystem_view(kind, id);
  for (const auto& name : view.inputs) (void)data.channel(name);
  for (const auto& name : view.outputs) (void)data.channel(name);

  IdentifyResult result;
  result.id = id;
  for (const auto& name : view.free_params) {
    if (base.at(name).free) result.free_names.push_back(name);
  }
  const auto& names = result.free_names;
  if (names.empty()) throw Error(Errc::InvalidArgument, fmt::format("subsystem {} has no free parameters", to_string(id)));

  SearchSpace space;
  space.names = names;
  for (const auto& n : names) {
    space.lower.push_back(base.at(n).min);
    space.upper.push_back(base.at(n).max);
  }
  space.validate();

  std::vector<std::vector<double>> seeds;
  if (cfg.ls_seed) {
    try {
      auto s = ls_seed(id, data, base, cfg.grid_points);
      std::vector<double> x;
      for (const auto& n : names) x.push_back(s.values.at(n));
      seeds.push_back(std::move(x));
      result.ls = std::move(s);
    } catch (const Error& e) {
      result.ls_failure = e.what();
      spdlog::warn("subsystem {}: least-squares stage failed ({}); starting from a uniform population", to_string(id),
                   e.what());
    }
  }

  const Objective objective = [&](std::span<const double> x) {
    return guarded_objective(id, with_values(base, names, x), data, cfg.failure_penalty);
  };

  OptimizerConfig opt = cfg.optimizer;
  const std::uint64_t seed0 = opt.run().seed;
  opt.run().stop_threshold = cfg.stop_index_percent / 100.0;

  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::size_t offset = 0;
  const std::size_t rounds = std::max<std::size_t>(cfg.max_rounds, 1);
  for (std::size_t round = 0; round < rounds; ++round) {
    opt.run().seed = seed0 + round;
    auto res = run_optimizer(opt, objective, space, seeds);
    result.evaluations += res.evaluations;
    if (res.best_fitness < best_f) {
      best_f = res.best_fitness;
      best_x = res.best_position;
    }
    const std::size_t last = res.history.empty() ? 0 : res.history.back().generation;
    if (res.reached_threshold && !result.generations_to_threshold) {
      result.generations_to_threshold = offset + *res.generations_to_threshold;
    }
    spdlog::info("subsystem {} round {}: best objective {:.6g} after {} generations", to_string(id), round + 1,
                 res.best_fitness, last);
    offset += last;
    result.rounds.push_back(std::move(res.history));
    if (res.reached_threshold) break;
    seeds.clear();
    for (const auto& nest : res.population) seeds.push_back(nest.position);
  }
  result.generations = offset;
  result.reached_threshold = result.generations_to_threshold.has_value();
  result.params = with_values(base, names, best_x);
  result.objective = best_f;
  result.index_percent = 100.0 * best_f;
  try {
    result.output_mse = subsystem_output_mse(id, result.params, data);
  } catch (const Error&) {
    // the best point is a penalty value; nothing meaningful to report per output
  }
  return result;
}

}  // namespace govid
