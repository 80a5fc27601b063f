// Acceptance run: one PASS/FAIL line per criterion, optional criterion number
// on the command line. Exit status is nonzero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "datasets.hpp"
#include "govid/blocks.hpp"
#include "govid/estimate.hpp"
#include "govid/identify.hpp"
#include "govid/optim.hpp"
#include "govid/plants.hpp"
#include "govid/validate.hpp"

using namespace govid;
namespace b = govid::blocks;
using testdata::Split;

namespace {

// Pinned tolerances.
constexpr double kParamRelTol = 0.02;
constexpr double kParamAbsTolAtZero = 0.01;
constexpr double kMaxSecondsPerSubsystem = 300.0;
constexpr double kIndexBar = 0.5;
constexpr double kNoiseSnrDb = 40.0;
constexpr double kLsCoeffTol = 1e-8;
constexpr std::size_t kGridSide = 100;  // 100 x 100 = 1e4 points
constexpr double kSphereBar = 1e-3;
constexpr double kLevyExponent = 1.5;
constexpr double kLevyTol = 0.15;
constexpr double kGaRatio = 2.0;
constexpr double kBeta = 2.7153;
constexpr double kBetaTol = 1e-3;
constexpr double kArRejectBar = 0.999;
constexpr double kLagStepTol = 1e-4;
constexpr double kLeadLagTol = 1e-12;
constexpr double kDroopTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> info;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Zero-phase 40 Hz prefilter on every channel, as the identify command applies it.
TimeSeries prefiltered(const TimeSeries& data) {
  const auto names = data.names();
  return butterworth_lowpass(data, 40.0, 2, names);
}

IdentifyConfig identify_config(Algorithm alg, bool ls, std::uint64_t seed, bool fixed_budget) {
  IdentifyConfig cfg;
  cfg.optimizer.algorithm = alg;
  cfg.ls_seed = ls;
  cfg.optimizer.run().seed = seed;
  if (fixed_budget) {
    cfg.stop_index_percent = 0.0;
    cfg.max_rounds = 1;
  }
  return cfg;
}

/// Defaults with every free parameter moved to the middle of its bounds, so
/// nothing of the generating values reaches the search.
ParamVector scratch_base(ModelKind kind) {
  const auto defaults = default_params(kind);
  auto p = defaults;
  for (const auto& e : defaults.entries()) {
    if (e.free) p.set_value(e.name, 0.5 * (e.min + e.max));
  }
  return p;
}

/// Validation index on the primary output and the residual behind it.
std::pair<double, std::vector<double>> validate_on(SubsystemId id, const ParamVector& params, const TimeSeries& data) {
  const auto sim = simulate_subsystem(id, params, data);
  const auto view = subsystem_view(model_of(id), id);
  const auto y = data.values(view.output());
  const auto yhat = sim.values(view.output());
  std::vector<double> e(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) e[k] = y[k] - yhat[k];
  return {error_index_percent(y, yhat), e};
}

constexpr SubsystemId kAll[] = {SubsystemId::Valve, SubsystemId::ElectricalPower, SubsystemId::SpeedController,
                                SubsystemId::TemperatureController, SubsystemId::Exciter};

// 1. Noiseless round trip recovers every free parameter.
Outcome noiseless_round_trip() {
  Outcome o{true, "", {}};
  double worst_rel = 0.0, slowest = 0.0;
  for (auto id : kAll) {
    const auto kind = model_of(id);
    const auto truth = default_params(kind);
    const auto data = testdata::subsystem_record(id, Split::Training);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = hybrid_identify(kind, id, data, scratch_base(kind), identify_config(Algorithm::CS, true, 0, false));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    if (secs > kMaxSecondsPerSubsystem) o.pass = false;
    for (const auto& n : r.free_names) {
      const double t = truth.value(n), v = r.params.value(n);
      const bool ok = t == 0.0 ? std::abs(v) <= kParamAbsTolAtZero : std::abs(v - t) <= kParamRelTol * std::abs(t);
      if (t != 0.0) worst_rel = std::max(worst_rel, std::abs(v - t) / std::abs(t));
      if (!ok) {
        o.pass = false;
        o.info.push_back(fmt::format("subsystem {} {}: {} vs {}", static_cast<int>(id), n, v, t));
      }
    }
    o.info.push_back(fmt::format("subsystem {}: index {:.3g}%, {} generations, {:.1f} s", static_cast<int>(id),
                                 r.index_percent, r.generations, secs));
  }
  o.summary = fmt::format("worst relative error {:.2e}, slowest subsystem {:.1f} s", worst_rel, slowest);
  return o;
}

// 2. 40 dB round trip: validation index and whiteness on held-out data.
Outcome noisy_round_trip() {
  Outcome o{true, "", {}};
  int index_ok = 0, white_ok = 0, chi2_ok = 0;
  for (auto id : kAll) {
    const auto kind = model_of(id);
    const auto train = prefiltered(testdata::subsystem_record(id, Split::Training, kNoiseSnrDb, 1));
    const auto val = testdata::subsystem_record(id, Split::Validation, kNoiseSnrDb, 2);
    const auto r = hybrid_identify(kind, id, train, scratch_base(kind), identify_config(Algorithm::CS, true, 0, false));
    const auto [index, e] = validate_on(id, r.params, val);
    const auto w = whiteness_test(e);
    WhitenessOptions chi;
    chi.threshold = WhitenessThreshold::ChiSquare;
    const auto wc = whiteness_test(e, chi);
    index_ok += index < kIndexBar;
    white_ok += w.pass;
    chi2_ok += wc.pass;
    if (!(index < kIndexBar) || !w.pass) o.pass = false;
    o.info.push_back(fmt::format("subsystem {}: index {:.3g}%, statistic {:.4g} vs beta^2 {:.4g} ({}), chi2 bound {:.4g} ({})",
                                 static_cast<int>(id), index, w.statistic, w.threshold, w.pass ? "white" : "not white",
                                 wc.threshold, wc.pass ? "white" : "not white"));
    // Same held-out record through the generating parameters: the residual is the added noise alone.
    const auto e_true = validate_on(id, default_params(kind), val).second;
    const auto wt = whiteness_test(e_true);
    o.info.push_back(fmt::format("subsystem {}: generating parameters give statistic {:.4g} ({} under beta^2, {} under chi2)",
                                 static_cast<int>(id), wt.statistic, wt.pass ? "white" : "not white",
                                 whiteness_test(e_true, chi).pass ? "white" : "not white"));
  }
  o.summary = fmt::format("index < {} on {}/5, whiteness at alpha 0.01 on {}/5 (chi-square bound: {}/5)", kIndexBar,
                          index_ok, white_ok, chi2_ok);
  return o;
}

// 3. LS recovers bilinear coefficients; a 1e4-point grid finds nothing better.
Outcome ls_oracle() {
  const double dt = 1e-3;
  struct Case {
    const char* name;
    b::BlockSpec spec;
    std::vector<double> a, bb;  // hand-derived bilinear coefficients
  };
  auto lag_case = [&](const char* name, double t) {
    const double d = 2 * t + dt;
    return Case{name, b::lag(t), {(2 * t - dt) / d}, {dt / d, dt / d}};
  };
  const double kp = 3.10, ki = 0.90, tl = 0.5, tb = 0.79;
  std::vector<Case> cases{lag_case("T_act lag", 1.83), lag_case("T_pelec lag", 1.10), lag_case("T_fload lag", 3.0),
                          Case{"speed PI", b::pid(kp, ki, 0, 0), {1.0}, {kp + ki * dt / 2, -kp + ki * dt / 2}},
                          Case{"lead-lag",
                               b::lead_lag(tl, tb),
                               {(2 * tb - dt) / (2 * tb + dt)},
                               {(2 * tl + dt) / (2 * tb + dt), (dt - 2 * tl) / (2 * tb + dt)}}};

  Outcome o{true, "", {}};
  double worst = 0.0;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (const auto& c : cases) {
    std::vector<double> u(5000), y(u.size());
    for (double& v : u) v = n01(rng);
    auto s = b::make_block(c.spec, dt, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) y[k] = b::step_block(s, u[k], dt);
    const auto fit = ls_estimate(build_regressor(u, y, ArxOrder{c.a.size(), c.bb.size()}));
    std::vector<double> want(c.a);
    want.insert(want.end(), c.bb.begin(), c.bb.end());
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(fit.theta(static_cast<Eigen::Index>(i)) - want[i]));
  }
  if (!(worst <= kLsCoeffTol)) o.pass = false;

  // Grid over (a1, b0) of the actuator lag with measurement noise on y, so the
  // LS optimum is not a trivial zero.
  std::vector<double> u(5000), y(u.size());
  for (double& v : u) v = n01(rng);
  auto s = b::make_block(b::lag(1.83), dt, 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) y[k] = b::step_block(s, u[k], dt) + 1e-3 * n01(rng);
  const auto reg = build_regressor(u, y, ArxOrder{1, 2});
  const auto fit = ls_estimate(reg);
  const auto rows = static_cast<double>(reg.Y.size());
  auto cost = [&](const Eigen::VectorXd& th) { return (reg.Y - reg.X * th).squaredNorm() / rows; };
  const double best = cost(fit.theta);
  double grid_min = std::numeric_limits<double>::infinity();
  const double half = 1e-3;
  for (std::size_t i = 0; i < kGridSide; ++i) {
    for (std::size_t j = 0; j < kGridSide; ++j) {
      Eigen::VectorXd th = fit.theta;
      th(0) += half * (2.0 * static_cast<double>(i) / (kGridSide - 1) - 1.0);
      th(1) += half * (2.0 * static_cast<double>(j) / (kGridSide - 1) - 1.0);
      grid_min = std::min(grid_min, cost(th));
    }
  }
  if (grid_min < best) o.pass = false;
  o.summary = fmt::format("worst coefficient error {:.2e} over {} blocks; grid minimum {:.6e} vs LS {:.6e}", worst,
                          cases.size(), grid_min, best);
  return o;
}

// 4. Cuckoo search bookkeeping on the sphere.
Outcome cs_suite() {
  SearchSpace space;
  space.lower.assign(5, -5.0);
  space.upper.assign(5, 5.0);
  const Objective sphere = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  auto cfg_for = [](std::uint64_t seed, bool parallel) {
    CsConfig c;
    c.run.population = 25;
    c.run.max_generations = 100;
    c.run.stop_threshold = 0.0;
    c.run.seed = seed;
    c.run.parallel = parallel;
    return c;
  };
  Outcome o{true, "", {}};
  std::vector<double> finals;
  bool monotone = true, counts = true, identical = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = cfg_for(seed, false);
    const auto r = cs_run(sphere, space, cfg);
    finals.push_back(r.best_fitness);
    const auto expected = static_cast<std::size_t>(std::llround(cfg.p_a * static_cast<double>(cfg.run.population)));
    for (std::size_t g = 1; g < r.history.size(); ++g) {
      monotone = monotone && r.history[g].best_fitness <= r.history[g - 1].best_fitness;
      counts = counts && r.history[g].replaced == expected;
    }
    if (seed < 5) {
      const auto p = cs_run(sphere, space, cfg_for(seed, true));
      identical = identical && p.best_position == r.best_position && p.best_fitness == r.best_fitness &&
                  p.history.size() == r.history.size();
      for (std::size_t g = 0; identical && g < r.history.size(); ++g) {
        identical = p.history[g].best_fitness == r.history[g].best_fitness &&
                    p.history[g].mean_fitness == r.history[g].mean_fitness;
      }
    }
  }
  const double m = median(finals);
  o.pass = m < kSphereBar && monotone && counts && identical;
  o.summary = fmt::format("median best {:.3e}; monotone {}; abandonment count {}; parallel identical {}", m, monotone,
                          counts ? "exact" : "off", identical);
  return o;
}

// 5. Heavy tail of the Levy step at lambda = 1.5, through levy_step itself.
Outcome levy_tail() {
  const double lambda = 1.5;
  SearchSpace space;
  space.lower = {-1e300};
  space.upper = {1e300};
  const std::vector<double> origin{0.0}, scale{1.0};
  std::mt19937_64 rng(5);
  const std::size_t n = 1'000'000;
  std::vector<double> mag(n);
  for (auto& m : mag) m = std::abs(levy_step(origin, 1.0, lambda, scale, space, rng)[0]);
  // Hill estimate of the survival index over the top 1 %; the density falls as |x|^-(1 + index).
  const std::size_t k = n / 100;
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(n - k - 1), mag.end());
  const double xk = mag[n - k - 1];
  double acc = 0.0;
  for (std::size_t i = n - k; i < n; ++i) acc += std::log(mag[i] / xk);
  const double index = static_cast<double>(k) / acc;
  const double exponent = 1.0 + index;
  Outcome o;
  o.pass = std::abs(exponent - kLevyExponent) <= kLevyTol;
  o.summary = fmt::format("density tail exponent {:.4f} (survival index {:.4f}) over {} draws", exponent, index, n);
  return o;
}

// 6. Optimizer ordering on the speed-governor subsystem, 40 dB, fixed budget.
Outcome optimizer_ordering() {
  const auto id = SubsystemId::SpeedController;
  const auto base = scratch_base(ModelKind::GGOV1);
  const auto train = prefiltered(testdata::subsystem_record(id, Split::Training, kNoiseSnrDb, 11));
  const auto val = testdata::subsystem_record(id, Split::Validation, kNoiseSnrDb, 12);
  std::vector<double> idx[3];
  const Algorithm algs[] = {Algorithm::CS, Algorithm::GA, Algorithm::PSO};
  for (int a = 0; a < 3; ++a) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const auto r = hybrid_identify(ModelKind::GGOV1, id, train, base, identify_config(algs[a], false, seed, true));
      idx[a].push_back(validate_on(id, r.params, val).first);
    }
  }
  const double cs = median(idx[0]), ga = median(idx[1]), pso = median(idx[2]);
  Outcome o;
  o.pass = pso > cs && cs <= kGaRatio * ga && ga <= kGaRatio * cs;
  o.summary = fmt::format("median validation index CS {:.6e}, GA {:.6e}, PSO {:.6e} over 10 seeds", cs, ga, pso);
  return o;
}

double generations_to(const IdentifyResult& r) {
  return r.generations_to_threshold ? static_cast<double>(*r.generations_to_threshold)
                                    : std::numeric_limits<double>::infinity();
}

// 7. LS seeding against uniform seeding, 20 paired seeds.
Outcome hybrid_benefit() {
  const auto id = SubsystemId::SpeedController;
  const auto base = scratch_base(ModelKind::GGOV1);
  const auto train = testdata::subsystem_record(id, Split::Training);
  auto medians = [&](double stop_percent) {
    std::vector<double> ls, uniform;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto cfg = identify_config(Algorithm::CS, true, seed, false);
      cfg.stop_index_percent = stop_percent;
      ls.push_back(generations_to(hybrid_identify(ModelKind::GGOV1, id, train, base, cfg)));
      cfg.ls_seed = false;
      uniform.push_back(generations_to(hybrid_identify(ModelKind::GGOV1, id, train, base, cfg)));
    }
    return std::pair{median(ls), median(uniform)};
  };
  const double stop = IdentifyConfig{}.stop_index_percent;
  const auto [ls, uniform] = medians(stop);
  Outcome o;
  o.pass = ls < uniform;
  o.summary = fmt::format("median generations to {:.4g}%: LS {} vs uniform {}", stop, ls, uniform);
  for (double tighter : {1e-2, 1e-3}) {
    const auto [l, u] = medians(tighter);
    o.info.push_back(fmt::format("at {:g}%: LS {} vs uniform {}", tighter, l, u));
  }
  return o;
}

// 8. Whiteness calibration.
Outcome whiteness_calibration() {
  const double beta = density_beta(0.01);
  const std::size_t trials = 10'000, n = 1000;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::size_t ar_rejected = 0, ar_rejected_chi = 0, white_rejected = 0, white_rejected_chi = 0;
  WhitenessOptions density, chi;
  chi.threshold = WhitenessThreshold::ChiSquare;
  std::vector<double> ar(n), white(n);
  for (std::size_t t = 0; t < trials; ++t) {
    double prev = n01(rng) / std::sqrt(1.0 - 0.81);
    for (std::size_t k = 0; k < n; ++k) {
      prev = 0.9 * prev + n01(rng);
      ar[k] = prev;
      white[k] = n01(rng);
    }
    ar_rejected += !whiteness_test(ar, density).pass;
    ar_rejected_chi += !whiteness_test(ar, chi).pass;
    white_rejected += !whiteness_test(white, density).pass;
    white_rejected_chi += !whiteness_test(white, chi).pass;
  }
  const auto rate = [&](std::size_t c) { return static_cast<double>(c) / static_cast<double>(trials); };
  Outcome o;
  o.pass = std::abs(beta - kBeta) <= kBetaTol && rate(ar_rejected) > kArRejectBar;
  o.summary = fmt::format("beta {:.5f}; AR(1) 0.9 rejected {:.4f}; white noise rejected {:.4f} (chi-square bound {:.4f})",
                          beta, rate(ar_rejected), rate(white_rejected), rate(white_rejected_chi));
  o.info.push_back(fmt::format("AR(1) 0.9 rejected under the chi-square bound {:.4f}", rate(ar_rejected_chi)));
  return o;
}

// 9. Block and plant analytic checks.
Outcome analytic_checks() {
  // Lag step against 1 - exp(-t/T).
  double lag_err = 0.0;
  {
    const double dt = 1e-4, t = 1.83;
    auto s = b::make_block(b::lag(t), dt, 0.0);
    for (int k = 1; k <= 100000; ++k) {
      lag_err = std::max(lag_err, std::abs(b::step_block(s, 1.0, dt) - (1.0 - std::exp(-k * dt / t))));
    }
  }
  // Lead-lag with no lead equals the lag.
  double ll_err = 0.0;
  {
    const double dt = 1e-3;
    auto ll = b::make_block(b::lead_lag(0.0, 0.79), dt, 0.0);
    auto lg = b::make_block(b::lag(0.79), dt, 0.0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
      const double u = n01(rng);
      ll_err = std::max(ll_err, std::abs(b::step_block(ll, u, dt) - b::step_block(lg, u, dt)));
    }
  }
  // Droop: +d on the reference moves settled power by +d; speed +dw moves it by -dw/r.
  double droop_err = 0.0;
  {
    const double dt = 1e-3, p0 = 0.75, d = 5.0 / 160.0, dw = 5e-4, r = 0.05;
    const auto m = build_model(ModelKind::GGOV1, default_ggov1_params(), dt);
    const std::size_t n = 300001;
    auto settle = [&](double pref, double speed) {
      TimeSeries in(dt);
      in.set(taps::p_ref, std::vector<double>(n, pref));
      in.set(taps::speed, std::vector<double>(n, speed));
      const auto out = simulate(m, in);
      return out.values(taps::p_elec).back();
    };
    droop_err = std::max(std::abs(settle(p0 + d, 1.0) - (p0 + d)), std::abs(settle(p0, 1.0 + dw) - (p0 - dw / r)));
  }
  Outcome o;
  o.pass = lag_err <= kLagStepTol && ll_err <= kLeadLagTol && droop_err <= kDroopTol;
  o.summary = fmt::format("lag step {:.2e}, lead-lag vs lag {:.2e}, droop {:.2e}", lag_err, ll_err, droop_err);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::function<Outcome()>> criteria{noiseless_round_trip, noisy_round_trip, ls_oracle,
                                                       cs_suite,             levy_tail,        optimizer_ordering,
                                                       hybrid_benefit,       whiteness_calibration, analytic_checks};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }
  bool all = true;
  for (int c : selected) {
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      fmt::print(stderr, "unknown criterion {}\n", c);
      return 2;
    }
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what()), {}};
    }
    for (const auto& line : o.info) fmt::print("  criterion {} info: {}\n", c, line);
    fmt::print("criterion {}: {} {}\n", c, o.pass ? "PASS" : "FAIL", o.summary);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
