#include <benchmark/benchmark.h>

#include "govid/plants.hpp"

namespace {

govid::TimeSeries ggov1_inputs(double duration) {
  govid::TimeSeries ts(1e-3);
  ts.set(govid::taps::p_ref, govid::square_pulse(1e-3, duration, 20.0, 0.5, 0.75, 0.78125));
  ts.set(govid::taps::speed, govid::square_pulse(1e-3, duration, 15.0, 0.5, 1.0, 1.0005));
  ts.set(govid::taps::exhaust_temp, govid::square_pulse(1e-3, duration, 12.0, 0.5, 0.9, 0.92));
  return ts;
}

void BM_SimulateGgov1(benchmark::State& state) {
  govid::OperatingPoint op;
  op.exhaust_temp0 = 0.9;
  const auto model = govid::build_model(govid::ModelKind::GGOV1, govid::default_ggov1_params(), 1e-3, op);
  const auto in = ggov1_inputs(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(govid::simulate(model, in));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.length()));
}
BENCHMARK(BM_SimulateGgov1)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_SimulateSt6b(benchmark::State& state) {
  const auto model = govid::build_model(govid::ModelKind::ST6B, govid::default_st6b_params(), 1e-3);
  const auto in = govid::square_pulse_series(govid::taps::v_ref, 1e-3, 60.0, 20.0, 0.5, 1.0, 1.02);
  for (auto _ : state) benchmark::DoNotOptimize(govid::simulate(model, in));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.length()));
}
BENCHMARK(BM_SimulateSt6b)->Unit(benchmark::kMillisecond);

void BM_SubsystemObjective(benchmark::State& state) {
  const auto id = static_cast<govid::SubsystemId>(state.range(0));
  const auto kind = govid::model_of(id);
  govid::OperatingPoint op;
  op.exhaust_temp0 = 0.9;
  const auto model = govid::build_model(kind, govid::default_params(kind), 1e-3, op);
  const auto full = kind == govid::ModelKind::GGOV1
                        ? govid::simulate(model, ggov1_inputs(60.0))
                        : govid::simulate(model, govid::square_pulse_series(govid::taps::v_ref, 1e-3, 60.0, 20.0, 0.5,
                                                                            1.0, 1.02));
  const auto params = govid::default_params(kind);
  for (auto _ : state) benchmark::DoNotOptimize(govid::simulate_subsystem(id, params, full));
}
BENCHMARK(BM_SubsystemObjective)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

}  // namespace
