#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "govid/error.hpp"
#include "govid/estimate.hpp"

namespace govid::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Runs `f`, turning library and filesystem failures into CliError(code).
template <class F>
auto guarded(int code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CliError&) {
    throw;
  } catch (const Error& e) {
    throw CliError(code, e.what());
  } catch (const fs::filesystem_error& e) {
    throw CliError(code, e.what());
  }
}

std::string absolute_string(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

fs::path require_path(const RunConfig& cfg, const std::string& path, const char* what, int code) {
  if (path.empty()) throw CliError(code, fmt::format("no {} file given (set data.{} or pass --{})", what, what, what));
  return cfg.resolve(path);
}

void write_text(const fs::path& path, const std::string& text) {
  guarded(kDataError, [&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kDataError, fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw CliError(kDataError, fmt::format("write failed for {}", path.string()));
  });
}

fs::path make_output_dir(const RunConfig& cfg) {
  const auto dir = cfg.resolve(cfg.output_dir);
  guarded(kDataError, [&] { fs::create_directories(dir); });
  return dir;
}

TimeSeries load_data(const RunConfig& cfg, const fs::path& path) {
  return guarded(kDataError, [&] {
    auto ts = load_csv(path);
    if (!cfg.preprocessing.bases.empty()) ts = per_unitize(ts, cfg.preprocessing.bases, true);
    return ts;
  });
}

/// Channels of the subsystem view present in `data`; throws for missing required ones.
TimeSeries view_data(const RunConfig& cfg, SubsystemId id, const TimeSeries& data) {
  const auto view = subsystem_view(cfg.model, id);
  std::vector<std::string> names;
  for (const auto& n : view.inputs) names.push_back(n);
  for (const auto& n : view.optional_inputs) {
    if (data.has(n)) names.push_back(n);
  }
  for (const auto& n : view.outputs) names.push_back(n);
  return guarded(kDataError, [&] { return data.select(names); });
}

/// Zero-phase low-pass applied alike to every channel of a subsystem record, so a
/// linear input-output relation survives the filtering.
TimeSeries prefilter(const RunConfig& cfg, const TimeSeries& data) {
  const auto names = data.names();
  return guarded(kConfigError,
                 [&] { return butterworth_lowpass(data, cfg.preprocessing.lowpass_hz, cfg.preprocessing.order, names); });
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError(kConfigError, fmt::format("--seeds: cannot parse '{}'", item));
    }
  }
  if (seeds.empty()) throw CliError(kConfigError, "--seeds: empty list");
  return seeds;
}

void set_seed(IdentifyConfig& id, std::uint64_t seed) {
  id.optimizer.cs.run.seed = seed;
  id.optimizer.ga.run.seed = seed;
  id.optimizer.pso.run.seed = seed;
}

struct Fitted {
  ModelKind model;
  std::map<std::string, double> parameters;
  std::vector<SubsystemId> subsystems;
  std::map<int, double> training_index;
  std::map<int, std::vector<GenerationRecord>> history;
};

Fitted load_fitted(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kConfigError, fmt::format("cannot open fitted parameter file {}", path.string()));
  std::stringstream text;
  text << in.rdbuf();
  try {
    const auto doc = nlohmann::json::parse(text.str());
    Fitted f{model_kind_from_string(doc.at("model").get<std::string>()), {}, {}, {}, {}};
    for (const auto& [k, v] : doc.at("parameters").items()) f.parameters[k] = v.get<double>();
    for (const auto& s : doc.at("subsystems")) {
      const int id = s.at("id").get<int>();
      f.subsystems.push_back(subsystem_from_string(std::to_string(id)));
      f.training_index[id] = s.at("index_percent").get<double>();
      for (const auto& row : s.at("history")) {
        f.history[id].push_back({row.at(0).get<std::size_t>(), row.at(1).get<double>(), row.at(2).get<double>(),
                                 row.at(3).get<std::size_t>(), row.at(4).get<std::size_t>()});
      }
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw CliError(kConfigError, fmt::format("{}: {}", path.string(), e.what()));
  } catch (const Error& e) {
    throw CliError(kConfigError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

double fmt_safe(double v) { return std::isfinite(v) ? v : 0.0; }

/// Identification history with generations numbered across rounds.
std::vector<GenerationRecord> flatten(const IdentifyResult& r) {
  std::vector<GenerationRecord> out;
  std::size_t offset = 0;
  std::size_t evals = 0;
  for (const auto& round : r.rounds) {
    for (const auto& g : round) {
      auto rec = g;
      rec.generation += offset;
      rec.evaluations += evals;
      out.push_back(rec);
    }
    if (!round.empty()) {
      offset += round.back().generation;
      evals += round.back().evaluations;
    }
  }
  return out;
}

ojson subsystem_json(const IdentifyResult& r) {
  ojson s;
  s["id"] = static_cast<int>(r.id);
  s["name"] = std::string(to_string(r.id));
  s["index_percent"] = r.index_percent;
  s["objective"] = r.objective;
  s["reached_threshold"] = r.reached_threshold;
  s["generations"] = r.generations;
  s["generations_to_threshold"] = r.generations_to_threshold ? ojson(*r.generations_to_threshold) : ojson(nullptr);
  s["evaluations"] = r.evaluations;
  if (r.ls) {
    ojson ls = ojson::object();
    for (const auto& [k, v] : r.ls->values) ls[k] = v;
    s["ls_seed"] = {{"values", ls}, {"grid_scanned", r.ls->grid_scanned}, {"condition", fmt_safe(r.ls->condition)}};
  } else {
    s["ls_seed"] = nullptr;
  }
  s["ls_failure"] = r.ls_failure;
  ojson params = ojson::object();
  for (const auto& n : r.free_names) params[n] = r.params.value(n);
  s["parameters"] = params;
  ojson mse = ojson::object();
  for (const auto& [k, v] : r.output_mse) mse[k] = v;
  s["output_mse"] = mse;
  ojson hist = ojson::array();
  for (const auto& g : flatten(r)) hist.push_back({g.generation, g.best_fitness, g.mean_fitness, g.evaluations, g.replaced});
  s["history"] = hist;
  return s;
}

std::string history_rows(int id, const std::vector<GenerationRecord>& history) {
  std::string out;
  for (const auto& g : history) {
    out += fmt::format("{},{},{:.17g},{:.17g},{},{}\n", id, g.generation, g.best_fitness, g.mean_fitness, g.evaluations,
                       g.replaced);
  }
  return out;
}

IdentifyResult run_identify(const RunConfig& cfg, SubsystemId id, const TimeSeries& data) {
  return guarded(kSimulationError, [&] { return hybrid_identify(cfg.model, id, data, cfg.params, cfg.identify); });
}

struct Validation {
  double index = 0.0;
  std::vector<double> residual;
};

Validation validate_subsystem(const RunConfig& cfg, SubsystemId id, const ParamVector& params, const TimeSeries& data) {
  const auto sim = guarded(kSimulationError, [&] { return simulate_subsystem(id, params, data); });
  const auto view = subsystem_view(cfg.model, id);
  const auto& out = view.output();
  const auto y = data.values(out);
  const auto yhat = sim.values(out);
  Validation v;
  v.index = guarded(kDataError, [&] { return error_index_percent(y, yhat); });
  v.residual.resize(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) v.residual[k] = y[k] - yhat[k];
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunConfig resolve_config(const Options& o) {
  auto cfg = load_config(o.config);
  try {
    if (o.subsystem) cfg.subsystems = {subsystem_from_string(*o.subsystem)};
    if (o.optimizer) cfg.identify.optimizer.algorithm = algorithm_from_string(*o.optimizer);
  } catch (const Error& e) {
    throw CliError(kConfigError, e.what());
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.no_ls_seed) {
    cfg.identify.ls_seed = false;
    cfg.compare.ls_seed = false;
  }
  if (o.out_dir) cfg.output_dir = absolute_string(*o.out_dir);
  if (o.input) cfg.data.input = absolute_string(*o.input);
  if (o.training) cfg.data.training = absolute_string(*o.training);
  if (o.validation) cfg.data.validation = absolute_string(*o.validation);
  if (o.fitted) cfg.data.fitted = absolute_string(*o.fitted);
  if (o.seeds) cfg.compare.seeds = parse_seeds(*o.seeds);
  if (o.optimizer) cfg.compare.algorithms = {cfg.identify.optimizer.algorithm};
  set_seed(cfg.identify, cfg.seed);
  validate_config(cfg);
  return cfg;
}

int cmd_simulate(const Options& options) {
  const auto cfg = resolve_config(options);
  const auto input = load_data(cfg, require_path(cfg, cfg.data.input, "input", kDataError));
  const auto model = guarded(kSimulationError, [&] { return build_model(cfg.model, cfg.params, input.dt(), cfg.op); });
  for (const auto& name : model.required_inputs()) {
    if (!input.has(name)) throw CliError(kDataError, fmt::format("input file lacks required channel '{}'", name));
  }
  const auto out = guarded(kSimulationError, [&] { return simulate(model, input); });
  const auto dir = make_output_dir(cfg);
  guarded(kDataError, [&] { write_csv(out, dir / "simulated.csv"); });
  spdlog::info("wrote {} samples of {} taps to {}", out.length(), out.channels().size(), (dir / "simulated.csv").string());
  return kOk;
}

int cmd_gen_signal(const Options& options) {
  const auto cfg = resolve_config(options);
  const auto& sig = cfg.signal;
  if (sig.channels.empty()) throw CliError(kConfigError, "signal.channels is empty");
  TimeSeries ts = guarded(kConfigError, [&] {
    TimeSeries t(sig.dt);
    for (const auto& c : sig.channels) t.set(c.name, square_pulse(sig.dt, sig.duration, c.period, c.duty, c.low, c.high));
    return t;
  });
  if (sig.noise_snr_db) {
    std::vector<std::string> noisy;
    for (const auto& c : ts.channels()) {
      const bool listed = sig.noise_channels.empty() ||
                          std::find(sig.noise_channels.begin(), sig.noise_channels.end(), c.name) != sig.noise_channels.end();
      // A flat channel has no signal power to scale noise against.
      if (listed && variance(c.values) > 0.0) noisy.push_back(c.name);
    }
    for (const auto& n : sig.noise_channels) {
      if (!ts.has(n)) throw CliError(kConfigError, fmt::format("signal.noise_channels: unknown channel '{}'", n));
    }
    if (!noisy.empty()) ts = guarded(kConfigError, [&] { return add_noise(ts, *sig.noise_snr_db, cfg.seed, noisy); });
  }
  const auto dir = make_output_dir(cfg);
  guarded(kDataError, [&] { write_csv(ts, dir / "signal.csv"); });
  return kOk;
}

int cmd_identify(const Options& options) {
  const auto cfg = resolve_config(options);
  const auto training = load_data(cfg, require_path(cfg, cfg.data.training, "training", kDataError));
  std::vector<TimeSeries> per_subsystem;
  for (auto id : cfg.subsystems) {
    auto d = view_data(cfg, id, training);
    if (cfg.preprocessing.filter_identify) d = prefilter(cfg, d);
    per_subsystem.push_back(std::move(d));
  }

  ParamVector fitted = cfg.params;
  ojson subs = ojson::array();
  std::string history = "subsystem,generation,best_fitness,mean_fitness,evaluations,replaced\n";
  bool partial = false;
  for (std::size_t i = 0; i < cfg.subsystems.size(); ++i) {
    const auto id = cfg.subsystems[i];
    const auto r = run_identify(cfg, id, per_subsystem[i]);
    for (const auto& n : r.free_names) fitted.set_value(n, r.params.value(n));
    partial = partial || !r.reached_threshold;
    spdlog::info("subsystem {}: index {:.6g}% after {} generations{}", to_string(id), r.index_percent, r.generations,
                 r.reached_threshold ? "" : " (stop criterion unmet)");
    subs.push_back(subsystem_json(r));
    history += history_rows(static_cast<int>(id), flatten(r));
  }

  ojson doc;
  doc["model"] = std::string(to_string(cfg.model));
  doc["config_digest"] = config_digest(cfg);
  doc["seed"] = cfg.seed;
  doc["optimizer"] = std::string(to_string(cfg.identify.optimizer.algorithm));
  doc["ls_seed"] = cfg.identify.ls_seed;
  doc["stop_index_percent"] = cfg.identify.stop_index_percent;
  doc["partial"] = partial;
  doc["subsystems"] = subs;
  ojson params = ojson::object();
  for (const auto& p : fitted.entries()) params[p.name] = p.value;
  doc["parameters"] = params;

  const auto dir = make_output_dir(cfg);
  write_text(dir / "fitted.json", doc.dump(2) + "\n");
  write_text(dir / "history.csv", history);
  if (partial) {
    spdlog::warn("stop criterion unmet for at least one subsystem; results written and flagged partial");
    return kStopCriterionUnmet;
  }
  return kOk;
}

int cmd_validate(const Options& options) {
  auto cfg = resolve_config(options);
  const auto fitted_path = require_path(cfg, cfg.data.fitted, "fitted", kConfigError);
  const auto fitted = load_fitted(fitted_path);
  if (fitted.model != cfg.model) {
    throw CliError(kConfigError, fmt::format("fitted file is for {}, config selects {}", to_string(fitted.model),
                                             to_string(cfg.model)));
  }
  ParamVector params = cfg.params;
  for (const auto& [k, v] : fitted.parameters) {
    if (!params.contains(k)) throw CliError(kConfigError, fmt::format("fitted file: unknown parameter '{}'", k));
    params.set_value(k, v);
  }
  const auto subsystems = options.subsystem ? cfg.subsystems : fitted.subsystems;
  const auto validation = load_data(cfg, require_path(cfg, cfg.data.validation, "validation", kDataError));

  std::vector<SubsystemRun> runs;
  ParameterColumn column{"fitted", {}};
  for (auto id : subsystems) {
    auto d = view_data(cfg, id, validation);
    if (cfg.preprocessing.filter_validate) d = prefilter(cfg, d);
    const auto v = validate_subsystem(cfg, id, params, d);
    SubsystemRun run;
    run.id = id;
    run.validation_index = v.index;
    if (auto it = fitted.training_index.find(static_cast<int>(id)); it != fitted.training_index.end()) {
      run.training_index = it->second;
    }
    run.whiteness = guarded(kDataError, [&] { return whiteness_test(v.residual, cfg.validation.whiteness); });
    for (const auto& n : subsystem_view(params.kind(), id).free_params) {
      run.parameters[n] = params.value(n);
      column.values[n] = params.value(n);
    }
    if (auto it = fitted.history.find(static_cast<int>(id)); it != fitted.history.end()) run.history = it->second;
    spdlog::info("subsystem {}: validation index {:.6g}%, whiteness {:.4g} vs {:.4g}", to_string(id), v.index,
                 run.whiteness->statistic, run.whiteness->threshold);
    runs.push_back(std::move(run));
  }

  RunMetadata meta;
  meta.seed = cfg.seed;
  meta.config_digest = config_digest(cfg);
  meta.data_files = {fitted_path.filename().string(), cfg.resolve(cfg.data.validation).filename().string()};
  meta.optimizer = std::string(to_string(cfg.identify.optimizer.algorithm));
  auto report = guarded(kDataError, [&] {
    return build_report(std::move(runs), meta, {column}, cfg.validation.index_threshold_percent);
  });
  report.whiteness_required = cfg.validation.whiteness_required;
  const auto dir = make_output_dir(cfg);
  guarded(kDataError, [&] { write_report(report, dir); });
  return report.pass() ? kOk : kValidationFailed;
}

int cmd_compare(const Options& options) {
  const auto cfg = resolve_config(options);
  const auto training = load_data(cfg, require_path(cfg, cfg.data.training, "training", kDataError));
  const auto validation = load_data(cfg, require_path(cfg, cfg.data.validation, "validation", kDataError));
  std::vector<TimeSeries> train_sets, val_sets;
  for (auto id : cfg.subsystems) {
    auto t = view_data(cfg, id, training);
    if (cfg.preprocessing.filter_identify) t = prefilter(cfg, t);
    auto v = view_data(cfg, id, validation);
    if (cfg.preprocessing.filter_validate) v = prefilter(cfg, v);
    train_sets.push_back(std::move(t));
    val_sets.push_back(std::move(v));
  }

  // estimates[algorithm][parameter] over seeds; indices[algorithm][subsystem]
  std::map<Algorithm, std::map<std::string, std::vector<double>>> estimates;
  std::map<Algorithm, std::map<int, std::vector<double>>> val_index, train_index;
  std::string rows = "algorithm,seed,subsystem,training_index_percent,validation_index_percent\n";
  for (auto alg : cfg.compare.algorithms) {
    for (auto seed : cfg.compare.seeds) {
      RunConfig run = cfg;
      run.identify.optimizer.algorithm = alg;
      run.identify.ls_seed = cfg.compare.ls_seed;
      if (cfg.compare.fixed_budget) {
        run.identify.stop_index_percent = 0.0;
        run.identify.max_rounds = 1;
      }
      set_seed(run.identify, seed);
      for (std::size_t i = 0; i < cfg.subsystems.size(); ++i) {
        const auto id = cfg.subsystems[i];
        const auto r = run_identify(run, id, train_sets[i]);
        const auto v = validate_subsystem(run, id, r.params, val_sets[i]);
        for (const auto& n : r.free_names) estimates[alg][n].push_back(r.params.value(n));
        val_index[alg][static_cast<int>(id)].push_back(v.index);
        train_index[alg][static_cast<int>(id)].push_back(r.index_percent);
        rows += fmt::format("{},{},{},{:.17g},{:.17g}\n", to_string(alg), seed, static_cast<int>(id), r.index_percent,
                            v.index);
        spdlog::info("{} seed {} subsystem {}: validation index {:.6g}%", to_string(alg), seed, to_string(id), v.index);
      }
    }
  }
  for (auto alg : cfg.compare.algorithms) {
    for (auto id : cfg.subsystems) {
      const int k = static_cast<int>(id);
      rows += fmt::format("{},median,{},{:.17g},{:.17g}\n", to_string(alg), k, median(train_index[alg][k]),
                          median(val_index[alg][k]));
    }
  }

  std::string table = "parameter,model,true";
  for (auto alg : cfg.compare.algorithms) table += fmt::format(",{}", to_string(alg));
  table += "\n";
  for (auto kind : {ModelKind::GGOV1, ModelKind::ST6B}) {
    for (const auto& name : default_params(kind).free_names()) {
      table += fmt::format("{},{},", name, to_string(kind));
      if (kind == cfg.model) table += fmt::format("{:.17g}", cfg.params.value(name));
      for (auto alg : cfg.compare.algorithms) {
        table += ",";
        const auto& est = estimates[alg];
        if (auto it = est.find(name); kind == cfg.model && it != est.end()) table += fmt::format("{:.17g}", median(it->second));
      }
      table += "\n";
    }
  }
  const auto dir = make_output_dir(cfg);
  write_text(dir / "comparison.csv", table);
  write_text(dir / "comparison_indices.csv", rows);
  return kOk;
}

}  // namespace govid::cli
