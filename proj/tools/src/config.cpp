#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "govid/error.hpp"

namespace govid::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw CliError(kConfigError, message); }

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(fmt::format("{}: expected an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

SubsystemId subsystem_of(const json& v) {
  if (v.is_number_integer()) return subsystem_from_string(std::to_string(v.get<int>()));
  return subsystem_from_string(v.get<std::string>());
}

void read_parameters(const json& obj, ParamVector& params) {
  if (!obj.is_object()) fail("parameters: expected an object");
  for (const auto& [name, spec] : obj.items()) {
    if (!params.contains(name)) fail(fmt::format("parameters: unknown parameter '{}' for {}", name, to_string(params.kind())));
    auto& p = params.at(name);
    if (spec.is_number()) {
      p.value = spec.get<double>();
      continue;
    }
    only_keys(spec, fmt::format("parameters.{}", name), {"value", "min", "max", "free"});
    read(spec, "value", p.value);
    read(spec, "min", p.min);
    read(spec, "max", p.max);
    read(spec, "free", p.free);
  }
}

void read_operating_point(const json& obj, OperatingPoint& op) {
  only_keys(obj, "operating_point", {"p_e0", "speed", "v_t", "efd0", "terminal_time_constant", "exhaust_temp0"});
  read(obj, "p_e0", op.p_e0);
  read(obj, "speed", op.speed);
  read(obj, "v_t", op.v_t);
  read(obj, "efd0", op.efd0);
  read(obj, "terminal_time_constant", op.terminal_time_constant);
  if (auto it = obj.find("exhaust_temp0"); it != obj.end()) {
    if (it->is_null()) {
      op.exhaust_temp0.reset();
    } else {
      op.exhaust_temp0 = it->get<double>();
    }
  }
}

void read_optimizer(const json& obj, OptimizerConfig& opt) {
  only_keys(obj, "optimizer", {"algorithm", "population", "max_generations", "parallel", "cs", "ga", "pso"});
  if (auto it = obj.find("algorithm"); it != obj.end()) opt.algorithm = algorithm_from_string(it->get<std::string>());
  for (RunControl* rc : {&opt.cs.run, &opt.ga.run, &opt.pso.run}) {
    read(obj, "population", rc->population);
    read(obj, "max_generations", rc->max_generations);
    read(obj, "parallel", rc->parallel);
  }
  if (auto it = obj.find("cs"); it != obj.end()) {
    only_keys(*it, "optimizer.cs", {"p_a", "alpha", "lambda", "step_fraction"});
    read(*it, "p_a", opt.cs.p_a);
    read(*it, "alpha", opt.cs.alpha);
    read(*it, "lambda", opt.cs.lambda);
    read(*it, "step_fraction", opt.cs.step_fraction);
  }
  if (auto it = obj.find("ga"); it != obj.end()) {
    only_keys(*it, "optimizer.ga",
              {"tournament", "crossover_rate", "blend_alpha", "mutation_rate", "mutation_sigma_fraction", "elites"});
    read(*it, "tournament", opt.ga.tournament);
    read(*it, "crossover_rate", opt.ga.crossover_rate);
    read(*it, "blend_alpha", opt.ga.blend_alpha);
    read(*it, "mutation_rate", opt.ga.mutation_rate);
    read(*it, "mutation_sigma_fraction", opt.ga.mutation_sigma_fraction);
    read(*it, "elites", opt.ga.elites);
  }
  if (auto it = obj.find("pso"); it != obj.end()) {
    only_keys(*it, "optimizer.pso", {"inertia", "cognitive", "social", "velocity_clamp_fraction"});
    read(*it, "inertia", opt.pso.inertia);
    read(*it, "cognitive", opt.pso.cognitive);
    read(*it, "social", opt.pso.social);
    read(*it, "velocity_clamp_fraction", opt.pso.velocity_clamp_fraction);
  }
}

void read_identification(const json& obj, RunConfig& cfg) {
  only_keys(obj, "identification",
            {"ls_seed", "max_rounds", "stop_index_percent", "grid_points", "failure_penalty", "subsystems"});
  auto& id = cfg.identify;
  read(obj, "ls_seed", id.ls_seed);
  read(obj, "max_rounds", id.max_rounds);
  read(obj, "stop_index_percent", id.stop_index_percent);
  read(obj, "grid_points", id.grid_points);
  read(obj, "failure_penalty", id.failure_penalty);
  if (auto it = obj.find("subsystems"); it != obj.end()) {
    cfg.subsystems.clear();
    for (const auto& v : *it) cfg.subsystems.push_back(subsystem_of(v));
  }
}

void read_preprocessing(const json& obj, Preprocessing& pre) {
  only_keys(obj, "preprocessing", {"lowpass_hz", "order", "filter_identify", "filter_validate", "bases"});
  read(obj, "lowpass_hz", pre.lowpass_hz);
  read(obj, "order", pre.order);
  read(obj, "filter_identify", pre.filter_identify);
  read(obj, "filter_validate", pre.filter_validate);
  if (auto it = obj.find("bases"); it != obj.end()) {
    pre.bases.clear();
    for (const auto& [k, v] : it->items()) pre.bases[k] = v.get<double>();
  }
}

WhitenessThreshold threshold_of(const std::string& s) {
  if (s == "density") return WhitenessThreshold::Density;
  if (s == "chi2") return WhitenessThreshold::ChiSquare;
  fail(fmt::format("validation.whiteness.threshold: expected 'density' or 'chi2', got '{}'", s));
}

void read_validation(const json& obj, ValidationSettings& val) {
  only_keys(obj, "validation", {"index_threshold_percent", "whiteness"});
  read(obj, "index_threshold_percent", val.index_threshold_percent);
  if (auto it = obj.find("whiteness"); it != obj.end()) {
    only_keys(*it, "validation.whiteness", {"max_lag", "alpha", "threshold", "remove_mean", "required"});
    read(*it, "max_lag", val.whiteness.max_lag);
    read(*it, "alpha", val.whiteness.alpha);
    if (auto t = it->find("threshold"); t != it->end()) val.whiteness.threshold = threshold_of(t->get<std::string>());
    read(*it, "remove_mean", val.whiteness.remove_mean);
    read(*it, "required", val.whiteness_required);
  }
}

void read_compare(const json& obj, CompareSettings& cmp) {
  only_keys(obj, "compare", {"seeds", "algorithms", "ls_seed", "fixed_budget"});
  read(obj, "seeds", cmp.seeds);
  if (auto it = obj.find("algorithms"); it != obj.end()) {
    cmp.algorithms.clear();
    for (const auto& a : *it) cmp.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  }
  read(obj, "ls_seed", cmp.ls_seed);
  read(obj, "fixed_budget", cmp.fixed_budget);
}

void read_signal(const json& obj, SignalSettings& sig) {
  only_keys(obj, "signal", {"dt", "duration", "channels", "noise_snr_db", "noise_channels"});
  read(obj, "dt", sig.dt);
  read(obj, "duration", sig.duration);
  if (auto it = obj.find("channels"); it != obj.end()) {
    sig.channels.clear();
    for (const auto& c : *it) {
      only_keys(c, "signal.channels[]", {"name", "period", "duty", "low", "high"});
      PulseChannel p;
      if (!c.contains("name")) fail("signal.channels[]: 'name' is required");
      read(c, "name", p.name);
      read(c, "period", p.period);
      read(c, "duty", p.duty);
      read(c, "low", p.low);
      p.high = p.low;
      read(c, "high", p.high);
      sig.channels.push_back(std::move(p));
    }
  }
  if (auto it = obj.find("noise_snr_db"); it != obj.end()) {
    if (it->is_null()) {
      sig.noise_snr_db.reset();
    } else {
      sig.noise_snr_db = it->get<double>();
    }
  }
  read(obj, "noise_channels", sig.noise_channels);
}

void read_data(const json& obj, DataPaths& d) {
  only_keys(obj, "data", {"input", "training", "validation", "fitted"});
  read(obj, "input", d.input);
  read(obj, "training", d.training);
  read(obj, "validation", d.validation);
  read(obj, "fitted", d.fitted);
}

std::string hex_sha256(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw CliError(kConfigError, "SHA-256 digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    only_keys(doc, "config",
              {"model", "parameters", "operating_point", "optimizer", "identification", "preprocessing", "validation",
               "compare", "signal", "data", "output_dir", "seed"});
    if (auto it = doc.find("model"); it != doc.end()) {
      cfg.model = model_kind_from_string(it->get<std::string>());
      cfg.params = default_params(cfg.model);
    }
    if (auto it = doc.find("parameters"); it != doc.end()) read_parameters(*it, cfg.params);
    if (auto it = doc.find("operating_point"); it != doc.end()) read_operating_point(*it, cfg.op);
    if (auto it = doc.find("optimizer"); it != doc.end()) read_optimizer(*it, cfg.identify.optimizer);
    if (auto it = doc.find("identification"); it != doc.end()) read_identification(*it, cfg);
    if (auto it = doc.find("preprocessing"); it != doc.end()) read_preprocessing(*it, cfg.preprocessing);
    if (auto it = doc.find("validation"); it != doc.end()) read_validation(*it, cfg.validation);
    if (auto it = doc.find("compare"); it != doc.end()) read_compare(*it, cfg.compare);
    if (auto it = doc.find("signal"); it != doc.end()) read_signal(*it, cfg.signal);
    if (auto it = doc.find("data"); it != doc.end()) read_data(*it, cfg.data);
    read(doc, "output_dir", cfg.output_dir);
    read(doc, "seed", cfg.seed);
  } catch (const json::exception& e) {
    fail(fmt::format("config: {}", e.what()));
  } catch (const Error& e) {
    fail(fmt::format("config: {}", e.what()));
  }
  if (cfg.subsystems.empty()) cfg.subsystems = subsystems_of(cfg.model);
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return parse_config(json::object(), std::filesystem::current_path());
  std::ifstream in(*path, std::ios::binary);
  if (!in) fail(fmt::format("cannot open config file {}", path->string()));
  std::stringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::exception& e) {
    fail(fmt::format("{}: {}", path->string(), e.what()));
  }
  auto dir = std::filesystem::absolute(*path).parent_path();
  return parse_config(doc, dir);
}

void validate_config(const RunConfig& cfg) {
  try {
    if (cfg.model == ModelKind::GGOV1) {
      (void)Ggov1Params::from(cfg.params);
    } else {
      (void)St6bParams::from(cfg.params);
    }
  } catch (const Error& e) {
    fail(fmt::format("parameters: {}", e.what()));
  }
  for (const auto& p : cfg.params.entries()) {
    if (!(p.min <= p.max)) fail(fmt::format("parameters.{}: min {} exceeds max {}", p.name, p.min, p.max));
    if (p.free && !(p.min < p.max)) fail(fmt::format("parameters.{}: a free parameter needs min < max", p.name));
    if (p.free && (p.value < p.min || p.value > p.max)) {
      fail(fmt::format("parameters.{}: value {} outside [{}, {}]", p.name, p.value, p.min, p.max));
    }
  }
  for (auto id : cfg.subsystems) {
    if (model_of(id) != cfg.model) {
      fail(fmt::format("subsystem {} does not belong to model {}", to_string(id), to_string(cfg.model)));
    }
  }
  const auto& run = cfg.identify.optimizer.run();
  if (run.population < 2) fail("optimizer.population must be >= 2");
  if (cfg.identify.max_rounds < 1) fail("identification.max_rounds must be >= 1");
  if (!(cfg.identify.stop_index_percent >= 0.0)) fail("identification.stop_index_percent must be >= 0");
  if (!(cfg.identify.optimizer.cs.lambda > 1.0 && cfg.identify.optimizer.cs.lambda <= 3.0)) {
    fail("optimizer.cs.lambda must satisfy 1 < lambda <= 3");
  }
  if (!(cfg.identify.optimizer.cs.p_a > 0.0 && cfg.identify.optimizer.cs.p_a < 1.0)) fail("optimizer.cs.p_a not in (0, 1)");
  if (!(cfg.preprocessing.lowpass_hz > 0.0)) fail("preprocessing.lowpass_hz must be > 0");
  if (cfg.preprocessing.order < 1) fail("preprocessing.order must be >= 1");
  for (const auto& [name, base] : cfg.preprocessing.bases) {
    if (!(base > 0.0)) fail(fmt::format("preprocessing.bases.{} must be > 0", name));
  }
  const auto& w = cfg.validation.whiteness;
  if (w.max_lag < 1) fail("validation.whiteness.max_lag must be >= 1");
  try {
    (void)density_beta(w.alpha);
  } catch (const Error& e) {
    fail(fmt::format("validation.whiteness.alpha: {}", e.what()));
  }
  if (cfg.compare.seeds.empty()) fail("compare.seeds must not be empty");
  if (cfg.compare.algorithms.empty()) fail("compare.algorithms must not be empty");
  if (!(cfg.signal.dt > 0.0)) fail("signal.dt must be > 0");
  if (!(cfg.signal.duration >= 0.0)) fail("signal.duration must be >= 0");
  for (const auto& c : cfg.signal.channels) {
    if (c.name.empty()) fail("signal.channels[]: empty name");
    if (!(c.duty > 0.0 && c.duty < 1.0)) fail(fmt::format("signal.channels.{}: duty must be in (0, 1)", c.name));
    if (!(c.period >= 2.0 * cfg.signal.dt)) fail(fmt::format("signal.channels.{}: period shorter than 2 dt", c.name));
  }
  if (cfg.output_dir.empty()) fail("output_dir must not be empty");
}

nlohmann::ordered_json canonical_json(const RunConfig& cfg) {
  ojson doc;
  doc["model"] = std::string(to_string(cfg.model));
  ojson params = ojson::object();
  for (const auto& p : cfg.params.entries()) {
    params[p.name] = {{"value", p.value}, {"min", p.min}, {"max", p.max}, {"free", p.free}};
  }
  doc["parameters"] = params;
  doc["operating_point"] = {{"p_e0", cfg.op.p_e0},
                            {"speed", cfg.op.speed},
                            {"v_t", cfg.op.v_t},
                            {"efd0", cfg.op.efd0},
                            {"terminal_time_constant", cfg.op.terminal_time_constant},
                            {"exhaust_temp0", cfg.op.exhaust_temp0 ? ojson(*cfg.op.exhaust_temp0) : ojson(nullptr)}};
  const auto& opt = cfg.identify.optimizer;
  const auto& run = opt.run();
  doc["optimizer"] = {
      {"algorithm", std::string(to_string(opt.algorithm))},
      {"population", run.population},
      {"max_generations", run.max_generations},
      {"parallel", run.parallel},
      {"cs", {{"p_a", opt.cs.p_a}, {"alpha", opt.cs.alpha}, {"lambda", opt.cs.lambda}, {"step_fraction", opt.cs.step_fraction}}},
      {"ga",
       {{"tournament", opt.ga.tournament},
        {"crossover_rate", opt.ga.crossover_rate},
        {"blend_alpha", opt.ga.blend_alpha},
        {"mutation_rate", opt.ga.mutation_rate},
        {"mutation_sigma_fraction", opt.ga.mutation_sigma_fraction},
        {"elites", opt.ga.elites}}},
      {"pso",
       {{"inertia", opt.pso.inertia},
        {"cognitive", opt.pso.cognitive},
        {"social", opt.pso.social},
        {"velocity_clamp_fraction", opt.pso.velocity_clamp_fraction}}}};
  ojson subs = ojson::array();
  for (auto id : cfg.subsystems) subs.push_back(static_cast<int>(id));
  doc["identification"] = {{"ls_seed", cfg.identify.ls_seed},
                           {"max_rounds", cfg.identify.max_rounds},
                           {"stop_index_percent", cfg.identify.stop_index_percent},
                           {"grid_points", cfg.identify.grid_points},
                           {"failure_penalty", cfg.identify.failure_penalty},
                           {"subsystems", subs}};
  ojson bases = ojson::object();
  for (const auto& [k, v] : cfg.preprocessing.bases) bases[k] = v;
  doc["preprocessing"] = {{"lowpass_hz", cfg.preprocessing.lowpass_hz},
                          {"order", cfg.preprocessing.order},
                          {"filter_identify", cfg.preprocessing.filter_identify},
                          {"filter_validate", cfg.preprocessing.filter_validate},
                          {"bases", bases}};
  const auto& w = cfg.validation.whiteness;
  doc["validation"] = {{"index_threshold_percent", cfg.validation.index_threshold_percent},
                       {"whiteness",
                        {{"max_lag", w.max_lag},
                         {"alpha", w.alpha},
                         {"threshold", w.threshold == WhitenessThreshold::Density ? "density" : "chi2"},
                         {"remove_mean", w.remove_mean},
                         {"required", cfg.validation.whiteness_required}}}};
  ojson algs = ojson::array();
  for (auto a : cfg.compare.algorithms) algs.push_back(std::string(to_string(a)));
  doc["compare"] = {{"seeds", cfg.compare.seeds},
                    {"algorithms", algs},
                    {"ls_seed", cfg.compare.ls_seed},
                    {"fixed_budget", cfg.compare.fixed_budget}};
  ojson channels = ojson::array();
  for (const auto& c : cfg.signal.channels) {
    channels.push_back({{"name", c.name}, {"period", c.period}, {"duty", c.duty}, {"low", c.low}, {"high", c.high}});
  }
  doc["signal"] = {{"dt", cfg.signal.dt},
                   {"duration", cfg.signal.duration},
                   {"channels", channels},
                   {"noise_snr_db", cfg.signal.noise_snr_db ? ojson(*cfg.signal.noise_snr_db) : ojson(nullptr)},
                   {"noise_channels", cfg.signal.noise_channels}};
  doc["data"] = {{"input", cfg.data.input},
                 {"training", cfg.data.training},
                 {"validation", cfg.data.validation},
                 {"fitted", cfg.data.fitted}};
  doc["output_dir"] = cfg.output_dir;
  doc["seed"] = cfg.seed;
  return doc;
}

std::string config_digest(const RunConfig& cfg) { return hex_sha256(canonical_json(cfg).dump()); }

}  // namespace govid::cli
