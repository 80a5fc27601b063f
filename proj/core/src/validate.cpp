#include "govid/validate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "govid/error.hpp"

namespace govid {

namespace {

std::string_view to_string(WhitenessThreshold t) { return t == WhitenessThreshold::Density ? "density" : "chi2"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(Errc::Io, fmt::format("write failed for {}", path.string()));
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> e, std::size_t max_lag) {
  const std::size_t n = e.size();
  if (max_lag < 1 || n <= max_lag) {
    throw Error(Errc::TooFewSamples, fmt::format("{} samples for max lag {}", n, max_lag));
  }
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) {
    double acc = 0.0;
    for (std::size_t t = tau; t < n; ++t) acc += e[t] * e[t - tau];
    r[tau] = acc / static_cast<double>(n);
  }
  return r;
}

double density_beta(double alpha) {
  const double peak = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (!(alpha > 0.0 && alpha < peak)) {
    throw Error(Errc::AlphaOutOfRange, fmt::format("alpha = {} must lie in (0, {:.6f})", alpha, peak));
  }
  // phi(beta) - alpha is decreasing on beta > 0
  double lo = 0.0;
  double hi = 1.0;
  while (peak * std::exp(-hi * hi / 2.0) > alpha) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (peak * std::exp(-mid * mid / 2.0) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double density_beta_squared(double alpha) {
  const double b = density_beta(alpha);
  return b * b;
}

double chi_square_threshold(double alpha, std::size_t dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::AlphaOutOfRange, fmt::format("alpha = {} not in (0, 1)", alpha));
  if (dof == 0) throw Error(Errc::InvalidArgument, "chi-square needs at least one degree of freedom");
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(static_cast<double>(dof)), alpha));
}

WhitenessResult whiteness_test(std::span<const double> e, const WhitenessOptions& options) {
  if (options.max_lag < 1 || e.size() <= options.max_lag) {
    throw Error(Errc::TooFewSamples, fmt::format("{} samples for max lag {}", e.size(), options.max_lag));
  }
  WhitenessResult res;
  res.confidence_alpha = options.alpha;
  res.kind = options.threshold;
  res.samples = e.size();
  const double beta = density_beta(options.alpha);
  res.beta_squared = beta * beta;

  std::vector<double> x(e.begin(), e.end());
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi && (options.remove_mean || *lo == 0.0)) throw Error(Errc::ConstantChannel, "residual is constant");
  if (options.remove_mean) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
  }
  res.autocorr = autocorrelation(x, options.max_lag);
  const double r0 = res.autocorr[0];
  if (!(r0 > 0.0)) throw Error(Errc::ConstantChannel, "residual has zero energy");
  double acc = 0.0;
  for (std::size_t tau = 1; tau <= options.max_lag; ++tau) acc += res.autocorr[tau] * res.autocorr[tau];
  const double n = static_cast<double>(x.size());
  res.statistic = n / (r0 * r0) * acc;
  if (options.threshold == WhitenessThreshold::Density) {
    res.threshold = res.beta_squared;
    res.band = beta / std::sqrt(n);
  } else {
    res.threshold = chi_square_threshold(options.alpha, options.max_lag);
    const double z = boost::math::quantile(boost::math::complement(boost::math::normal(), options.alpha / 2.0));
    res.band = z / std::sqrt(n);
  }
  res.pass = res.statistic < res.threshold;
  return res;
}

bool ValidationReport::subsystem_pass(const SubsystemRun& run) const {
  const auto index = run.validation_index ? run.validation_index : run.training_index;
  if (!index || !(*index < index_threshold)) return false;
  return !whiteness_required || !run.whiteness || run.whiteness->pass;
}

bool ValidationReport::pass() const {
  for (const auto& run : subsystems) {
    if (!subsystem_pass(run)) return false;
  }
  return !subsystems.empty();
}

ValidationReport build_report(std::vector<SubsystemRun> runs, RunMetadata metadata, std::vector<ParameterColumn> table,
                              double index_threshold) {
  if (runs.empty()) throw Error(Errc::IncompleteRun, "no runs to report");
  for (const auto& run : runs) {
    if (!run.training_index && !run.validation_index) {
      throw Error(Errc::IncompleteRun, fmt::format("subsystem {} has no error index", to_string(run.id)));
    }
  }
  if (metadata.config_digest.empty()) throw Error(Errc::IncompleteRun, "run metadata lacks the config digest");
  std::stable_sort(runs.begin(), runs.end(),
                   [](const SubsystemRun& a, const SubsystemRun& b) { return static_cast<int>(a.id) < static_cast<int>(b.id); });
  ValidationReport report;
  report.subsystems = std::move(runs);
  report.metadata = std::move(metadata);
  report.parameter_table = std::move(table);
  report.index_threshold = index_threshold;
  return report;
}

std::string report_json(const ValidationReport& report) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["metadata"] = {{"seed", report.metadata.seed},
                     {"config_digest", report.metadata.config_digest},
                     {"data_files", report.metadata.data_files},
                     {"optimizer", report.metadata.optimizer}};
  doc["index_threshold_percent"] = report.index_threshold;
  doc["whiteness_required"] = report.whiteness_required;
  json subs = json::array();
  for (const auto& run : report.subsystems) {
    json s;
    s["id"] = static_cast<int>(run.id);
    s["name"] = std::string(to_string(run.id));
    s["training_index_percent"] = run.training_index ? json(*run.training_index) : json(nullptr);
    s["validation_index_percent"] = run.validation_index ? json(*run.validation_index) : json(nullptr);
    if (run.whiteness) {
      const auto& w = *run.whiteness;
      s["whiteness"] = {{"statistic", w.statistic},   {"threshold", w.threshold},
                        {"threshold_kind", std::string(to_string(w.kind))},
                        {"beta_squared", w.beta_squared}, {"alpha", w.confidence_alpha},
                        {"max_lag", w.autocorr.size() - 1}, {"samples", w.samples},
                        {"band", w.band},               {"pass", w.pass}};
    } else {
      s["whiteness"] = nullptr;
    }
    json params = json::object();
    for (const auto& [k, v] : run.parameters) params[k] = v;
    s["parameters"] = params;
    s["pass"] = report.subsystem_pass(run);
    subs.push_back(std::move(s));
  }
  doc["subsystems"] = std::move(subs);
  json table = json::array();
  for (const auto& col : report.parameter_table) {
    json values = json::object();
    for (const auto& [k, v] : col.values) values[k] = v;
    table.push_back({{"label", col.label}, {"values", values}});
  }
  doc["parameter_table"] = std::move(table);
  doc["pass"] = report.pass();
  return doc.dump(2) + "\n";
}

std::string autocorr_csv(const ValidationReport& report) {
  std::string out = "subsystem,lag,autocorr,normalized,band\n";
  for (const auto& run : report.subsystems) {
    if (!run.whiteness) continue;
    const auto& r = run.whiteness->autocorr;
    for (std::size_t tau = 0; tau < r.size(); ++tau) {
      out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", static_cast<int>(run.id), tau, r[tau], r[tau] / r[0],
                         run.whiteness->band);
    }
  }
  return out;
}

std::string history_csv(const ValidationReport& report) {
  std::string out = "subsystem,generation,best_fitness,mean_fitness,evaluations\n";
  for (const auto& run : report.subsystems) {
    for (const auto& g : run.history) {
      out += fmt::format("{},{},{:.17g},{:.17g},{}\n", static_cast<int>(run.id), g.generation, g.best_fitness,
                         g.mean_fitness, g.evaluations);
    }
  }
  return out;
}

void write_report(const ValidationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_json(report));
  write_text(dir / "autocorr.csv", autocorr_csv(report));
  write_text(dir / "history.csv", history_csv(report));
}

}  // namespace govid
