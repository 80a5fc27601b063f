#include "govid/optim.hpp"

#include <algorithm>
#include <cctype>
#include <execution>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace govid {

namespace {

void check_run(const RunControl& run) {
  if (run.population < 2) throw Error(Errc::InvalidArgument, fmt::format("population {} must be >= 2", run.population));
  if (std::isnan(run.stop_threshold)) throw Error(Errc::InvalidArgument, "stop threshold is NaN");
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Lower fitness wins; equal fitness goes to the lower index.
bool better(const Population& pop, std::size_t a, std::size_t b) {
  if (pop[a].fitness != pop[b].fitness) return pop[a].fitness < pop[b].fitness;
  return a < b;
}

std::size_t best_index(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (better(pop, i, best)) best = i;
  }
  return best;
}

Population initial_positions(const SearchSpace& space, std::size_t n, std::span<const std::vector<double>> seeds,
                             std::mt19937_64& rng) {
  Population pop(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = pop[i].position;
    if (i < seeds.size()) {
      if (seeds[i].size() != space.dim()) {
        throw Error(Errc::InvalidArgument, fmt::format("seed {} has {} entries, space has {}", i, seeds[i].size(), space.dim()));
      }
      x = seeds[i];
      space.clamp(x);
    } else {
      x.resize(space.dim());
      for (std::size_t d = 0; d < space.dim(); ++d) x[d] = space.lower[d] + uniform01(rng) * (space.upper[d] - space.lower[d]);
    }
  }
  return pop;
}

/**
 * Evaluates every position; results land in slot order, so the outcome does
 * not depend on scheduling. Returns a failure description for the lowest
 * failing slot, or an empty string.
 */
std::string evaluate(const Objective& f, std::span<const std::vector<double>> xs, std::span<double> out, bool parallel) {
  std::vector<std::string> failures(xs.size());
  auto one = [&](std::size_t i) {
    try {
      const double v = f(xs[i]);
      out[i] = v;
      if (!std::isfinite(v)) failures[i] = fmt::format("objective returned {} at candidate {}", v, i);
    } catch (const std::exception& e) {
      failures[i] = fmt::format("objective threw at candidate {}: {}", i, e.what());
    } catch (...) {
      failures[i] = fmt::format("objective threw at candidate {}", i);
    }
  };
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (parallel) {
    std::for_each(std::execution::par, idx.begin(), idx.end(), one);
  } else {
    std::for_each(idx.begin(), idx.end(), one);
  }
  for (auto& msg : failures) {
    if (!msg.empty()) return msg;
  }
  return {};
}

class Tracker {
 public:
  explicit Tracker(const RunControl& run) : run_(run) {}

  // Returns true when the stop criterion is met.
  bool record(std::size_t generation, const Population& pop, const Nest& best, std::size_t replaced) {
    if (result_.best_position.empty() || best.fitness < result_.best_fitness) {
      result_.best_position = best.position;
      result_.best_fitness = best.fitness;
    }
    double mean = 0.0;
    for (const auto& n : pop) mean += n.fitness;
    mean /= static_cast<double>(pop.size());
    result_.history.push_back({generation, result_.best_fitness, mean, result_.evaluations, replaced});
    if (result_.best_fitness < run_.stop_threshold && !result_.reached_threshold) {
      result_.reached_threshold = true;
      result_.generations_to_threshold = generation;
    }
    return result_.reached_threshold;
  }

  void count(std::size_t evaluations) { result_.evaluations += evaluations; }

  [[noreturn]] void panic(const std::string& why, const Population& pop) {
    result_.population = pop;
    throw ObjectivePanicError(why, result_);
  }

  OptimResult finish(Population pop) {
    result_.population = std::move(pop);
    return std::move(result_);
  }

 private:
  RunControl run_;
  OptimResult result_;
};

std::vector<std::vector<double>> positions_of(const Population& pop) {
  std::vector<std::vector<double>> xs;
  xs.reserve(pop.size());
  for (const auto& n : pop) xs.push_back(n.position);
  return xs;
}

void evaluate_population(const Objective& f, Population& pop, bool parallel, Tracker& tracker) {
  auto xs = positions_of(pop);
  std::vector<double> fit(xs.size());
  auto failure = evaluate(f, xs, fit, parallel);
  tracker.count(xs.size());
  for (std::size_t i = 0; i < pop.size(); ++i) pop[i].fitness = fit[i];
  if (!failure.empty()) tracker.panic(failure, pop);
}

}  // namespace

void SearchSpace::validate() const {
  if (lower.size() != upper.size() || (!names.empty() && names.size() != lower.size())) {
    throw Error(Errc::InvalidArgument, "search space bounds and names differ in size");
  }
  if (lower.empty()) throw Error(Errc::InvalidArgument, "search space has no dimensions");
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d]) || !std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
      throw Error(Errc::InvalidArgument, fmt::format("dimension {}: lower {} must be < upper {}", d, lower[d], upper[d]));
    }
  }
}

void SearchSpace::clamp(std::span<double> x) const {
  for (std::size_t d = 0; d < x.size(); ++d) {
    x[d] = std::isnan(x[d]) ? lower[d] : std::clamp(x[d], lower[d], upper[d]);
  }
}

bool SearchSpace::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
  }
  return true;
}

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::CS: return "cs";
    case Algorithm::GA: return "ga";
    case Algorithm::PSO: return "pso";
  }
  return "cs";
}

Algorithm algorithm_from_string(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Algorithm a : {Algorithm::CS, Algorithm::GA, Algorithm::PSO}) {
    if (to_string(a) == lower) return a;
  }
  throw Error(Errc::InvalidArgument, fmt::format("unknown optimizer '{}'", text));
}

RunControl& OptimizerConfig::run() {
  return algorithm == Algorithm::CS ? cs.run : algorithm == Algorithm::GA ? ga.run : pso.run;
}

const RunControl& OptimizerConfig::run() const {
  return algorithm == Algorithm::CS ? cs.run : algorithm == Algorithm::GA ? ga.run : pso.run;
}

ObjectivePanicError::ObjectivePanicError(const std::string& message, OptimResult partial)
    : Error(Errc::ObjectivePanic, message), partial_(std::move(partial)) {}

double mantegna_sigma(double beta) {
  const double num = std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0);
  const double den = std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
  return std::pow(num / den, 1.0 / beta);
}

double mantegna_draw(double beta, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = sigma * normal(rng);
  double v = normal(rng);
  while (v == 0.0) v = normal(rng);
  return u / std::pow(std::abs(v), 1.0 / beta);
}

std::vector<double> levy_step(std::span<const double> position, double alpha, double lambda,
                              std::span<const double> scale, const SearchSpace& space, std::mt19937_64& rng) {
  if (!(lambda > 1.0 && lambda <= 3.0)) {
    throw Error(Errc::BadLambda, fmt::format("lambda = {} must satisfy 1 < lambda <= 3", lambda));
  }
  if (position.size() != space.dim() || scale.size() != space.dim()) {
    throw Error(Errc::InvalidArgument, "position, scale and space differ in dimension");
  }
  const double beta = lambda - 1.0;
  const double sigma = mantegna_sigma(beta);
  std::vector<double> x(position.begin(), position.end());
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double step = mantegna_draw(beta, sigma, rng);
    if (alpha != 0.0) x[d] += alpha * scale[d] * step;
  }
  space.clamp(x);
  return x;
}

OptimResult cs_run(const Objective& f, const SearchSpace& space, const CsConfig& cfg,
                   std::span<const std::vector<double>> seeds) {
  space.validate();
  check_run(cfg.run);
  if (!(cfg.p_a > 0.0 && cfg.p_a < 1.0)) throw Error(Errc::InvalidArgument, fmt::format("p_a = {} not in (0, 1)", cfg.p_a));
  if (!(cfg.lambda > 1.0 && cfg.lambda <= 3.0)) {
    throw Error(Errc::BadLambda, fmt::format("lambda = {} must satisfy 1 < lambda <= 3", cfg.lambda));
  }
  const std::size_t n = cfg.run.population;
  const std::size_t dim = space.dim();
  const auto n_abandon =
      std::min<std::size_t>(static_cast<std::size_t>(std::llround(cfg.p_a * static_cast<double>(n))), n - 1);
  std::vector<double> scale(dim);
  for (std::size_t d = 0; d < dim; ++d) scale[d] = cfg.step_fraction * (space.upper[d] - space.lower[d]);

  std::mt19937_64 rng(cfg.run.seed);
  Tracker tracker(cfg.run);
  Population nests = initial_positions(space, n, seeds, rng);
  evaluate_population(f, nests, cfg.run.parallel, tracker);
  if (tracker.record(0, nests, nests[best_index(nests)], 0)) return tracker.finish(std::move(nests));

  for (std::size_t gen = 1; gen <= cfg.run.max_generations; ++gen) {
    // Levy flights: one cuckoo per nest, each aimed at a random nest.
    std::vector<std::vector<double>> cuckoos(n);
    std::vector<std::size_t> target(n);
    for (std::size_t i = 0; i < n; ++i) {
      cuckoos[i] = levy_step(nests[i].position, cfg.alpha, cfg.lambda, scale, space, rng);
      target[i] = uniform_index(rng, n);
    }
    std::vector<double> fc(n);
    auto failure = evaluate(f, cuckoos, fc, cfg.run.parallel);
    tracker.count(n);
    if (!failure.empty()) tracker.panic(failure, nests);
    for (std::size_t i = 0; i < n; ++i) {
      if (fc[i] < nests[target[i]].fitness) nests[target[i]] = {std::move(cuckoos[i]), fc[i]};
    }

    // Abandon the worst nests, never the best.
    const std::size_t best = best_index(nests);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return better(nests, b, a); });
    std::vector<std::size_t> abandoned;
    for (std::size_t i : order) {
      if (abandoned.size() == n_abandon) break;
      if (i != best) abandoned.push_back(i);
    }
    // New nests are built from a random survivor by a biased random walk.
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(abandoned.begin(), abandoned.end(), i) == abandoned.end()) survivors.push_back(i);
    }
    std::vector<std::vector<double>> fresh(abandoned.size());
    for (std::size_t a = 0; a < abandoned.size(); ++a) {
      const std::size_t r = survivors[uniform_index(rng, survivors.size())];
      const std::size_t p = uniform_index(rng, n);
      const std::size_t q = uniform_index(rng, n);
      auto x = nests[r].position;
      for (std::size_t d = 0; d < dim; ++d) x[d] += uniform01(rng) * (nests[p].position[d] - nests[q].position[d]);
      space.clamp(x);
      fresh[a] = std::move(x);
    }
    std::vector<double> ff(fresh.size());
    failure = evaluate(f, fresh, ff, cfg.run.parallel);
    tracker.count(fresh.size());
    if (!failure.empty()) tracker.panic(failure, nests);
    for (std::size_t a = 0; a < abandoned.size(); ++a) nests[abandoned[a]] = {std::move(fresh[a]), ff[a]};

    if (tracker.record(gen, nests, nests[best_index(nests)], abandoned.size())) break;
  }
  return tracker.finish(std::move(nests));
}

OptimResult ga_run(const Objective& f, const SearchSpace& space, const GaConfig& cfg,
                   std::span<const std::vector<double>> seeds) {
  space.validate();
  check_run(cfg.run);
  if (cfg.tournament < 1) throw Error(Errc::InvalidArgument, "tournament size must be >= 1");
  const std::size_t n = cfg.run.population;
  const std::size_t dim = space.dim();
  const std::size_t elites = std::min(cfg.elites, n);

  std::mt19937_64 rng(cfg.run.seed);
  Tracker tracker(cfg.run);
  Population pop = initial_positions(space, n, seeds, rng);
  evaluate_population(f, pop, cfg.run.parallel, tracker);
  if (tracker.record(0, pop, pop[best_index(pop)], 0)) return tracker.finish(std::move(pop));

  auto tournament = [&]() {
    std::size_t winner = uniform_index(rng, n);
    for (std::size_t t = 1; t < cfg.tournament; ++t) {
      const std::size_t c = uniform_index(rng, n);
      if (better(pop, c, winner)) winner = c;
    }
    return winner;
  };

  for (std::size_t gen = 1; gen <= cfg.run.max_generations; ++gen) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return better(pop, a, b); });

    Population next;
    next.reserve(n);
    for (std::size_t e = 0; e < elites; ++e) next.push_back(pop[order[e]]);
    std::vector<std::vector<double>> children;
    while (next.size() + children.size() < n) {
      const auto& a = pop[tournament()].position;
      const auto& b = pop[tournament()].position;
      std::vector<double> child = a;
      if (uniform01(rng) < cfg.crossover_rate) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double lo = std::min(a[d], b[d]);
          const double hi = std::max(a[d], b[d]);
          const double span = hi - lo;
          child[d] = lo - cfg.blend_alpha * span + uniform01(rng) * (1.0 + 2.0 * cfg.blend_alpha) * span;
        }
      }
      for (std::size_t d = 0; d < dim; ++d) {
        if (uniform01(rng) < cfg.mutation_rate) {
          std::normal_distribution<double> noise(0.0, cfg.mutation_sigma_fraction * (space.upper[d] - space.lower[d]));
          child[d] += noise(rng);
        }
      }
      space.clamp(child);
      children.push_back(std::move(child));
    }
    std::vector<double> fc(children.size());
    auto failure = evaluate(f, children, fc, cfg.run.parallel);
    tracker.count(children.size());
    if (!failure.empty()) tracker.panic(failure, pop);
    for (std::size_t c = 0; c < children.size(); ++c) next.push_back({std::move(children[c]), fc[c]});
    pop = std::move(next);
    if (tracker.record(gen, pop, pop[best_index(pop)], 0)) break;
  }
  return tracker.finish(std::move(pop));
}

OptimResult pso_run(const Objective& f, const SearchSpace& space, const PsoConfig& cfg,
                    std::span<const std::vector<double>> seeds) {
  space.validate();
  check_run(cfg.run);
  const std::size_t n = cfg.run.population;
  const std::size_t dim = space.dim();
  std::vector<double> vmax(dim);
  for (std::size_t d = 0; d < dim; ++d) vmax[d] = cfg.velocity_clamp_fraction * (space.upper[d] - space.lower[d]);

  std::mt19937_64 rng(cfg.run.seed);
  Tracker tracker(cfg.run);
  Population swarm = initial_positions(space, n, seeds, rng);
  evaluate_population(f, swarm, cfg.run.parallel, tracker);
  Population personal = swarm;
  std::vector<std::vector<double>> velocity(n, std::vector<double>(dim, 0.0));
  std::size_t leader = best_index(personal);
  if (tracker.record(0, swarm, personal[leader], 0)) return tracker.finish(std::move(personal));

  for (std::size_t gen = 1; gen <= cfg.run.max_generations; ++gen) {
    const auto global = personal[leader].position;
    std::vector<std::vector<double>> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& x = swarm[i].position;
      auto& v = velocity[i];
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = uniform01(rng);
        const double r2 = uniform01(rng);
        v[d] = cfg.inertia * v[d] + cfg.cognitive * r1 * (personal[i].position[d] - x[d]) +
               cfg.social * r2 * (global[d] - x[d]);
        v[d] = std::clamp(v[d], -vmax[d], vmax[d]);
        x[d] += v[d];
      }
      space.clamp(x);
      xs[i] = x;
    }
    std::vector<double> fx(n);
    auto failure = evaluate(f, xs, fx, cfg.run.parallel);
    tracker.count(n);
    if (!failure.empty()) tracker.panic(failure, personal);
    for (std::size_t i = 0; i < n; ++i) {
      swarm[i].fitness = fx[i];
      if (fx[i] < personal[i].fitness) personal[i] = swarm[i];
    }
    leader = best_index(personal);
    if (tracker.record(gen, swarm, personal[leader], 0)) break;
  }
  return tracker.finish(std::move(personal));
}

OptimResult run_optimizer(const OptimizerConfig& cfg, const Objective& f, const SearchSpace& space,
                          std::span<const std::vector<double>> seeds) {
  switch (cfg.algorithm) {
    case Algorithm::CS: return cs_run(f, space, cfg.cs, seeds);
    case Algorithm::GA: return ga_run(f, space, cfg.ga, seeds);
    case Algorithm::PSO: return pso_run(f, space, cfg.pso, seeds);
  }
  throw Error(Errc::InvalidArgument, "unknown optimizer");
}

}  // namespace govid
