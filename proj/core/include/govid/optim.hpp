#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "govid/error.hpp"

namespace govid {

struct SearchSpace {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::size_t dim() const noexcept { return lower.size(); }
  /// Throws InvalidArgument unless sizes agree and lower < upper everywhere.
  void validate() const;
  void clamp(std::span<double> x) const;
  [[nodiscard]] bool contains(std::span<const double> x) const;
};

/// Lower is better. Must be safe to call concurrently when `parallel` is set.
using Objective = std::function<double(std::span<const double>)>;

struct RunControl {
  std::size_t population = 25;
  std::size_t max_generations = 100;
  /// Stops once the best objective falls strictly below this value.
  double stop_threshold = std::exp(-2.0);
  std::uint64_t seed = 0;
  bool parallel = false;
};

struct CsConfig {
  RunControl run;
  double p_a = 0.25;
  double alpha = 1.0;
  double lambda = 1.5;
  /// Levy step scale per dimension = alpha * step_fraction * (upper - lower).
  double step_fraction = 0.01;
};

struct GaConfig {
  RunControl run;
  std::size_t tournament = 3;
  double crossover_rate = 0.9;
  double blend_alpha = 0.5;
  double mutation_rate = 0.1;
  double mutation_sigma_fraction = 0.05;
  std::size_t elites = 1;
};

struct PsoConfig {
  RunControl run;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  double velocity_clamp_fraction = 0.2;
};

enum class Algorithm { CS, GA, PSO };

[[nodiscard]] std::string_view to_string(Algorithm a) noexcept;
[[nodiscard]] Algorithm algorithm_from_string(std::string_view text);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::CS;
  CsConfig cs;
  GaConfig ga;
  PsoConfig pso;

  [[nodiscard]] RunControl& run();
  [[nodiscard]] const RunControl& run() const;
};

struct Nest {
  std::vector<double> position;
  double fitness = 0.0;
};

using Population = std::vector<Nest>;

struct GenerationRecord {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::size_t evaluations = 0;  // cumulative
  std::size_t replaced = 0;     // CS: abandoned nests this generation
};

struct OptimResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  std::vector<GenerationRecord> history;
  Population population;
  bool reached_threshold = false;
  std::optional<std::size_t> generations_to_threshold;
  std::size_t evaluations = 0;
};

/// Raised when the objective throws or returns a non-finite value.
class ObjectivePanicError : public Error {
 public:
  ObjectivePanicError(const std::string& message, OptimResult partial);
  [[nodiscard]] const OptimResult& partial() const noexcept { return partial_; }

 private:
  OptimResult partial_;
};

/// Scale of the Mantegna numerator for stable index beta in (0, 2].
[[nodiscard]] double mantegna_sigma(double beta);

/// One Mantegna draw u / |v|^(1/beta), u ~ N(0, sigma^2), v ~ N(0, 1).
[[nodiscard]] double mantegna_draw(double beta, double sigma, std::mt19937_64& rng);

/**
 * x + alpha * scale (entrywise) * L, L drawn by Mantegna's method with stable
 * index lambda - 1, clamped to the box. Throws BadLambda unless 1 < lambda <= 3.
 */
[[nodiscard]] std::vector<double> levy_step(std::span<const double> position, double alpha, double lambda,
                                            std::span<const double> scale, const SearchSpace& space,
                                            std::mt19937_64& rng);

/// Seeds occupy the first slots of the initial population; the rest is uniform in the box.
[[nodiscard]] OptimResult cs_run(const Objective& f, const SearchSpace& space, const CsConfig& cfg,
                                 std::span<const std::vector<double>> seeds = {});
[[nodiscard]] OptimResult ga_run(const Objective& f, const SearchSpace& space, const GaConfig& cfg,
                                 std::span<const std::vector<double>> seeds = {});
[[nodiscard]] OptimResult pso_run(const Objective& f, const SearchSpace& space, const PsoConfig& cfg,
                                  std::span<const std::vector<double>> seeds = {});
[[nodiscard]] OptimResult run_optimizer(const OptimizerConfig& cfg, const Objective& f, const SearchSpace& space,
                                        std::span<const std::vector<double>> seeds = {});

}  // namespace govid
