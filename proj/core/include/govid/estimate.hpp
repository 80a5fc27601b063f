#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "govid/blocks.hpp"
#include "govid/signals.hpp"

namespace govid {

/// Maps solved coefficients back to named physical parameters.
using CoefficientMap = std::function<std::map<std::string, double>(const Eigen::VectorXd& theta)>;

/**
 * Linear regression problem Y = X theta. Columns are scaled to unit
 * infinity-norm before solving so the reported condition number reflects
 * the structure of the problem rather than signal magnitudes.
 */
struct Regressor {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  std::vector<std::string> term_names;
  CoefficientMap map;
};

/// ARX structure: na past outputs, nb current-and-past inputs.
struct ArxOrder {
  std::size_t na = 0;
  std::size_t nb = 1;
};

/// Orders implied by a discretized linear block.
[[nodiscard]] ArxOrder arx_order(const blocks::DifferenceEquation& eq) noexcept;

/**
 * Rows k = max(na, nb - 1) .. N-1 of
 *   y(k) = sum_i a_i y(k-i) + sum_j b_j u(k-j),
 * columns [y(k-1) .. y(k-na), u(k) .. u(k-nb+1)]. Throws InsufficientData
 * when the number of rows does not exceed the number of terms.
 */
[[nodiscard]] Regressor build_regressor(std::span<const double> input, std::span<const double> output, ArxOrder order);
[[nodiscard]] Regressor build_regressor(const TimeSeries& data, std::string_view input, std::string_view output,
                                        const blocks::DifferenceEquation& structure);

/// Regressor from explicit columns; all columns and y must share a length.
[[nodiscard]] Regressor regressor_from_columns(std::vector<std::string> names,
                                               const std::vector<std::vector<double>>& columns,
                                               std::span<const double> y);

/// Throws GateSwitchInWindow when `branch` departs from `selected` anywhere.
void require_gate_branch(std::span<const double> branch, std::span<const double> selected, double tolerance = 1e-12);

struct LsResult {
  Eigen::VectorXd theta;
  double condition = 0.0;
  double residual_ss = 0.0;
  std::map<std::string, double> physical;
};

inline constexpr double kMaxCondition = 1e12;

/// Least-squares solution by column-pivoted QR. Throws SingularRegressor.
[[nodiscard]] LsResult ls_estimate(const Regressor& reg, double max_condition = kMaxCondition);

/// Mean square error (1/N) sum (y - yhat)^2. Throws LengthMismatch, Empty.
[[nodiscard]] double mse(std::span<const double> y, std::span<const double> yhat);

/// 100 * mse on per-unit signals.
[[nodiscard]] double error_index_percent(std::span<const double> y, std::span<const double> yhat);

}  // namespace govid
