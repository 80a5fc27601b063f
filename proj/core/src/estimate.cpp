#include "govid/estimate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "govid/error.hpp"

namespace govid {

ArxOrder arx_order(const blocks::DifferenceEquation& eq) noexcept { return {eq.a.size(), eq.b.size()}; }

Regressor build_regressor(std::span<const double> input, std::span<const double> output, ArxOrder order) {
  if (input.size() != output.size()) {
    throw Error(Errc::LengthMismatch, fmt::format("input has {} samples, output {}", input.size(), output.size()));
  }
  if (order.nb == 0 && order.na == 0) throw Error(Errc::InvalidArgument, "empty ARX structure");
  const std::size_t t = order.na + order.nb;
  const std::size_t start = std::max(order.na, order.nb == 0 ? 0 : order.nb - 1);
  const std::size_t n = input.size();
  const std::size_t rows = n > start ? n - start : 0;
  if (rows <= t) {
    throw Error(Errc::InsufficientData, fmt::format("{} usable rows for {} terms", rows, t));
  }
  Regressor reg;
  reg.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(t));
  reg.Y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t k = start + r;
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t i = 0; i < order.na; ++i) reg.X(row, static_cast<Eigen::Index>(i)) = output[k - 1 - i];
    for (std::size_t j = 0; j < order.nb; ++j) reg.X(row, static_cast<Eigen::Index>(order.na + j)) = input[k - j];
    reg.Y(row) = output[k];
  }
  for (std::size_t i = 0; i < order.na; ++i) reg.term_names.push_back(fmt::format("y(k-{})", i + 1));
  for (std::size_t j = 0; j < order.nb; ++j) reg.term_names.push_back(j == 0 ? "u(k)" : fmt::format("u(k-{})", j));
  return reg;
}

Regressor build_regressor(const TimeSeries& data, std::string_view input, std::string_view output,
                          const blocks::DifferenceEquation& structure) {
  return build_regressor(data.values(input), data.values(output), arx_order(structure));
}

Regressor regressor_from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& columns,
                                 std::span<const double> y) {
  if (names.size() != columns.size()) throw Error(Errc::LengthMismatch, "one name per column is required");
  for (const auto& c : columns) {
    if (c.size() != y.size()) throw Error(Errc::LengthMismatch, "column length differs from target length");
  }
  if (y.size() <= columns.size()) {
    throw Error(Errc::InsufficientData, fmt::format("{} rows for {} terms", y.size(), columns.size()));
  }
  Regressor reg;
  const auto rows = static_cast<Eigen::Index>(y.size());
  reg.X.resize(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    reg.X.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(columns[j].data(), rows);
  }
  reg.Y = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);
  reg.term_names = std::move(names);
  return reg;
}

void require_gate_branch(std::span<const double> branch, std::span<const double> selected, double tolerance) {
  if (branch.size() != selected.size()) throw Error(Errc::LengthMismatch, "gate channels differ in length");
  for (std::size_t k = 0; k < branch.size(); ++k) {
    if (std::abs(branch[k] - selected[k]) > tolerance) {
      throw Error(Errc::GateSwitchInWindow, fmt::format("low-select leaves the identified branch at sample {}", k));
    }
  }
}

LsResult ls_estimate(const Regressor& reg, double max_condition) {
  const auto t = reg.X.cols();
  if (reg.X.rows() != reg.Y.size()) throw Error(Errc::LengthMismatch, "X and Y row counts differ");
  if (reg.X.rows() <= t) {
    throw Error(Errc::InsufficientData, fmt::format("{} rows for {} terms", reg.X.rows(), t));
  }
  Eigen::VectorXd scale(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    const double m = reg.X.col(j).cwiseAbs().maxCoeff();
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw Error(Errc::SingularRegressor, fmt::format("regressor column {} is zero or non-finite", j));
    }
    scale(j) = m;
  }
  const Eigen::MatrixXd xs = reg.X * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(t, t).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) {
    throw Error(Errc::SingularRegressor, fmt::format("condition number {:.3g} exceeds {:.3g}", cond, max_condition));
  }
  LsResult out;
  out.theta = qr.solve(reg.Y).cwiseQuotient(scale);
  out.condition = cond;
  out.residual_ss = (reg.Y - reg.X * out.theta).squaredNorm();
  if (reg.map) out.physical = reg.map(out.theta);
  return out;
}

double mse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw Error(Errc::LengthMismatch, fmt::format("lengths {} and {} differ", y.size(), yhat.size()));
  }
  if (y.empty()) throw Error(Errc::Empty, "mse of empty signals");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

double error_index_percent(std::span<const double> y, std::span<const double> yhat) { return 100.0 * mse(y, yhat); }

}  // namespace govid
