#include <Eigen/Dense>
#include <fmt/format.h>

#include "acela/error.hpp"
#include "acela/gbt.hpp"

namespace acela {

LinearModel fit_linear(const FeatureMatrix& features, std::span<const double> targets) {
  if (features.rows != targets.size())
    throw Error(ErrorKind::ShapeError,
                fmt::format("shape error: {} rows vs {} targets", features.rows, targets.size()));
  if (targets.empty()) throw Error(ErrorKind::EmptyInput, "empty input");

  constexpr double kRidge = 1e-6;
  const auto n = static_cast<Eigen::Index>(features.rows);
  const auto p = static_cast<Eigen::Index>(features.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      features.values.data(), n, p);
  Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += kRidge;
  const Eigen::VectorXd w = gram.ldlt().solve(xc.transpose() * yc);

  LinearModel model;
  if (!w.allFinite()) {
    model.weights.assign(features.cols, 0.0);
    model.intercept = y_mean;
    return model;
  }
  model.weights.assign(w.data(), w.data() + w.size());
  model.intercept = y_mean - x_mean.dot(w);
  return model;
}

}  // namespace acela
