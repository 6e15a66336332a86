#include "scca_net/knorm.hpp"

#include <cmath>

#include "scca_net/errors.hpp"
#include "scca_net/linalg.hpp"

namespace scca_net {

NormalizationModel fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& z, double shrinkage_weight) {
  if (z.rows() < 2 || z.cols() < 2) throw DimensionError("normalization needs at least a 2x2 matrix");
  if (!(shrinkage_weight >= 0.0 && shrinkage_weight <= 1.0)) {
    throw ValidationError("shrinkage weight must lie in [0, 1]");
  }
  const Eigen::VectorXd row_mean = z.rowwise().mean();
  const Eigen::RowVectorXd col_mean = z.colwise().mean();
  const double grand = z.mean();

  NormalizationModel m;
  m.shrinkage_weight = shrinkage_weight;
  m.mean_matrix = (row_mean.replicate(1, z.cols()).rowwise() + col_mean).array() - grand;

  Eigen::MatrixXd resid = z - m.mean_matrix;
  const double n = static_cast<double>(z.rows());
  for (Eigen::Index j = 0; j < resid.cols(); ++j) {
    const double sd = std::sqrt(resid.col(j).squaredNorm() / (n - 1.0));
    if (sd > 0.0) resid.col(j) /= sd;
  }
  const Eigen::MatrixXd r = row_correlation(resid);
  const auto size = z.rows();
  m.experiment_correlation =
      (1.0 - shrinkage_weight) * r + shrinkage_weight * Eigen::MatrixXd::Identity(size, size);
  m.experiment_correlation.diagonal().setOnes();
  return m;
}

Eigen::MatrixXd whiten(const Eigen::Ref<const Eigen::MatrixXd>& z, const NormalizationModel& model) {
  if (model.mean_matrix.rows() != z.rows() || model.mean_matrix.cols() != z.cols() ||
      model.experiment_correlation.rows() != z.rows() || model.experiment_correlation.cols() != z.rows()) {
    throw DimensionError("normalization model was fit on a matrix of a different shape");
  }
  return inverse_sqrt(model.experiment_correlation) * (z - model.mean_matrix);
}

Eigen::MatrixXd normalize(const Eigen::Ref<const Eigen::MatrixXd>& z, const NormalizationModel& model) {
  return standardize_columns(whiten(z, model));
}

Eigen::MatrixXd prepare_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z, double shrinkage_weight, bool skip) {
  if (skip) return standardize_columns(z);
  return normalize(z, fit_normalization(z, shrinkage_weight));
}

}  // namespace scca_net
