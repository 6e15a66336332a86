#pragma once

#include <Eigen/Dense>

namespace scca_net {

// Row/column mean model and shrunk experiment correlation used to remove
// experiment (row) dependencies before gene-correlation estimation.
struct NormalizationModel {
  Eigen::MatrixXd mean_matrix;             // n x p
  Eigen::MatrixXd experiment_correlation;  // n x n, unit diagonal
  double shrinkage_weight = 0.5;
};

inline constexpr double kDefaultShrinkage = 0.5;

// mean_matrix(i, j) = row_mean(i) + col_mean(j) - grand_mean. The experiment
// correlation is the row correlation of the gene-standardized residuals,
// shrunk toward the identity: (1 - w) R + w I.
NormalizationModel fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                     double shrinkage_weight = kDefaultShrinkage);

// (Sigma_E)^{-1/2} (z - M), without column standardization.
Eigen::MatrixXd whiten(const Eigen::Ref<const Eigen::MatrixXd>& z, const NormalizationModel& model);

// whiten() followed by centering each column and scaling it to unit norm.
Eigen::MatrixXd normalize(const Eigen::Ref<const Eigen::MatrixXd>& z, const NormalizationModel& model);

// Fit + normalize, or plain column standardization when `skip` is set.
Eigen::MatrixXd prepare_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z, double shrinkage_weight,
                               bool skip);

}  // namespace scca_net
