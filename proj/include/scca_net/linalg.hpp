#pragma once

#include <Eigen/Dense>

namespace scca_net {

// Centers every column and scales it to unit Euclidean norm. Constant
// columns come back as zeros.
Eigen::MatrixXd standardize_columns(const Eigen::Ref<const Eigen::MatrixXd>& z);

// Pearson correlation between the rows of z. Throws DegenerateInputError if
// a row is constant.
Eigen::MatrixXd row_correlation(const Eigen::Ref<const Eigen::MatrixXd>& z);

// Symmetric inverse square root via eigendecomposition. Eigen-directions with
// eigenvalue below `floor` are treated as null (pseudo-inverse); throws
// NotPositiveDefiniteError if any eigenvalue is below -floor or the matrix is
// not finite.
Eigen::MatrixXd inverse_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& sym, double floor = 1e-10);

// Floors the spectrum of a symmetric matrix at `floor` and rescales to unit
// diagonal, yielding a positive-definite correlation matrix.
Eigen::MatrixXd repair_correlation(const Eigen::Ref<const Eigen::MatrixXd>& sym, double floor = 1e-6);

double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& sym);

}  // namespace scca_net
