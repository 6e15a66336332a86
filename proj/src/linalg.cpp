#include "scca_net/linalg.hpp"

#include <cmath>

#include "scca_net/errors.hpp"

namespace scca_net {

Eigen::MatrixXd standardize_columns(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  Eigen::MatrixXd out = z.rowwise() - z.colwise().mean();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      out.col(j) /= norm;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd row_correlation(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  Eigen::MatrixXd rows = z.colwise() - z.rowwise().mean();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(norm > 1e-300)) {
      throw DegenerateInputError("row " + std::to_string(i) + " is constant");
    }
    rows.row(i) /= norm;
  }
  Eigen::MatrixXd r = rows * rows.transpose();
  r.diagonal().setOnes();
  return r;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& sym, double floor) {
  if (!sym.allFinite()) throw NotPositiveDefiniteError("matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NotPositiveDefiniteError("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() < -floor) {
    throw NotPositiveDefiniteError("matrix is indefinite (eigenvalue " + std::to_string(ev.minCoeff()) + ")");
  }
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv(i) = ev(i) < floor ? 0.0 : 1.0 / std::sqrt(ev(i));
  const Eigen::MatrixXd& v = es.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

Eigen::MatrixXd repair_correlation(const Eigen::Ref<const Eigen::MatrixXd>& sym, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) {
    Eigen::MatrixXd m = sym;
    m.diagonal().setOnes();
    return m;
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
  m = d.asDiagonal() * m * d.asDiagonal();
  m = 0.5 * (m + m.transpose());
  m.diagonal().setOnes();
  return m;
}

double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace scca_net
