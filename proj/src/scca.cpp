#include "scca_net/scca.hpp"

#include <cmath>

#include "scca_net/errors.hpp"

namespace scca_net {

namespace {

// Elementwise soft-threshold followed by projection onto the unit ball.
void shrink_into(const Eigen::VectorXd& u, double t, Eigen::VectorXd& out) {
  out.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = soft_threshold(u(i), t);
  const double norm = out.norm();
  if (norm > 1.0) out /= norm;
}

}  // namespace

void PenaltyPair::validate() const {
  if (!(std::isfinite(lambda1) && std::isfinite(lambda2) && lambda1 >= 0.0 && lambda2 >= 0.0)) {
    throw ValidationError("penalties must be finite and nonnegative");
  }
}

double soft_threshold(double x, double t) {
  const double mag = std::abs(x) - t;
  if (mag <= 0.0) return 0.0;
  return x < 0.0 ? -mag : mag;
}

double penalty_scale(Eigen::Index rows) { return static_cast<double>(rows - 1); }

SccaSolution scca_solve(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                        PenaltyPair penalties, const SccaOptions& options) {
  penalties.validate();
  if (x.rows() != y.rows()) throw DimensionError("X and Y must have the same number of rows");
  if (x.rows() < 2 || x.cols() < 1 || y.cols() < 1) throw DimensionError("X and Y must be non-empty with n >= 2");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw ValidationError("tol must be > 0 and max_iter >= 1");

  const double kappa = penalty_scale(x.rows());
  const double l1 = penalties.lambda1;
  const double l2 = penalties.lambda2;

  SccaSolution sol;
  sol.a = Eigen::VectorXd::Zero(y.cols());
  sol.b = Eigen::VectorXd::Zero(x.cols());

  // Start from the X column with the largest ||Y' x_j||; lowest index on ties.
  {
    const Eigen::MatrixXd cross = y.transpose() * x;
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index j = 0; j < cross.cols(); ++j) {
      const double nrm = cross.col(j).squaredNorm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    sol.b(best) = 1.0;
  }

  Eigen::VectorXd a_next, b_next, u, v, xb, ya;
  for (int it = 1; it <= options.max_iter; ++it) {
    xb.noalias() = x * sol.b;
    u.noalias() = kappa * (y.transpose() * xb);
    shrink_into(u, l2, a_next);
    ya.noalias() = y * a_next;
    v.noalias() = kappa * (x.transpose() * ya);
    shrink_into(v, l1, b_next);

    const double change = std::max((a_next - sol.a).cwiseAbs().maxCoeff(), (b_next - sol.b).cwiseAbs().maxCoeff());
    sol.a.swap(a_next);
    sol.b.swap(b_next);
    sol.iterations = it;

    // v = kappa X'Y a, so a' (kappa Y'X) b = v . b.
    const double penalized = v.dot(sol.b) - l2 * sol.a.lpNorm<1>() - l1 * sol.b.lpNorm<1>();
    sol.trace.push_back(penalized);
    if (change < options.tol) {
      sol.converged = true;
      break;
    }
  }

  if (sol.is_zero()) {
    sol.objective = 0.0;
    sol.converged = true;
    return sol;
  }
  // Joint sign flip leaves the objective unchanged; fix it so that the
  // largest-magnitude entry of b is positive.
  Eigen::Index imax = 0;
  sol.b.cwiseAbs().maxCoeff(&imax);
  if (sol.b(imax) < 0.0) {
    sol.a = -sol.a;
    sol.b = -sol.b;
  }
  sol.objective = sol.a.dot(y.transpose() * (x * sol.b));
  return sol;
}

}  // namespace scca_net
