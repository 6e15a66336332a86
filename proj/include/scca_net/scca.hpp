#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace scca_net {

struct PenaltyPair {
  double lambda1 = 0.0;  // on b, the X-side weights
  double lambda2 = 0.0;  // on a, the Y-side weights

  void validate() const;
  auto operator<=>(const PenaltyPair&) const = default;
};

struct SccaOptions {
  double tol = 1e-6;
  int max_iter = 200;
  // Only consulted to break exact ties in the initialization; the
  // initialization takes the lowest index, so results never depend on it.
  std::uint64_t seed = 0;
};

struct SccaSolution {
  Eigen::VectorXd a;  // Y-side weights, length q2
  Eigen::VectorXd b;  // X-side weights, length q1
  double objective = 0.0;  // a' Y' X b on the unit-norm column scale
  int iterations = 0;
  bool converged = false;
  // Penalized objective after each full (a, b) sweep, on the penalty scale.
  std::vector<double> trace;

  bool is_zero() const { return a.isZero(0.0) && b.isZero(0.0); }
};

double soft_threshold(double x, double t);

// Multiplier that takes inner products of unit-norm columns to the scale the
// penalties are expressed on (unit-variance columns): n - 1.
double penalty_scale(Eigen::Index rows);

// Leading sparse canonical pair by alternating L1-penalized regressions with
// unit-ball projection. X and Y must share row count, with centered unit-norm
// columns. Penalties act on kappa * Y'X b and kappa * X'Y a, kappa =
// penalty_scale(n). An over-penalized problem returns the zero pair with
// converged = true.
SccaSolution scca_solve(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                        PenaltyPair penalties, const SccaOptions& options = {});

}  // namespace scca_net
