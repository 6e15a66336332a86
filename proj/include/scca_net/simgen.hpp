#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scca_net/dataset.hpp"

namespace scca_net {

// Mixed: each gene is independently a high or a low gene (probability 1/2);
// a pair uses the high range only when both genes are high.
enum class GroupLevel { High, Low, Mixed };

// Parses "high", "low" or "mixed".
GroupLevel parse_group_level(const std::string& text);

struct SimulationSpec {
  std::size_t p = 150;
  std::size_t n = 30;
  std::size_t replicates = 5;
  double dependency_level = 0.0;  // fraction of correlated experiments
  std::vector<std::size_t> groups{15};
  // Within-group correlation range per group; groups beyond the list are High.
  std::vector<GroupLevel> group_levels{};
  double high_corr_lo = 0.5, high_corr_hi = 0.6;
  double low_corr_lo = 0.1, low_corr_hi = 0.2;
  double replicate_noise_sd = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
  // Number of correlated experiments: round(dependency_level * n).
  std::size_t dependent_experiments() const;
};

// Consecutive gene index ranges, the first group starting at gene 0.
std::vector<std::vector<std::size_t>> planted_groups(const SimulationSpec& spec);

Eigen::MatrixXd make_experiment_correlation(const SimulationSpec& spec);
Eigen::MatrixXd make_gene_correlation(const SimulationSpec& spec);

// Single n x p draw with Cov(Z_ij, Z_kl) = SigmaE_ik SigmaG_jl, before
// linear-combination replacement and replicate noise.
Eigen::MatrixXd draw_kronecker_normal(const Eigen::MatrixXd& sigma_e, const Eigen::MatrixXd& sigma_g,
                                      std::uint64_t seed);

ExpressionDataset simulate(const SimulationSpec& spec);

// -omega_ij / sqrt(omega_ii omega_jj), 1 on the diagonal.
double partial_correlation(const Eigen::Ref<const Eigen::MatrixXd>& precision, std::size_t i, std::size_t j);

// Genes of the two-pathway example, in this order.
enum MinimalGene : std::size_t { kX = 0, kY, kZ, kU, kV, kP, kQ };

// z = x + y + eps (u + v + p) and u = delta (x + y + z + q) + v, solved
// jointly, with N(0, noise_sd^2) added to z and u; x, y, v, p, q standard
// normal. One replicate per experiment.
ExpressionDataset minimal_example_dataset(std::size_t n, double eps, double delta, double noise_sd,
                                          std::uint64_t seed);

// Exact covariance of (x, y, z, u, v, p, q) for the same model with noise
// variance `noise_var` on the z and u equations.
Eigen::MatrixXd minimal_example_covariance(double eps, double delta, double noise_var);

}  // namespace scca_net
