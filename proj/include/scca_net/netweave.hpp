#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scca_net/dataset.hpp"
#include "scca_net/knorm.hpp"
#include "scca_net/scca.hpp"

namespace scca_net {

struct WeaveConfig {
  double subsample_fraction = 0.7;
  int partitions = 100;  // T, random partitions per subsample
  int rounds = 50;       // B, replicate draws / subsamples
  PenaltyPair penalties{9.0, 9.0};
  bool skip_normalization = false;
  double shrinkage = kDefaultShrinkage;
  SccaOptions solver{};
  std::uint64_t seed = 42;
  int threads = 0;  // 0: default_thread_count(); never affects results

  // Throws ValidationError unless floor(s * genes) >= 4 and counts are positive.
  void validate(std::size_t genes) const;
  std::size_t subsample_size(std::size_t genes) const;
};

// Symmetric nonnegative gene x gene weights with zero diagonal, max-normalized.
struct EdgeWeightMatrix {
  Eigen::MatrixXd weights;
  std::vector<std::string> gene_ids;

  std::size_t size() const { return gene_ids.size(); }
  bool is_zero() const { return weights.isZero(0.0); }
};

// Stable per-gene random keys derived from gene ids, so subsampling and
// partitioning follow genes rather than column positions.
std::vector<std::uint64_t> gene_keys(std::span<const std::string> gene_ids);

// Orders `items` by a seeded hash of their keys (keys[item], or the item value
// itself when keys is empty); a uniformly random permutation for a fixed seed.
std::vector<std::size_t> keyed_order(std::span<const std::size_t> items, std::uint64_t seed,
                                     std::span<const std::uint64_t> keys = {});

// Splits `genes` into sides of size ceil(m/2) and floor(m/2), each sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_partition(
    std::span<const std::size_t> genes, std::uint64_t seed, std::span<const std::uint64_t> keys = {});

// Average |SCCA weight| vector c_b over cfg.partitions random partitions of a
// floor(s p) gene subsample of the standardized matrix z_star. Genes outside
// the subsample get zero.
Eigen::VectorXd mean_weights(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::span<const std::uint64_t> keys,
                             const WeaveConfig& cfg, std::size_t round);

// A_b = c_b c_b' with zero diagonal.
Eigen::MatrixXd weave_once(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::span<const std::uint64_t> keys,
                           const WeaveConfig& cfg, std::size_t round);

// Column-standardized matrix for round b: replicate draw, then normalization
// unless cfg.skip_normalization.
Eigen::MatrixXd round_matrix(const ExpressionDataset& data, const WeaveConfig& cfg, std::size_t round);

// Average of A_b over cfg.rounds, divided by its maximum entry (left as zero
// when every A_b vanishes).
EdgeWeightMatrix weave(const ExpressionDataset& data, const WeaveConfig& cfg);

// Average of outer products of per-round weight vectors (rows of c), with zero
// diagonal and max-normalization. Exposed for callers holding c vectors.
EdgeWeightMatrix aggregate_rounds(const Eigen::Ref<const Eigen::MatrixXd>& round_weights,
                                  std::vector<std::string> gene_ids);

// Shannon entropy of the positive upper-triangular entries normalized by
// their sum. +infinity for the zero matrix.
double entropy(const Eigen::Ref<const Eigen::MatrixXd>& weights);
inline double entropy(const EdgeWeightMatrix& a) { return entropy(a.weights); }

struct TunedMatrix {
  PenaltyPair penalties;
  double entropy = 0.0;
  EdgeWeightMatrix matrix;
};

// Weaves every grid point with the template config (same seed throughout)
// and returns the `keep` matrices with smallest entropy, ascending, ties by
// (lambda1, lambda2).
std::vector<TunedMatrix> select_penalties(const ExpressionDataset& data, const WeaveConfig& cfg_template,
                                          std::span<const PenaltyPair> grid, std::size_t keep);

// Entropy of every grid point in grid order (for contour output).
std::vector<TunedMatrix> weave_grid(const ExpressionDataset& data, const WeaveConfig& cfg_template,
                                    std::span<const PenaltyPair> grid);

// Square grid {lo, lo+step, ..., hi}^2 in (lambda1, lambda2) lexicographic order.
std::vector<PenaltyPair> square_grid(double lo, double hi, double step);

// Parses "lo:hi:step" (square grid) or a comma list of values (square grid
// over the list).
std::vector<PenaltyPair> parse_grid(std::string_view text);

}  // namespace scca_net
