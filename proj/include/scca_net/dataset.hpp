#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scca_net {

// Replicated expression measurements: p genes x n experiments x r replicates.
// Immutable after construction.
class ExpressionDataset {
 public:
  // replicates[k] is the n x p matrix of replicate k (row i = experiment i).
  // Validates shapes, uniqueness of gene ids and finiteness of every value.
  ExpressionDataset(std::vector<std::string> gene_ids, std::vector<std::string> experiment_labels,
                    std::vector<Eigen::MatrixXd> replicates);

  std::size_t genes() const { return gene_ids_.size(); }
  std::size_t experiments() const { return experiment_labels_.size(); }
  std::size_t replicates() const { return replicates_.size(); }

  const std::vector<std::string>& gene_ids() const { return gene_ids_; }
  const std::vector<std::string>& experiment_labels() const { return experiment_labels_; }

  double value(std::size_t experiment, std::size_t replicate, std::size_t gene) const {
    return replicates_[replicate](static_cast<Eigen::Index>(experiment), static_cast<Eigen::Index>(gene));
  }
  const Eigen::MatrixXd& replicate(std::size_t k) const { return replicates_[k]; }

  // n x p matrix of per-experiment replicate means.
  Eigen::MatrixXd replicate_means() const;

  // Dataset restricted to the given genes, in the given order.
  ExpressionDataset select_genes(std::span<const std::size_t> genes) const;

 private:
  std::vector<std::string> gene_ids_;
  std::vector<std::string> experiment_labels_;
  std::vector<Eigen::MatrixXd> replicates_;
};

// One replicate per experiment.
struct ReplicateDraw {
  Eigen::MatrixXd matrix;                      // n x p
  std::vector<std::size_t> source_replicates;  // length n
};

struct GeneFilter {
  double min_variance = 0.1;
  double max_variance = std::numeric_limits<double>::infinity();
  double max_replicate_gap = 2.0;
  double min_expression = 7.0;
};

// Reads the delimited layout `experiment, replicate, gene_1, ..., gene_p`.
// The delimiter is a tab if the header contains one, otherwise a comma.
ExpressionDataset load_dataset(const std::filesystem::path& path);

// Writes the layout read by load_dataset with round-trip exact values.
void write_dataset(const ExpressionDataset& d, const std::filesystem::path& path, char delimiter = '\t');

// Keeps genes whose (a) variance of replicate means lies strictly inside
// (min_variance, max_variance), (b) largest within-experiment replicate range
// is below max_replicate_gap and (c) smallest value is >= min_expression.
// Throws EmptyResultError if nothing survives.
ExpressionDataset filter_genes(const ExpressionDataset& d, const GeneFilter& filter);

// Indices of the genes filter_genes would keep.
std::vector<std::size_t> passing_genes(const ExpressionDataset& d, const GeneFilter& filter);

// Picks one replicate per experiment uniformly and independently.
ReplicateDraw draw_replicates(const ExpressionDataset& d, std::uint64_t seed);

}  // namespace scca_net
