#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scca_net/netweave.hpp"

namespace scca_net {

// 0/1 adjacency from thresholding an edge-weight matrix.
struct BinaryGraph {
  Eigen::MatrixXd adjacency;
  double threshold_used = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(adjacency.rows()); }
  std::size_t edge_count() const;
};

// Block ids are 0-based: labels take values in [0, Q).
struct CommunityResult {
  std::vector<int> labels;
  Eigen::VectorXd gamma;
  Eigen::MatrixXd pi;
  std::vector<int> selected_blocks;
  std::string method_tag;
  bool dropped_empty_blocks = false;

  int block_count() const { return static_cast<int>(gamma.size()); }
  std::vector<std::size_t> block_members(int block) const;
  // Genes in any selected block, ascending.
  std::vector<std::size_t> selected_genes() const;
};

BinaryGraph discretize(const EdgeWeightMatrix& a, double threshold);
BinaryGraph discretize(const Eigen::Ref<const Eigen::MatrixXd>& weights, double threshold);

// Spectral clustering on the perturbed adjacency A + tau (11' - I) with
// tau = mean degree / p: Q leading eigenvectors, row-normalized, k-means with
// 10 seeded restarts.
std::vector<int> spectral_init(const BinaryGraph& g, int q, std::uint64_t seed);

struct SbmFit {
  CommunityResult result;
  // Pseudo-log-likelihood after each EM step, one vector per relabeling sweep.
  std::vector<std::vector<double>> em_traces;
  int sweeps = 0;
};

// Unconditional pseudo-likelihood fit of a Q-block SBM. Each node's row is
// compressed into block-sum counts under the current labels and modeled as a
// mixture of independent Poisson products; EM runs to convergence, nodes are
// relabeled by maximum posterior, and the loop stops when labels no longer
// change or after max_sweeps. pi is reported as empirical block densities of
// the final labels.
SbmFit sbm_fit_detailed(const BinaryGraph& g, int q, std::span<const int> init, int max_sweeps = 50);
CommunityResult sbm_fit(const BinaryGraph& g, int q, std::span<const int> init, int max_sweeps = 50);

// Block with the largest pi(k, k); ties by smaller block then lower id.
int sbm_select(const CommunityResult& r);

struct Merge {
  int cluster_a = 0;  // smaller id
  int cluster_b = 0;
  double cost = 0.0;
  int new_size = 0;
};

// Leaves are clusters 0..p-1; merge k creates cluster p + k.
struct Dendrogram {
  std::vector<Merge> merges;
  std::size_t leaves = 0;

  // Members of cluster `id`, ascending.
  std::vector<std::size_t> members(int id) const;
  // Throws ValidationError unless every cluster is consumed at most once and
  // only after it exists.
  void validate() const;
};

// Agglomerative clustering with Ward's merging cost on squared distances
// 1 - A(i, j) (i != j). Lance-Williams updates; ties go to the smallest
// (cluster a, cluster b) pair.
Dendrogram hc_ward(const EdgeWeightMatrix& a);
Dendrogram hc_ward(const Eigen::Ref<const Eigen::MatrixXd>& weights);

// Smallest Q >= 2 whose cut has at least `min_small_clusters` clusters of size
// < small_cluster_size; those clusters are selected. pi holds mean block
// weights of `a`. Throws NotFoundError if no Q <= p qualifies.
CommunityResult hc_cut(const Dendrogram& d, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                       int small_cluster_size, int min_small_clusters);

// Genes selected in more than half of `results`.
std::vector<std::size_t> majority_vote(std::span<const CommunityResult> results);

// Majority-voted genes grouped into clusters: two voted genes share a cluster
// when they sit in the same selected block in more than half of the results
// (connected components of that relation). Clusters ordered by smallest gene.
std::vector<std::vector<std::size_t>> vote_clusters(std::span<const CommunityResult> results);

}  // namespace scca_net
