#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scca_net/community.hpp"
#include "scca_net/dataset.hpp"
#include "scca_net/netweave.hpp"
#include "scca_net/simgen.hpp"

namespace scca_net {

using GeneSet = std::vector<std::size_t>;

struct GroupScore {
  std::size_t group = 0;
  std::optional<double> precision;  // empty when nothing was predicted
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::vector<GroupScore> per_group;
  std::string method_tag;
  std::vector<std::uint64_t> seeds;
  std::string config_digest;
};

// Each truth group is matched to the predicted cluster with the largest
// overlap (ties to the lower index); TP/FP/FN follow from that cluster.
EvalReport score(std::span<const GeneSet> predicted, std::span<const GeneSet> truth);

// |Pearson correlation| between standardized columns, zero diagonal,
// max-normalized.
EdgeWeightMatrix pearson_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::vector<std::string> gene_ids);

enum class DetectMethod { Hc, Sbm };

struct DetectConfig {
  DetectMethod method = DetectMethod::Hc;
  int small_cluster_size = 25;
  int min_small_clusters = 1;
  int q = 2;
  double threshold = 0.5;
  int max_sweeps = 50;
  std::uint64_t seed = 42;
};

// hc: hc_ward + hc_cut. sbm: discretize + spectral_init + sbm_fit, selecting
// the block from sbm_select.
CommunityResult detect(const EdgeWeightMatrix& a, const DetectConfig& cfg);

// Entropy-ranked SCCA pipeline: weave over the grid, keep the lowest-entropy
// matrices, detect on each and combine with a majority vote.
struct SccaMethodConfig {
  WeaveConfig weave{};
  std::vector<PenaltyPair> grid = square_grid(9, 27, 3);
  std::size_t keep = 10;
  DetectConfig detect{};
};

struct MethodOutput {
  std::vector<GeneSet> clusters;
  std::vector<CommunityResult> detections;
  std::vector<PenaltyPair> penalties;  // matrices that entered the vote
};

MethodOutput run_scca_method(const ExpressionDataset& data, const SccaMethodConfig& cfg);

// Pearson baseline on the normalized replicate-mean matrix.
MethodOutput run_pearson_method(const ExpressionDataset& data, double shrinkage, bool skip_normalization,
                                const DetectConfig& detect_cfg);

struct BenchmarkConfig {
  SimulationSpec simulation{};  // p, groups etc.; seed and dependency are overridden
  std::vector<double> dependency_levels{0.0, 0.33, 0.67};
  std::size_t datasets = 10;
  std::uint64_t seed = 2014;
  SccaMethodConfig scca{};
  bool run_pearson = true;
};

struct BenchmarkRow {
  std::string method;
  double dependency = 0.0;
  std::size_t pathway = 0;  // 0-based group index (printed 1-based in the CSV)
  double mean_precision = 0.0;  // over datasets with a defined precision
  double mean_recall = 0.0;
  std::size_t undefined_precision = 0;
  std::size_t datasets = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<EvalReport> reports;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

// Pathway x method rows, one precision/recall column pair per dependency level.
std::string benchmark_csv(const BenchmarkResult& result);

nlohmann::json to_json(const EvalReport& report);

}  // namespace scca_net
