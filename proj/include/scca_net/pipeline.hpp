#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scca_net/errors.hpp"
#include "scca_net/evalkit.hpp"

namespace scca_net {

inline constexpr const char* kVersion = "0.3.0";

// A run described by one JSON document:
//   {"seed": 42, "output_dir": "run", "threads": 0,
//    "stages": [{"stage": "simulate", ...}, {"stage": "weave", ...}, ...]}
// Stage kinds: simulate | ingest | normalize | weave | tune | detect | score.
struct PipelineConfig {
  nlohmann::json document;

  static PipelineConfig from_file(const std::filesystem::path& path);
  // Fills defaults and checks that each stage's input artifact is produced by
  // an earlier stage. Throws ValidationError.
  void validate() const;
  nlohmann::json with_defaults() const;
  std::string digest() const;
};

// Raised when a stage fails; carries the stage name and artifact path.
class StageError : public Error {
 public:
  StageError(std::string stage, std::filesystem::path artifact, const std::string& what);
  const std::string& stage() const { return stage_; }
  const std::filesystem::path& artifact() const { return artifact_; }

 private:
  std::string stage_;
  std::filesystem::path artifact_;
};

// Runs every stage, writes artifacts and manifest.json into the output
// directory, and returns that directory.
std::filesystem::path run_pipeline(const PipelineConfig& config);

// Detection output document: {method, params, clusters: [{id, genes}], selected}.
nlohmann::json detection_json(const CommunityResult& r, const std::vector<std::string>& gene_ids,
                              const nlohmann::json& params);
nlohmann::json clusters_json(const std::vector<GeneSet>& clusters, const std::vector<std::string>& gene_ids,
                             const std::string& method, const nlohmann::json& params);

struct StagedGroup {
  std::size_t stage = 0;
  PenaltyPair best_penalties;
  std::vector<std::string> genes;
};

struct StagedSearchConfig {
  SccaMethodConfig method{};  // grid is replaced per stage
  int small_cluster_size = 30;
  int min_small_clusters = 5;
};

struct StagedSearchResult {
  std::vector<StagedGroup> groups;
  std::size_t stages_run = 0;
  bool stopped_early = false;
  std::string stop_reason;
};

// Per grid: tune on the remaining genes, detect with hc_cut, record the voted
// groups, remove their genes, continue. Stops early once fewer than
// 4 / subsample_fraction genes remain.
StagedSearchResult run_staged_search(const ExpressionDataset& data, const StagedSearchConfig& cfg,
                                     const std::vector<std::vector<PenaltyPair>>& grids);

}  // namespace scca_net
