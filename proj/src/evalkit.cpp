#include "scca_net/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "scca_net/errors.hpp"
#include "scca_net/knorm.hpp"
#include "scca_net/linalg.hpp"
#include "scca_net/rng.hpp"

namespace scca_net {

namespace {

std::size_t overlap(const GeneSet& a, const GeneSet& b) {
  GeneSet sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  GeneSet out;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
  return out.size();
}

std::vector<GeneSet> selected_clusters(const CommunityResult& r) {
  std::vector<GeneSet> out;
  for (int b : r.selected_blocks) out.push_back(r.block_members(b));
  return out;
}

std::string level_label(double dependency) {
  std::ostringstream s;
  s << std::llround(dependency * 100.0) << '%';
  return s.str();
}

}  // namespace

EvalReport score(std::span<const GeneSet> predicted, std::span<const GeneSet> truth) {
  EvalReport report;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    GroupScore s;
    s.group = g;
    const std::size_t truth_size = truth[g].size();
    if (predicted.empty()) {
      s.fn = truth_size;
    } else {
      std::size_t best = 0, best_overlap = 0;
      for (std::size_t c = 0; c < predicted.size(); ++c) {
        const std::size_t o = overlap(predicted[c], truth[g]);
        if (o > best_overlap) {
          best_overlap = o;
          best = c;
        }
      }
      s.tp = best_overlap;
      s.fp = predicted[best].size() - best_overlap;
      s.fn = truth_size - best_overlap;
    }
    if (s.tp + s.fp > 0) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    s.recall = truth_size == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    report.per_group.push_back(s);
  }
  return report;
}

EdgeWeightMatrix pearson_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::vector<std::string> gene_ids) {
  if (static_cast<std::size_t>(z_star.cols()) != gene_ids.size()) throw DimensionError("gene ids do not match matrix");
  const Eigen::MatrixXd z = standardize_columns(z_star);
  EdgeWeightMatrix out;
  out.gene_ids = std::move(gene_ids);
  out.weights = (z.transpose() * z).cwiseAbs();
  out.weights = 0.5 * (out.weights + out.weights.transpose()).eval();
  out.weights.diagonal().setZero();
  const double max = out.weights.maxCoeff();
  if (max > 0.0) out.weights /= max;
  return out;
}

CommunityResult detect(const EdgeWeightMatrix& a, const DetectConfig& cfg) {
  if (cfg.method == DetectMethod::Hc) {
    return hc_cut(hc_ward(a), a.weights, cfg.small_cluster_size, cfg.min_small_clusters);
  }
  const BinaryGraph g = discretize(a, cfg.threshold);
  const auto init = spectral_init(g, cfg.q, cfg.seed);
  return sbm_fit(g, cfg.q, init, cfg.max_sweeps);
}

MethodOutput run_scca_method(const ExpressionDataset& data, const SccaMethodConfig& cfg) {
  const auto tuned = select_penalties(data, cfg.weave, cfg.grid, std::min(cfg.keep, cfg.grid.size()));
  MethodOutput out;
  for (const auto& t : tuned) {
    out.detections.push_back(detect(t.matrix, cfg.detect));
    out.penalties.push_back(t.penalties);
  }
  out.clusters = vote_clusters(out.detections);
  return out;
}

MethodOutput run_pearson_method(const ExpressionDataset& data, double shrinkage, bool skip_normalization,
                                const DetectConfig& detect_cfg) {
  const Eigen::MatrixXd z = prepare_matrix(data.replicate_means(), shrinkage, skip_normalization);
  const EdgeWeightMatrix a = pearson_matrix(z, data.gene_ids());
  MethodOutput out;
  out.detections.push_back(detect(a, detect_cfg));
  out.clusters = selected_clusters(out.detections.front());
  return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkResult result;
  struct Acc {
    double precision = 0.0, recall = 0.0;
    std::size_t defined = 0, undefined = 0, count = 0;
  };
  std::map<std::tuple<std::string, std::size_t, std::size_t>, Acc> acc;  // method, level, pathway

  for (std::size_t level = 0; level < cfg.dependency_levels.size(); ++level) {
    for (std::size_t d = 0; d < cfg.datasets; ++d) {
      SimulationSpec spec = cfg.simulation;
      spec.dependency_level = cfg.dependency_levels[level];
      spec.seed = derive_seed(cfg.seed, streams::kSimulation, level * 1000 + d);
      const ExpressionDataset data = simulate(spec);
      const auto truth = planted_groups(spec);

      SccaMethodConfig scca_cfg = cfg.scca;
      scca_cfg.weave.seed = derive_seed(spec.seed, streams::kSubsample, 0);
      std::vector<std::pair<std::string, MethodOutput>> outputs;
      outputs.emplace_back("scca.hc", run_scca_method(data, scca_cfg));
      if (cfg.run_pearson) {
        outputs.emplace_back("pearson.hc", run_pearson_method(data, scca_cfg.weave.shrinkage,
                                                              scca_cfg.weave.skip_normalization, scca_cfg.detect));
      }
      for (auto& [method, out] : outputs) {
        EvalReport report = score(out.clusters, truth);
        report.method_tag = method;
        report.seeds = {spec.seed, scca_cfg.weave.seed};
        std::ostringstream digest;
        digest << std::hex << fnv1a64(method + "/" + level_label(spec.dependency_level) + "/" + std::to_string(d));
        report.config_digest = digest.str();
        for (const auto& s : report.per_group) {
          Acc& a = acc[{method, level, s.group}];
          ++a.count;
          a.recall += s.recall;
          if (s.precision) {
            a.precision += *s.precision;
            ++a.defined;
          } else {
            ++a.undefined;
          }
        }
        result.reports.push_back(std::move(report));
      }
    }
  }
  for (const auto& [key, a] : acc) {
    const auto& [method, level, pathway] = key;
    BenchmarkRow row;
    row.method = method;
    row.dependency = cfg.dependency_levels[level];
    row.pathway = pathway;
    row.mean_precision = a.defined > 0 ? a.precision / static_cast<double>(a.defined) : std::nan("");
    row.mean_recall = a.count > 0 ? a.recall / static_cast<double>(a.count) : 0.0;
    row.undefined_precision = a.undefined;
    row.datasets = a.count;
    result.rows.push_back(row);
  }
  return result;
}

std::string benchmark_csv(const BenchmarkResult& result) {
  std::vector<double> levels;
  std::vector<std::string> methods;
  std::size_t pathways = 0;
  for (const auto& r : result.rows) {
    if (std::find(levels.begin(), levels.end(), r.dependency) == levels.end()) levels.push_back(r.dependency);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    pathways = std::max(pathways, r.pathway + 1);
  }
  std::sort(levels.begin(), levels.end());
  std::ostringstream out;
  out << "pathway,method";
  for (double l : levels) out << ",precision_" << level_label(l) << ",recall_" << level_label(l);
  out << '\n' << std::fixed << std::setprecision(3);
  for (std::size_t pw = 0; pw < pathways; ++pw) {
    for (const auto& m : methods) {
      out << (pw + 1) << ',' << m;
      for (double l : levels) {
        const auto it = std::find_if(result.rows.begin(), result.rows.end(), [&](const BenchmarkRow& r) {
          return r.method == m && r.pathway == pw && r.dependency == l;
        });
        if (it == result.rows.end()) {
          out << ",,";
        } else {
          out << ',';
          if (!std::isnan(it->mean_precision)) out << it->mean_precision;
          out << ',' << it->mean_recall;
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& s : report.per_group) {
    groups.push_back({{"group", s.group},
                      {"precision", s.precision ? nlohmann::json(*s.precision) : nlohmann::json(nullptr)},
                      {"recall", s.recall},
                      {"tp", s.tp},
                      {"fp", s.fp},
                      {"fn", s.fn}});
  }
  return {{"method", report.method_tag},
          {"per_group", groups},
          {"seeds", report.seeds},
          {"config_digest", report.config_digest}};
}

}  // namespace scca_net
