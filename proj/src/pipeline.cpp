#include "scca_net/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "scca_net/errors.hpp"
#include "scca_net/knorm.hpp"
#include "scca_net/matrix_io.hpp"
#include "scca_net/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scca_net {

namespace {

const std::set<std::string> kStageKinds{"simulate", "ingest", "normalize", "weave", "tune", "detect", "score"};

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex(fnv1a64(buf.str()));
}

json weave_defaults(std::uint64_t seed) {
  return {{"subsample", 0.7}, {"partitions", 100}, {"rounds", 50}, {"lambda1", 9.0}, {"lambda2", 9.0},
          {"tol", 1e-6},      {"max_iter", 200},   {"seed", seed},  {"csv_threshold", 0.0}};
}

json stage_defaults(const std::string& kind, std::uint64_t root, std::size_t index) {
  if (kind == "simulate") {
    return {{"p", 150},
            {"n", 30},
            {"replicates", 5},
            {"dependency", 0.0},
            {"groups", {15}},
            {"levels", json::array()},
            {"replicate_noise_sd", 0.01},
            {"seed", derive_seed(root, streams::kSimulation, index)}};
  }
  if (kind == "ingest") {
    return {{"filter", true}, {"min_variance", 0.1}, {"max_variance", nullptr}, {"max_gap", 2.0}, {"min_expression", 7.0}};
  }
  if (kind == "normalize") return {{"shrinkage", kDefaultShrinkage}, {"skip", false}};
  if (kind == "weave") return weave_defaults(root);
  if (kind == "tune") {
    json d = weave_defaults(root);
    d["grid"] = "9:27:3";
    d["keep"] = 10;
    return d;
  }
  if (kind == "detect") {
    return {{"method", "hc"}, {"small_size", 25}, {"min_small", 1}, {"q", 2}, {"threshold", 0.5},
            {"max_sweeps", 50}, {"seed", root}};
  }
  return json::object();  // score
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad or missing parameter '") + key + "': " + e.what());
  }
}

std::vector<std::vector<std::string>> id_sets(const std::vector<GeneSet>& sets, const std::vector<std::string>& ids) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : sets) {
    std::vector<std::string> names;
    for (auto g : s) names.push_back(ids[g]);
    out.push_back(std::move(names));
  }
  return out;
}

std::vector<GeneSet> index_sets(const std::vector<std::vector<std::string>>& sets,
                                const std::vector<std::string>& ids) {
  std::vector<GeneSet> out;
  for (const auto& s : sets) {
    GeneSet idx;
    for (const auto& name : s) {
      const auto it = std::find(ids.begin(), ids.end(), name);
      if (it == ids.end()) throw ValidationError("unknown gene '" + name + "'");
      idx.push_back(static_cast<std::size_t>(it - ids.begin()));
    }
    out.push_back(std::move(idx));
  }
  return out;
}

WeaveConfig weave_config(const json& s, double shrinkage, bool skip, int threads) {
  WeaveConfig cfg;
  cfg.subsample_fraction = get<double>(s, "subsample");
  cfg.partitions = get<int>(s, "partitions");
  cfg.rounds = get<int>(s, "rounds");
  cfg.penalties = {get<double>(s, "lambda1"), get<double>(s, "lambda2")};
  cfg.solver.tol = get<double>(s, "tol");
  cfg.solver.max_iter = get<int>(s, "max_iter");
  cfg.seed = get<std::uint64_t>(s, "seed");
  cfg.shrinkage = shrinkage;
  cfg.skip_normalization = skip;
  cfg.threads = threads;
  return cfg;
}

DetectConfig detect_config(const json& s) {
  DetectConfig cfg;
  const auto method = get<std::string>(s, "method");
  if (method == "hc") {
    cfg.method = DetectMethod::Hc;
  } else if (method == "sbm") {
    cfg.method = DetectMethod::Sbm;
  } else {
    throw ValidationError("unknown detection method '" + method + "'");
  }
  cfg.small_cluster_size = get<int>(s, "small_size");
  cfg.min_small_clusters = get<int>(s, "min_small");
  cfg.q = get<int>(s, "q");
  cfg.threshold = get<double>(s, "threshold");
  cfg.max_sweeps = get<int>(s, "max_sweeps");
  cfg.seed = get<std::uint64_t>(s, "seed");
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct RunState {
  std::optional<ExpressionDataset> data;
  std::optional<std::vector<std::vector<std::string>>> truth;
  std::vector<EdgeWeightMatrix> matrices;
  std::optional<std::vector<std::vector<std::string>>> clusters;
  double shrinkage = kDefaultShrinkage;
  bool skip = false;
};

}  // namespace

StageError::StageError(std::string stage, fs::path artifact, const std::string& what)
    : Error("stage '" + stage + "' failed (" + artifact.string() + "): " + what),
      stage_(std::move(stage)),
      artifact_(std::move(artifact)) {}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  PipelineConfig cfg;
  try {
    cfg.document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return cfg;
}

json PipelineConfig::with_defaults() const {
  if (!document.is_object()) throw ValidationError("config must be a JSON object");
  json out = {{"seed", 42}, {"output_dir", "run"}, {"threads", 0}, {"stages", json::array()}};
  for (const auto& [k, v] : document.items()) {
    if (k != "stages") out[k] = v;
  }
  const auto root = get<std::uint64_t>(out, "seed");
  if (!document.contains("stages") || !document["stages"].is_array() || document["stages"].empty()) {
    throw ValidationError("config needs a non-empty 'stages' array");
  }
  std::size_t index = 0;
  for (const auto& stage : document["stages"]) {
    if (!stage.is_object() || !stage.contains("stage") || !stage["stage"].is_string()) {
      throw ValidationError("every stage needs a 'stage' name");
    }
    const auto kind = stage["stage"].get<std::string>();
    if (!kStageKinds.contains(kind)) throw ValidationError("unknown stage '" + kind + "'");
    json merged = stage_defaults(kind, root, index);
    merged.update(stage);
    out["stages"].push_back(merged);
    ++index;
  }
  return out;
}

void PipelineConfig::validate() const {
  const json cfg = with_defaults();
  bool dataset = false, truth = false, matrix = false, communities = false;
  for (const auto& stage : cfg["stages"]) {
    const auto kind = stage["stage"].get<std::string>();
    if (kind == "simulate" || kind == "ingest") {
      if (kind == "ingest" && !stage.contains("input")) throw ValidationError("ingest needs 'input'");
      dataset = true;
      truth = truth || kind == "simulate" || stage.contains("truth");
      matrix = communities = false;
    } else if (kind == "normalize" || kind == "weave" || kind == "tune") {
      if (!dataset) throw ValidationError("stage '" + kind + "' needs a dataset from an earlier stage");
      if (kind != "normalize") matrix = true;
    } else if (kind == "detect") {
      if (!matrix) throw ValidationError("stage 'detect' needs an edge-weight matrix from weave or tune");
      communities = true;
    } else if (kind == "score") {
      if (!communities) throw ValidationError("stage 'score' needs detected communities");
      if (!truth && !stage.contains("truth")) throw ValidationError("stage 'score' needs truth groups");
    }
  }
  if (get<int>(cfg, "threads") < 0) throw ValidationError("threads must be >= 0");
}

// Execution settings (threads, output location) do not change results and stay out of the digest.
std::string PipelineConfig::digest() const {
  json doc = with_defaults();
  doc.erase("threads");
  doc.erase("output_dir");
  return hex(fnv1a64(doc.dump()));
}

json detection_json(const CommunityResult& r, const std::vector<std::string>& gene_ids, const json& params) {
  json clusters = json::array();
  for (int b = 0; b < r.block_count(); ++b) {
    std::vector<std::string> genes;
    for (auto g : r.block_members(b)) genes.push_back(gene_ids[g]);
    clusters.push_back({{"id", b}, {"genes", genes}});
  }
  return {{"method", r.method_tag}, {"params", params}, {"clusters", clusters}, {"selected", r.selected_blocks}};
}

json clusters_json(const std::vector<GeneSet>& sets, const std::vector<std::string>& gene_ids,
                   const std::string& method, const json& params) {
  json clusters = json::array();
  json selected = json::array();
  const auto named = id_sets(sets, gene_ids);
  for (std::size_t i = 0; i < named.size(); ++i) {
    clusters.push_back({{"id", i}, {"genes", named[i]}});
    selected.push_back(i);
  }
  return {{"method", method}, {"params", params}, {"clusters", clusters}, {"selected", selected}};
}

fs::path run_pipeline(const PipelineConfig& config) {
  config.validate();
  const json cfg = config.with_defaults();
  const fs::path dir = get<std::string>(cfg, "output_dir");
  const int threads = get<int>(cfg, "threads");
  fs::create_directories(dir);

  json artifacts = json::array();
  json seeds = json::object();
  seeds["root"] = cfg["seed"];
  RunState st;

  auto record = [&](const std::string& stage, const fs::path& file) {
    artifacts.push_back({{"stage", stage}, {"path", file.filename().string()}, {"fnv1a64", file_digest(file)}});
  };

  std::size_t index = 0;
  for (const auto& s : cfg["stages"]) {
    const auto kind = s["stage"].get<std::string>();
    std::ostringstream prefix;
    prefix << std::setw(2) << std::setfill('0') << index << '_' << kind;
    const std::string tag = prefix.str();
    fs::path artifact = dir / (tag + ".out");
    try {
      if (kind == "simulate") {
        SimulationSpec spec;
        spec.p = get<std::size_t>(s, "p");
        spec.n = get<std::size_t>(s, "n");
        spec.replicates = get<std::size_t>(s, "replicates");
        spec.dependency_level = get<double>(s, "dependency");
        spec.groups = get<std::vector<std::size_t>>(s, "groups");
        for (const auto& l : get<std::vector<std::string>>(s, "levels")) spec.group_levels.push_back(parse_group_level(l));
        spec.replicate_noise_sd = get<double>(s, "replicate_noise_sd");
        spec.seed = get<std::uint64_t>(s, "seed");
        seeds[tag] = spec.seed;
        st.data = simulate(spec);
        artifact = dir / (tag + ".tsv");
        write_dataset(*st.data, artifact);
        record(kind, artifact);
        st.truth = id_sets(planted_groups(spec), st.data->gene_ids());
        artifact = dir / (tag + "_truth.json");
        write_text(artifact, json{{"groups", *st.truth}}.dump(2) + "\n");
        record(kind, artifact);
      } else if (kind == "ingest") {
        artifact = get<std::string>(s, "input");
        ExpressionDataset d = load_dataset(artifact);
        if (get<bool>(s, "filter")) {
          GeneFilter f;
          f.min_variance = get<double>(s, "min_variance");
          f.max_variance = s["max_variance"].is_null() ? std::numeric_limits<double>::infinity()
                                                       : get<double>(s, "max_variance");
          f.max_replicate_gap = get<double>(s, "max_gap");
          f.min_expression = get<double>(s, "min_expression");
          d = filter_genes(d, f);
        }
        st.data = std::move(d);
        if (s.contains("truth")) {
          std::ifstream in(get<std::string>(s, "truth"));
          st.truth = json::parse(in).at("groups").get<std::vector<std::vector<std::string>>>();
        }
        artifact = dir / (tag + ".tsv");
        write_dataset(*st.data, artifact);
        record(kind, artifact);
      } else if (kind == "normalize") {
        st.shrinkage = get<double>(s, "shrinkage");
        st.skip = get<bool>(s, "skip");
        const Eigen::MatrixXd z = prepare_matrix(st.data->replicate_means(), st.shrinkage, st.skip);
        artifact = dir / (tag + ".tsv");
        std::vector<Eigen::MatrixXd> reps{z};
        write_dataset(ExpressionDataset(st.data->gene_ids(), st.data->experiment_labels(), reps), artifact);
        record(kind, artifact);
      } else if (kind == "weave") {
        const WeaveConfig wc = weave_config(s, st.shrinkage, st.skip, threads);
        seeds[tag] = wc.seed;
        st.matrices = {weave(*st.data, wc)};
        artifact = dir / (tag + ".bin");
        write_edge_matrix(st.matrices.front(), artifact);
        record(kind, artifact);
        artifact = dir / (tag + ".csv");
        write_edge_csv(st.matrices.front(), artifact, get<double>(s, "csv_threshold"));
        record(kind, artifact);
      } else if (kind == "tune") {
        const WeaveConfig wc = weave_config(s, st.shrinkage, st.skip, threads);
        seeds[tag] = wc.seed;
        const auto grid = parse_grid(get<std::string>(s, "grid"));
        const auto all = weave_grid(*st.data, wc, grid);
        json contour = json::array();
        for (const auto& t : all) {
          contour.push_back({{"lambda1", t.penalties.lambda1}, {"lambda2", t.penalties.lambda2},
                             {"entropy", std::isinf(t.entropy) ? json(nullptr) : json(t.entropy)}});
        }
        std::vector<std::size_t> order(all.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
          return std::tie(all[x].entropy, all[x].penalties) < std::tie(all[y].entropy, all[y].penalties);
        });
        const auto keep = std::min<std::size_t>(get<std::size_t>(s, "keep"), all.size());
        st.matrices.clear();
        json kept = json::array();
        for (std::size_t k = 0; k < keep; ++k) {
          const auto& t = all[order[k]];
          st.matrices.push_back(t.matrix);
          std::ostringstream name;
          name << tag << '_' << std::setw(2) << std::setfill('0') << k << ".bin";
          artifact = dir / name.str();
          write_edge_matrix(t.matrix, artifact);
          record(kind, artifact);
          kept.push_back({{"lambda1", t.penalties.lambda1}, {"lambda2", t.penalties.lambda2},
                          {"entropy", t.entropy}, {"matrix", name.str()}});
        }
        artifact = dir / (tag + ".json");
        write_text(artifact, json{{"grid", contour}, {"kept", kept}}.dump(2) + "\n");
        record(kind, artifact);
      } else if (kind == "detect") {
        const DetectConfig dc = detect_config(s);
        seeds[tag] = dc.seed;
        json params = s;
        params.erase("stage");
        std::vector<CommunityResult> results;
        for (const auto& m : st.matrices) results.push_back(detect(m, dc));
        const auto& ids = st.matrices.front().gene_ids;
        json doc;
        std::vector<GeneSet> sets;
        if (results.size() == 1) {
          doc = detection_json(results.front(), ids, params);
          for (int b : results.front().selected_blocks) sets.push_back(results.front().block_members(b));
        } else {
          sets = vote_clusters(results);
          doc = clusters_json(sets, ids, "scca." + get<std::string>(s, "method") + ".vote", params);
        }
        st.clusters = id_sets(sets, ids);
        artifact = dir / (tag + ".json");
        write_text(artifact, doc.dump(2) + "\n");
        record(kind, artifact);
      } else if (kind == "score") {
        if (s.contains("truth")) {
          std::ifstream in(get<std::string>(s, "truth"));
          st.truth = json::parse(in).at("groups").get<std::vector<std::vector<std::string>>>();
        }
        const auto& ids = st.data->gene_ids();
        const auto predicted = index_sets(*st.clusters, ids);
        const auto truth = index_sets(*st.truth, ids);
        EvalReport report = score(predicted, truth);
        report.method_tag = s.value("method_tag", "scca");
        for (const auto& [k, v] : seeds.items()) report.seeds.push_back(v.get<std::uint64_t>());
        report.config_digest = config.digest();
        artifact = dir / (tag + ".json");
        write_text(artifact, to_json(report).dump(2) + "\n");
        record(kind, artifact);
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(kind, artifact, e.what());
    }
    ++index;
  }

  const json manifest = {{"version", kVersion},
                         {"config_digest", config.digest()},
                         {"config", cfg},
                         {"seeds", seeds},
                         {"artifacts", artifacts}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir;
}

StagedSearchResult run_staged_search(const ExpressionDataset& data, const StagedSearchConfig& cfg,
                                     const std::vector<std::vector<PenaltyPair>>& grids) {
  if (grids.empty()) throw ValidationError("staged search needs at least one grid");
  StagedSearchResult result;
  const double min_genes = 4.0 / cfg.method.weave.subsample_fraction;
  std::vector<std::size_t> remaining(data.genes());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  for (std::size_t stage = 0; stage < grids.size(); ++stage) {
    if (static_cast<double>(remaining.size()) < min_genes) {
      result.stopped_early = true;
      result.stop_reason = "only " + std::to_string(remaining.size()) + " genes left before stage " +
                           std::to_string(stage + 1);
      break;
    }
    const ExpressionDataset current = data.select_genes(remaining);
    SccaMethodConfig method = cfg.method;
    method.grid = grids[stage];
    method.detect.method = DetectMethod::Hc;
    method.detect.small_cluster_size = cfg.small_cluster_size;
    method.detect.min_small_clusters = cfg.min_small_clusters;
    const MethodOutput out = run_scca_method(current, method);
    ++result.stages_run;

    std::set<std::size_t> removed;
    for (const auto& cluster : out.clusters) {
      StagedGroup g;
      g.stage = stage;
      g.best_penalties = out.penalties.empty() ? PenaltyPair{} : out.penalties.front();
      for (auto local : cluster) {
        g.genes.push_back(current.gene_ids()[local]);
        removed.insert(remaining[local]);
      }
      result.groups.push_back(std::move(g));
    }
    std::erase_if(remaining, [&](std::size_t g) { return removed.contains(g); });
  }
  return result;
}

}  // namespace scca_net
