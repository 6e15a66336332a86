// scca-net command line.
#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "scca_net/errors.hpp"
#include "scca_net/evalkit.hpp"
#include "scca_net/knorm.hpp"
#include "scca_net/linalg.hpp"
#include "scca_net/matrix_io.hpp"
#include "scca_net/pipeline.hpp"
#include "scca_net/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scca_net;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

template <typename T>
std::vector<T> split_list(const std::string& text, T (*convert)(const std::string&)) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(convert(item));
  }
  return out;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(std::stoul(s)); }
double to_double(const std::string& s) { return std::stod(s); }

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

// Plain numeric CSV, one row per line, no header.
Eigen::MatrixXd read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ParseError(line_no, "bad number '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw DimensionError("ragged row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + " is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct WeaveArgs {
  double subsample = 0.7;
  int partitions = 100;
  int rounds = 50;
  double lambda1 = 9.0;
  double lambda2 = 9.0;
  std::uint64_t seed = 42;
  double shrinkage = kDefaultShrinkage;
  bool skip = false;

  void add_to(CLI::App* app, bool with_penalties) {
    app->add_option("--subsample", subsample, "gene subsampling fraction s")->capture_default_str();
    app->add_option("--partitions", partitions, "random partitions per subsample (T)")->capture_default_str();
    app->add_option("--rounds", rounds, "subsampling rounds (B)")->capture_default_str();
    if (with_penalties) {
      app->add_option("--lambda1", lambda1, "penalty on the first partition side")->capture_default_str();
      app->add_option("--lambda2", lambda2, "penalty on the second partition side")->capture_default_str();
    }
    app->add_option("--seed", seed, "root seed")->capture_default_str();
    app->add_option("--shrinkage", shrinkage, "experiment-correlation shrinkage weight")->capture_default_str();
    app->add_flag("--skip-normalization", skip, "only standardize columns");
  }

  WeaveConfig config(int threads) const {
    WeaveConfig cfg;
    cfg.subsample_fraction = subsample;
    cfg.partitions = partitions;
    cfg.rounds = rounds;
    cfg.penalties = {lambda1, lambda2};
    cfg.seed = seed;
    cfg.shrinkage = shrinkage;
    cfg.skip_normalization = skip;
    cfg.threads = threads;
    return cfg;
  }
};

struct DetectArgs {
  std::string method = "hc";
  int small = 25;
  int min_small = 1;
  int q = 2;
  double threshold = 0.5;
  int max_sweeps = 50;
  std::uint64_t seed = 42;

  void add_to(CLI::App* app) {
    app->add_option("--method", method, "hc or sbm")->check(CLI::IsMember({"hc", "sbm"}))->capture_default_str();
    app->add_option("--small-size", small, "hc: clusters smaller than this are selected")->capture_default_str();
    app->add_option("--min-small", min_small, "hc: stop once this many small clusters exist")->capture_default_str();
    app->add_option("--q", q, "sbm: number of blocks")->capture_default_str();
    app->add_option("--threshold", threshold, "sbm: discretization threshold")->capture_default_str();
    app->add_option("--max-sweeps", max_sweeps, "sbm: EM relabeling sweeps")->capture_default_str();
    app->add_option("--detect-seed", seed, "sbm: spectral initialization seed")->capture_default_str();
  }

  DetectConfig config() const {
    DetectConfig cfg;
    cfg.method = method == "sbm" ? DetectMethod::Sbm : DetectMethod::Hc;
    cfg.small_cluster_size = small;
    cfg.min_small_clusters = min_small;
    cfg.q = q;
    cfg.threshold = threshold;
    cfg.max_sweeps = max_sweeps;
    cfg.seed = seed;
    return cfg;
  }

  json params() const {
    return {{"method", method}, {"small_size", small}, {"min_small", min_small}, {"q", q},
            {"threshold", threshold}, {"max_sweeps", max_sweeps}, {"seed", seed}};
  }
};

std::vector<GroupLevel> parse_levels(const std::string& text) {
  std::vector<GroupLevel> out;
  for (const auto& s : split_list<std::string>(text, [](const std::string& x) { return x; })) out.push_back(parse_group_level(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gene network inference by aggregated sparse canonical correlation analysis"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int threads = 0;
  if (const char* env = std::getenv("SCCA_NET_THREADS")) threads = std::atoi(env);
  app.add_option("--threads", threads, "worker cap (default: $SCCA_NET_THREADS or all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic replicated dataset");
  SimulationSpec spec;
  std::string groups = "15", levels, sim_out, truth_out;
  sim->add_option("--p", spec.p, "genes")->capture_default_str();
  sim->add_option("--n", spec.n, "experiments")->capture_default_str();
  sim->add_option("--reps", spec.replicates, "replicates per experiment")->capture_default_str();
  sim->add_option("--dep", spec.dependency_level, "fraction of dependent experiments")->capture_default_str();
  sim->add_option("--groups", groups, "comma list of group sizes")->capture_default_str();
  sim->add_option("--levels", levels, "comma list of high|low|mixed per group (default high)");
  sim->add_option("--noise-sd", spec.replicate_noise_sd, "replicate noise SD")->capture_default_str();
  sim->add_option("--seed", spec.seed, "seed")->capture_default_str();
  sim->add_option("--output", sim_out, "dataset path")->required();
  sim->add_option("--truth", truth_out, "planted groups JSON (default <output>.truth.json)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load, validate and filter a dataset");
  std::string ingest_in, ingest_out;
  GeneFilter filter;
  bool no_filter = false;
  ingest->add_option("--input", ingest_in)->required();
  ingest->add_option("--output", ingest_out)->required();
  ingest->add_option("--filter-min-var", filter.min_variance)->capture_default_str();
  ingest->add_option("--filter-max-var", filter.max_variance, "default: no upper cut");
  ingest->add_option("--filter-max-gap", filter.max_replicate_gap)->capture_default_str();
  ingest->add_option("--filter-min-expr", filter.min_expression)->capture_default_str();
  ingest->add_flag("--no-filter", no_filter, "validate only");

  // normalize
  auto* norm = app.add_subcommand("normalize", "normalize replicate means (written as a one-replicate dataset)");
  std::string norm_in, norm_out;
  double norm_shrinkage = kDefaultShrinkage;
  bool norm_skip = false;
  norm->add_option("--input", norm_in)->required();
  norm->add_option("--output", norm_out)->required();
  norm->add_option("--shrinkage", norm_shrinkage)->capture_default_str();
  norm->add_flag("--skip", norm_skip, "standardize columns only");

  // weave
  auto* weave_cmd = app.add_subcommand("weave", "build the edge-weight matrix");
  WeaveArgs weave_args;
  std::string weave_in, weave_out, weave_csv;
  double csv_threshold = 0.0;
  weave_args.add_to(weave_cmd, true);
  weave_cmd->add_option("--input", weave_in)->required();
  weave_cmd->add_option("--output", weave_out, "binary matrix path")->required();
  weave_cmd->add_option("--csv", weave_csv, "also write an edge list");
  weave_cmd->add_option("--csv-threshold", csv_threshold)->capture_default_str();

  // tune
  auto* tune = app.add_subcommand("tune", "entropy-based penalty selection over a grid");
  WeaveArgs tune_args;
  std::string tune_in, tune_out, grid_text = "9:27:3";
  std::size_t keep = 10;
  tune_args.add_to(tune, false);
  tune->add_option("--input", tune_in)->required();
  tune->add_option("--grid", grid_text, "lo:hi:step or comma list (square grid)")->capture_default_str();
  tune->add_option("--keep", keep, "matrices kept, lowest entropy first")->capture_default_str();
  tune->add_option("--output-dir", tune_out, "writes tune.json, entropy.csv and kept matrices")->required();

  // detect
  auto* det = app.add_subcommand("detect", "community detection on one or more matrices");
  DetectArgs detect_args;
  std::vector<std::string> det_matrices;
  std::string det_out;
  detect_args.add_to(det);
  det->add_option("--matrix", det_matrices, "binary matrix; several are combined by majority vote")->required();
  det->add_option("--output", det_out, "JSON path (default stdout)");

  // score
  auto* sc = app.add_subcommand("score", "precision and recall against planted groups");
  std::string sc_det, sc_truth, sc_out, sc_tag = "scca.hc";
  sc->add_option("--detection", sc_det, "detect output JSON")->required();
  sc->add_option("--truth", sc_truth, "truth JSON {groups: [[gene ids]]}")->required();
  sc->add_option("--method-tag", sc_tag)->capture_default_str();
  sc->add_option("--output", sc_out, "JSON path (default stdout)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run a JSON-configured stage chain");
  std::string pipe_cfg;
  pipe->add_option("--config", pipe_cfg, "JSON pipeline configuration")->required();

  // staged-search
  auto* staged = app.add_subcommand("staged-search", "tune, detect and remove, one grid per stage");
  WeaveArgs staged_args;
  std::vector<std::string> staged_grids;
  std::string staged_in, staged_out;
  std::size_t staged_keep = 10;
  int staged_small = 30, staged_min_small = 5;
  staged_args.add_to(staged, false);
  staged->add_option("--input", staged_in)->required();
  staged->add_option("--grid", staged_grids, "one grid per stage, in order")->required();
  staged->add_option("--keep", staged_keep)->capture_default_str();
  staged->add_option("--small-size", staged_small)->capture_default_str();
  staged->add_option("--min-small", staged_min_small)->capture_default_str();
  staged->add_option("--output", staged_out, "JSON path (default stdout)");

  // scca
  auto* scca_cmd = app.add_subcommand("scca", "solve one sparse CCA problem and print it as JSON");
  std::string x_path, y_path;
  PenaltyPair pen{0.0, 0.0};
  SccaOptions solver;
  scca_cmd->add_option("--x", x_path, "numeric CSV, rows are observations")->required();
  scca_cmd->add_option("--y", y_path, "numeric CSV, rows are observations")->required();
  scca_cmd->add_option("--lambda1", pen.lambda1)->capture_default_str();
  scca_cmd->add_option("--lambda2", pen.lambda2)->capture_default_str();
  scca_cmd->add_option("--tol", solver.tol)->capture_default_str();
  scca_cmd->add_option("--max-iter", solver.max_iter)->capture_default_str();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "simulation benchmark: scca.hc vs pearson.hc");
  BenchmarkConfig bcfg;
  bcfg.simulation.p = 500;
  std::string b_groups = "15,15", b_levels, b_deps = "0,0.33,0.67", b_grid = "9:27:3", b_csv, b_json;
  bool b_no_pearson = false;
  bench->add_option("--p", bcfg.simulation.p)->capture_default_str();
  bench->add_option("--groups", b_groups)->capture_default_str();
  bench->add_option("--levels", b_levels, "comma list of high|low|mixed per group");
  bench->add_option("--dep", b_deps, "comma list of dependency levels")->capture_default_str();
  bench->add_option("--datasets", bcfg.datasets, "datasets per level")->capture_default_str();
  bench->add_option("--seed", bcfg.seed)->capture_default_str();
  bench->add_option("--grid", b_grid)->capture_default_str();
  bench->add_option("--keep", bcfg.scca.keep)->capture_default_str();
  bench->add_option("--small-size", bcfg.scca.detect.small_cluster_size)->capture_default_str();
  bench->add_option("--min-small", bcfg.scca.detect.min_small_clusters)->capture_default_str();
  bench->add_option("--partitions", bcfg.scca.weave.partitions)->capture_default_str();
  bench->add_option("--rounds", bcfg.scca.weave.rounds)->capture_default_str();
  bench->add_option("--subsample", bcfg.scca.weave.subsample_fraction)->capture_default_str();
  bench->add_flag("--no-pearson", b_no_pearson);
  bench->add_option("--output", b_csv, "CSV table path (default stdout)");
  bench->add_option("--report", b_json, "per-dataset JSON reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (threads < 0) {
    std::cerr << "error: --threads must be >= 0\n";
    return kExitValidation;
  }

  try {
    if (*sim) {
      spec.groups = split_list<std::size_t>(groups, to_size);
      spec.group_levels = parse_levels(levels);
      const ExpressionDataset d = simulate(spec);
      write_dataset(d, sim_out);
      json truth = json::array();
      for (const auto& g : planted_groups(spec)) {
        std::vector<std::string> ids;
        for (auto i : g) ids.push_back(d.gene_ids()[i]);
        truth.push_back(ids);
      }
      emit(json{{"groups", truth}}.dump(2) + "\n", truth_out.empty() ? sim_out + ".truth.json" : truth_out);
    } else if (*ingest) {
      ExpressionDataset d = load_dataset(ingest_in);
      const std::size_t before = d.genes();
      if (!no_filter) d = filter_genes(d, filter);
      write_dataset(d, ingest_out);
      std::cerr << "kept " << d.genes() << " of " << before << " genes\n";
    } else if (*norm) {
      const ExpressionDataset d = load_dataset(norm_in);
      std::vector<Eigen::MatrixXd> reps{prepare_matrix(d.replicate_means(), norm_shrinkage, norm_skip)};
      write_dataset(ExpressionDataset(d.gene_ids(), d.experiment_labels(), std::move(reps)), norm_out);
    } else if (*weave_cmd) {
      const ExpressionDataset d = load_dataset(weave_in);
      const EdgeWeightMatrix a = weave(d, weave_args.config(threads));
      write_edge_matrix(a, weave_out);
      if (!weave_csv.empty()) write_edge_csv(a, weave_csv, csv_threshold);
      std::cerr << "entropy " << entropy(a) << "\n";
    } else if (*tune) {
      const ExpressionDataset d = load_dataset(tune_in);
      const auto grid = parse_grid(grid_text);
      const auto all = weave_grid(d, tune_args.config(threads), grid);
      fs::create_directories(tune_out);
      std::ostringstream contour;
      contour << "lambda1,lambda2,entropy\n" << std::setprecision(17);
      for (const auto& t : all) contour << t.penalties.lambda1 << ',' << t.penalties.lambda2 << ',' << t.entropy << '\n';
      emit(contour.str(), (fs::path(tune_out) / "entropy.csv").string());
      std::vector<std::size_t> order(all.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::tie(all[x].entropy, all[x].penalties) < std::tie(all[y].entropy, all[y].penalties);
      });
      json kept = json::array();
      for (std::size_t k = 0; k < std::min(keep, all.size()); ++k) {
        const auto& t = all[order[k]];
        std::ostringstream name;
        name << "matrix_" << std::setw(2) << std::setfill('0') << k << ".bin";
        write_edge_matrix(t.matrix, fs::path(tune_out) / name.str());
        kept.push_back({{"lambda1", t.penalties.lambda1}, {"lambda2", t.penalties.lambda2},
                        {"entropy", t.entropy}, {"matrix", name.str()}});
      }
      emit(json{{"kept", kept}}.dump(2) + "\n", (fs::path(tune_out) / "tune.json").string());
    } else if (*det) {
      std::vector<EdgeWeightMatrix> matrices;
      for (const auto& m : det_matrices) matrices.push_back(read_edge_matrix(m));
      for (const auto& m : matrices) {
        if (m.gene_ids != matrices.front().gene_ids) throw ValidationError("matrices cover different genes");
      }
      const DetectConfig cfg = detect_args.config();
      std::vector<CommunityResult> results;
      for (const auto& m : matrices) results.push_back(detect(m, cfg));
      const json doc = results.size() == 1
                           ? detection_json(results.front(), matrices.front().gene_ids, detect_args.params())
                           : clusters_json(vote_clusters(results), matrices.front().gene_ids,
                                           "scca." + detect_args.method + ".vote", detect_args.params());
      emit(doc.dump(2) + "\n", det_out);
    } else if (*sc) {
      const json detection = read_json(sc_det);
      const json truth_doc = read_json(sc_truth);
      std::vector<std::string> universe;
      auto index_of = [&](const std::string& g) {
        const auto it = std::find(universe.begin(), universe.end(), g);
        if (it != universe.end()) return static_cast<std::size_t>(it - universe.begin());
        universe.push_back(g);
        return universe.size() - 1;
      };
      std::vector<GeneSet> predicted, truth;
      const auto selected = detection.at("selected").get<std::vector<int>>();
      for (const auto& c : detection.at("clusters")) {
        if (std::find(selected.begin(), selected.end(), c.at("id").get<int>()) == selected.end()) continue;
        GeneSet s;
        for (const auto& g : c.at("genes")) s.push_back(index_of(g.get<std::string>()));
        predicted.push_back(std::move(s));
      }
      for (const auto& group : truth_doc.at("groups")) {
        GeneSet s;
        for (const auto& g : group) s.push_back(index_of(g.get<std::string>()));
        truth.push_back(std::move(s));
      }
      EvalReport report = score(predicted, truth);
      report.method_tag = sc_tag;
      report.config_digest = (std::ostringstream() << std::hex << fnv1a64(detection.at("params").dump())).str();
      emit(to_json(report).dump(2) + "\n", sc_out);
    } else if (*pipe) {
      PipelineConfig cfg = PipelineConfig::from_file(pipe_cfg);
      cfg.validate();
      if (threads > 0 && !cfg.document.contains("threads")) cfg.document["threads"] = threads;
      std::cout << run_pipeline(cfg).string() << "\n";
    } else if (*staged) {
      const ExpressionDataset d = load_dataset(staged_in);
      StagedSearchConfig cfg;
      cfg.method.weave = staged_args.config(threads);
      cfg.method.keep = staged_keep;
      cfg.small_cluster_size = staged_small;
      cfg.min_small_clusters = staged_min_small;
      std::vector<std::vector<PenaltyPair>> grids;
      for (const auto& g : staged_grids) grids.push_back(parse_grid(g));
      const StagedSearchResult r = run_staged_search(d, cfg, grids);
      json groups = json::array();
      for (const auto& g : r.groups) {
        groups.push_back({{"stage", g.stage + 1},
                          {"lambda1", g.best_penalties.lambda1},
                          {"lambda2", g.best_penalties.lambda2},
                          {"genes", g.genes}});
      }
      emit(json{{"groups", groups}, {"stages_run", r.stages_run}, {"stopped_early", r.stopped_early},
                {"stop_reason", r.stop_reason}}.dump(2) + "\n",
           staged_out);
    } else if (*scca_cmd) {
      const Eigen::MatrixXd x = standardize_columns(read_numeric_csv(x_path));
      const Eigen::MatrixXd y = standardize_columns(read_numeric_csv(y_path));
      const SccaSolution s = scca_solve(x, y, pen, solver);
      std::cout << json{{"a", to_vector(s.a)}, {"b", to_vector(s.b)}, {"objective", s.objective},
                        {"iterations", s.iterations}, {"converged", s.converged}, {"trace", s.trace}}
                       .dump(2)
                << "\n";
    } else if (*bench) {
      bcfg.simulation.groups = split_list<std::size_t>(b_groups, to_size);
      bcfg.simulation.group_levels = parse_levels(b_levels);
      bcfg.dependency_levels = split_list<double>(b_deps, to_double);
      bcfg.scca.grid = parse_grid(b_grid);
      bcfg.scca.weave.threads = threads;
      bcfg.run_pearson = !b_no_pearson;
      const BenchmarkResult r = run_benchmark(bcfg);
      emit(benchmark_csv(r), b_csv);
      if (!b_json.empty()) {
        json reports = json::array();
        for (const auto& rep : r.reports) reports.push_back(to_json(rep));
        emit(reports.dump(2) + "\n", b_json);
      }
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
