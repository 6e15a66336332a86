#include "scca_net/netweave.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "scca_net/errors.hpp"
#include "scca_net/linalg.hpp"
#include "scca_net/parallel.hpp"
#include "scca_net/rng.hpp"

namespace scca_net {

namespace {

Eigen::MatrixXd gather_columns(const Eigen::Ref<const Eigen::MatrixXd>& z, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(z.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = z.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

double parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("bad number in penalty grid: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void WeaveConfig::validate(std::size_t genes) const {
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ValidationError("subsample fraction must lie in (0, 1]");
  }
  if (partitions < 1 || rounds < 1) throw ValidationError("partitions and rounds must be positive");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ValidationError("shrinkage must lie in [0, 1]");
  penalties.validate();
  if (subsample_size(genes) < 4) {
    throw ValidationError("subsample of " + std::to_string(genes) + " genes at fraction " +
                          std::to_string(subsample_fraction) + " leaves fewer than 4 genes");
  }
}

std::size_t WeaveConfig::subsample_size(std::size_t genes) const {
  // Guard against s * p landing just below an integer.
  return static_cast<std::size_t>(std::floor(subsample_fraction * static_cast<double>(genes) + 1e-9));
}

std::vector<std::uint64_t> gene_keys(std::span<const std::string> gene_ids) {
  std::vector<std::uint64_t> keys;
  keys.reserve(gene_ids.size());
  for (const auto& id : gene_ids) keys.push_back(fnv1a64(id));
  return keys;
}

std::vector<std::size_t> keyed_order(std::span<const std::size_t> items, std::uint64_t seed,
                                     std::span<const std::uint64_t> keys) {
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  ranked.reserve(items.size());
  const std::uint64_t salt = splitmix64(seed);
  for (std::size_t item : items) {
    const std::uint64_t key = keys.empty() ? static_cast<std::uint64_t>(item) : keys[item];
    ranked.emplace_back(splitmix64(salt ^ splitmix64(key)), item);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> out;
  out.reserve(items.size());
  for (const auto& [rank, item] : ranked) out.push_back(item);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_partition(std::span<const std::size_t> genes,
                                                                               std::uint64_t seed,
                                                                               std::span<const std::uint64_t> keys) {
  if (genes.size() < 4) throw ValidationError("random partition needs at least 4 genes");
  const auto order = keyed_order(genes, seed, keys);
  const std::size_t first = (order.size() + 1) / 2;
  std::vector<std::size_t> x(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<std::size_t> y(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return {std::move(x), std::move(y)};
}

Eigen::VectorXd mean_weights(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::span<const std::uint64_t> keys,
                             const WeaveConfig& cfg, std::size_t round) {
  const auto p = static_cast<std::size_t>(z_star.cols());
  cfg.validate(p);
  if (!keys.empty() && keys.size() != p) throw DimensionError("gene key count does not match the matrix");

  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto subsample = keyed_order(all, derive_seed(cfg.seed, streams::kSubsample, round), keys);
  subsample.resize(cfg.subsample_size(p));
  std::sort(subsample.begin(), subsample.end());

  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const auto partitions = static_cast<std::size_t>(cfg.partitions);
  for (std::size_t t = 0; t < partitions; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, streams::kPartition, round * partitions + t);
    const auto [xs, ys] = random_partition(subsample, seed, keys);
    SccaOptions opts = cfg.solver;
    opts.seed = derive_seed(cfg.seed, streams::kSolver, round * partitions + t);
    const SccaSolution sol = scca_solve(gather_columns(z_star, xs), gather_columns(z_star, ys), cfg.penalties, opts);
    for (std::size_t j = 0; j < xs.size(); ++j) c(static_cast<Eigen::Index>(xs[j])) += std::abs(sol.b(static_cast<Eigen::Index>(j)));
    for (std::size_t j = 0; j < ys.size(); ++j) c(static_cast<Eigen::Index>(ys[j])) += std::abs(sol.a(static_cast<Eigen::Index>(j)));
  }
  return c / static_cast<double>(cfg.partitions);
}

Eigen::MatrixXd weave_once(const Eigen::Ref<const Eigen::MatrixXd>& z_star, std::span<const std::uint64_t> keys,
                           const WeaveConfig& cfg, std::size_t round) {
  const Eigen::VectorXd c = mean_weights(z_star, keys, cfg, round);
  Eigen::MatrixXd a = c * c.transpose();
  a.diagonal().setZero();
  return a;
}

Eigen::MatrixXd round_matrix(const ExpressionDataset& data, const WeaveConfig& cfg, std::size_t round) {
  const ReplicateDraw draw = draw_replicates(data, derive_seed(cfg.seed, streams::kReplicateDraw, round));
  return prepare_matrix(draw.matrix, cfg.shrinkage, cfg.skip_normalization);
}

EdgeWeightMatrix aggregate_rounds(const Eigen::Ref<const Eigen::MatrixXd>& round_weights,
                                  std::vector<std::string> gene_ids) {
  if (static_cast<std::size_t>(round_weights.cols()) != gene_ids.size()) {
    throw DimensionError("round weights do not match the gene list");
  }
  EdgeWeightMatrix out;
  out.gene_ids = std::move(gene_ids);
  const auto p = round_weights.cols();
  out.weights = Eigen::MatrixXd::Zero(p, p);
  // Sum per round in index order so the result is independent of scheduling.
  for (Eigen::Index b = 0; b < round_weights.rows(); ++b) {
    const Eigen::VectorXd c = round_weights.row(b).transpose();
    out.weights.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  out.weights.triangularView<Eigen::StrictlyUpper>() = out.weights.transpose().eval();
  out.weights /= static_cast<double>(round_weights.rows());
  out.weights.diagonal().setZero();
  const double max = out.weights.maxCoeff();
  if (max > 0.0) out.weights /= max;
  return out;
}

EdgeWeightMatrix weave(const ExpressionDataset& data, const WeaveConfig& cfg) {
  const std::size_t p = data.genes();
  cfg.validate(p);
  const auto keys = gene_keys(data.gene_ids());
  const auto rounds = static_cast<std::size_t>(cfg.rounds);
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rounds), static_cast<Eigen::Index>(p));
  parallel_for(rounds, cfg.threads, [&](std::size_t b) {
    const Eigen::MatrixXd z = round_matrix(data, cfg, b);
    c.row(static_cast<Eigen::Index>(b)) = mean_weights(z, keys, cfg, b).transpose();
  });
  return aggregate_rounds(c, data.gene_ids());
}

double entropy(const Eigen::Ref<const Eigen::MatrixXd>& weights) {
  double total = 0.0;
  const auto p = weights.rows();
  for (Eigen::Index j = 1; j < p; ++j)
    for (Eigen::Index i = 0; i < j; ++i) total += weights(i, j);
  if (!(total > 0.0)) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double w = weights(i, j);
      if (w > 0.0) {
        const double q = w / total;
        h -= q * std::log(q);
      }
    }
  }
  return h;
}

std::vector<TunedMatrix> weave_grid(const ExpressionDataset& data, const WeaveConfig& cfg_template,
                                    std::span<const PenaltyPair> grid) {
  std::vector<TunedMatrix> out;
  out.reserve(grid.size());
  for (const auto& pen : grid) {
    WeaveConfig cfg = cfg_template;
    cfg.penalties = pen;
    TunedMatrix t;
    t.penalties = pen;
    t.matrix = weave(data, cfg);
    t.entropy = entropy(t.matrix);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TunedMatrix> select_penalties(const ExpressionDataset& data, const WeaveConfig& cfg_template,
                                          std::span<const PenaltyPair> grid, std::size_t keep) {
  if (grid.empty()) throw ValidationError("penalty grid is empty");
  if (keep == 0 || keep > grid.size()) throw ValidationError("keep must lie in [1, grid size]");
  auto all = weave_grid(data, cfg_template, grid);
  std::stable_sort(all.begin(), all.end(), [](const TunedMatrix& l, const TunedMatrix& r) {
    if (l.entropy != r.entropy) return l.entropy < r.entropy;
    return l.penalties < r.penalties;
  });
  all.resize(keep);
  return all;
}

std::vector<PenaltyPair> square_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !(lo >= 0.0)) throw ValidationError("grid needs 0 <= lo <= hi and step > 0");
  std::vector<double> values;
  for (int k = 0;; ++k) {
    const double v = lo + k * step;
    if (v > hi + 1e-9 * std::max(1.0, std::abs(hi))) break;
    values.push_back(v);
  }
  std::vector<PenaltyPair> grid;
  for (double l1 : values)
    for (double l2 : values) grid.push_back({l1, l2});
  return grid;
}

std::vector<PenaltyPair> parse_grid(std::string_view text) {
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ValidationError("grid must look like lo:hi:step");
    return square_grid(parse_number(text.substr(0, c1)), parse_number(text.substr(c1 + 1, c2 - c1 - 1)),
                       parse_number(text.substr(c2 + 1)));
  }
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    const auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    values.push_back(parse_number(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  std::vector<PenaltyPair> grid;
  for (double l1 : values)
    for (double l2 : values) grid.push_back({l1, l2});
  for (const auto& g : grid) g.validate();
  return grid;
}

}  // namespace scca_net
