#include "scca_net/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "scca_net/errors.hpp"
#include "scca_net/rng.hpp"

namespace scca_net {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." || s == "?";
}

double parse_real(std::string_view s, std::size_t line, std::size_t column) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, "column " + std::to_string(column) + ": not a decimal number: '" + std::string(s) + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ExpressionDataset::ExpressionDataset(std::vector<std::string> gene_ids, std::vector<std::string> experiment_labels,
                                     std::vector<Eigen::MatrixXd> replicates)
    : gene_ids_(std::move(gene_ids)),
      experiment_labels_(std::move(experiment_labels)),
      replicates_(std::move(replicates)) {
  const std::size_t p = gene_ids_.size();
  const std::size_t n = experiment_labels_.size();
  if (p < 2) throw DimensionError("need at least 2 genes, got " + std::to_string(p));
  if (n < 2) throw DimensionError("need at least 2 experiments, got " + std::to_string(n));
  if (replicates_.empty()) throw DimensionError("need at least 1 replicate");
  std::unordered_set<std::string> seen;
  for (const auto& id : gene_ids_) {
    if (!seen.insert(id).second) throw DuplicateGeneError("duplicate gene id '" + id + "'");
  }
  for (std::size_t k = 0; k < replicates_.size(); ++k) {
    const auto& m = replicates_[k];
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != p) {
      throw DimensionError("replicate " + std::to_string(k) + " is " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(p));
    }
    if (!m.allFinite()) throw MissingValueError("replicate " + std::to_string(k) + " has missing values");
  }
}

Eigen::MatrixXd ExpressionDataset::replicate_means() const {
  Eigen::MatrixXd sum = replicates_.front();
  for (std::size_t k = 1; k < replicates_.size(); ++k) sum += replicates_[k];
  return sum / static_cast<double>(replicates_.size());
}

ExpressionDataset ExpressionDataset::select_genes(std::span<const std::size_t> genes) const {
  std::vector<std::string> ids;
  ids.reserve(genes.size());
  for (std::size_t g : genes) {
    if (g >= gene_ids_.size()) throw ValidationError("gene index out of range");
    ids.push_back(gene_ids_[g]);
  }
  std::vector<Eigen::MatrixXd> reps;
  reps.reserve(replicates_.size());
  for (const auto& m : replicates_) {
    Eigen::MatrixXd sub(m.rows(), static_cast<Eigen::Index>(genes.size()));
    for (std::size_t j = 0; j < genes.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(genes[j]));
    reps.push_back(std::move(sub));
  }
  return ExpressionDataset(std::move(ids), experiment_labels_, std::move(reps));
}

ExpressionDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++line_no;
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  const auto header = split(line, delim);
  if (header.size() < 4 || trim(header[0]) != "experiment" || trim(header[1]) != "replicate") {
    throw ParseError(line_no, "header must be 'experiment, replicate, <gene ids...>' with at least 2 genes");
  }
  std::vector<std::string> gene_ids;
  for (std::size_t j = 2; j < header.size(); ++j) gene_ids.emplace_back(trim(header[j]));
  {
    std::unordered_set<std::string> seen;
    for (const auto& id : gene_ids) {
      if (id.empty()) throw ParseError(line_no, "empty gene id");
      if (!seen.insert(id).second) throw DuplicateGeneError("duplicate gene id '" + id + "'");
    }
  }
  const std::size_t p = gene_ids.size();

  std::vector<std::string> experiments;
  std::unordered_map<std::string, std::size_t> experiment_index;
  std::vector<std::vector<std::vector<double>>> rows;  // experiment -> replicate -> values
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delim);
    if (fields.size() != p + 2) {
      throw DimensionError("line " + std::to_string(line_no) + ": expected " + std::to_string(p + 2) +
                           " fields, found " + std::to_string(fields.size()));
    }
    const std::string exp(trim(fields[0]));
    if (exp.empty()) throw MissingValueError("line " + std::to_string(line_no) + ": empty experiment label");
    auto [it, inserted] = experiment_index.try_emplace(exp, experiments.size());
    if (inserted) {
      experiments.push_back(exp);
      rows.emplace_back();
    }
    std::vector<double> values(p);
    for (std::size_t j = 0; j < p; ++j) {
      const auto cell = trim(fields[j + 2]);
      if (is_missing_token(cell)) {
        throw MissingValueError("line " + std::to_string(line_no) + ": missing value for gene '" + gene_ids[j] + "'");
      }
      values[j] = parse_real(cell, line_no, j + 3);
    }
    rows[it->second].push_back(std::move(values));
  }
  if (experiments.empty()) throw ParseError(line_no, "no data rows");
  const std::size_t r = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != r) {
      throw DimensionError("experiment '" + experiments[i] + "' has " + std::to_string(rows[i].size()) +
                           " replicates, expected " + std::to_string(r));
    }
  }
  const std::size_t n = experiments.size();
  std::vector<Eigen::MatrixXd> reps(r, Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t j = 0; j < p; ++j)
        reps[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][k][j];
  return ExpressionDataset(std::move(gene_ids), std::move(experiments), std::move(reps));
}

void write_dataset(const ExpressionDataset& d, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "experiment" << delimiter << "replicate";
  for (const auto& id : d.gene_ids()) out << delimiter << id;
  out << '\n';
  for (std::size_t i = 0; i < d.experiments(); ++i) {
    for (std::size_t k = 0; k < d.replicates(); ++k) {
      out << d.experiment_labels()[i] << delimiter << (k + 1);
      for (std::size_t j = 0; j < d.genes(); ++j) out << delimiter << format_real(d.value(i, k, j));
      out << '\n';
    }
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::vector<std::size_t> passing_genes(const ExpressionDataset& d, const GeneFilter& f) {
  if (!(f.min_variance >= 0.0) || !(f.max_replicate_gap >= 0.0) || std::isnan(f.min_expression) ||
      !(f.min_variance < f.max_variance)) {
    throw ValidationError("filter thresholds must be nonnegative with min_variance < max_variance");
  }
  const Eigen::MatrixXd means = d.replicate_means();
  const auto n = static_cast<double>(d.experiments());
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < d.genes(); ++j) {
    const auto col = means.col(static_cast<Eigen::Index>(j));
    const double var = (col.array() - col.mean()).square().sum() / (n - 1.0);
    if (!(var > f.min_variance && var < f.max_variance)) continue;
    double max_gap = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.experiments(); ++i) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = 0; k < d.replicates(); ++k) {
        const double v = d.value(i, k, j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      max_gap = std::max(max_gap, hi - lo);
      min_value = std::min(min_value, lo);
    }
    if (max_gap < f.max_replicate_gap && min_value >= f.min_expression) keep.push_back(j);
  }
  return keep;
}

ExpressionDataset filter_genes(const ExpressionDataset& d, const GeneFilter& filter) {
  const auto keep = passing_genes(d, filter);
  if (keep.empty()) throw EmptyResultError("no gene passes the expression filters");
  if (keep.size() < 2) throw EmptyResultError("only one gene passes the expression filters");
  return d.select_genes(keep);
}

ReplicateDraw draw_replicates(const ExpressionDataset& d, std::uint64_t seed) {
  ReplicateDraw draw;
  draw.matrix.resize(static_cast<Eigen::Index>(d.experiments()), static_cast<Eigen::Index>(d.genes()));
  draw.source_replicates.resize(d.experiments());
  Engine rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, d.replicates() - 1);
  for (std::size_t i = 0; i < d.experiments(); ++i) {
    const std::size_t k = d.replicates() == 1 ? 0 : pick(rng);
    draw.source_replicates[i] = k;
    draw.matrix.row(static_cast<Eigen::Index>(i)) = d.replicate(k).row(static_cast<Eigen::Index>(i));
  }
  return draw;
}

}  // namespace scca_net
