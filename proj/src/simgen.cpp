#include "scca_net/simgen.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "scca_net/errors.hpp"
#include "scca_net/linalg.hpp"
#include "scca_net/rng.hpp"

namespace scca_net {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::string numbered(char prefix, std::size_t i, std::size_t total) {
  const int width = static_cast<int>(std::to_string(total).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i + 1);
  return buf;
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Engine& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd w(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = n01(rng);
  return w;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError(std::string(what) + " is not positive definite");
  return llt.matrixL();
}

}  // namespace

void SimulationSpec::validate() const {
  if (p < 2 || n < 2 || replicates < 1) throw ValidationError("simulation needs p >= 2, n >= 2, replicates >= 1");
  if (!(dependency_level >= 0.0 && dependency_level <= 1.0)) throw ValidationError("dependency level must lie in [0, 1]");
  const std::size_t total = std::accumulate(groups.begin(), groups.end(), std::size_t{0});
  if (total > p) throw ValidationError("group sizes exceed p");
  for (std::size_t g : groups)
    if (g < 2) throw ValidationError("groups need at least 2 genes");
  for (double v : {high_corr_lo, high_corr_hi, low_corr_lo, low_corr_hi})
    if (!(v > -1.0 && v < 1.0)) throw ValidationError("correlation ranges must lie in (-1, 1)");
  if (high_corr_lo > high_corr_hi || low_corr_lo > low_corr_hi) throw ValidationError("empty correlation range");
  if (!(replicate_noise_sd >= 0.0)) throw ValidationError("replicate noise SD must be nonnegative");
}

std::size_t SimulationSpec::dependent_experiments() const {
  return static_cast<std::size_t>(std::llround(dependency_level * static_cast<double>(n)));
}

std::vector<std::vector<std::size_t>> planted_groups(const SimulationSpec& spec) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t size : spec.groups) {
    std::vector<std::size_t> g(size);
    std::iota(g.begin(), g.end(), start);
    start += size;
    out.push_back(std::move(g));
  }
  return out;
}

GroupLevel parse_group_level(const std::string& text) {
  if (text == "high") return GroupLevel::High;
  if (text == "low") return GroupLevel::Low;
  if (text == "mixed") return GroupLevel::Mixed;
  throw ValidationError("group level must be 'high', 'low' or 'mixed', got '" + text + "'");
}

Eigen::MatrixXd make_experiment_correlation(const SimulationSpec& spec) {
  spec.validate();
  const std::size_t k = spec.dependent_experiments();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(idx(spec.n), idx(spec.n));
  if (k < 2) return sigma;
  Engine rng(derive_seed(spec.seed, streams::kSimulation, 1));
  std::uniform_real_distribution<double> corr(spec.high_corr_lo, spec.high_corr_hi);
  for (std::size_t j = 1; j < k; ++j)
    for (std::size_t i = 0; i < j; ++i) sigma(idx(i), idx(j)) = sigma(idx(j), idx(i)) = corr(rng);
  return repair_correlation(sigma);
}

Eigen::MatrixXd make_gene_correlation(const SimulationSpec& spec) {
  spec.validate();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(idx(spec.p), idx(spec.p));
  if (spec.groups.empty()) return sigma;
  Engine rng(derive_seed(spec.seed, streams::kSimulation, 2));
  const auto groups = planted_groups(spec);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> high_corr(spec.high_corr_lo, spec.high_corr_hi);
  std::uniform_real_distribution<double> low_corr(spec.low_corr_lo, spec.low_corr_hi);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupLevel level = g < spec.group_levels.size() ? spec.group_levels[g] : GroupLevel::High;
    const auto& members = groups[g];
    std::vector<bool> high(members.size(), level == GroupLevel::High);
    if (level == GroupLevel::Mixed)
      for (std::size_t a = 0; a < members.size(); ++a) high[a] = coin(rng);
    for (std::size_t b = 1; b < members.size(); ++b)
      for (std::size_t a = 0; a < b; ++a) {
        const double c = (high[a] && high[b]) ? high_corr(rng) : low_corr(rng);
        sigma(idx(members[a]), idx(members[b])) = sigma(idx(members[b]), idx(members[a])) = c;
      }
  }
  return repair_correlation(sigma);
}

Eigen::MatrixXd draw_kronecker_normal(const Eigen::MatrixXd& sigma_e, const Eigen::MatrixXd& sigma_g,
                                      std::uint64_t seed) {
  const Eigen::MatrixXd le = cholesky_factor(sigma_e, "experiment correlation");
  const Eigen::MatrixXd lg = cholesky_factor(sigma_g, "gene correlation");
  Engine rng(seed);
  const Eigen::MatrixXd w = standard_normal(sigma_e.rows(), sigma_g.rows(), rng);
  return le * w * lg.transpose();
}

ExpressionDataset simulate(const SimulationSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd sigma_e = make_experiment_correlation(spec);
  const Eigen::MatrixXd sigma_g = make_gene_correlation(spec);
  Eigen::MatrixXd z = draw_kronecker_normal(sigma_e, sigma_g, derive_seed(spec.seed, streams::kSimulation, 3));

  // Within each group the last ceil(k/3) genes become positive combinations
  // of the remaining group genes, scaled to unit model variance.
  Engine rng(derive_seed(spec.seed, streams::kSimulation, 4));
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  for (const auto& members : planted_groups(spec)) {
    const std::size_t k = members.size();
    const std::size_t replaced = (k + 2) / 3;
    const std::size_t base = k - replaced;
    if (base == 0) continue;
    Eigen::MatrixXd base_cols(z.rows(), idx(base));
    Eigen::MatrixXd base_cov(idx(base), idx(base));
    for (std::size_t a = 0; a < base; ++a) {
      base_cols.col(idx(a)) = z.col(idx(members[a]));
      for (std::size_t b = 0; b < base; ++b) base_cov(idx(a), idx(b)) = sigma_g(idx(members[a]), idx(members[b]));
    }
    for (std::size_t r = base; r < k; ++r) {
      Eigen::VectorXd w(idx(base));
      for (Eigen::Index a = 0; a < w.size(); ++a) w(a) = weight(rng);
      w /= std::sqrt(w.dot(base_cov * w));
      z.col(idx(members[r])) = base_cols * w;
    }
  }

  Engine noise_rng(derive_seed(spec.seed, streams::kSimulation, 5));
  std::vector<Eigen::MatrixXd> reps;
  reps.reserve(spec.replicates);
  for (std::size_t r = 0; r < spec.replicates; ++r) {
    Eigen::MatrixXd rep = z;
    if (spec.replicate_noise_sd > 0.0) rep += spec.replicate_noise_sd * standard_normal(z.rows(), z.cols(), noise_rng);
    reps.push_back(std::move(rep));
  }
  std::vector<std::string> genes, experiments;
  for (std::size_t j = 0; j < spec.p; ++j) genes.push_back(numbered('g', j, spec.p));
  for (std::size_t i = 0; i < spec.n; ++i) experiments.push_back(numbered('e', i, spec.n));
  return ExpressionDataset(std::move(genes), std::move(experiments), std::move(reps));
}

double partial_correlation(const Eigen::Ref<const Eigen::MatrixXd>& precision, std::size_t i, std::size_t j) {
  const auto k = static_cast<std::size_t>(precision.rows());
  if (precision.cols() != precision.rows() || i >= k || j >= k) throw DimensionError("bad precision matrix or index");
  const double scale = precision.cwiseAbs().maxCoeff();
  if (!((precision - precision.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, scale))) {
    throw NotPositiveDefiniteError("precision matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("precision matrix is not positive definite");
  if (i == j) return 1.0;
  return -precision(idx(i), idx(j)) / std::sqrt(precision(idx(i), idx(i)) * precision(idx(j), idx(j)));
}

namespace {

// Rows encode the structural equations B w = e for w = (x, y, z, u, v, p, q).
Eigen::MatrixXd minimal_structure(double eps, double delta) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(7, 7);
  b(kZ, kX) = -1.0;
  b(kZ, kY) = -1.0;
  b(kZ, kU) = -eps;
  b(kZ, kV) = -eps;
  b(kZ, kP) = -eps;
  b(kU, kX) = -delta;
  b(kU, kY) = -delta;
  b(kU, kZ) = -delta;
  b(kU, kQ) = -delta;
  b(kU, kV) = -1.0;
  return b;
}

}  // namespace

ExpressionDataset minimal_example_dataset(std::size_t n, double eps, double delta, double noise_sd,
                                          std::uint64_t seed) {
  if (n < 10) throw ValidationError("minimal example needs n >= 10");
  if (!(std::abs(eps) <= 0.1 && std::abs(delta) <= 0.1)) throw ValidationError("eps and delta must be at most 0.1");
  if (!(noise_sd >= 0.0)) throw ValidationError("noise SD must be nonnegative");
  Engine rng(seed);
  Eigen::MatrixXd e = standard_normal(idx(n), 7, rng);
  e.col(kZ) *= noise_sd;
  e.col(kU) *= noise_sd;
  const Eigen::MatrixXd b = minimal_structure(eps, delta);
  // Rows of w satisfy B w_i = e_i, i.e. W = E B^{-T}.
  const Eigen::MatrixXd w = b.partialPivLu().solve(e.transpose()).transpose();
  Eigen::MatrixXd values = w;
  if (eps == 0.0 && delta == 0.0) {
    values.col(kZ) = w.col(kX) + w.col(kY) + e.col(kZ);
    values.col(kU) = w.col(kV) + e.col(kU);
  }
  std::vector<std::string> genes{"x", "y", "z", "u", "v", "p", "q"};
  std::vector<std::string> experiments;
  for (std::size_t i = 0; i < n; ++i) experiments.push_back(numbered('e', i, n));
  return ExpressionDataset(std::move(genes), std::move(experiments), {values});
}

Eigen::MatrixXd minimal_example_covariance(double eps, double delta, double noise_var) {
  const Eigen::MatrixXd b = minimal_structure(eps, delta);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(7);
  d(kZ) = noise_var;
  d(kU) = noise_var;
  const Eigen::MatrixXd binv = b.inverse();
  return binv * d.asDiagonal() * binv.transpose();
}

}  // namespace scca_net
