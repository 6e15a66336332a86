#include "scca_net/community.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "scca_net/errors.hpp"
#include "scca_net/rng.hpp"

namespace scca_net {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Relabels so that block ids appear in order of their first member.
std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

void check_labels(std::span<const int> labels, std::size_t p, int q) {
  if (labels.size() != p) throw ValidationError("label vector does not match graph size");
  for (int l : labels)
    if (l < 0 || l >= q) throw ValidationError("label outside [0, Q)");
}

Eigen::MatrixXd block_densities(const Eigen::MatrixXd& adj, const std::vector<int>& labels, int q) {
  Eigen::MatrixXd edges = Eigen::MatrixXd::Zero(q, q);
  std::vector<double> sizes(static_cast<std::size_t>(q), 0.0);
  for (int l : labels) sizes[static_cast<std::size_t>(l)] += 1.0;
  const auto p = static_cast<std::size_t>(adj.rows());
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (adj(idx(i), idx(j)) != 0.0) {
        const int a = labels[i], b = labels[j];
        edges(a, b) += 1.0;
        if (a != b) edges(b, a) += 1.0;
      }
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(q, q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      const double na = sizes[static_cast<std::size_t>(a)], nb = sizes[static_cast<std::size_t>(b)];
      const double pairs = a == b ? na * (na - 1.0) / 2.0 : na * nb;
      pi(a, b) = pairs > 0.0 ? edges(a, b) / pairs : 0.0;
    }
  return pi;
}

Eigen::VectorXd proportions(const std::vector<int>& labels, int q) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
  for (int l : labels) g(l) += 1.0;
  return g / static_cast<double>(labels.size());
}

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts) {
  const Eigen::Index n = points.rows();
  std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Engine rng(derive_seed(seed, streams::kSpectral, static_cast<std::uint64_t>(r)));
    // k-means++ seeding
    Eigen::MatrixXd centers(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        for (chosen = 0; chosen < n - 1; ++chosen) {
          target -= d2(chosen);
          if (target <= 0.0) break;
        }
      } else {
        chosen = first(rng);
      }
      centers.row(c) = points.row(chosen);
      d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double cost = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      cost = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (points.row(i) - centers.row(c)).squaredNorm();
          if (d < bestd) {
            bestd = d;
            arg = c;
          }
        }
        cost += bestd;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        } else {
          // Re-seed an empty center at the point farthest from its center.
          Eigen::Index far = 0;
          double fard = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
            if (d > fard) {
              fard = d;
              far = i;
            }
          }
          centers.row(c) = points.row(far);
        }
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_labels = labels;
    }
  }
  return canonical_labels(best_labels);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

std::size_t BinaryGraph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index j = 1; j < adjacency.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (adjacency(i, j) != 0.0) ++count;
  return count;
}

std::vector<std::size_t> CommunityResult::block_members(int block) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == block) out.push_back(i);
  return out;
}

std::vector<std::size_t> CommunityResult::selected_genes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (std::find(selected_blocks.begin(), selected_blocks.end(), labels[i]) != selected_blocks.end()) out.push_back(i);
  return out;
}

BinaryGraph discretize(const Eigen::Ref<const Eigen::MatrixXd>& weights, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in (0, 1]");
  BinaryGraph g;
  g.threshold_used = threshold;
  g.adjacency = (weights.array() >= threshold).cast<double>();
  g.adjacency.diagonal().setZero();
  return g;
}

BinaryGraph discretize(const EdgeWeightMatrix& a, double threshold) { return discretize(a.weights, threshold); }

std::vector<int> spectral_init(const BinaryGraph& g, int q, std::uint64_t seed) {
  const auto p = static_cast<Eigen::Index>(g.size());
  if (q < 1 || q > p) throw ValidationError("Q must lie in [1, p]");
  if (q == 1) return std::vector<int>(static_cast<std::size_t>(p), 0);
  const double tau = g.adjacency.sum() / static_cast<double>(p) / static_cast<double>(p);
  Eigen::MatrixXd perturbed = g.adjacency.array() + tau;
  perturbed.diagonal() = g.adjacency.diagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(perturbed);
  Eigen::MatrixXd embed = es.eigenvectors().rightCols(q);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double nrm = embed.row(i).norm();
    if (nrm > 0.0) embed.row(i) /= nrm;
  }
  return kmeans(embed, q, seed, 10);
}

SbmFit sbm_fit_detailed(const BinaryGraph& g, int q, std::span<const int> init, int max_sweeps) {
  const std::size_t p = g.size();
  if (q < 1) throw ValidationError("Q must be positive");
  if (max_sweeps < 1) throw ValidationError("max_sweeps must be positive");
  check_labels(init, p, q);
  const Eigen::MatrixXd& adj = g.adjacency;
  std::vector<int> labels(init.begin(), init.end());

  SbmFit fit;
  const double floor = 1e-10;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    fit.sweeps = sweep;
    // Block-compressed rows: counts(i, k) = edges from i into block k.
    Eigen::MatrixXd member = Eigen::MatrixXd::Zero(idx(p), q);
    for (std::size_t i = 0; i < p; ++i) member(idx(i), labels[i]) = 1.0;
    const Eigen::MatrixXd counts = adj * member;
    Eigen::VectorXd log_fact(idx(p));
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0.0;
      for (int k = 0; k < q; ++k) s += std::lgamma(counts(idx(i), k) + 1.0);
      log_fact(idx(i)) = s;
    }

    // Hard-label start, then EM on the Poisson-product mixture.
    Eigen::MatrixXd resp = member;
    Eigen::VectorXd gamma(q);
    Eigen::MatrixXd rate(q, q);
    auto m_step = [&] {
      const Eigen::VectorXd mass = resp.colwise().sum().transpose();
      const Eigen::RowVectorXd overall = counts.colwise().mean();
      for (int l = 0; l < q; ++l) {
        gamma(l) = std::max(mass(l) / static_cast<double>(p), 1e-12);
        if (mass(l) > 0.0) {
          rate.row(l) = (resp.col(l).transpose() * counts) / mass(l);
        } else {
          rate.row(l) = overall;
        }
      }
      gamma /= gamma.sum();
      rate = rate.cwiseMax(floor);
    };
    m_step();
    std::vector<double> trace;
    Eigen::MatrixXd logr(idx(p), q);
    for (int em = 0; em < 500; ++em) {
      const Eigen::MatrixXd log_rate = rate.array().log().matrix();
      const Eigen::VectorXd rate_sum = rate.rowwise().sum();
      // logr(i, l) = log gamma_l + sum_k counts_ik log rate_lk - rate_lk - log counts_ik!
      logr = counts * log_rate.transpose();
      for (int l = 0; l < q; ++l) logr.col(l).array() += std::log(gamma(l)) - rate_sum(l);
      logr.colwise() -= log_fact;
      double ll = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        const double lse = log_sum_exp(logr.row(idx(i)).transpose());
        ll += lse;
        resp.row(idx(i)) = (logr.row(idx(i)).array() - lse).exp().matrix();
      }
      trace.push_back(ll);
      const std::size_t t = trace.size();
      if (t >= 2 && std::abs(trace[t - 1] - trace[t - 2]) <= 1e-10 * (1.0 + std::abs(trace[t - 1]))) break;
      m_step();
    }
    fit.em_traces.push_back(std::move(trace));

    std::vector<int> next(p);
    for (std::size_t i = 0; i < p; ++i) {
      Eigen::Index arg = 0;
      logr.row(idx(i)).maxCoeff(&arg);
      next[i] = static_cast<int>(arg);
    }
    if (next == labels) break;
    labels = std::move(next);
  }

  // Drop blocks that ended up empty.
  std::vector<int> used(static_cast<std::size_t>(q), 0);
  for (int l : labels) used[static_cast<std::size_t>(l)] = 1;
  std::vector<int> remap(static_cast<std::size_t>(q), -1);
  int q_eff = 0;
  for (int l = 0; l < q; ++l)
    if (used[static_cast<std::size_t>(l)]) remap[static_cast<std::size_t>(l)] = q_eff++;
  for (int& l : labels) l = remap[static_cast<std::size_t>(l)];

  CommunityResult& r = fit.result;
  r.method_tag = "sbm";
  r.dropped_empty_blocks = q_eff < q;
  r.labels = std::move(labels);
  r.gamma = proportions(r.labels, q_eff);
  r.pi = block_densities(adj, r.labels, q_eff);
  r.selected_blocks = {sbm_select(r)};
  return fit;
}

CommunityResult sbm_fit(const BinaryGraph& g, int q, std::span<const int> init, int max_sweeps) {
  return sbm_fit_detailed(g, q, init, max_sweeps).result;
}

int sbm_select(const CommunityResult& r) {
  const int q = r.block_count();
  if (q < 1 || r.pi.rows() != q) throw ValidationError("community result has no blocks");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(q), 0);
  for (int l : r.labels) ++sizes[static_cast<std::size_t>(l)];
  int best = 0;
  for (int k = 1; k < q; ++k) {
    const double pk = r.pi(k, k), pb = r.pi(best, best);
    if (pk > pb || (pk == pb && sizes[static_cast<std::size_t>(k)] < sizes[static_cast<std::size_t>(best)])) best = k;
  }
  return best;
}

std::vector<std::size_t> Dendrogram::members(int id) const {
  std::vector<std::size_t> out;
  std::vector<int> stack{id};
  const int p = static_cast<int>(leaves);
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (c < p) {
      out.push_back(static_cast<std::size_t>(c));
    } else {
      const Merge& m = merges.at(static_cast<std::size_t>(c - p));
      stack.push_back(m.cluster_a);
      stack.push_back(m.cluster_b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Dendrogram::validate() const {
  if (leaves < 1 || merges.size() + 1 != leaves) throw ValidationError("dendrogram must have p - 1 merges");
  const int p = static_cast<int>(leaves);
  std::vector<int> used(2 * leaves - 1, 0);
  std::vector<int> size(2 * leaves - 1, 1);
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const Merge& m = merges[k];
    const int created = p + static_cast<int>(k);
    for (int c : {m.cluster_a, m.cluster_b}) {
      if (c < 0 || c >= created) throw ValidationError("merge uses a cluster before it exists");
      if (used[static_cast<std::size_t>(c)]++) throw ValidationError("cluster merged twice");
    }
    if (m.cluster_a == m.cluster_b) throw ValidationError("cluster merged with itself");
    size[static_cast<std::size_t>(created)] = size[static_cast<std::size_t>(m.cluster_a)] + size[static_cast<std::size_t>(m.cluster_b)];
    if (m.new_size != size[static_cast<std::size_t>(created)]) throw ValidationError("merge size mismatch");
  }
}

Dendrogram hc_ward(const Eigen::Ref<const Eigen::MatrixXd>& weights) {
  const Eigen::Index p = weights.rows();
  if (p < 2 || weights.cols() != p) throw ValidationError("hc_ward needs a square matrix with p >= 2");
  const auto n = static_cast<std::size_t>(p);

  // cost(i, j) for singletons = (1 * 1 / 2) * (1 - A_ij)
  Eigen::MatrixXd cost = (1.0 - weights.array()).matrix() * 0.5;
  std::vector<int> id(n), size(n, 1);
  std::vector<char> active(n, 1);
  std::iota(id.begin(), id.end(), 0);

  auto less = [&](double c1, std::size_t i1, std::size_t j1, double c2, std::size_t i2, std::size_t j2) {
    if (c1 != c2) return c1 < c2;
    const auto a1 = std::minmax(id[i1], id[j1]);
    const auto a2 = std::minmax(id[i2], id[j2]);
    return a1 < a2;
  };
  std::vector<std::size_t> nn(n, 0);
  auto refresh = [&](std::size_t i) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (best == n || less(cost(idx(i), idx(j)), i, j, cost(idx(i), idx(best)), i, best)) best = j;
    }
    nn[i] = best;
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  Dendrogram d;
  d.leaves = n;
  d.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (bi == n || less(cost(idx(i), idx(nn[i])), i, nn[i], cost(idx(bi), idx(nn[bi])), bi, nn[bi])) bi = i;
    }
    const std::size_t i = bi, j = nn[bi];
    const double cij = cost(idx(i), idx(j));
    const double ni = size[i], nj = size[j];
    Merge m;
    m.cluster_a = std::min(id[i], id[j]);
    m.cluster_b = std::max(id[i], id[j]);
    m.cost = cij;
    m.new_size = size[i] + size[j];
    d.merges.push_back(m);

    // Lance-Williams update for Ward: the merged cluster lives in slot i.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double nk = size[k];
      const double updated =
          ((ni + nk) * cost(idx(i), idx(k)) + (nj + nk) * cost(idx(j), idx(k)) - nk * cij) / (ni + nj + nk);
      cost(idx(i), idx(k)) = updated;
      cost(idx(k), idx(i)) = updated;
    }
    active[j] = 0;
    size[i] += size[j];
    id[i] = static_cast<int>(n + step);

    if (step + 2 == n) break;
    refresh(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i) continue;
      if (nn[k] == i || nn[k] == j) {
        refresh(k);
      } else if (less(cost(idx(k), idx(i)), k, i, cost(idx(k), idx(nn[k])), k, nn[k])) {
        nn[k] = i;
      }
    }
  }
  return d;
}

Dendrogram hc_ward(const EdgeWeightMatrix& a) { return hc_ward(a.weights); }

CommunityResult hc_cut(const Dendrogram& d, const Eigen::Ref<const Eigen::MatrixXd>& weights, int small_cluster_size,
                       int min_small_clusters) {
  if (small_cluster_size < 2 || min_small_clusters < 1) {
    throw ValidationError("small_cluster_size must be >= 2 and min_small_clusters >= 1");
  }
  const std::size_t p = d.leaves;
  if (p < 2 || d.merges.size() + 1 != p) throw ValidationError("invalid dendrogram");
  if (weights.rows() != static_cast<Eigen::Index>(p)) throw DimensionError("weights do not match the dendrogram");

  std::vector<int> size(2 * p - 1, 1);
  for (std::size_t k = 0; k < d.merges.size(); ++k) size[p + k] = d.merges[k].new_size;

  std::set<int> active{static_cast<int>(2 * p - 2)};
  int small = size[2 * p - 2] < small_cluster_size ? 1 : 0;
  std::size_t found_q = 0;
  for (std::size_t q = 2; q <= p; ++q) {
    const std::size_t undo = p - q;  // merge index that is undone going from q-1 to q clusters
    const Merge& m = d.merges[undo];
    const int merged = static_cast<int>(p + undo);
    active.erase(merged);
    if (size[static_cast<std::size_t>(merged)] < small_cluster_size) --small;
    for (int c : {m.cluster_a, m.cluster_b}) {
      active.insert(c);
      if (size[static_cast<std::size_t>(c)] < small_cluster_size) ++small;
    }
    if (small >= min_small_clusters) {
      found_q = q;
      break;
    }
  }
  if (found_q == 0) {
    throw NotFoundError("no cut yields " + std::to_string(min_small_clusters) + " clusters smaller than " +
                        std::to_string(small_cluster_size));
  }

  // Blocks ordered by their smallest member.
  std::vector<std::pair<std::size_t, int>> order;
  std::vector<std::vector<std::size_t>> members;
  for (int c : active) {
    auto mem = d.members(c);
    order.emplace_back(mem.front(), static_cast<int>(members.size()));
    members.push_back(std::move(mem));
  }
  std::sort(order.begin(), order.end());

  CommunityResult r;
  r.method_tag = "hc";
  r.labels.assign(p, 0);
  const int q = static_cast<int>(order.size());
  for (int b = 0; b < q; ++b) {
    const auto& mem = members[static_cast<std::size_t>(order[static_cast<std::size_t>(b)].second)];
    for (std::size_t g : mem) r.labels[g] = b;
    if (static_cast<int>(mem.size()) < small_cluster_size) r.selected_blocks.push_back(b);
  }
  r.gamma = proportions(r.labels, q);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd pairs = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      if (i == j) continue;
      sums(r.labels[i], r.labels[j]) += weights(idx(i), idx(j));
      pairs(r.labels[i], r.labels[j]) += 1.0;
    }
  r.pi = (pairs.array() > 0.0).select(sums.array() / pairs.array().max(1.0), 0.0).matrix();
  return r;
}

std::vector<std::size_t> majority_vote(std::span<const CommunityResult> results) {
  if (results.empty()) return {};
  const std::size_t p = results.front().labels.size();
  std::vector<std::size_t> votes(p, 0);
  for (const auto& r : results) {
    if (r.labels.size() != p) throw ValidationError("results cover different gene universes");
    for (std::size_t g : r.selected_genes()) ++votes[g];
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < p; ++g)
    if (2 * votes[g] > results.size()) out.push_back(g);
  return out;
}

std::vector<std::vector<std::size_t>> vote_clusters(std::span<const CommunityResult> results) {
  const auto voted = majority_vote(results);
  if (voted.empty()) return {};
  const std::size_t p = results.front().labels.size();
  std::vector<int> pos(p, -1);
  for (std::size_t k = 0; k < voted.size(); ++k) pos[voted[k]] = static_cast<int>(k);
  const std::size_t v = voted.size();
  std::vector<std::size_t> together(v * v, 0);
  for (const auto& r : results) {
    for (int block : r.selected_blocks) {
      std::vector<std::size_t> in;
      for (std::size_t g : r.block_members(block))
        if (pos[g] >= 0) in.push_back(static_cast<std::size_t>(pos[g]));
      for (std::size_t a : in)
        for (std::size_t b : in) ++together[a * v + b];
    }
  }
  std::vector<std::size_t> parent(v);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b)
      if (2 * together[a * v + b] > results.size()) parent[std::max(find(a), find(b))] = std::min(find(a), find(b));
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t a = 0; a < v; ++a) groups[find(a)].push_back(voted[a]);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, genes] : groups) out.push_back(std::move(genes));
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.front() < r.front(); });
  return out;
}

}  // namespace scca_net
