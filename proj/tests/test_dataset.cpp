#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "scca_net/dataset.hpp"
#include "scca_net/errors.hpp"

using namespace scca_net;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / ("scca_net_test_" + name);
  std::ofstream(path) << content;
  return path;
}

// r replicates of an n x p matrix with entries drawn around `level`.
ExpressionDataset random_dataset(std::size_t n, std::size_t p, std::size_t r, std::uint64_t seed, double level,
                                 double spread, double jitter) {
  std::vector<Eigen::MatrixXd> reps;
  const Eigen::MatrixXd base = level + spread * oracle::random_normal(n, p, seed).array();
  for (std::size_t k = 0; k < r; ++k) {
    reps.push_back(base + jitter * oracle::random_normal(n, p, seed * 31 + k + 1));
  }
  std::vector<std::string> genes, exps;
  for (std::size_t j = 0; j < p; ++j) genes.push_back("gene" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) exps.push_back("exp" + std::to_string(i));
  return ExpressionDataset(genes, exps, reps);
}

}  // namespace

TEST_CASE("writer output reads back exactly") {
  const auto d = random_dataset(2, 3, 2, 5, 8.0, 1.0, 0.3);
  for (char delim : {'\t', ','}) {
    const fs::path path = fs::temp_directory_path() / "scca_net_roundtrip.txt";
    write_dataset(d, path, delim);
    const auto back = load_dataset(path);
    CHECK(back.genes() == 3);
    CHECK(back.experiments() == 2);
    CHECK(back.replicates() == 2);
    CHECK(back.gene_ids() == d.gene_ids());
    for (std::size_t k = 0; k < 2; ++k) CHECK(back.replicate(k) == d.replicate(k));
  }
}

TEST_CASE("loader reports malformed files") {
  const std::string header = "experiment\treplicate\ta\tb\tc\n";
  CHECK_THROWS_AS(load_dataset(temp_file("dup.tsv", "experiment\treplicate\ta\tb\ta\ne1\t1\t1\t2\t3\ne2\t1\t1\t2\t3\n")),
                  DuplicateGeneError);
  CHECK_THROWS_AS(load_dataset(temp_file("empty_cell.tsv", header + "e1\t1\t1\t\t3\ne2\t1\t1\t2\t3\n")),
                  MissingValueError);
  CHECK_THROWS_AS(load_dataset(temp_file("na.tsv", header + "e1\t1\t1\tNA\t3\ne2\t1\t1\t2\t3\n")), MissingValueError);
  CHECK_THROWS_AS(load_dataset(temp_file("ragged.tsv", header + "e1\t1\t1\t2\ne2\t1\t1\t2\t3\n")), DimensionError);
  CHECK_THROWS_AS(load_dataset(temp_file("reps.tsv", header + "e1\t1\t1\t2\t3\ne1\t2\t1\t2\t3\ne2\t1\t1\t2\t3\n")),
                  DimensionError);
  try {
    load_dataset(temp_file("bad_number.tsv", header + "e1\t1\t1\t2\t3\ne2\t1\t1\tx7\t3\n"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("comma files and CRLF line endings load") {
  const auto d = load_dataset(temp_file("crlf.csv", "experiment,replicate,a,b\r\ne1,1,1.5,2\r\ne2,1,3,4e0\r\n"));
  CHECK(d.genes() == 2);
  CHECK(d.value(1, 0, 1) == 4.0);
}

TEST_CASE("filter keeps exactly the genes meeting every rule") {
  // Six genes; only genes 2 and 5 (1-based) meet all three rules.
  const std::size_t n = 6;
  std::vector<Eigen::MatrixXd> reps(2, Eigen::MatrixXd(n, 6));
  for (std::size_t i = 0; i < n; ++i) {
    const double wave = static_cast<double>(i % 3);  // replicate-mean variance 0.8
    const double row[6][2] = {
        {9.0, 9.0},                          // constant: fails variance
        {8.0 + wave, 8.2 + wave},            // passes
        {3.0 + wave, 3.1 + wave},            // below expression floor
        {8.0 + wave, 8.0 + wave + (i == 2 ? 2.5 : 0.0)},  // replicate gap too wide
        {10.0 + wave, 10.5 + wave},          // passes
        {8.0 + 0.1 * wave, 8.0 + 0.1 * wave},  // variance too small
    };
    for (std::size_t g = 0; g < 6; ++g) {
      reps[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = row[g][0];
      reps[1](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = row[g][1];
    }
  }
  std::vector<std::string> genes{"g1", "g2", "g3", "g4", "g5", "g6"};
  std::vector<std::string> exps;
  for (std::size_t i = 0; i < n; ++i) exps.push_back("e" + std::to_string(i));
  const ExpressionDataset d(genes, exps, reps);
  const GeneFilter default_rules{};
  const auto out = filter_genes(d, default_rules);
  CHECK(out.gene_ids() == std::vector<std::string>{"g2", "g5"});
  for (std::size_t g = 0; g < 6; ++g) {
    CHECK(oracle::gene_passes(d, g, 0.1, std::numeric_limits<double>::infinity(), 2.0, 7.0) == (g == 1 || g == 4));
  }
}

TEST_CASE("filter matches the brute-force scan on random datasets") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto d = random_dataset(8, 25, 1 + seed % 3, seed, 8.0, 0.6, 0.8);
    GeneFilter f;
    f.min_variance = 0.05 * static_cast<double>(seed % 5);
    f.max_variance = seed % 2 ? 0.6 : std::numeric_limits<double>::infinity();
    f.max_replicate_gap = 1.0 + 0.1 * static_cast<double>(seed % 7);
    f.min_expression = 6.0 + 0.2 * static_cast<double>(seed % 4);
    std::vector<std::size_t> expected;
    for (std::size_t g = 0; g < d.genes(); ++g) {
      if (oracle::gene_passes(d, g, f.min_variance, f.max_variance, f.max_replicate_gap, f.min_expression)) {
        expected.push_back(g);
      }
    }
    CHECK(passing_genes(d, f) == expected);
  }
}

TEST_CASE("filter edge cases") {
  const auto d = random_dataset(5, 6, 2, 9, 8.0, 1.0, 0.2);
  GeneFilter open;
  open.min_variance = 0.0;
  open.max_replicate_gap = std::numeric_limits<double>::infinity();
  open.min_expression = -std::numeric_limits<double>::infinity();
  const auto same = filter_genes(d, open);
  CHECK(same.gene_ids() == d.gene_ids());
  for (std::size_t k = 0; k < d.replicates(); ++k) CHECK(same.replicate(k) == d.replicate(k));

  GeneFilter strict;
  strict.min_expression = 1e9;
  CHECK_THROWS_AS(filter_genes(d, strict), EmptyResultError);
  GeneFilter inverted;
  inverted.min_variance = 2.0;
  inverted.max_variance = 1.0;
  CHECK_THROWS_AS(filter_genes(d, inverted), ValidationError);
}

TEST_CASE("filter is idempotent") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto d = random_dataset(10, 30, 2, seed, 8.0, 0.7, 0.6);
    GeneFilter f;
    f.min_variance = 0.2;
    f.max_replicate_gap = 1.5;
    f.min_expression = 6.5;
    try {
      const auto once = filter_genes(d, f);
      const auto twice = filter_genes(once, f);
      CHECK(twice.gene_ids() == once.gene_ids());
    } catch (const EmptyResultError&) {
      // nothing to compare
    }
  }
}

TEST_CASE("single replicate draws ignore the seed") {
  const auto d = random_dataset(4, 3, 1, 2, 8.0, 1.0, 0.0);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const auto draw = draw_replicates(d, seed);
    CHECK(draw.matrix == d.replicate(0));
  }
}

TEST_CASE("draws are deterministic and row-consistent") {
  const auto d = random_dataset(12, 4, 3, 4, 8.0, 1.0, 0.5);
  const auto a = draw_replicates(d, 77);
  const auto b = draw_replicates(d, 77);
  CHECK(a.matrix == b.matrix);
  CHECK(a.source_replicates == b.source_replicates);
  for (std::size_t i = 0; i < d.experiments(); ++i) {
    CHECK(a.matrix.row(static_cast<Eigen::Index>(i)) ==
          d.replicate(a.source_replicates[i]).row(static_cast<Eigen::Index>(i)));
  }
}

TEST_CASE("replicate choice is uniform per experiment") {
  for (std::size_t r = 2; r <= 5; ++r) {
    const auto d = random_dataset(3, 2, r, 8, 8.0, 1.0, 0.5);
    std::vector<std::vector<int>> counts(d.experiments(), std::vector<int>(r, 0));
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) {
      const auto draw = draw_replicates(d, static_cast<std::uint64_t>(s));
      for (std::size_t i = 0; i < d.experiments(); ++i) ++counts[i][draw.source_replicates[i]];
    }
    const double expected = 1.0 / static_cast<double>(r);
    for (const auto& row : counts)
      for (int c : row) {
        const double freq = static_cast<double>(c) / draws;
        CHECK(freq >= expected - 0.02);
        CHECK(freq <= expected + 0.02);
      }
  }
}
