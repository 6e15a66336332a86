#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scca_net/evalkit.hpp"

using namespace scca_net;

TEST_CASE("precision and recall from counts") {
  GeneSet truth, predicted;
  for (std::size_t g = 0; g < 15; ++g) truth.push_back(g);
  for (std::size_t g = 5; g < 17; ++g) predicted.push_back(g);  // TP 10, FP 2, FN 5
  const std::vector<GeneSet> p{predicted}, t{truth};
  const auto report = score(p, t);
  REQUIRE(report.per_group.size() == 1);
  const auto& s = report.per_group[0];
  CHECK(s.tp == 10);
  CHECK(s.fp == 2);
  CHECK(s.fn == 5);
  CHECK(*s.precision == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(s.recall == doctest::Approx(0.6667).epsilon(1e-4));

  const auto perfect = score(t, t);
  CHECK(*perfect.per_group[0].precision == 1.0);
  CHECK(perfect.per_group[0].recall == 1.0);
}

TEST_CASE("empty predictions leave precision undefined") {
  const std::vector<GeneSet> none, truth{{1, 2, 3}};
  const auto report = score(none, truth);
  CHECK_FALSE(report.per_group[0].precision.has_value());
  CHECK(report.per_group[0].recall == 0.0);
  CHECK(report.per_group[0].fn == 3);
  const auto json = to_json(report);
  CHECK(json["per_group"][0]["precision"].is_null());
}

TEST_CASE("groups are matched by largest overlap, ties to the lower index") {
  const std::vector<GeneSet> truth{{0, 1, 2, 3}, {10, 11, 12, 13}};
  const std::vector<GeneSet> predicted{{0, 1, 10}, {2, 3, 11}, {12, 13, 20, 21}};
  const auto r = score(predicted, truth);
  CHECK(r.per_group[0].tp == 2);
  CHECK(r.per_group[0].fp == 1);  // cluster 0 wins the tie with cluster 1
  CHECK(r.per_group[1].tp == 2);
  CHECK(r.per_group[1].fp == 2);  // cluster 2
}

TEST_CASE("scores ignore cluster order and genes outside both sets") {
  const std::vector<GeneSet> truth{{0, 1, 2, 3, 4}, {7, 8, 9}};
  const std::vector<GeneSet> predicted{{0, 1, 2, 30}, {7, 8, 40, 41}};
  const std::vector<GeneSet> reversed{predicted[1], predicted[0]};
  const auto a = score(predicted, truth);
  const auto b = score(reversed, truth);
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(a.per_group[g].tp == b.per_group[g].tp);
    CHECK(a.per_group[g].fp == b.per_group[g].fp);
    CHECK(a.per_group[g].fn == b.per_group[g].fn);
  }
  // Relabeling genes that are in neither set changes nothing.
  const std::vector<GeneSet> shifted{{0, 1, 2, 300}, {7, 8, 400, 401}};
  const auto c = score(shifted, truth);
  for (std::size_t g = 0; g < 2; ++g) CHECK(c.per_group[g].fp == a.per_group[g].fp);
}

TEST_CASE("Pearson edge weights") {
  Eigen::MatrixXd z = oracle::random_normal(20, 4, 3);
  z.col(3) = z.col(1);
  const auto a = pearson_matrix(oracle::unit_columns(z), {"a", "b", "c", "d"});
  CHECK(a.weights(1, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.weights.diagonal().isZero());
  CHECK(a.weights.maxCoeff() == doctest::Approx(1.0));

  Eigen::MatrixXd orth = Eigen::MatrixXd::Zero(4, 3);
  orth.col(0) << 1, -1, 1, -1;
  orth.col(1) << 1, 1, -1, -1;
  orth.col(2) << 1, -1, -1, 1;
  const auto o = pearson_matrix(orth, {"a", "b", "c"});
  CHECK(o.weights.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Table-style summary layout") {
  BenchmarkResult r;
  for (std::string m : {"scca.hc", "pearson.hc"})
    for (double dep : {0.0, 0.33})
      for (std::size_t pw = 0; pw < 2; ++pw) r.rows.push_back({m, dep, pw, 0.5, 0.25, 0, 10});
  const std::string csv = benchmark_csv(r);
  CHECK(csv.rfind("pathway,method,precision_0%,recall_0%,precision_33%,recall_33%\n", 0) == 0);
  CHECK(csv.find("1,scca.hc,0.500,0.250,0.500,0.250\n") != std::string::npos);
  CHECK(csv.find("2,pearson.hc,") != std::string::npos);
}

TEST_CASE("detection dispatch") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(30, 30, 0.02);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) w(i, j) = 1.0;
  w.diagonal().setZero();
  EdgeWeightMatrix a;
  a.weights = w;
  for (int i = 0; i < 30; ++i) a.gene_ids.push_back("g" + std::to_string(i));

  DetectConfig hc;
  hc.small_cluster_size = 10;
  const auto r = detect(a, hc);
  CHECK(r.method_tag == "hc");
  CHECK(r.selected_genes() == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});

  DetectConfig sbm;
  sbm.method = DetectMethod::Sbm;
  const auto s = detect(a, sbm);
  CHECK(s.method_tag == "sbm");
  CHECK(s.selected_genes() == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
}
