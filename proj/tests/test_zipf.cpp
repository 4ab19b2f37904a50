#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "latent/error.hpp"
#include "latent/zipf.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace latent;

namespace {

// Ranks 2^i with c = 2^24 keep c * r^-alpha integral for alpha in {1, 2}, so
// the table holds the power law exactly.
LogLogFit ExactFit(double c, double alpha) {
  RankTable t;
  std::size_t rank = 1;
  for (int i = 0; i < 12; ++i) {
    t.rows.push_back({rank, static_cast<std::size_t>(c / std::pow(double(rank), alpha)), ""});
    rank *= 2;
  }
  return FitLogLog(t);
}

LabeledPoints Blobs(const std::vector<std::vector<double>>& centres,
                    const std::vector<std::size_t>& sizes, double sd, Rng& rng,
                    std::vector<std::size_t>* labels) {
  LabeledPoints pts(centres[0].size());
  std::size_t id = 0;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      std::vector<double> v = centres[c];
      for (auto& x : v) x += sd * rng.Normal();
      pts.Add("p" + std::to_string(id++), v);
      if (labels) labels->push_back(c);
    }
  }
  return pts;
}

}  // namespace

TEST_CASE("zipf-mandelbrot closed form") {
  CHECK(ZipfMandelbrot(1, 1, 0, 1) == 1.0);
  CHECK(ZipfMandelbrot(2, 1, 0, 1) == 0.5);
  CHECK(ZipfMandelbrot(5, 3, 2.7, 1.1) == 3 / std::pow(7.7, 1.1));
  CHECK_THROWS_AS(ZipfMandelbrot(0.5, 1, 0, 1), Error);
  CHECK_THROWS_AS(ZipfMandelbrot(1, 0, 0, 1), Error);
  CHECK_THROWS_AS(ZipfMandelbrot(1, 1, -1, 1), Error);
  CHECK_THROWS_AS(ZipfMandelbrot(1, 1, 0, 0), Error);
}

TEST_CASE("word rank table") {
  Corpus corpus;
  Document d;
  Sentence s;
  s.tokens = {"c", "b", "a", "a", "b", "a"};
  d.sentences.push_back(s);
  corpus.documents.push_back(d);
  const RankTable t = WordRankTable(corpus);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].rank == 1);
  CHECK(t.rows[0].size == 3);
  CHECK(t.rows[0].label == "a");
  CHECK(t.rows[1].size == 2);
  CHECK(t.rows[2].size == 1);

  // Ties break lexicographically, stopwords are counted.
  corpus.documents[0].sentences[0].tokens = {"the", "zebra", "apple", "the"};
  corpus.stopwords = {"the"};
  const RankTable tie = WordRankTable(corpus);
  CHECK(tie.rows[0].label == "the");
  CHECK(tie.rows[1].label == "apple");
  CHECK(tie.rows[2].label == "zebra");

  corpus.documents[0].sentences[0].tokens = {"x", "x"};
  CHECK_THROWS_AS(FitLogLog(WordRankTable(corpus)), Error);
}

TEST_CASE("log-log fit recovers planted exponents") {
  for (double alpha : {1.0, 2.0}) {
    const LogLogFit fit = ExactFit(std::pow(2.0, 24), alpha);
    CHECK(std::abs(fit.slope + alpha) < 1e-9);
    CHECK(std::abs(fit.intercept - 24 * std::log(2.0)) < 1e-9);
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log-log fit with 5% multiplicative noise") {
  Rng rng(11);
  RankTable t;
  for (std::size_t r = 1; r <= 50; ++r) {
    const double noise = 1 + 0.05 * (2 * rng.Uniform01() - 1);
    t.rows.push_back({r, static_cast<std::size_t>(std::llround(1e6 / r * noise)), ""});
  }
  CHECK(std::abs(FitLogLog(t).slope + 1.0) < 0.05);
}

TEST_CASE("log-log fit window and flat tables") {
  RankTable flat;
  for (std::size_t r = 1; r <= 5; ++r) flat.rows.push_back({r, 7, ""});
  const LogLogFit f = FitLogLog(flat);
  CHECK(f.slope == 0.0);
  CHECK(f.r_squared == 1.0);
  FitOptions window;
  window.min_rank = 2;
  window.max_rank = 4;
  CHECK(FitLogLog(flat, window).points == 3);
}

TEST_CASE("k-means: separated blobs, ARI >= 0.99") {
  Rng rng(1);
  std::vector<std::size_t> truth;
  const auto pts = Blobs({{0, 0}, {10, 0}, {0, 10}}, {100, 100, 100}, 1.0, rng, &truth);
  const ClusterModel m = KMeansFit(pts, 3, 7);
  CHECK(oracle::AdjustedRandIndex(truth, m.assignments) >= 0.99);
  CHECK(m.converged);
  for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) {
    CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1]);
  }
}

TEST_CASE("k-means: degenerate cases and guards") {
  Rng rng(2);
  const auto pts = Blobs({{0, 0, 0}}, {12}, 1.0, rng, nullptr);
  const ClusterModel all = KMeansFit(pts, 12, 3);
  CHECK(all.inertia == 0.0);
  for (std::size_t s : all.ClusterSizes()) CHECK(s == 1);

  LabeledPoints dup(2);
  for (int i = 0; i < 5; ++i) dup.Add("d" + std::to_string(i), std::vector<double>{3, 4});
  const ClusterModel one = KMeansFit(dup, 1, 0);
  CHECK(one.inertia == 0.0);
  CHECK(one.centroid(0)[0] == 3.0);
  CHECK(one.centroid(0)[1] == 4.0);

  CHECK_THROWS_AS(KMeansFit(dup, 0, 0), Error);
  CHECK_THROWS_AS(KMeansFit(dup, 6, 0), Error);
}

TEST_CASE("k-means: duplicate-heavy data triggers empty-cluster repair") {
  LabeledPoints pts(1);
  for (int i = 0; i < 20; ++i) pts.Add("a" + std::to_string(i), std::vector<double>{0});
  for (int i = 0; i < 3; ++i) pts.Add("b" + std::to_string(i), std::vector<double>{double(i + 1)});
  const ClusterModel m = KMeansFit(pts, 4, 5);
  for (std::size_t s : m.ClusterSizes()) CHECK(s >= 1);
  for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) {
    CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1]);
  }
}

TEST_CASE("k-means: seeded runs are identical") {
  Rng rng(3);
  const auto pts = Blobs({{0, 0}, {4, 0}, {0, 4}, {4, 4}}, {50, 60, 70, 80}, 1.5, rng, nullptr);
  const ClusterModel a = KMeansFit(pts, 4, 123);
  const ClusterModel b = KMeansFit(pts, 4, 123);
  CHECK(a.assignments == b.assignments);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("cluster assignment: parallel kernel equals serial reference") {
  Rng rng(4);
  for (std::size_t d : {2, 9, 50}) {
    LabeledPoints pts(d);
    std::vector<double> row(d);
    for (int i = 0; i < 2000; ++i) {
      for (auto& v : row) v = rng.Normal();
      pts.Add(std::to_string(i), row);
    }
    const std::size_t k = 17;
    std::vector<double> centroids(pts.data().begin(), pts.data().begin() + k * d);
    std::vector<std::size_t> l1(pts.size()), l2(pts.size());
    std::vector<double> d1(pts.size()), d2(pts.size());
    const int saved = omp_get_max_threads();
    omp_set_num_threads(3);
    AssignClusters(pts, centroids, k, l1, d1);
    omp_set_num_threads(saved);
    reference::AssignClustersSerial(pts, centroids, k, l2, d2);
    CHECK(l1 == l2);
    CHECK(d1 == d2);
  }
}

TEST_CASE("cluster rank table") {
  ClusterModel m;
  m.k = 4;
  m.assignments = {0, 0, 0, 2, 2, 2, 2, 2, 3};
  const RankTable t = ClusterRankTable(m);
  REQUIRE(t.rows.size() == 3);  // cluster 1 is empty
  CHECK(t.rows[0].size == 5);
  CHECK(t.rows[0].label == "2");
  CHECK(t.rows[1].size == 3);
  CHECK(t.rows[2].size == 1);
}

TEST_CASE("planted power-law cluster sizes give slope near -1") {
  Rng rng(5);
  const std::size_t k = 10;
  std::vector<std::vector<double>> centres(k, std::vector<double>(k, 0.0));
  std::vector<std::size_t> sizes;
  for (std::size_t r = 0; r < k; ++r) {
    centres[r][r] = 50.0;
    sizes.push_back(static_cast<std::size_t>(std::llround(1000.0 / double(r + 1))));
  }
  const auto pts = Blobs(centres, sizes, 1.0, rng, nullptr);
  const ClusterModel m = KMeansFit(pts, k, 9);
  const LogLogFit fit = FitLogLog(ClusterRankTable(m));
  CHECK(std::abs(fit.slope + 1.0) < 0.15);
}

TEST_CASE("k sensitivity sweep") {
  Rng rng(6);
  std::vector<std::vector<double>> centres;
  std::vector<std::size_t> sizes;
  for (std::size_t r = 0; r < 40; ++r) {
    std::vector<double> c(3);
    for (auto& v : c) v = 30 * rng.Normal();
    centres.push_back(c);
    sizes.push_back(static_cast<std::size_t>(std::llround(400.0 / double(r + 1))) + 2);
  }
  const auto pts = Blobs(centres, sizes, 1.0, rng, nullptr);
  const auto sweep = KSensitivity(pts, 30, 4);
  std::vector<std::size_t> ks;
  for (const auto& p : sweep) {
    ks.push_back(p.k);
    CHECK(p.fit.slope < 0.0);
    CHECK(p.fit.points <= p.k);
  }
  CHECK(ks == std::vector<std::size_t>{10, 15, 20, 25, 30, 35, 40, 45, 50});
  const auto again = KSensitivity(pts, 30, 4);
  for (std::size_t i = 0; i < sweep.size(); ++i) CHECK(again[i].fit.slope == sweep[i].fit.slope);

  // Clipped at the low end.
  const auto low = KSensitivity(pts, 5, 4);
  CHECK(low.front().k == 2);
}

TEST_CASE("POS purity: separated and permuted tags") {
  Rng rng(7);
  EmbeddingTable table(8);
  PosTagMap tags;
  const PosTag classes[] = {PosTag::kNoun, PosTag::kVerb, PosTag::kAdjective,
                            PosTag::kAdverb, PosTag::kPronoun, PosTag::kOther};
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < 60; ++i) {
      std::vector<double> v(8);
      for (auto& x : v) x = rng.Normal();
      v[c] += 100;
      const std::string w = "c" + std::to_string(c) + "_" + std::to_string(i);
      table.Add(w, v);
      tags[w] = classes[c];
    }
  }
  const std::vector<std::size_t> ks = {1, 3, 5, 10, 20, 50};
  for (const auto& [k, pct] : PosPurity(table, tags, ks).per_k) CHECK(pct == 100.0);

  // Two far-apart same-tag pairs, k = 1.
  EmbeddingTable pairs(1);
  pairs.Add("a", std::vector<double>{0});
  pairs.Add("b", std::vector<double>{0.1});
  pairs.Add("c", std::vector<double>{50});
  pairs.Add("d", std::vector<double>{50.1});
  PosTagMap pt = {{"a", PosTag::kNoun}, {"b", PosTag::kNoun},
                  {"c", PosTag::kVerb}, {"d", PosTag::kVerb}};
  const std::vector<std::size_t> one = {1};
  CHECK(PosPurity(pairs, pt, one).per_k.at(1) == 100.0);

  std::vector<std::size_t> too_many = {4};
  CHECK_THROWS_AS(PosPurity(pairs, pt, too_many), Error);
}

TEST_CASE("POS statistics") {
  Corpus corpus;
  Document d;
  Sentence s;
  s.tokens = {"run", "dog", "dog", "quickly", "xyz"};
  d.sentences.push_back(s);
  corpus.documents.push_back(d);
  PosTagMap tags = {{"run", PosTag::kVerb}, {"dog", PosTag::kNoun},
                    {"quickly", PosTag::kAdverb}};
  const PosStatistics st = ComputePosStatistics(corpus, tags);
  CHECK(st.total[static_cast<int>(PosTag::kNoun)] == 2);
  CHECK(st.unique[static_cast<int>(PosTag::kNoun)] == 1);
  CHECK(st.total[static_cast<int>(PosTag::kVerb)] == 1);
  CHECK(st.untagged_total == 1);
  CHECK(st.untagged_unique == 1);
}
