#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latent/embeddings.hpp"

namespace latent {

// c / (beta + r)^alpha
double ZipfMandelbrot(double r, double c, double beta, double alpha);

struct RankRow {
  std::size_t rank = 0;  // 1-based
  std::size_t size = 0;
  std::string label;     // token, or cluster index for cluster tables
};

struct RankTable {
  std::vector<RankRow> rows;  // descending size, ranks 1..n
};

// Ranks (label, size) pairs by descending size. Equal sizes keep the input
// order, so callers pass labels already in their tie-break order. Zero sizes
// are dropped.
RankTable RankBySize(std::vector<std::pair<std::string, std::size_t>> sizes);

// Raw counts over every token of every sentence, stopwords included.
// Ties are ordered lexicographically by token.
RankTable WordRankTable(const Corpus& corpus);

struct FitOptions {
  // Inclusive rank window; max_rank = 0 means the last rank.
  std::size_t min_rank = 1;
  std::size_t max_rank = 0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Least squares of ln(size) on ln(rank). R^2 is 1 when every residual is zero
// (including the flat table, whose slope is 0).
LogLogFit FitLogLog(const RankTable& table, const FitOptions& options = {});

// Rows of a point matrix with string ids, stored row-major.
class LabeledPoints {
 public:
  explicit LabeledPoints(std::size_t dimension);
  void Add(std::string id, std::span<const double> values);

  std::size_t size() const { return ids_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t dimension_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
};

// Sentence means of every sentence with at least one embeddable token, in
// corpus order; returns the number of sentences skipped.
LabeledPoints SentenceMeans(const Corpus& corpus, const EmbeddingTable& table,
                            std::size_t* skipped = nullptr);

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop when no centroid moves farther than this
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dimension = 0;
  std::vector<double> centroids;         // k x dimension, row-major
  std::vector<std::size_t> assignments;  // per input point
  std::vector<std::string> point_ids;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> inertia_trace;  // after every assignment step
  std::size_t repaired_clusters = 0;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dimension, dimension};
  }
  std::vector<std::size_t> ClusterSizes() const;
};

// k-means++ seeding then Lloyd iterations. Throws kInternal if the inertia
// ever increases beyond rounding.
ClusterModel KMeansFit(const LabeledPoints& points, std::size_t k, std::uint64_t seed,
                       const KMeansOptions& options = {});

// Nearest centroid (lowest index on ties) and squared distance for every
// point. The parallel kernel and the serial reference agree bit for bit.
void AssignClusters(const LabeledPoints& points, std::span<const double> centroids,
                    std::size_t k, std::span<std::size_t> labels,
                    std::span<double> d2);

namespace reference {
void AssignClustersSerial(const LabeledPoints& points,
                          std::span<const double> centroids, std::size_t k,
                          std::span<std::size_t> labels, std::span<double> d2);
}  // namespace reference

// Cluster sizes ranked descending, ties by ascending cluster index.
RankTable ClusterRankTable(const ClusterModel& model);

struct ClusterInspection {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::vector<std::pair<std::string, double>> closest;   // (point id, distance)
  std::vector<std::pair<std::string, double>> furthest;  // farthest first
};

// The `count` members closest to and furthest from each centroid.
std::vector<ClusterInspection> InspectClusters(const LabeledPoints& points,
                                               const ClusterModel& model,
                                               std::size_t count);

struct PosPurityReport {
  std::map<std::size_t, double> per_k;  // neighbours -> mean percentage
  std::size_t tokens = 0;               // tagged, embedded tokens evaluated
};

PosPurityReport PosPurity(const EmbeddingTable& table, const PosTagMap& tags,
                          std::span<const std::size_t> ks);

struct PosStatistics {
  std::array<std::size_t, 6> total{};   // token occurrences per tag
  std::array<std::size_t, 6> unique{};  // token types per tag
  std::size_t untagged_total = 0;
  std::size_t untagged_unique = 0;
};

// Occurrence and type counts per tag over the corpus, indexed by PosTag.
PosStatistics ComputePosStatistics(const Corpus& corpus, const PosTagMap& tags);

struct SensitivityPoint {
  std::size_t k = 0;
  LogLogFit fit;
};

// k from k_center - 20 to k_center + 20 in steps of 5, clipped to
// [2, points]; every k is fitted with the same seed.
std::vector<SensitivityPoint> KSensitivity(const LabeledPoints& points,
                                           std::size_t k_center, std::uint64_t seed,
                                           const KMeansOptions& options = {});

}  // namespace latent
