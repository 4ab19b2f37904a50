#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

namespace latent {

using PointId = std::int64_t;

// Points in R^d with caller-assigned unique ids, stored row-major.
class PointSet {
 public:
  explicit PointSet(std::size_t dimension);

  void Add(PointId id, std::span<const double> values);
  void Reserve(std::size_t n);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dimension() const { return dimension_; }
  PointId id(std::size_t i) const { return ids_[i]; }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  const std::vector<PointId>& ids() const { return ids_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t dimension_;
  std::vector<PointId> ids_;
  std::vector<double> data_;
  std::unordered_set<PointId> seen_ids_;
};

struct Neighbor {
  PointId id;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Sum of squared coordinate differences.
double SquaredL2(const double* a, const double* b, std::size_t dim);

enum class IndexBackend { kExact };

// Backend contract. Results are ascending by (distance, id). When an exclude
// id is given, a point carrying that id at distance exactly 0 is skipped;
// other zero-distance points remain candidates.
class NeighborIndex {
 public:
  virtual ~NeighborIndex() = default;

  virtual IndexBackend backend() const = 0;
  virtual const PointSet& source() const = 0;

  // Throws kNotEnoughPoints when fewer than k candidates remain.
  virtual std::vector<Neighbor> Knn(std::span<const double> query, std::size_t k,
                                    std::optional<PointId> exclude) const = 0;

  // One query per row of `queries`; result row q occupies [q*k, (q+1)*k).
  // With exclude_self each query row's own id is the exclusion id.
  virtual std::vector<Neighbor> KnnBatch(const PointSet& queries, std::size_t k,
                                         bool exclude_self) const;
};

// Exact search. Batch queries are split across OpenMP threads. Low-dimensional
// sets are searched through a k-d tree; in higher dimensions an inner-product
// screen with a rounding-error margin prunes candidates before exact
// re-ranking. Every path returns neighbors and distances bit-identical to
// reference::KnnScan.
class ExactIndex final : public NeighborIndex {
 public:
  explicit ExactIndex(PointSet points);

  IndexBackend backend() const override { return IndexBackend::kExact; }
  const PointSet& source() const override { return points_; }

  std::vector<Neighbor> Knn(std::span<const double> query, std::size_t k,
                            std::optional<PointId> exclude) const override;
  std::vector<Neighbor> KnnBatch(const PointSet& queries, std::size_t k,
                                 bool exclude_self) const override;

 private:
  std::size_t BatchDirect(const PointSet& queries, std::size_t k, bool exclude_self,
                          std::vector<Neighbor>& out) const;
  std::size_t BatchGram(const PointSet& queries, std::size_t k, bool exclude_self,
                        std::vector<Neighbor>& out) const;
  std::size_t BatchTree(const PointSet& queries, std::size_t k, bool exclude_self,
                        std::vector<Neighbor>& out) const;
  void BuildTree();

  struct TreeNode {
    std::size_t begin, end;   // range of tree_order_
    std::size_t left, right;  // child nodes; 0 for a leaf
    std::size_t axis;
    double split;  // left holds coordinates <= split, right >= split
  };

  PointSet points_;
  std::vector<double> norms_;   // squared norms of the rows of points_
  std::vector<double> panels_;  // points regrouped 8 at a time, coordinate-major
  std::vector<TreeNode> tree_;
  std::vector<std::size_t> tree_order_;
};

std::unique_ptr<NeighborIndex> BuildIndex(PointSet points,
                                          IndexBackend backend = IndexBackend::kExact);

double KthDistance(const NeighborIndex& index, std::span<const double> query,
                   std::size_t k, std::optional<PointId> exclude);

namespace reference {

// Single-threaded untiled scan kept as the baseline for tests and benchmarks.
std::vector<Neighbor> KnnScan(const PointSet& points, std::span<const double> query,
                              std::size_t k, std::optional<PointId> exclude);

std::vector<Neighbor> KnnBatchSerial(const PointSet& points, const PointSet& queries,
                                     std::size_t k, bool exclude_self);

}  // namespace reference

struct BackendCheckReport {
  bool monotone = true;
  double recall = 0.0;  // mean recall@k against the exact scan
  bool passed = false;  // monotone && recall >= 0.99
};

// Acceptance gate for substitute backends: monotone k-th distances in k and
// recall@k >= 0.99 on `num_queries` random queries drawn from the data's
// bounding box.
BackendCheckReport CheckBackendContract(const NeighborIndex& candidate,
                                        std::size_t k, std::size_t num_queries,
                                        std::uint64_t seed);

}  // namespace latent
