#include "latent/nnindex.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "latent/error.hpp"
#include "latent/random.hpp"

namespace latent {

namespace {

// Below this dimension the direct scan beats the inner-product screen.
constexpr std::size_t kGramMinDimension = 16;
// Up to this dimension a k-d tree prunes most of the set.
constexpr std::size_t kTreeMaxDimension = 8;
constexpr std::size_t kTreeLeafSize = 16;

constexpr std::size_t kDirectQueryTile = 16;
constexpr std::size_t kDirectPointTile = 64;
constexpr std::size_t kGramQueryTile = 32;
constexpr std::size_t kGramPointTile = 256;
constexpr std::size_t kPanelWidth = 8;
constexpr std::size_t kQueryBlock = 4;

struct Candidate {
  double d2;
  PointId id;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && id < o.id);
  }
};

// Fixed-capacity ascending list of the best candidates seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  void Offer(const Candidate& c) {
    if (items_.size() == k_ && !(c < items_.back())) return;
    auto pos = std::upper_bound(items_.begin(), items_.end(), c);
    items_.insert(pos, c);
    if (items_.size() > k_) items_.pop_back();
  }

  std::size_t size() const { return items_.size(); }
  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().d2; }

  void WriteTo(Neighbor* out) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      out[i] = {items_[i].id, std::sqrt(items_[i].d2)};
    }
  }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

bool Excluded(std::optional<PointId> exclude, PointId id, double d2) {
  return exclude && *exclude == id && d2 == 0.0;
}

void CheckQuery(const PointSet& points, std::size_t dim, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (dim != points.dimension()) {
    throw Error(ErrorCode::kInvalidArgument,
                "query dimension " + std::to_string(dim) + " != index dimension " +
                    std::to_string(points.dimension()));
  }
}

[[noreturn]] void ThrowNotEnough(std::size_t found, std::size_t k) {
  throw Error(ErrorCode::kNotEnoughPoints,
              "requested k=" + std::to_string(k) + " but only " +
                  std::to_string(found) + " candidate points are available");
}

double SquaredNorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Inner products of up to kQueryBlock query rows with one panel of
// kPanelWidth points stored coordinate-major.
using Lane8 = double __attribute__((vector_size(kPanelWidth * sizeof(double))));

void PanelDot(const double* q, std::size_t rows, std::size_t dim, const double* panel,
              double* out /* kQueryBlock x kPanelWidth */) {
  Lane8 acc[kQueryBlock] = {};
  const double* q0 = q;
  const double* q1 = rows > 1 ? q + dim : q;
  const double* q2 = rows > 2 ? q + 2 * dim : q;
  const double* q3 = rows > 3 ? q + 3 * dim : q;
  for (std::size_t j = 0; j < dim; ++j) {
    Lane8 pj;
    std::memcpy(&pj, panel + j * kPanelWidth, sizeof(pj));
    acc[0] += q0[j] * pj;
    acc[1] += q1[j] * pj;
    acc[2] += q2[j] * pj;
    acc[3] += q3[j] * pj;
  }
  std::memcpy(out, acc, sizeof(acc));
}

}  // namespace

PointSet::PointSet(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::kInvalidArgument, "point dimension must be positive");
  }
}

void PointSet::Reserve(std::size_t n) {
  ids_.reserve(n);
  data_.reserve(n * dimension_);
}

void PointSet::Add(PointId id, std::span<const double> values) {
  if (values.size() != dimension_) {
    throw Error(ErrorCode::kInvalidArgument,
                "point " + std::to_string(id) + " has length " +
                    std::to_string(values.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  if (!seen_ids_.insert(id).second) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate point id " + std::to_string(id));
  }
  ids_.push_back(id);
  data_.insert(data_.end(), values.begin(), values.end());
}

// Lane j % 16 accumulates coordinate j (a 4-wide pass covers the remainder)
// and the lanes are folded pairwise, so the summation order is fixed by the
// code rather than by the vectorizer.
double SquaredL2(const double* a, const double* b, std::size_t dim) {
  constexpr std::size_t kLanes = 16;
  double acc[kLanes] = {};
  const std::size_t body = dim - dim % kLanes;
  for (std::size_t j = 0; j < body; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double t = a[j + l] - b[j + l];
      acc[l] += t * t;
    }
  }
  const std::size_t body4 = dim - dim % 4;
  for (std::size_t j = body; j < body4; j += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double t = a[j + l] - b[j + l];
      acc[l] += t * t;
    }
  }
  for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
    for (std::size_t l = 0; l < width; ++l) acc[l] += acc[l + width];
  }
  double s = acc[0];
  for (std::size_t j = body4; j < dim; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

std::vector<Neighbor> NeighborIndex::KnnBatch(const PointSet& queries, std::size_t k,
                                              bool exclude_self) const {
  std::vector<Neighbor> out;
  out.reserve(queries.size() * k);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::optional<PointId> exclude;
    if (exclude_self) exclude = queries.id(q);
    auto row = Knn(queries.point(q), k, exclude);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

ExactIndex::ExactIndex(PointSet points) : points_(std::move(points)) {
  const std::size_t np = points_.size();
  const std::size_t dim = points_.dimension();
  norms_.resize(np);
  for (std::size_t i = 0; i < np; ++i) norms_[i] = SquaredNorm(points_.point(i));
  if (dim >= kGramMinDimension) {
    const std::size_t num_panels = (np + kPanelWidth - 1) / kPanelWidth;
    panels_.assign(num_panels * dim * kPanelWidth, 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      double* panel = panels_.data() + (i / kPanelWidth) * dim * kPanelWidth;
      auto row = points_.point(i);
      for (std::size_t j = 0; j < dim; ++j) panel[j * kPanelWidth + i % kPanelWidth] = row[j];
    }
  }
  if (dim <= kTreeMaxDimension) BuildTree();
}

void ExactIndex::BuildTree() {
  const std::size_t dim = points_.dimension();
  tree_order_.resize(points_.size());
  for (std::size_t i = 0; i < tree_order_.size(); ++i) tree_order_[i] = i;
  tree_.push_back({0, tree_order_.size(), 0, 0, 0, 0.0});
  std::vector<std::size_t> pending = {0};
  while (!pending.empty()) {
    const std::size_t node = pending.back();
    pending.pop_back();
    const std::size_t begin = tree_[node].begin;
    const std::size_t end = tree_[node].end;
    if (end - begin <= kTreeLeafSize) continue;
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = points_.point(tree_order_[i])[j];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = j;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(tree_order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     tree_order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     tree_order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return points_.point(a)[axis] < points_.point(b)[axis];
                     });
    const std::size_t left = tree_.size();
    tree_.push_back({begin, mid, 0, 0, 0, 0.0});
    tree_.push_back({mid, end, 0, 0, 0, 0.0});
    tree_[node].left = left;
    tree_[node].right = left + 1;
    tree_[node].axis = axis;
    tree_[node].split = points_.point(tree_order_[mid])[axis];
    pending.push_back(left);
    pending.push_back(left + 1);
  }
}

std::vector<Neighbor> ExactIndex::Knn(std::span<const double> query, std::size_t k,
                                      std::optional<PointId> exclude) const {
  return reference::KnnScan(points_, query, k, exclude);
}

std::vector<Neighbor> ExactIndex::KnnBatch(const PointSet& queries, std::size_t k,
                                           bool exclude_self) const {
  CheckQuery(points_, queries.dimension(), k);
  std::vector<Neighbor> out(queries.size() * k);
  const std::size_t dim = points_.dimension();
  const std::size_t found = dim >= kGramMinDimension ? BatchGram(queries, k, exclude_self, out)
                            : dim <= kTreeMaxDimension
                                ? BatchTree(queries, k, exclude_self, out)
                                : BatchDirect(queries, k, exclude_self, out);
  if (found < k) ThrowNotEnough(found, k);
  return out;
}

std::size_t ExactIndex::BatchDirect(const PointSet& queries, std::size_t k,
                                    bool exclude_self, std::vector<Neighbor>& out) const {
  const std::size_t nq = queries.size();
  const std::size_t np = points_.size();
  const std::size_t dim = points_.dimension();
  const double* qdata = queries.data().data();
  const double* pdata = points_.data().data();
  const PointId* pids = points_.ids().data();
  const auto num_tiles =
      static_cast<std::ptrdiff_t>((nq + kDirectQueryTile - 1) / kDirectQueryTile);
  std::size_t found = k;

#pragma omp parallel
  {
    std::size_t local_found = k;
    std::vector<double> d2(kDirectQueryTile * kDirectPointTile);
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t tile = 0; tile < num_tiles; ++tile) {
      const std::size_t q0 = static_cast<std::size_t>(tile) * kDirectQueryTile;
      const std::size_t q1 = std::min(nq, q0 + kDirectQueryTile);
      std::vector<TopK> best(q1 - q0, TopK(k));
      for (std::size_t p0 = 0; p0 < np; p0 += kDirectPointTile) {
        const std::size_t p1 = std::min(np, p0 + kDirectPointTile);
        for (std::size_t q = q0; q < q1; ++q) {
          const double* qv = qdata + q * dim;
          double* row = d2.data() + (q - q0) * kDirectPointTile;
          for (std::size_t p = p0; p < p1; ++p) {
            row[p - p0] = SquaredL2(qv, pdata + p * dim, dim);
          }
        }
        for (std::size_t q = q0; q < q1; ++q) {
          std::optional<PointId> exclude;
          if (exclude_self) exclude = queries.id(q);
          const double* row = d2.data() + (q - q0) * kDirectPointTile;
          TopK& top = best[q - q0];
          for (std::size_t p = p0; p < p1; ++p) {
            if (Excluded(exclude, pids[p], row[p - p0])) continue;
            top.Offer({row[p - p0], pids[p]});
          }
        }
      }
      for (std::size_t q = q0; q < q1; ++q) {
        local_found = std::min(local_found, best[q - q0].size());
        best[q - q0].WriteTo(out.data() + q * k);
      }
    }
#pragma omp critical
    found = std::min(found, local_found);
  }
  return found;
}

// A subtree is skipped only when the squared gap along its splitting axis
// exceeds the current k-th distance. That gap is one rounded term of
// SquaredL2, and adding non-negative terms never rounds below an addend, so
// the pruning is exact and equal-distance points are still visited.
std::size_t ExactIndex::BatchTree(const PointSet& queries, std::size_t k,
                                  bool exclude_self, std::vector<Neighbor>& out) const {
  const std::size_t nq = queries.size();
  const std::size_t dim = points_.dimension();
  const PointId* pids = points_.ids().data();
  std::size_t found = k;

#pragma omp parallel
  {
    std::size_t local_found = k;
    std::vector<std::pair<std::size_t, double>> stack;
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t sq = 0; sq < static_cast<std::ptrdiff_t>(nq); ++sq) {
      const auto q = static_cast<std::size_t>(sq);
      const double* qv = queries.point(q).data();
      std::optional<PointId> exclude;
      if (exclude_self) exclude = queries.id(q);
      TopK top(k);
      stack.assign(1, {0, 0.0});
      while (!stack.empty()) {
        const auto [index, gap] = stack.back();
        stack.pop_back();
        if (top.full() && gap > top.worst()) continue;
        const TreeNode& node = tree_[index];
        if (node.left == 0) {
          for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t p = tree_order_[i];
            const double d2 = SquaredL2(qv, points_.point(p).data(), dim);
            if (Excluded(exclude, pids[p], d2)) continue;
            top.Offer({d2, pids[p]});
          }
          continue;
        }
        const double diff = qv[node.axis] - node.split;
        const double far_gap = std::max(gap, diff * diff);
        if (diff <= 0.0) {
          stack.push_back({node.right, far_gap});
          stack.push_back({node.left, gap});
        } else {
          stack.push_back({node.left, far_gap});
          stack.push_back({node.right, gap});
        }
      }
      local_found = std::min(local_found, top.size());
      top.WriteTo(out.data() + q * k);
    }
#pragma omp critical
    found = std::min(found, local_found);
  }
  return found;
}

// Screens with d2 ~ |q|^2 + |p|^2 - 2 q.p from blocked inner products, then ranks the
// survivors with SquaredL2. The rounding error of the screened value is below
// err = c (|q|^2 + |p|^2) with c = 8 (dim + 4) eps, so with tau the
// (k+1)-th smallest upper bound, every point whose true distance can reach the
// top k satisfies d2 - err <= tau and is re-ranked exactly.
std::size_t ExactIndex::BatchGram(const PointSet& queries, std::size_t k,
                                  bool exclude_self, std::vector<Neighbor>& out) const {
  const std::size_t nq = queries.size();
  const std::size_t np = points_.size();
  const std::size_t dim = points_.dimension();
  const double* qdata = queries.data().data();
  const double* pdata = points_.data().data();
  const PointId* pids = points_.ids().data();
  const double c = 8.0 * static_cast<double>(dim + 4) * DBL_EPSILON;
  const auto num_tiles =
      static_cast<std::ptrdiff_t>((nq + kGramQueryTile - 1) / kGramQueryTile);
  std::size_t found = k;

#pragma omp parallel
  {
    std::size_t local_found = k;
    std::vector<double> gram(kGramQueryTile * kGramPointTile);
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t tile = 0; tile < num_tiles; ++tile) {
      const std::size_t q0 = static_cast<std::size_t>(tile) * kGramQueryTile;
      const std::size_t q1 = std::min(nq, q0 + kGramQueryTile);
      const std::size_t tq = q1 - q0;
      std::vector<double> qnorm(tq);
      for (std::size_t q = q0; q < q1; ++q) qnorm[q - q0] = SquaredNorm(queries.point(q));
      // Upper bounds keep k+1 entries so an excluded self point cannot
      // tighten the threshold.
      std::vector<TopK> bound(tq, TopK(k + 1));
      std::vector<std::vector<Candidate>> survivors(tq);  // (lower bound, row)

      for (std::size_t p0 = 0; p0 < np; p0 += kGramPointTile) {
        const std::size_t p1 = std::min(np, p0 + kGramPointTile);
        const std::size_t tp = p1 - p0;
        // gram[r * tp + (p - p0)] = <query q0 + r, point p>
        for (std::size_t pb = p0; pb < p1; pb += kPanelWidth) {
          const double* panel = panels_.data() + (pb / kPanelWidth) * dim * kPanelWidth;
          const std::size_t width = std::min(kPanelWidth, p1 - pb);
          for (std::size_t r0 = 0; r0 < tq; r0 += kQueryBlock) {
            const std::size_t rows = std::min(kQueryBlock, tq - r0);
            double block[kQueryBlock * kPanelWidth];
            PanelDot(qdata + (q0 + r0) * dim, rows, dim, panel, block);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t l = 0; l < width; ++l) {
                gram[(r0 + r) * tp + (pb - p0) + l] = block[r * kPanelWidth + l];
              }
            }
          }
        }
        for (std::size_t r = 0; r < tq; ++r) {
          const double* g = gram.data() + r * tp;
          TopK& top = bound[r];
          for (std::size_t p = p0; p < p1; ++p) {
            const double scale = qnorm[r] + norms_[p];
            const double approx = scale - 2.0 * g[p - p0];
            top.Offer({approx + c * scale + DBL_MIN, pids[p]});
          }
          const double tau =
              top.full() ? top.worst() : std::numeric_limits<double>::infinity();
          for (std::size_t p = p0; p < p1; ++p) {
            const double scale = qnorm[r] + norms_[p];
            const double lower = scale - 2.0 * g[p - p0] - c * scale;
            if (lower <= tau) survivors[r].push_back({lower, static_cast<PointId>(p)});
          }
        }
      }

      for (std::size_t r = 0; r < tq; ++r) {
        const std::size_t q = q0 + r;
        std::optional<PointId> exclude;
        if (exclude_self) exclude = queries.id(q);
        const double tau = bound[r].full() ? bound[r].worst()
                                           : std::numeric_limits<double>::infinity();
        TopK top(k);
        for (const Candidate& s : survivors[r]) {
          if (s.d2 > tau) continue;
          const auto p = static_cast<std::size_t>(s.id);
          const double d2 = SquaredL2(qdata + q * dim, pdata + p * dim, dim);
          if (Excluded(exclude, pids[p], d2)) continue;
          top.Offer({d2, pids[p]});
        }
        local_found = std::min(local_found, top.size());
        top.WriteTo(out.data() + q * k);
      }
    }
#pragma omp critical
    found = std::min(found, local_found);
  }
  return found;
}

std::unique_ptr<NeighborIndex> BuildIndex(PointSet points, IndexBackend backend) {
  switch (backend) {
    case IndexBackend::kExact:
      return std::make_unique<ExactIndex>(std::move(points));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown index backend");
}

double KthDistance(const NeighborIndex& index, std::span<const double> query,
                   std::size_t k, std::optional<PointId> exclude) {
  return index.Knn(query, k, exclude).back().distance;
}

namespace reference {

std::vector<Neighbor> KnnScan(const PointSet& points, std::span<const double> query,
                              std::size_t k, std::optional<PointId> exclude) {
  CheckQuery(points, query.size(), k);
  TopK top(k);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double d2 = SquaredL2(query.data(), points.point(p).data(), query.size());
    if (Excluded(exclude, points.id(p), d2)) continue;
    top.Offer({d2, points.id(p)});
  }
  if (top.size() < k) ThrowNotEnough(top.size(), k);
  std::vector<Neighbor> out(k);
  top.WriteTo(out.data());
  return out;
}

std::vector<Neighbor> KnnBatchSerial(const PointSet& points, const PointSet& queries,
                                     std::size_t k, bool exclude_self) {
  std::vector<Neighbor> out;
  out.reserve(queries.size() * k);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::optional<PointId> exclude;
    if (exclude_self) exclude = queries.id(q);
    auto row = KnnScan(points, queries.point(q), k, exclude);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace reference

BackendCheckReport CheckBackendContract(const NeighborIndex& candidate,
                                        std::size_t k, std::size_t num_queries,
                                        std::uint64_t seed) {
  const PointSet& data = candidate.source();
  const std::size_t dim = data.dimension();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto p = data.point(i);
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  }

  Rng rng(seed);
  BackendCheckReport report;
  std::size_t hits = 0;
  std::vector<double> query(dim);
  for (std::size_t q = 0; q < num_queries; ++q) {
    for (std::size_t j = 0; j < dim; ++j) {
      query[j] = lo[j] + (hi[j] - lo[j]) * rng.Uniform01();
    }
    const auto got = candidate.Knn(query, k, std::nullopt);
    const auto want = reference::KnnScan(data, query, k, std::nullopt);
    for (std::size_t i = 1; i < got.size(); ++i) {
      if (got[i].distance < got[i - 1].distance) report.monotone = false;
    }
    for (const auto& n : got) {
      hits += std::any_of(want.begin(), want.end(),
                          [&](const Neighbor& w) { return w.id == n.id; });
    }
  }
  report.recall = num_queries == 0
                      ? 1.0
                      : static_cast<double>(hits) / static_cast<double>(num_queries * k);
  report.passed = report.monotone && report.recall >= 0.99;
  return report;
}

}  // namespace latent
