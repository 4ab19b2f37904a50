#include "latent/zipf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "latent/divergence.hpp"
#include "latent/error.hpp"
#include "latent/nnindex.hpp"
#include "latent/random.hpp"

namespace latent {

double ZipfMandelbrot(double r, double c, double beta, double alpha) {
  if (!(r >= 1.0)) throw Error(ErrorCode::kDomain, "rank must be at least 1");
  if (!(c > 0.0)) throw Error(ErrorCode::kDomain, "c must be positive");
  if (!(beta >= 0.0)) throw Error(ErrorCode::kDomain, "beta must be non-negative");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kDomain, "alpha must be positive");
  return c / std::pow(beta + r, alpha);
}

RankTable RankBySize(std::vector<std::pair<std::string, std::size_t>> sizes) {
  std::erase_if(sizes, [](const auto& s) { return s.second == 0; });
  std::stable_sort(sizes.begin(), sizes.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  RankTable table;
  table.rows.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    table.rows.push_back({i + 1, sizes[i].second, std::move(sizes[i].first)});
  }
  return table;
}

RankTable WordRankTable(const Corpus& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      for (const auto& token : sentence.tokens) ++counts[token];
    }
  }
  if (counts.empty()) throw Error(ErrorCode::kEmptyInput, "corpus has no tokens");
  return RankBySize({counts.begin(), counts.end()});
}

LogLogFit FitLogLog(const RankTable& table, const FitOptions& options) {
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    if (row.rank < options.min_rank) continue;
    if (options.max_rank != 0 && row.rank > options.max_rank) continue;
    xs.push_back(std::log(static_cast<double>(row.rank)));
    ys.push_back(std::log(static_cast<double>(row.size)));
  }
  if (xs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "a log-log fit needs at least 2 ranks, got " + std::to_string(xs.size()));
  }
  LogLogFit fit;
  fit.points = xs.size();
  if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
    // flat table; the mean below would leave rounding residue in the slope
    fit.intercept = ys.front();
    fit.r_squared = 1.0;
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

LabeledPoints::LabeledPoints(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::kInvalidArgument, "point dimension must be positive");
  }
}

void LabeledPoints::Add(std::string id, std::span<const double> values) {
  if (values.size() != dimension_) {
    throw Error(ErrorCode::kInvalidArgument,
                "point '" + id + "' has length " + std::to_string(values.size()) +
                    ", expected " + std::to_string(dimension_));
  }
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

LabeledPoints SentenceMeans(const Corpus& corpus, const EmbeddingTable& table,
                            std::size_t* skipped) {
  LabeledPoints points(table.dimension());
  std::size_t missing = 0;
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      auto mean = SentenceMean(sentence.tokens, table);
      if (!mean) {
        ++missing;
        continue;
      }
      points.Add(sentence.id, *mean);
    }
  }
  if (skipped) *skipped = missing;
  return points;
}

std::vector<std::size_t> ClusterModel::ClusterSizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes[a];
  return sizes;
}

namespace {

void AssignOne(const LabeledPoints& points, const double* centroids, std::size_t k,
               std::size_t i, std::size_t& label, double& d2) {
  const std::size_t dim = points.dimension();
  const double* p = points.point(i).data();
  std::size_t best = 0;
  double best_d2 = SquaredL2(p, centroids, dim);
  for (std::size_t c = 1; c < k; ++c) {
    const double d = SquaredL2(p, centroids + c * dim, dim);
    if (d < best_d2) {
      best_d2 = d;
      best = c;
    }
  }
  label = best;
  d2 = best_d2;
}

void CheckAssignArgs(const LabeledPoints& points, std::span<const double> centroids,
                     std::size_t k, std::span<std::size_t> labels,
                     std::span<double> d2) {
  if (k == 0 || centroids.size() != k * points.dimension() ||
      labels.size() != points.size() || d2.size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster assignment buffers mismatch");
  }
}

// k-means++: the first centre uniformly, then each next centre with
// probability proportional to the squared distance to the nearest chosen one.
// If all remaining mass is zero (duplicates), an unchosen point is taken
// uniformly.
std::vector<double> SeedCentroids(const LabeledPoints& points, std::size_t k,
                                  Rng& rng) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dimension();
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t i) {
    chosen[i] = true;
    auto p = points.point(i);
    centroids.insert(centroids.end(), p.begin(), p.end());
    for (std::size_t j = 0; j < n; ++j) {
      nearest[j] = std::min(nearest[j], SquaredL2(points.point(j).data(), p.data(), dim));
    }
  };

  take(static_cast<std::size_t>(rng.UniformBelow(n)));
  while (centroids.size() < k * dim) {
    const double total = PairwiseSum(nearest);
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.Uniform01() * total;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += nearest[j];
        if (nearest[j] > 0.0 && u < acc) {
          pick = j;
          break;
        }
      }
      if (pick == n) {  // u landed on the rounding slack at the end
        for (std::size_t j = n; j-- > 0;) {
          if (nearest[j] > 0.0) {
            pick = j;
            break;
          }
        }
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t j = 0; j < n; ++j) {
        if (!chosen[j]) free.push_back(j);
      }
      pick = free[static_cast<std::size_t>(rng.UniformBelow(free.size()))];
    }
    take(pick);
  }
  return centroids;
}

}  // namespace

void AssignClusters(const LabeledPoints& points, std::span<const double> centroids,
                    std::size_t k, std::span<std::size_t> labels, std::span<double> d2) {
  CheckAssignArgs(points, centroids, k, labels, d2);
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    AssignOne(points, centroids.data(), k, u, labels[u], d2[u]);
  }
}

namespace reference {

void AssignClustersSerial(const LabeledPoints& points,
                          std::span<const double> centroids, std::size_t k,
                          std::span<std::size_t> labels, std::span<double> d2) {
  CheckAssignArgs(points, centroids, k, labels, d2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    AssignOne(points, centroids.data(), k, i, labels[i], d2[i]);
  }
}

}  // namespace reference

ClusterModel KMeansFit(const LabeledPoints& points, std::size_t k, std::uint64_t seed,
                       const KMeansOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dimension();
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (k > n) {
    throw Error(ErrorCode::kNotEnoughPoints, "k=" + std::to_string(k) + " exceeds the " +
                                                 std::to_string(n) + " points");
  }

  ClusterModel model;
  model.k = k;
  model.dimension = dim;
  model.seed = seed;
  model.point_ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) model.point_ids.push_back(points.id(i));

  Rng rng(seed);
  model.centroids = SeedCentroids(points, k, rng);
  model.assignments.assign(n, 0);
  std::vector<double> d2(n);

  auto assign = [&] {
    AssignClusters(points, model.centroids, k, model.assignments, d2);
    const double inertia = PairwiseSum(d2);
    if (!model.inertia_trace.empty()) {
      const double prev = model.inertia_trace.back();
      // Lloyd steps never increase the objective; allow only rounding noise.
      if (inertia > prev + 1e-9 * prev + 1e-300) {
        throw Error(ErrorCode::kInternal,
                    "k-means inertia increased from " + std::to_string(prev) + " to " +
                        std::to_string(inertia));
      }
    }
    model.inertia_trace.push_back(inertia);
    model.inertia = inertia;
  };

  assign();
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  while (model.iterations < options.max_iter) {
    ++model.iterations;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = model.assignments[i];
      ++counts[c];
      auto p = points.point(i);
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += p[j];
    }
    std::vector<double> next(k * dim);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        next[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
    }
    // An empty cluster takes the point farthest from its centroid among
    // clusters that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[model.assignments[i]] < 2) continue;
        if (far == n || d2[i] > d2[far]) far = i;
      }
      if (far == n) break;
      --counts[model.assignments[far]];
      model.assignments[far] = c;
      counts[c] = 1;
      d2[far] = 0.0;
      auto p = points.point(far);
      std::copy(p.begin(), p.end(), next.begin() + static_cast<std::ptrdiff_t>(c * dim));
      ++model.repaired_clusters;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::copy_n(model.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim), dim,
                    next.begin() + static_cast<std::ptrdiff_t>(c * dim));
        continue;
      }
      shift = std::max(shift, std::sqrt(SquaredL2(next.data() + c * dim,
                                                  model.centroids.data() + c * dim, dim)));
    }
    model.centroids = std::move(next);
    assign();
    if (shift < options.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

RankTable ClusterRankTable(const ClusterModel& model) {
  const auto sizes = model.ClusterSizes();
  std::vector<std::pair<std::string, std::size_t>> labeled;
  labeled.reserve(sizes.size());
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    labeled.emplace_back(std::to_string(c), sizes[c]);
  }
  return RankBySize(std::move(labeled));
}

std::vector<ClusterInspection> InspectClusters(const LabeledPoints& points,
                                               const ClusterModel& model,
                                               std::size_t count) {
  std::vector<std::vector<std::pair<double, std::size_t>>> members(model.k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t c = model.assignments.at(i);
    const double d = std::sqrt(
        SquaredL2(points.point(i).data(), model.centroid(c).data(), points.dimension()));
    members[c].emplace_back(d, i);
  }
  std::vector<ClusterInspection> out(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    auto& m = members[c];
    std::sort(m.begin(), m.end());
    out[c].cluster = c;
    out[c].size = m.size();
    const std::size_t take = std::min(count, m.size());
    for (std::size_t i = 0; i < take; ++i) {
      out[c].closest.emplace_back(points.id(m[i].second), m[i].first);
      const auto& f = m[m.size() - 1 - i];
      out[c].furthest.emplace_back(points.id(f.second), f.first);
    }
  }
  return out;
}

PosPurityReport PosPurity(const EmbeddingTable& table, const PosTagMap& tags,
                          std::span<const std::size_t> ks) {
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, "no neighbour counts given");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  if (*std::min_element(ks.begin(), ks.end()) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "neighbour counts must be positive");
  }
  PointSet points(table.dimension());
  std::vector<PosTag> point_tags;
  for (std::size_t row = 0; row < table.size(); ++row) {
    auto it = tags.find(table.token(row));
    if (it == tags.end()) continue;
    points.Add(static_cast<PointId>(point_tags.size()), table.row(row));
    point_tags.push_back(it->second);
  }
  if (points.size() < k_max + 1) {
    throw Error(ErrorCode::kNotEnoughPoints,
                "POS purity with " + std::to_string(k_max) + " neighbours needs " +
                    std::to_string(k_max + 1) + " tagged embedded tokens, found " +
                    std::to_string(points.size()));
  }
  const std::size_t n = points.size();
  const ExactIndex index(points);
  const auto neighbors = index.KnnBatch(index.source(), k_max, /*exclude_self=*/true);

  PosPurityReport report;
  report.tokens = n;
  std::vector<double> fractions(n);
  for (std::size_t k : ks) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t same = 0;
      for (std::size_t j = 0; j < k; ++j) {
        same += point_tags[static_cast<std::size_t>(neighbors[i * k_max + j].id)] ==
                point_tags[i];
      }
      fractions[i] = static_cast<double>(same) / static_cast<double>(k);
    }
    report.per_k[k] = 100.0 * PairwiseSum(fractions) / static_cast<double>(n);
  }
  return report;
}

PosStatistics ComputePosStatistics(const Corpus& corpus, const PosTagMap& tags) {
  PosStatistics stats;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      for (const auto& token : sentence.tokens) {
        const bool first = seen.insert(token).second;
        auto it = tags.find(token);
        if (it == tags.end()) {
          ++stats.untagged_total;
          stats.untagged_unique += first;
          continue;
        }
        const auto t = static_cast<std::size_t>(it->second);
        ++stats.total[t];
        stats.unique[t] += first;
      }
    }
  }
  return stats;
}

std::vector<SensitivityPoint> KSensitivity(const LabeledPoints& points,
                                           std::size_t k_center, std::uint64_t seed,
                                           const KMeansOptions& options) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorCode::kNotEnoughPoints, "k sweep needs at least 2 points");
  std::vector<std::size_t> ks;
  for (long long k = static_cast<long long>(k_center) - 20;
       k <= static_cast<long long>(k_center) + 20; k += 5) {
    const auto clipped = static_cast<std::size_t>(
        std::clamp<long long>(k, 2, static_cast<long long>(n)));
    if (ks.empty() || ks.back() != clipped) ks.push_back(clipped);
  }
  std::vector<SensitivityPoint> out;
  for (std::size_t k : ks) {
    const auto model = KMeansFit(points, k, seed, options);
    const auto table = ClusterRankTable(model);
    SensitivityPoint point;
    point.k = k;
    if (table.rows.size() >= 2) {
      point.fit = FitLogLog(table);
    } else {
      point.fit.points = table.rows.size();
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace latent
