#include "latent/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>
#include <unordered_map>

#include "latent/error.hpp"
#include "latent/random.hpp"

namespace latent {

namespace {

std::unordered_map<std::string_view, std::size_t> Counts(
    std::span<const std::string> tokens) {
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

void RequireNonEmpty(std::span<const std::string> tokens, const char* what) {
  if (tokens.empty()) {
    throw Error(ErrorCode::kEmptyInput, std::string(what) + " token list is empty");
  }
}

}  // namespace

double EmpiricalEntropy(std::span<const std::string> tokens) {
  RequireNonEmpty(tokens, "entropy");
  const double n = static_cast<double>(tokens.size());
  double h = 0.0;
  for (const auto& [token, count] : Counts(tokens)) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::optional<double> EmpiricalKl(std::span<const std::string> p_tokens,
                                  std::span<const std::string> q_tokens,
                                  Smoothing smoothing) {
  RequireNonEmpty(p_tokens, "p");
  RequireNonEmpty(q_tokens, "q");
  const auto p_counts = Counts(p_tokens);
  const auto q_counts = Counts(q_tokens);
  double p_total = static_cast<double>(p_tokens.size());
  double q_total = static_cast<double>(q_tokens.size());
  double pseudo = 0.0;
  if (smoothing == Smoothing::kLaplace) {
    std::size_t vocab = p_counts.size();
    for (const auto& [token, count] : q_counts) vocab += !p_counts.contains(token);
    pseudo = 1.0;
    p_total += static_cast<double>(vocab);
    q_total += static_cast<double>(vocab);
  }
  // Terms with p_i = 0 contribute nothing; under smoothing every union token
  // has p_i > 0, so tokens only in q are added separately.
  double kl = 0.0;
  for (const auto& [token, count] : p_counts) {
    auto it = q_counts.find(token);
    const double q_count = it == q_counts.end() ? 0.0 : static_cast<double>(it->second);
    if (q_count + pseudo == 0.0) return std::nullopt;
    const double p = (static_cast<double>(count) + pseudo) / p_total;
    const double q = (q_count + pseudo) / q_total;
    kl += p * std::log(p / q);
  }
  if (smoothing == Smoothing::kLaplace) {
    for (const auto& [token, count] : q_counts) {
      if (p_counts.contains(token)) continue;
      const double p = pseudo / p_total;
      const double q = (static_cast<double>(count) + pseudo) / q_total;
      kl += p * std::log(p / q);
    }
  }
  return kl;
}

double LogBKAlpha(std::size_t k, double alpha) {
  const double kd = static_cast<double>(k);
  if (!(kd > std::abs(alpha - 1.0))) {
    throw Error(ErrorCode::kDomain, "B(k, alpha) requires k > |alpha - 1| (k=" +
                                        std::to_string(k) +
                                        ", alpha=" + std::to_string(alpha) + ")");
  }
  return 2.0 * std::lgamma(kd) - std::lgamma(kd - alpha + 1.0) -
         std::lgamma(kd + alpha - 1.0);
}

double BKAlpha(std::size_t k, double alpha) { return std::exp(LogBKAlpha(k, alpha)); }

double PairwiseSum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

NeighborDistances::NeighborDistances(const PointSet& x, const PointSet& y,
                                     std::size_t k_max)
    : n_(x.size()), m_(y.size()), dimension_(x.dimension()), k_max_(k_max) {
  if (k_max == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (x.dimension() != y.dimension()) {
    throw Error(ErrorCode::kInvalidArgument, "point sets differ in dimension");
  }
  if (n_ < k_max + 1 || m_ < k_max) {
    throw Error(ErrorCode::kNotEnoughPoints,
                "estimator with k=" + std::to_string(k_max) + " needs N >= " +
                    std::to_string(k_max + 1) + " and M >= " + std::to_string(k_max) +
                    " (got N=" + std::to_string(n_) + ", M=" + std::to_string(m_) + ")");
  }
  const ExactIndex x_index(x);
  const ExactIndex y_index(y);
  const auto within = x_index.KnnBatch(x, k_max, /*exclude_self=*/true);
  const auto across = y_index.KnnBatch(x, k_max, /*exclude_self=*/false);
  rho_.resize(within.size());
  nu_.resize(across.size());
  for (std::size_t i = 0; i < within.size(); ++i) rho_[i] = within[i].distance;
  for (std::size_t i = 0; i < across.size(); ++i) nu_[i] = across[i].distance;
}

DivergenceEstimate RenyiEstimate(const NeighborDistances& dists, std::size_t k,
                                 double alpha, const EstimatorOptions& opts) {
  if (k == 0 || k > dists.k_max()) {
    throw Error(ErrorCode::kInvalidArgument,
                "k=" + std::to_string(k) + " outside the computed range 1.." +
                    std::to_string(dists.k_max()));
  }
  if (alpha == 1.0) {
    throw Error(ErrorCode::kDomain, "Renyi divergence is undefined at alpha = 1");
  }
  const double log_b = LogBKAlpha(k, alpha);
  const std::size_t n = dists.n();
  const double e = opts.exponent == DistanceExponent::kAmbientDimension
                       ? static_cast<double>(dists.dimension())
                       : 1.0;
  const double log_count_ratio =
      std::log(static_cast<double>(n - 1)) - std::log(static_cast<double>(dists.m()));

  bool all_zero = true;
  std::vector<double> terms(n);
#pragma omp parallel for reduction(&& : all_zero)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const double rho = dists.rho(i, k);
    const double nu = dists.nu(i, k);
    all_zero = all_zero && rho == 0.0 && nu == 0.0;
    const double log_ratio =
        log_count_ratio + e * (std::log(std::max(rho, opts.distance_floor)) -
                               std::log(std::max(nu, opts.distance_floor)));
    // expm1 keeps the 1 +- 1e-5 regime free of cancellation.
    terms[i] = std::expm1((1.0 - alpha) * log_ratio);
  }
  if (all_zero) {
    throw Error(ErrorCode::kDegenerateInput,
                "every k-th neighbour distance is zero; the samples are point masses");
  }
  const double mean_term = PairwiseSum(terms) / static_cast<double>(n);
  const double log_sigma = log_b + std::log1p(mean_term);

  DivergenceEstimate est;
  est.k = k;
  est.alpha = alpha;
  est.n = n;
  est.m = dists.m();
  est.sigma_hat = std::exp(log_sigma);
  est.value = log_sigma / (alpha - 1.0);
  return est;
}

DivergenceEstimate RenyiEstimate(const PointSet& x, const PointSet& y, std::size_t k,
                                 double alpha, const EstimatorOptions& opts) {
  LogBKAlpha(k, alpha);
  return RenyiEstimate(NeighborDistances(x, y, k), k, alpha, opts);
}

double SigmaHat(const PointSet& x, const PointSet& y, std::size_t k, double alpha,
                const EstimatorOptions& opts) {
  return RenyiEstimate(x, y, k, alpha, opts).sigma_hat;
}

KlEstimate KlFromDistances(const NeighborDistances& dists, std::size_t k,
                           double epsilon, const EstimatorOptions& opts) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kDomain, "epsilon must be positive (alpha = 1 +- epsilon)");
  }
  KlEstimate out;
  out.above = RenyiEstimate(dists, k, 1.0 + epsilon, opts);
  out.below = RenyiEstimate(dists, k, 1.0 - epsilon, opts);
  out.value = 0.5 * (out.above.value + out.below.value);
  out.k = k;
  out.epsilon = epsilon;
  out.n = dists.n();
  out.m = dists.m();
  return out;
}

KlEstimate EstimateKl(const PointSet& x, const PointSet& y, std::size_t k,
                      double epsilon, const EstimatorOptions& opts) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kDomain, "epsilon must be positive (alpha = 1 +- epsilon)");
  }
  LogBKAlpha(k, 1.0 + epsilon);
  return KlFromDistances(NeighborDistances(x, y, k), k, epsilon, opts);
}

DivergenceClassifier::DivergenceClassifier(const EmbeddingTable& table,
                                           const StopwordSet& stopwords,
                                           ClassifierConfig config)
    : table_(table), stopwords_(stopwords), config_(std::move(config)) {
  if (config_.ks.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one k is required");
  }
  if (config_.sample_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  }
  for (std::size_t k : config_.ks) LogBKAlpha(k, 1.0 + config_.epsilon);
}

const PointSet* DivergenceClassifier::SampleOf(const Document& doc) {
  auto it = samples_.find(doc.id);
  if (it == samples_.end()) {
    std::vector<std::string> pool;
    for (const auto& sentence : doc.sentences) {
      for (const auto& token : sentence.tokens) {
        if (!stopwords_.contains(token) && table_.Contains(token)) pool.push_back(token);
      }
    }
    std::optional<PointSet> points;
    if (pool.size() >= config_.sample_size) {
      const auto sample = SampleFromPool(std::move(pool), config_.sample_size,
                                         DeriveSeed(config_.seed, doc.id), doc.id);
      points.emplace(table_.dimension());
      points->Reserve(sample.size());
      for (std::size_t i = 0; i < sample.size(); ++i) {
        points->Add(static_cast<PointId>(i), *table_.Find(sample[i]));
      }
    }
    it = samples_.emplace(doc.id, std::move(points)).first;
  }
  return it->second ? &*it->second : nullptr;
}

std::vector<ClassificationOutcome> DivergenceClassifier::Classify(
    const Document& target,
    const std::map<std::string, std::vector<const Document*>>& categories) {
  const PointSet* x = SampleOf(target);
  if (!x) {
    throw Error(ErrorCode::kInsufficientTokens,
                "target '" + target.id + "' has fewer than " +
                    std::to_string(config_.sample_size) +
                    " embeddable non-stopword tokens");
  }
  const std::size_t k_max = *std::max_element(config_.ks.begin(), config_.ks.end());

  std::vector<ClassificationOutcome> outcomes(config_.ks.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    outcomes[i].target_doc = target.id;
    outcomes[i].k = config_.ks[i];
  }
  for (const auto& [category, members] : categories) {
    std::vector<double> sums(config_.ks.size(), 0.0);
    std::size_t used = 0;
    for (const Document* member : members) {
      if (member->id == target.id) continue;
      const PointSet* y = SampleOf(*member);
      if (!y) continue;
      const NeighborDistances dists(*x, *y, k_max);
      for (std::size_t i = 0; i < config_.ks.size(); ++i) {
        sums[i] += KlFromDistances(dists, config_.ks[i], config_.epsilon,
                                   config_.estimator)
                       .value;
      }
      ++used;
    }
    if (used == 0) continue;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      outcomes[i].per_category_mean[category] = sums[i] / static_cast<double>(used);
    }
  }
  if (outcomes.front().per_category_mean.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "no category has a usable member for target '" + target.id + "'");
  }
  for (auto& outcome : outcomes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [category, mean] : outcome.per_category_mean) {
      if (mean < best) {
        best = mean;
        outcome.predicted_category = category;
      }
    }
  }
  return outcomes;
}

ClassificationOutcome ClassifyByDivergence(
    const Document& target,
    const std::map<std::string, std::vector<const Document*>>& categories,
    const EmbeddingTable& table, const StopwordSet& stopwords, std::size_t k,
    std::size_t sample_size, std::uint64_t seed) {
  ClassifierConfig config;
  config.ks = {k};
  config.sample_size = sample_size;
  config.seed = seed;
  DivergenceClassifier classifier(table, stopwords, config);
  return classifier.Classify(target, categories).front();
}

}  // namespace latent
