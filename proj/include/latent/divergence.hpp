#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latent/embeddings.hpp"
#include "latent/nnindex.hpp"

namespace latent {

// ---- Categorical (bag-of-words) quantities ---------------------------------

// -sum p log p over the empirical token distribution, in nats.
double EmpiricalEntropy(std::span<const std::string> tokens);

enum class Smoothing { kNone, kLaplace };

// sum_{p_i > 0} p_i log(p_i / q_i). Without smoothing, returns nullopt when a
// token of p is missing from q. Laplace smoothing adds one to every count over
// the union vocabulary.
std::optional<double> EmpiricalKl(std::span<const std::string> p_tokens,
                                  std::span<const std::string> q_tokens,
                                  Smoothing smoothing = Smoothing::kNone);

// ---- k-NN Renyi / KL estimator ---------------------------------------------

// Gamma(k)^2 / (Gamma(k - alpha + 1) Gamma(k + alpha - 1)), via log-gamma.
// Requires k > |alpha - 1|.
double BKAlpha(std::size_t k, double alpha);
double LogBKAlpha(std::size_t k, double alpha);

// Power applied to the neighbour-distance ratio inside the estimator.
//  kAmbientDimension: ((N-1) rho^d / (M nu^d)), the consistent estimator whose
//                     bracketed limit converges to the KL divergence.
//  kUnit:             ((N-1) rho / (M nu)), the ratio without the dimension
//                     power; for N = M it tracks KL / d.
enum class DistanceExponent { kAmbientDimension, kUnit };

struct EstimatorOptions {
  DistanceExponent exponent = DistanceExponent::kAmbientDimension;
  // Neighbour distances are floored here before forming ratios so repeated
  // points (distance 0) keep the estimate finite.
  double distance_floor = 1e-10;
};

struct DivergenceEstimate {
  double value = 0.0;  // log(sigma_hat) / (alpha - 1)
  std::size_t k = 0;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  double sigma_hat = 0.0;
};

struct KlEstimate {
  double value = 0.0;  // mean of the two bracket estimates
  std::size_t k = 0;
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  DivergenceEstimate above;  // alpha = 1 + epsilon
  DivergenceEstimate below;  // alpha = 1 - epsilon
};

// k-th neighbour distances of every x_i: rho within x (self excluded by id),
// nu within y. Stored for k = 1..k_max so several k share one scan.
class NeighborDistances {
 public:
  NeighborDistances(const PointSet& x, const PointSet& y, std::size_t k_max);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t k_max() const { return k_max_; }
  double rho(std::size_t i, std::size_t k) const { return rho_[i * k_max_ + k - 1]; }
  double nu(std::size_t i, std::size_t k) const { return nu_[i * k_max_ + k - 1]; }

 private:
  std::size_t n_, m_, dimension_, k_max_;
  std::vector<double> rho_;
  std::vector<double> nu_;
};

// (1/N) sum_i ((N-1) rho_k(X_i) / (M nu_k(X_i)))^{(1-alpha) e} B_{k,alpha}
// with e the exponent option. Throws kDomain, kNotEnoughPoints or
// kDegenerateInput (every neighbour distance zero).
DivergenceEstimate RenyiEstimate(const NeighborDistances& dists, std::size_t k,
                                 double alpha, const EstimatorOptions& opts = {});

DivergenceEstimate RenyiEstimate(const PointSet& x, const PointSet& y, std::size_t k,
                                 double alpha, const EstimatorOptions& opts = {});

double SigmaHat(const PointSet& x, const PointSet& y, std::size_t k, double alpha,
                const EstimatorOptions& opts = {});

// Average of the Renyi estimates at alpha = 1 + epsilon and 1 - epsilon.
KlEstimate KlFromDistances(const NeighborDistances& dists, std::size_t k,
                           double epsilon = 1e-5, const EstimatorOptions& opts = {});

KlEstimate EstimateKl(const PointSet& x, const PointSet& y, std::size_t k,
                      double epsilon = 1e-5, const EstimatorOptions& opts = {});

// ---- Category classification -----------------------------------------------

struct ClassifierConfig {
  std::vector<std::size_t> ks = {3};
  std::size_t sample_size = 3000;
  std::uint64_t seed = 0;
  double epsilon = 1e-5;
  EstimatorOptions estimator;
};

struct ClassificationOutcome {
  std::string target_doc;
  std::size_t k = 0;
  std::string predicted_category;
  std::map<std::string, double> per_category_mean;
};

// Embeds equal-size token samples of documents and labels targets with the
// category minimizing the mean estimated KL(target || member). Each
// document's sample is drawn once from its embeddable non-stopword tokens
// with a seed derived from (seed, doc id); documents with too few such
// tokens are discarded.
class DivergenceClassifier {
 public:
  DivergenceClassifier(const EmbeddingTable& table, const StopwordSet& stopwords,
                       ClassifierConfig config);

  // Point set of the document's sample, or nullopt when the document is too
  // short. Cached by document id.
  const PointSet* SampleOf(const Document& doc);

  // One outcome per configured k. The target is skipped inside its own
  // category. Ties in the minimum go to the lexicographically first category.
  std::vector<ClassificationOutcome> Classify(
      const Document& target,
      const std::map<std::string, std::vector<const Document*>>& categories);

  const ClassifierConfig& config() const { return config_; }

 private:
  const EmbeddingTable& table_;
  const StopwordSet& stopwords_;
  ClassifierConfig config_;
  std::map<std::string, std::optional<PointSet>> samples_;
};

ClassificationOutcome ClassifyByDivergence(
    const Document& target,
    const std::map<std::string, std::vector<const Document*>>& categories,
    const EmbeddingTable& table, const StopwordSet& stopwords, std::size_t k,
    std::size_t sample_size, std::uint64_t seed);

// Sequential pairwise (cascade) summation; the order depends only on n.
double PairwiseSum(std::span<const double> values);

}  // namespace latent
