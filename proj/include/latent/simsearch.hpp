#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latent/embeddings.hpp"
#include "latent/nnindex.hpp"

namespace latent {

enum class Algorithm { kSetCover, kAvg, kWmd, kJaccard, kLevenshtein };

std::string_view AlgorithmName(Algorithm algorithm);
std::optional<Algorithm> ParseAlgorithm(std::string_view name);
const std::array<Algorithm, 5>& AllAlgorithms();

enum class EditUnit { kChar, kToken };

std::string_view EditUnitName(EditUnit unit);
std::optional<EditUnit> ParseEditUnit(std::string_view name);

using TokenSet = std::set<std::string>;

struct DatabaseOptions {
  std::size_t min_tokens = 5;   // shorter sentences are not candidates
  std::size_t max_tokens = 15;  // longer sentences are not candidates
};

struct DatabaseEntry {
  std::string id;
  std::string doc_id;
  std::string raw_text;
  std::vector<std::string> tokens;
  TokenSet token_set;
  TokenSet content_set;               // token_set minus stopwords
  std::optional<Vector> content_mean; // mean of embeddable non-stopword tokens
};

// Candidate sentences sorted by id, plus the embedded vocabulary W_T of those
// candidates behind an exact index.
class SentenceDatabase {
 public:
  SentenceDatabase(const Corpus& corpus, const EmbeddingTable& table,
                   const StopwordSet& stopwords, DatabaseOptions options = {});

  const std::vector<DatabaseEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const EmbeddingTable& table() const { return table_; }
  const StopwordSet& stopwords() const { return stopwords_; }
  const DatabaseOptions& options() const { return options_; }

  // W_T, sorted.
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  bool InVocabulary(std::string_view token) const;
  // Entry index of a sentence id.
  std::optional<std::size_t> Find(std::string_view sentence_id) const;
  // Ascending indices of the entries containing token; empty if none.
  std::span<const std::size_t> Postings(std::string_view token) const;

  // The r embedded vocabulary tokens nearest to w, excluding w itself.
  // Empty when w has no vector or r = 0.
  TokenSet Ball(std::string_view w, std::size_t r) const;

 private:
  const EmbeddingTable& table_;
  StopwordSet stopwords_;
  DatabaseOptions options_;
  std::vector<DatabaseEntry> entries_;
  std::vector<std::string> vocabulary_;
  std::vector<std::string> embedded_vocabulary_;  // index point id -> token
  std::optional<ExactIndex> vocab_index_;
  // Token -> ascending entry indices containing it.
  std::map<std::string, std::vector<std::size_t>, std::less<>> postings_;
};

// Union of the balls of the query tokens, plus the query tokens found in W_T
// when include_query_words is set, minus stopwords.
TokenSet BuildTargetSet(const SentenceDatabase& db,
                        std::span<const std::string> query_tokens, std::size_t r,
                        const StopwordSet& stopwords, bool include_query_words = true);

struct Query {
  std::string text;
  std::vector<std::string> tokens;
  std::optional<std::string> sentence_id;  // excluded from results when set

  static Query FromText(std::string text);
  static Query FromEntry(const DatabaseEntry& entry);
};

struct SuggestParams {
  std::size_t t = 5;
  std::size_t r = 10;
  double rho = 0.5;
  bool include_query_words = true;
  // Greedy rounds stop once every remaining score is zero. When false, zero
  // rounds keep picking the lowest remaining id.
  bool stop_on_zero = true;
  EditUnit ld_unit = EditUnit::kChar;
};

struct Suggestion {
  std::size_t rank = 0;  // 1-based
  std::string sentence_id;
  std::string doc_id;
  std::string text;
  double score = 0.0;
  std::vector<std::string> covered;  // set cover only, sorted
  std::vector<std::string> tokens;   // the sentence's tokens
};

struct SuggestionResult {
  Algorithm algorithm = Algorithm::kSetCover;
  std::string query;  // query sentence id, or the query text for free queries
  SuggestParams params;
  std::vector<Suggestion> suggestions;
  bool stopped_early = false;  // fewer than t because scores ran out
  bool empty_database = false;
  std::size_t target_size = 0;  // |U| before the first round (set cover)
};

SuggestionResult SetCoverSuggest(const SentenceDatabase& db, const Query& query,
                                 const SuggestParams& params);
SuggestionResult AvgSuggest(const SentenceDatabase& db, const Query& query,
                            const SuggestParams& params);
SuggestionResult WmdSuggest(const SentenceDatabase& db, const Query& query,
                            const SuggestParams& params);
SuggestionResult JaccardSuggest(const SentenceDatabase& db, const Query& query,
                                const SuggestParams& params);
SuggestionResult LevenshteinSuggest(const SentenceDatabase& db, const Query& query,
                                    const SuggestParams& params);

// Dispatch. An empty database yields an empty result with empty_database set.
SuggestionResult Suggest(const SentenceDatabase& db, const Query& query,
                         Algorithm algorithm, const SuggestParams& params);

// Word mover's distance between the normalized bags of embeddable
// non-stopword tokens. Throws kUnembeddable when either side is empty.
double Wmd(std::span<const std::string> a, std::span<const std::string> b,
           const EmbeddingTable& table, const StopwordSet& stopwords);

// Minimum-cost transport of `supply` onto `demand` (equal integer totals)
// with cost[i * demand.size() + j]. Returns the total cost.
double SolveTransport(std::span<const long long> supply, std::span<const long long> demand,
                      std::span<const double> cost);

// |a ∩ b| / |a ∪ b|; nullopt when both are empty.
std::optional<double> Jaccard(const TokenSet& a, const TokenSet& b);

// Unit-cost edit distance over Unicode code points (kChar) or over
// tokenizer output (kToken).
std::size_t Levenshtein(std::string_view a, std::string_view b,
                        EditUnit unit = EditUnit::kChar);
std::size_t LevenshteinTokens(std::span<const std::string> a,
                              std::span<const std::string> b);

// Decodes UTF-8; invalid bytes become U+FFFD.
std::u32string DecodeUtf8(std::string_view text);

}  // namespace latent
