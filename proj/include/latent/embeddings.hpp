#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace latent {

using Vector = std::vector<double>;
using StopwordSet = std::unordered_set<std::string>;

// Token -> d-dimensional vector map. Vectors are stored contiguously in
// insertion order.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  // Returns false (and leaves the table unchanged) for a duplicate token.
  // Throws on a length mismatch.
  bool Add(std::string token, std::span<const double> values);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  bool Contains(std::string_view token) const;
  std::optional<std::span<const double>> Find(std::string_view token) const;

  const std::string& token(std::size_t row) const { return tokens_[row]; }
  std::span<const double> row(std::size_t row) const {
    return {data_.data() + row * dimension_, dimension_};
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dimension_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

struct VectorLoadReport {
  std::size_t header_count = 0;
  std::size_t loaded = 0;
  std::size_t skipped_lines = 0;  // malformed rows and duplicate tokens
};

// Reads "<count> <d>" followed by "<token> <f1> ... <fd>" rows. Malformed
// rows are skipped and counted.
EmbeddingTable LoadVectors(const std::filesystem::path& path,
                           VectorLoadReport* report = nullptr);

enum class PosTag { kNoun, kVerb, kAdjective, kAdverb, kPronoun, kOther };

std::string_view PosTagName(PosTag tag);
std::optional<PosTag> ParsePosTag(std::string_view name);

using PosTagMap = std::unordered_map<std::string, PosTag>;

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::string raw_text;
};

struct Document {
  std::string id;
  std::map<std::string, std::string> labels;  // author, genre, reading_level
  std::vector<Sentence> sentences;

  std::size_t TokenCount() const;
};

struct Corpus {
  std::vector<Document> documents;
  StopwordSet stopwords;
  std::optional<PosTagMap> pos_tags;
};

struct CorpusLoadReport {
  std::size_t records = 0;
  std::size_t empty_sentences = 0;  // tokenized to nothing; dropped
};

// JSON-lines corpus: one sentence per line with doc_id, sentence_id, text and
// optional author / genre / reading_level. Documents keep first-seen order.
Corpus LoadCorpus(const std::filesystem::path& path,
                  CorpusLoadReport* report = nullptr);

// One token per line; blank lines ignored; tokens lowercased.
StopwordSet LoadStopwords(const std::filesystem::path& path);

// "token<TAB>TAG" lines, TAG in {NOUN, VERB, ADJ, ADV, PRON, OTHER}.
PosTagMap LoadPosTags(const std::filesystem::path& path);

// Lowercases ASCII letters, splits on Unicode whitespace and detaches leading
// and trailing ASCII punctuation, one token per punctuation character.
// Interior punctuation ("don't", "e.g") stays inside the word.
std::vector<std::string> Tokenize(std::string_view text);

// Unweighted mean of the embeddable tokens (repeats counted); nullopt when no
// token has a vector.
std::optional<Vector> SentenceMean(std::span<const std::string> tokens,
                                   const EmbeddingTable& table);

// All tokens of the document in order, minus stopwords, shuffled with the
// seeded Fisher-Yates and truncated to n. Throws kInsufficientTokens.
std::vector<std::string> SampleTokens(const Document& doc, std::size_t n,
                                      std::uint64_t seed,
                                      const StopwordSet& stopwords);

// Same as SampleTokens over an explicit pool (already filtered).
std::vector<std::string> SampleFromPool(std::vector<std::string> pool,
                                        std::size_t n, std::uint64_t seed,
                                        std::string_view what);

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t unique_sentences = 0;  // distinct raw texts
  std::size_t total_tokens = 0;
  std::size_t unique_tokens = 0;
  std::size_t unembedded_tokens = 0;         // occurrences without a vector
  std::size_t unique_unembedded_tokens = 0;  // types without a vector
};

CorpusStats ComputeCorpusStats(const Corpus& corpus, const EmbeddingTable& table);

}  // namespace latent
