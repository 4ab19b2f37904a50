#include "latent/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "latent/error.hpp"
#include "latent/random.hpp"

namespace latent {

namespace {

std::ifstream OpenOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  return in;
}

void StripCarriageReturn(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Splits on ASCII spaces and tabs.
std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool ParseDouble(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool ParseLong(std::string_view s, long long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Length in bytes of the Unicode whitespace character starting at s[i], or 0.
std::size_t WhitespaceLength(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0d)) return 1;
  if (b0 == 0xc2 && i + 1 < s.size()) {
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    if (b1 == 0x85 || b1 == 0xa0) return 2;  // NEL, NBSP
    return 0;
  }
  if (i + 2 >= s.size()) return 0;
  const auto b1 = static_cast<unsigned char>(s[i + 1]);
  const auto b2 = static_cast<unsigned char>(s[i + 2]);
  if (b0 == 0xe1 && b1 == 0x9a && b2 == 0x80) return 3;  // U+1680
  if (b0 == 0xe2 && b1 == 0x80 &&
      (b2 <= 0x8a || b2 == 0xa8 || b2 == 0xa9 || b2 == 0xaf)) {
    return 3;  // U+2000..200A, U+2028, U+2029, U+202F
  }
  if (b0 == 0xe2 && b1 == 0x81 && b2 == 0x9f) return 3;  // U+205F
  if (b0 == 0xe3 && b1 == 0x80 && b2 == 0x80) return 3;  // U+3000
  return 0;
}

bool IsAsciiPunct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

void EmitWord(std::string_view word, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = word.size();
  while (begin < end && IsAsciiPunct(word[begin])) {
    out.emplace_back(1, word[begin]);
    ++begin;
  }
  std::size_t trail = end;
  while (trail > begin && IsAsciiPunct(word[trail - 1])) --trail;
  if (trail > begin) {
    std::string core(word.substr(begin, trail - begin));
    for (char& c : core) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    out.push_back(std::move(core));
  }
  for (std::size_t i = trail; i < end; ++i) out.emplace_back(1, word[i]);
}

std::string Lowercase(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be positive");
  }
}

bool EmbeddingTable::Add(std::string token, std::span<const double> values) {
  if (values.size() != dimension_) {
    throw Error(ErrorCode::kInvalidArgument,
                "vector for '" + token + "' has length " +
                    std::to_string(values.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  if (index_.find(std::string_view(token)) != index_.end()) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

bool EmbeddingTable::Contains(std::string_view token) const {
  return index_.find(token) != index_.end();
}

std::optional<std::span<const double>> EmbeddingTable::Find(
    std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

EmbeddingTable LoadVectors(const std::filesystem::path& path,
                           VectorLoadReport* report) {
  std::ifstream in = OpenOrThrow(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "' is empty");
  }
  StripCarriageReturn(line);
  const auto header = SplitFields(line);
  long long count = 0;
  long long dim = 0;
  if (header.size() != 2 || !ParseLong(header[0], count) ||
      !ParseLong(header[1], dim)) {
    throw Error(ErrorCode::kParse, "bad vector header in '" + path.string() +
                                       "': expected '<count> <dimension>'");
  }
  if (dim <= 0) {
    throw Error(ErrorCode::kParse, "vector header dimension must be positive, got " +
                                       std::to_string(dim));
  }

  EmbeddingTable table(static_cast<std::size_t>(dim));
  VectorLoadReport local;
  local.header_count = count < 0 ? 0 : static_cast<std::size_t>(count);
  std::vector<double> values(static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    StripCarriageReturn(line);
    if (line.empty()) continue;
    const auto fields = SplitFields(line);
    bool ok = fields.size() == values.size() + 1;
    for (std::size_t i = 0; ok && i < values.size(); ++i) {
      ok = ParseDouble(fields[i + 1], values[i]);
    }
    if (!ok || !table.Add(std::string(fields[0]), values)) {
      ++local.skipped_lines;
      continue;
    }
    ++local.loaded;
  }
  if (table.size() == 0) {
    throw Error(ErrorCode::kParse, "no valid vectors in '" + path.string() + "'");
  }
  if (report) *report = local;
  return table;
}

std::string_view PosTagName(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAdjective: return "ADJ";
    case PosTag::kAdverb: return "ADV";
    case PosTag::kPronoun: return "PRON";
    case PosTag::kOther: return "OTHER";
  }
  return "OTHER";
}

std::optional<PosTag> ParsePosTag(std::string_view name) {
  for (PosTag tag : {PosTag::kNoun, PosTag::kVerb, PosTag::kAdjective,
                     PosTag::kAdverb, PosTag::kPronoun, PosTag::kOther}) {
    if (PosTagName(tag) == name) return tag;
  }
  return std::nullopt;
}

std::size_t Document::TokenCount() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

Corpus LoadCorpus(const std::filesystem::path& path, CorpusLoadReport* report) {
  std::ifstream in = OpenOrThrow(path);
  Corpus corpus;
  CorpusLoadReport local;
  std::unordered_map<std::string, std::size_t> doc_index;
  std::set<std::string> sentence_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": " + e.what());
    }
    auto field = [&](const char* name) -> std::optional<std::string> {
      auto it = record.find(name);
      if (it == record.end() || it->is_null()) return std::nullopt;
      if (!it->is_string()) {
        throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                           ": field '" + name + "' must be a string");
      }
      return it->get<std::string>();
    };
    auto doc_id = field("doc_id");
    auto sentence_id = field("sentence_id");
    auto text = field("text");
    if (!doc_id || !sentence_id || !text) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": doc_id, sentence_id and text are required");
    }
    if (!sentence_ids.insert(*sentence_id).second) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": duplicate sentence_id '" + *sentence_id + "'");
    }
    ++local.records;

    auto [it, inserted] = doc_index.emplace(*doc_id, corpus.documents.size());
    if (inserted) {
      corpus.documents.push_back(Document{*doc_id, {}, {}});
    }
    Document& doc = corpus.documents[it->second];
    for (const char* kind : {"author", "genre", "reading_level"}) {
      if (auto value = field(kind); value && !doc.labels.contains(kind)) {
        doc.labels.emplace(kind, *value);
      }
    }
    Sentence sentence{*sentence_id, Tokenize(*text), *text};
    if (sentence.tokens.empty()) {
      ++local.empty_sentences;
      continue;
    }
    doc.sentences.push_back(std::move(sentence));
  }
  std::erase_if(corpus.documents,
                [](const Document& d) { return d.sentences.empty(); });
  if (report) *report = local;
  return corpus;
}

StopwordSet LoadStopwords(const std::filesystem::path& path) {
  std::ifstream in = OpenOrThrow(path);
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    StripCarriageReturn(line);
    auto fields = SplitFields(line);
    if (fields.empty()) continue;
    out.insert(Lowercase(std::string(fields[0])));
  }
  return out;
}

PosTagMap LoadPosTags(const std::filesystem::path& path) {
  std::ifstream in = OpenOrThrow(path);
  PosTagMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParse, where + ": expected 'token<TAB>tag'");
    }
    auto tag = ParsePosTag(std::string_view(line).substr(tab + 1));
    if (!tag) {
      throw Error(ErrorCode::kParse, where + ": unknown tag '" + line.substr(tab + 1) + "'");
    }
    if (!out.emplace(line.substr(0, tab), *tag).second) {
      throw Error(ErrorCode::kParse, where + ": token '" + line.substr(0, tab) +
                                         "' tagged twice");
    }
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::size_t word_start = 0;
  while (i < text.size()) {
    if (std::size_t ws = WhitespaceLength(text, i); ws > 0) {
      if (i > word_start) EmitWord(text.substr(word_start, i - word_start), out);
      i += ws;
      word_start = i;
    } else {
      ++i;
    }
  }
  if (text.size() > word_start) EmitWord(text.substr(word_start), out);
  return out;
}

std::optional<Vector> SentenceMean(std::span<const std::string> tokens,
                                   const EmbeddingTable& table) {
  Vector sum(table.dimension(), 0.0);
  std::size_t count = 0;
  for (const auto& token : tokens) {
    auto v = table.Find(token);
    if (!v) continue;
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += (*v)[j];
    ++count;
  }
  if (count == 0) return std::nullopt;
  for (double& x : sum) x /= static_cast<double>(count);
  return sum;
}

std::vector<std::string> SampleFromPool(std::vector<std::string> pool,
                                        std::size_t n, std::uint64_t seed,
                                        std::string_view what) {
  if (pool.size() < n) {
    throw Error(ErrorCode::kInsufficientTokens,
                std::string(what) + " has " + std::to_string(pool.size()) +
                    " usable tokens, " + std::to_string(n) + " requested (short by " +
                    std::to_string(n - pool.size()) + ")");
  }
  Rng rng(seed);
  rng.Shuffle(std::span<std::string>(pool));
  pool.resize(n);
  return pool;
}

std::vector<std::string> SampleTokens(const Document& doc, std::size_t n,
                                      std::uint64_t seed,
                                      const StopwordSet& stopwords) {
  std::vector<std::string> pool;
  for (const auto& sentence : doc.sentences) {
    for (const auto& token : sentence.tokens) {
      if (!stopwords.contains(token)) pool.push_back(token);
    }
  }
  return SampleFromPool(std::move(pool), n, seed, "document '" + doc.id + "'");
}

CorpusStats ComputeCorpusStats(const Corpus& corpus, const EmbeddingTable& table) {
  CorpusStats stats;
  std::set<std::string_view> texts;
  std::set<std::string_view> types;
  for (const auto& doc : corpus.documents) {
    ++stats.documents;
    for (const auto& sentence : doc.sentences) {
      ++stats.sentences;
      texts.insert(sentence.raw_text);
      for (const auto& token : sentence.tokens) {
        ++stats.total_tokens;
        types.insert(token);
        if (!table.Contains(token)) ++stats.unembedded_tokens;
      }
    }
  }
  stats.unique_sentences = texts.size();
  stats.unique_tokens = types.size();
  for (auto t : types) {
    if (!table.Contains(t)) ++stats.unique_unembedded_tokens;
  }
  return stats;
}

}  // namespace latent
