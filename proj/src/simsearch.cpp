#include "latent/simsearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "latent/error.hpp"

namespace latent {

namespace {

constexpr std::array<Algorithm, 5> kAlgorithms = {
    Algorithm::kSetCover, Algorithm::kAvg, Algorithm::kWmd, Algorithm::kJaccard,
    Algorithm::kLevenshtein};

std::optional<Vector> ContentMean(std::span<const std::string> tokens,
                                  const EmbeddingTable& table,
                                  const StopwordSet& stopwords) {
  std::vector<std::string> content;
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) content.push_back(t);
  }
  return SentenceMean(content, table);
}

TokenSet ContentSet(const TokenSet& tokens, const StopwordSet& stopwords) {
  TokenSet out;
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.insert(t);
  }
  return out;
}

Suggestion MakeSuggestion(const DatabaseEntry& entry, double score) {
  Suggestion s;
  s.sentence_id = entry.id;
  s.doc_id = entry.doc_id;
  s.text = entry.raw_text;
  s.score = score;
  s.tokens = entry.tokens;
  return s;
}

std::string QueryKey(const Query& query) {
  return query.sentence_id ? *query.sentence_id : query.text;
}

bool IsQuery(const Query& query, const DatabaseEntry& entry) {
  return query.sentence_id && *query.sentence_id == entry.id;
}

// Keeps the t best (score, entry index) pairs. `better` orders scores; equal
// scores go to the lower index, i.e. the lower sentence id.
template <typename Better>
SuggestionResult RankEntries(const SentenceDatabase& db, const Query& query,
                             Algorithm algorithm,
                             const SuggestParams& params,
                             std::vector<std::pair<double, std::size_t>> scored,
                             Better better) {
  auto order = [&](const auto& a, const auto& b) {
    if (better(a.first, b.first)) return true;
    if (better(b.first, a.first)) return false;
    return a.second < b.second;
  };
  const std::size_t take = std::min(params.t, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), order);
  SuggestionResult result;
  result.algorithm = algorithm;
  result.query = QueryKey(query);
  result.params = params;
  for (std::size_t i = 0; i < take; ++i) {
    result.suggestions.push_back(MakeSuggestion(db.entries()[scored[i].second],
                                                scored[i].first));
    result.suggestions.back().rank = i + 1;
  }
  return result;
}

void RequireT(const SuggestParams& params) {
  if (params.t == 0) throw Error(ErrorCode::kInvalidArgument, "t must be at least 1");
  if (!(params.rho >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must be non-negative");
  }
}

void RequireNonEmptyDb(const SentenceDatabase& db) {
  if (db.empty()) {
    throw Error(ErrorCode::kEmptyInput, "the sentence database is empty after filtering");
  }
}

}  // namespace

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSetCover: return "set_cover";
    case Algorithm::kAvg: return "avg";
    case Algorithm::kWmd: return "wmd";
    case Algorithm::kJaccard: return "jaccard";
    case Algorithm::kLevenshtein: return "levenshtein";
  }
  return "unknown";
}

std::optional<Algorithm> ParseAlgorithm(std::string_view name) {
  for (Algorithm a : kAlgorithms) {
    if (AlgorithmName(a) == name) return a;
  }
  return std::nullopt;
}

const std::array<Algorithm, 5>& AllAlgorithms() { return kAlgorithms; }

std::string_view EditUnitName(EditUnit unit) {
  return unit == EditUnit::kChar ? "char" : "token";
}

std::optional<EditUnit> ParseEditUnit(std::string_view name) {
  if (name == "char") return EditUnit::kChar;
  if (name == "token") return EditUnit::kToken;
  return std::nullopt;
}

SentenceDatabase::SentenceDatabase(const Corpus& corpus, const EmbeddingTable& table,
                                   const StopwordSet& stopwords, DatabaseOptions options)
    : table_(table), stopwords_(stopwords), options_(options) {
  if (options_.min_tokens > options_.max_tokens) {
    throw Error(ErrorCode::kInvalidArgument, "min_tokens exceeds max_tokens");
  }
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      const std::size_t n = sentence.tokens.size();
      if (n < options_.min_tokens || n > options_.max_tokens) continue;
      DatabaseEntry e;
      e.id = sentence.id;
      e.doc_id = doc.id;
      e.raw_text = sentence.raw_text;
      e.tokens = sentence.tokens;
      e.token_set = TokenSet(e.tokens.begin(), e.tokens.end());
      e.content_set = ContentSet(e.token_set, stopwords_);
      e.content_mean = ContentMean(e.tokens, table_, stopwords_);
      entries_.push_back(std::move(e));
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const DatabaseEntry& a, const DatabaseEntry& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
    if (entries_[i].id == entries_[i + 1].id) {
      throw Error(ErrorCode::kParse, "duplicate sentence id '" + entries_[i].id + "'");
    }
  }

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (const auto& token : entries_[i].token_set) postings_[token].push_back(i);
  }
  vocabulary_.reserve(postings_.size());
  PointSet points(table_.dimension());
  for (const auto& [token, list] : postings_) {
    vocabulary_.push_back(token);
    if (auto v = table_.Find(token)) {
      points.Add(static_cast<PointId>(embedded_vocabulary_.size()), *v);
      embedded_vocabulary_.push_back(token);
    }
  }
  if (!points.empty()) vocab_index_.emplace(std::move(points));
}

bool SentenceDatabase::InVocabulary(std::string_view token) const {
  return postings_.find(token) != postings_.end();
}

std::optional<std::size_t> SentenceDatabase::Find(std::string_view sentence_id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), sentence_id,
      [](const DatabaseEntry& e, std::string_view id) { return e.id < id; });
  if (it == entries_.end() || it->id != sentence_id) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

std::span<const std::size_t> SentenceDatabase::Postings(std::string_view token) const {
  auto it = postings_.find(token);
  if (it == postings_.end()) return {};
  return it->second;
}

TokenSet SentenceDatabase::Ball(std::string_view w, std::size_t r) const {
  TokenSet out;
  if (r == 0 || !vocab_index_) return out;
  auto vector = table_.Find(w);
  if (!vector) return out;
  std::optional<PointId> self;
  auto it = std::lower_bound(embedded_vocabulary_.begin(), embedded_vocabulary_.end(), w);
  if (it != embedded_vocabulary_.end() && *it == w) {
    self = static_cast<PointId>(it - embedded_vocabulary_.begin());
  }
  const std::size_t available = embedded_vocabulary_.size() - (self ? 1 : 0);
  const std::size_t k = std::min(r, available);
  if (k == 0) return out;
  for (const auto& n : vocab_index_->Knn(*vector, k, self)) {
    out.insert(embedded_vocabulary_[static_cast<std::size_t>(n.id)]);
  }
  return out;
}

TokenSet BuildTargetSet(const SentenceDatabase& db,
                        std::span<const std::string> query_tokens, std::size_t r,
                        const StopwordSet& stopwords, bool include_query_words) {
  TokenSet u;
  for (const auto& w : query_tokens) {
    u.merge(db.Ball(w, r));
    if (include_query_words && db.InVocabulary(w)) u.insert(w);
  }
  std::erase_if(u, [&](const std::string& t) { return stopwords.contains(t); });
  return u;
}

Query Query::FromText(std::string text) {
  Query q;
  q.tokens = Tokenize(text);
  q.text = std::move(text);
  return q;
}

Query Query::FromEntry(const DatabaseEntry& entry) {
  Query q;
  q.text = entry.raw_text;
  q.tokens = entry.tokens;
  q.sentence_id = entry.id;
  return q;
}

SuggestionResult SetCoverSuggest(const SentenceDatabase& db, const Query& query,
                                 const SuggestParams& params) {
  RequireT(params);
  RequireNonEmptyDb(db);
  TokenSet u = BuildTargetSet(db, query.tokens, params.r, db.stopwords(),
                              params.include_query_words);
  SuggestionResult result;
  result.algorithm = Algorithm::kSetCover;
  result.query = QueryKey(query);
  result.params = params;
  result.target_size = u.size();

  const auto& entries = db.entries();
  std::vector<bool> taken(entries.size(), false);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (IsQuery(query, entries[i])) taken[i] = true;
  }
  std::vector<double> penalty(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    penalty[i] = std::pow(static_cast<double>(entries[i].token_set.size()), params.rho);
  }

  std::vector<std::size_t> overlap(entries.size(), 0);
  std::vector<std::size_t> touched;
  while (result.suggestions.size() < params.t) {
    touched.clear();
    for (const auto& token : u) {
      for (std::size_t i : db.Postings(token)) {
        if (taken[i]) continue;
        if (overlap[i]++ == 0) touched.push_back(i);
      }
    }
    std::size_t best = entries.size();
    double best_score = 0.0;
    for (std::size_t i : touched) {
      const double score = static_cast<double>(overlap[i]) / penalty[i];
      if (best == entries.size() || score > best_score ||
          (score == best_score && i < best)) {
        best = i;
        best_score = score;
      }
    }
    for (std::size_t i : touched) overlap[i] = 0;

    if (best == entries.size()) {
      if (params.stop_on_zero) {
        result.stopped_early = true;
        break;
      }
      auto it = std::find(taken.begin(), taken.end(), false);
      if (it == taken.end()) break;
      best = static_cast<std::size_t>(it - taken.begin());
      best_score = 0.0;
    }

    Suggestion s = MakeSuggestion(entries[best], best_score);
    for (const auto& token : entries[best].token_set) {
      if (u.erase(token)) s.covered.push_back(token);
    }
    s.rank = result.suggestions.size() + 1;
    result.suggestions.push_back(std::move(s));
    taken[best] = true;
  }
  return result;
}

SuggestionResult AvgSuggest(const SentenceDatabase& db, const Query& query,
                            const SuggestParams& params) {
  RequireT(params);
  const auto mean = ContentMean(query.tokens, db.table(), db.stopwords());
  if (!mean) {
    throw Error(ErrorCode::kUnembeddable,
                "the query has no embeddable non-stopword token");
  }
  std::vector<std::pair<double, std::size_t>> scored;
  const auto& entries = db.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (IsQuery(query, entries[i]) || !entries[i].content_mean) continue;
    scored.emplace_back(
        std::sqrt(SquaredL2(mean->data(), entries[i].content_mean->data(), mean->size())),
        i);
  }
  return RankEntries(db, query, Algorithm::kAvg, params, std::move(scored), std::less<>());
}

SuggestionResult WmdSuggest(const SentenceDatabase& db, const Query& query,
                            const SuggestParams& params) {
  RequireT(params);
  if (!ContentMean(query.tokens, db.table(), db.stopwords())) {
    throw Error(ErrorCode::kUnembeddable,
                "the query has no embeddable non-stopword token");
  }
  std::vector<std::pair<double, std::size_t>> scored;
  const auto& entries = db.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (IsQuery(query, entries[i]) || !entries[i].content_mean) continue;
    scored.emplace_back(Wmd(query.tokens, entries[i].tokens, db.table(), db.stopwords()),
                        i);
  }
  return RankEntries(db, query, Algorithm::kWmd, params, std::move(scored), std::less<>());
}

SuggestionResult JaccardSuggest(const SentenceDatabase& db, const Query& query,
                                const SuggestParams& params) {
  RequireT(params);
  const TokenSet q = ContentSet(TokenSet(query.tokens.begin(), query.tokens.end()),
                                db.stopwords());
  if (q.empty()) {
    throw Error(ErrorCode::kEmptyInput, "the query has no non-stopword token");
  }
  std::vector<std::pair<double, std::size_t>> scored;
  const auto& entries = db.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (IsQuery(query, entries[i])) continue;
    scored.emplace_back(*Jaccard(q, entries[i].content_set), i);
  }
  return RankEntries(db, query, Algorithm::kJaccard, params, std::move(scored),
                     std::greater<>());
}

SuggestionResult LevenshteinSuggest(const SentenceDatabase& db, const Query& query,
                                    const SuggestParams& params) {
  RequireT(params);
  std::vector<std::pair<double, std::size_t>> scored;
  const auto& entries = db.entries();
  const std::vector<std::string> q_tokens = Tokenize(query.text);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (IsQuery(query, entries[i])) continue;
    std::size_t d = 0;
    if (params.ld_unit == EditUnit::kChar) {
      d = Levenshtein(query.text, entries[i].raw_text, EditUnit::kChar);
    } else {
      d = LevenshteinTokens(q_tokens, entries[i].tokens);
    }
    scored.emplace_back(static_cast<double>(d), i);
  }
  return RankEntries(db, query, Algorithm::kLevenshtein, params, std::move(scored),
                     std::less<>());
}

SuggestionResult Suggest(const SentenceDatabase& db, const Query& query,
                         Algorithm algorithm, const SuggestParams& params) {
  RequireT(params);
  if (db.empty()) {
    SuggestionResult result;
    result.algorithm = algorithm;
    result.query = QueryKey(query);
    result.params = params;
    result.empty_database = true;
    return result;
  }
  switch (algorithm) {
    case Algorithm::kSetCover: return SetCoverSuggest(db, query, params);
    case Algorithm::kAvg: return AvgSuggest(db, query, params);
    case Algorithm::kWmd: return WmdSuggest(db, query, params);
    case Algorithm::kJaccard: return JaccardSuggest(db, query, params);
    case Algorithm::kLevenshtein: return LevenshteinSuggest(db, query, params);
  }
  throw Error(ErrorCode::kUnknownAlgorithm, "unknown algorithm");
}

double Wmd(std::span<const std::string> a, std::span<const std::string> b,
           const EmbeddingTable& table, const StopwordSet& stopwords) {
  auto bag = [&](std::span<const std::string> tokens) {
    std::map<std::string_view, long long> counts;
    for (const auto& t : tokens) {
      if (!stopwords.contains(t) && table.Contains(t)) ++counts[t];
    }
    return counts;
  };
  const auto ba = bag(a);
  const auto bb = bag(b);
  if (ba.empty() || bb.empty()) {
    throw Error(ErrorCode::kUnembeddable,
                "word mover's distance needs an embeddable non-stopword token on both sides");
  }
  long long total_a = 0, total_b = 0;
  for (const auto& [t, c] : ba) total_a += c;
  for (const auto& [t, c] : bb) total_b += c;
  // Scaling weight c / total to c * other_total keeps the problem integral.
  std::vector<long long> supply, demand;
  std::vector<std::span<const double>> va, vb;
  for (const auto& [t, c] : ba) {
    supply.push_back(c * total_b);
    va.push_back(*table.Find(t));
  }
  for (const auto& [t, c] : bb) {
    demand.push_back(c * total_a);
    vb.push_back(*table.Find(t));
  }
  std::vector<double> cost(supply.size() * demand.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (std::size_t j = 0; j < vb.size(); ++j) {
      cost[i * vb.size() + j] =
          std::sqrt(SquaredL2(va[i].data(), vb[j].data(), table.dimension()));
    }
  }
  return SolveTransport(supply, demand, cost) /
         static_cast<double>(total_a * total_b);
}

// Successive shortest augmenting paths with Johnson potentials. Node 0 is the
// source, 1..n the supplies, n+1..n+m the demands, n+m+1 the sink. Reduced
// costs are non-negative up to rounding, so each path is found with a dense
// Dijkstra; every augmentation moves a positive integer amount, so the loop
// ends with an optimal integral flow.
double SolveTransport(std::span<const long long> supply, std::span<const long long> demand,
                      std::span<const double> cost) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (cost.size() != n * m) {
    throw Error(ErrorCode::kInvalidArgument, "transport cost matrix has the wrong size");
  }
  const long long total = std::accumulate(supply.begin(), supply.end(), 0LL);
  if (total != std::accumulate(demand.begin(), demand.end(), 0LL)) {
    throw Error(ErrorCode::kInvalidArgument, "transport supply and demand differ");
  }
  if (std::any_of(supply.begin(), supply.end(), [](long long s) { return s < 0; }) ||
      std::any_of(demand.begin(), demand.end(), [](long long d) { return d < 0; })) {
    throw Error(ErrorCode::kInvalidArgument, "negative transport amount");
  }
  if (std::any_of(cost.begin(), cost.end(), [](double c) { return !(c >= 0.0); })) {
    throw Error(ErrorCode::kInvalidArgument, "transport costs must be non-negative");
  }

  struct Arc {
    std::size_t to;
    long long cap;
    double cost;
  };
  const std::size_t nodes = n + m + 2;
  const std::size_t source = 0, sink = n + m + 1;
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> out(nodes);
  auto add = [&](std::size_t from, std::size_t to, long long cap, double c) {
    out[from].push_back(arcs.size());
    arcs.push_back({to, cap, c});
    out[to].push_back(arcs.size());
    arcs.push_back({from, 0, -c});
  };
  for (std::size_t i = 0; i < n; ++i) add(source, 1 + i, supply[i], 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) add(1 + i, 1 + n + j, total, cost[i * m + j]);
  }
  for (std::size_t j = 0; j < m; ++j) add(1 + n + j, sink, demand[j], 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> potential(nodes, 0.0);  // all arc costs start non-negative
  std::vector<double> dist(nodes);
  std::vector<std::size_t> via(nodes);
  std::vector<bool> done(nodes);
  long long moved = 0;
  while (moved < total) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), false);
    dist[source] = 0.0;
    for (std::size_t step = 0; step < nodes; ++step) {
      std::size_t v = nodes;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (!done[u] && dist[u] < inf && (v == nodes || dist[u] < dist[v])) v = u;
      }
      if (v == nodes) break;
      done[v] = true;
      for (std::size_t a : out[v]) {
        if (arcs[a].cap == 0 || done[arcs[a].to]) continue;
        const double reduced =
            std::max(0.0, arcs[a].cost + potential[v] - potential[arcs[a].to]);
        if (dist[v] + reduced < dist[arcs[a].to]) {
          dist[arcs[a].to] = dist[v] + reduced;
          via[arcs[a].to] = a;
        }
      }
    }
    if (dist[sink] == inf) throw Error(ErrorCode::kInternal, "transport is infeasible");
    for (std::size_t v = 0; v < nodes; ++v) {
      if (dist[v] < inf) potential[v] += dist[v];
    }
    long long push = total - moved;
    for (std::size_t v = sink; v != source; v = arcs[via[v] ^ 1].to) {
      push = std::min(push, arcs[via[v]].cap);
    }
    for (std::size_t v = sink; v != source; v = arcs[via[v] ^ 1].to) {
      arcs[via[v]].cap -= push;
      arcs[via[v] ^ 1].cap += push;
    }
    moved += push;
  }

  double result = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a : out[1 + i]) {
      if (a % 2 == 0 && arcs[a].to > n && arcs[a].to != sink) {
        result += static_cast<double>(arcs[a ^ 1].cap) * arcs[a].cost;
      }
    }
  }
  return result;
}

std::optional<double> Jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return std::nullopt;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

namespace {

template <typename Seq>
std::size_t EditDistance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::size_t Levenshtein(std::string_view a, std::string_view b, EditUnit unit) {
  if (unit == EditUnit::kToken) {
    const auto ta = Tokenize(a);
    const auto tb = Tokenize(b);
    return EditDistance(ta, tb);
  }
  return EditDistance(DecodeUtf8(a), DecodeUtf8(b));
}

std::size_t LevenshteinTokens(std::span<const std::string> a,
                              std::span<const std::string> b) {
  return EditDistance(a, b);
}

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3
                                   : (c >> 3) == 0x1E ? 4 : 0;
    char32_t cp = len == 1 ? c : len == 2 ? c & 0x1F : len == 3 ? c & 0x0F : c & 0x07;
    bool ok = len != 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
      } else {
        cp = (cp << 6) | (cc & 0x3F);
      }
    }
    if (ok) {
      // Reject overlong forms, surrogates and out-of-range values.
      static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
      ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace latent
