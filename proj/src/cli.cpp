#include "latent/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "latent/divergence.hpp"
#include "latent/embeddings.hpp"
#include "latent/error.hpp"
#include "latent/output.hpp"
#include "latent/random.hpp"
#include "latent/service.hpp"
#include "latent/simsearch.hpp"
#include "latent/variety.hpp"
#include "latent/zipf.hpp"

#ifndef LATENT_DEFAULT_STOPWORDS
#define LATENT_DEFAULT_STOPWORDS "data/stopwords_en.txt"
#endif

namespace latent {

namespace {

std::string Join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string Bool(bool b) { return b ? "true" : "false"; }

struct Common {
  std::string vectors;
  std::string corpus;
  std::string stopwords = LATENT_DEFAULT_STOPWORDS;
  std::string pos;
  std::string output;
  std::uint64_t seed = 0;
};

void AddOutput(CLI::App* cmd, Common& c) {
  cmd->add_option("-o,--output", c.output, "Write results here instead of stdout");
}

void AddSeed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void AddVectors(CLI::App* cmd, Common& c) {
  cmd->add_option("--vectors", c.vectors, "Word vector file (text format)")->required();
}

void AddCorpus(CLI::App* cmd, Common& c, bool required = true) {
  auto* opt = cmd->add_option("--corpus", c.corpus, "Corpus file (JSON lines)");
  if (required) opt->required();
}

void AddStopwords(CLI::App* cmd, Common& c) {
  cmd->add_option("--stopwords", c.stopwords, "Stopword list, one per line")
      ->capture_default_str();
}

DatabaseOptions AddDatabaseOptions(CLI::App* cmd, DatabaseOptions& db) {
  cmd->add_option("--min-tokens", db.min_tokens, "Shortest candidate sentence")
      ->capture_default_str();
  cmd->add_option("--max-tokens", db.max_tokens, "Longest candidate sentence")
      ->capture_default_str();
  return db;
}

EstimatorOptions ParseExponent(const std::string& name) {
  EstimatorOptions opts;
  opts.exponent = name == "unit" ? DistanceExponent::kUnit
                                 : DistanceExponent::kAmbientDimension;
  return opts;
}

ParamList BaseParams(const Common& c) {
  ParamList p;
  if (!c.vectors.empty()) p.emplace_back("vectors", c.vectors);
  if (!c.corpus.empty()) p.emplace_back("corpus", c.corpus);
  return p;
}

Corpus LoadCorpusWithStopwords(const Common& c, CorpusLoadReport* report = nullptr) {
  Corpus corpus = LoadCorpus(c.corpus, report);
  corpus.stopwords = LoadStopwords(c.stopwords);
  return corpus;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error(ErrorCode::kIo, "cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

// ---- embed-info ------------------------------------------------------------

void RunEmbedInfo(const Common& c, std::ostream& fallback) {
  VectorLoadReport vreport;
  const EmbeddingTable table = LoadVectors(c.vectors, &vreport);
  CorpusLoadReport creport;
  const Corpus corpus = LoadCorpus(c.corpus, &creport);
  const CorpusStats stats = ComputeCorpusStats(corpus, table);
  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "embed-info", params);
  WriteTsvRow(out, {"field", "value"});
  const std::vector<std::pair<std::string, std::size_t>> rows = {
      {"documents", stats.documents},
      {"sentences", stats.sentences},
      {"unique_sentences", stats.unique_sentences},
      {"total_tokens", stats.total_tokens},
      {"unique_tokens", stats.unique_tokens},
      {"unembedded_tokens", stats.unembedded_tokens},
      {"unique_unembedded_tokens", stats.unique_unembedded_tokens},
      {"empty_sentences_dropped", creport.empty_sentences},
      {"vector_dimension", table.dimension()},
      {"vectors_loaded", vreport.loaded},
      {"vector_lines_skipped", vreport.skipped_lines},
  };
  for (const auto& [key, value] : rows) WriteTsvRow(out, {key, std::to_string(value)});
}

// ---- kl ------------------------------------------------------------------------

struct KlArgs {
  std::size_t size = 3000;
  std::vector<std::size_t> ks = {3};
  double epsilon = 1e-5;
  std::string exponent = "ambient";
  std::vector<std::string> docs;
};

void RunKl(const Common& c, const KlArgs& a, std::ostream& fallback) {
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpusWithStopwords(c);
  ClassifierConfig config;
  config.ks = a.ks;
  config.sample_size = a.size;
  config.seed = c.seed;
  config.epsilon = a.epsilon;
  config.estimator = ParseExponent(a.exponent);
  DivergenceClassifier classifier(table, corpus.stopwords, config);

  std::vector<const Document*> docs;
  for (const auto& d : corpus.documents) {
    if (a.docs.empty() ||
        std::find(a.docs.begin(), a.docs.end(), d.id) != a.docs.end()) {
      docs.push_back(&d);
    }
  }
  std::vector<const Document*> usable;
  std::vector<std::string> skipped;
  for (const Document* d : docs) {
    if (classifier.SampleOf(*d)) {
      usable.push_back(d);
    } else {
      skipped.push_back(d->id);
    }
  }

  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("stopwords", c.stopwords);
  params.emplace_back("size", std::to_string(a.size));
  params.emplace_back("k", Join(a.ks));
  params.emplace_back("epsilon", FormatDouble(a.epsilon));
  params.emplace_back("exponent", a.exponent);
  for (const auto& d : a.docs) params.emplace_back("docs", d);
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "kl", params);
  for (const auto& id : skipped) out << "# skipped_short_document id=" << EscapeTsv(id) << '\n';
  WriteTsvRow(out, {"doc_p", "doc_q", "k", "kl", "renyi_above", "renyi_below"});
  const std::size_t k_max = *std::max_element(a.ks.begin(), a.ks.end());
  for (const Document* p : usable) {
    for (const Document* q : usable) {
      if (p == q) continue;
      const NeighborDistances dists(*classifier.SampleOf(*p), *classifier.SampleOf(*q),
                                    k_max);
      for (std::size_t k : a.ks) {
        const KlEstimate e = KlFromDistances(dists, k, a.epsilon, config.estimator);
        WriteTsvRow(out, {EscapeTsv(p->id), EscapeTsv(q->id), std::to_string(k),
                          FormatDouble(e.value), FormatDouble(e.above.value),
                          FormatDouble(e.below.value)});
      }
    }
  }
}

// ---- kl-classify -------------------------------------------------------------

struct ClassifyArgs {
  std::string label = "genre";
  std::size_t size = 3000;
  std::vector<std::size_t> ks = {3, 5, 10, 25, 50, 100};
  double epsilon = 1e-5;
  std::string exponent = "ambient";
  bool baseline = false;
  std::string smoothing = "none";
};

void RunKlClassify(const Common& c, const ClassifyArgs& a, std::ostream& fallback) {
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpusWithStopwords(c);
  ClassifierConfig config;
  config.ks = a.ks;
  config.sample_size = a.size;
  config.seed = c.seed;
  config.epsilon = a.epsilon;
  config.estimator = ParseExponent(a.exponent);
  DivergenceClassifier classifier(table, corpus.stopwords, config);

  std::map<std::string, std::vector<const Document*>> categories;
  std::vector<const Document*> targets;
  std::vector<std::string> skipped;
  for (const auto& d : corpus.documents) {
    auto it = d.labels.find(a.label);
    if (it == d.labels.end()) continue;
    if (!classifier.SampleOf(d)) {
      skipped.push_back(d.id);
      continue;
    }
    categories[it->second].push_back(&d);
    targets.push_back(&d);
  }
  if (categories.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "no document with label '" + a.label + "' has " + std::to_string(a.size) +
                    " embeddable non-stopword tokens");
  }

  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("stopwords", c.stopwords);
  params.emplace_back("label", a.label);
  params.emplace_back("size", std::to_string(a.size));
  params.emplace_back("k", Join(a.ks));
  params.emplace_back("epsilon", FormatDouble(a.epsilon));
  params.emplace_back("exponent", a.exponent);
  params.emplace_back("baseline", Bool(a.baseline));
  params.emplace_back("smoothing", a.smoothing);
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "kl-classify", params);
  for (const auto& id : skipped) out << "# skipped_short_document id=" << EscapeTsv(id) << '\n';

  std::vector<std::string> columns = {"target", "label", "k", "predicted", "correct"};
  for (const auto& [name, members] : categories) columns.push_back("mean_" + name);
  WriteTsvRow(out, columns);

  // k -> (hit, n), in first-seen order
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> accuracy;
  auto emit = [&](const Document& target, const std::string& k,
                  const std::string& predicted,
                  const std::map<std::string, double>& means) {
    const std::string& truth = target.labels.at(a.label);
    const bool correct = predicted == truth;
    std::vector<std::string> row = {EscapeTsv(target.id), EscapeTsv(truth), k,
                                    EscapeTsv(predicted), correct ? "1" : "0"};
    for (const auto& [name, members] : categories) {
      auto it = means.find(name);
      row.push_back(it == means.end() ? "NA" : FormatDouble(it->second));
    }
    WriteTsvRow(out, row);
    auto it = std::find_if(accuracy.begin(), accuracy.end(),
                           [&](const auto& e) { return e.first == k; });
    if (it == accuracy.end()) it = accuracy.insert(accuracy.end(), {k, {0, 0}});
    auto& acc = it->second;
    acc.first += correct;
    ++acc.second;
  };

  const Smoothing smoothing = a.smoothing == "laplace" ? Smoothing::kLaplace
                                                       : Smoothing::kNone;
  std::map<std::string, std::vector<std::string>> baseline_samples;
  auto baseline_sample = [&](const Document& d) -> const std::vector<std::string>& {
    auto it = baseline_samples.find(d.id);
    if (it == baseline_samples.end()) {
      it = baseline_samples
               .emplace(d.id, SampleTokens(d, a.size, DeriveSeed(c.seed, d.id),
                                           corpus.stopwords))
               .first;
    }
    return it->second;
  };

  for (const Document* target : targets) {
    for (const auto& outcome : classifier.Classify(*target, categories)) {
      emit(*target, std::to_string(outcome.k), outcome.predicted_category,
           outcome.per_category_mean);
    }
    if (!a.baseline) continue;
    std::map<std::string, double> means;
    for (const auto& [name, members] : categories) {
      double sum = 0.0;
      std::size_t used = 0;
      for (const Document* m : members) {
        if (m == target) continue;
        auto kl = EmpiricalKl(baseline_sample(*target), baseline_sample(*m), smoothing);
        if (!kl) continue;
        sum += *kl;
        ++used;
      }
      if (used) means[name] = sum / static_cast<double>(used);
    }
    std::string predicted = "NA";
    double best = 0.0;
    for (const auto& [name, mean] : means) {
      if (predicted == "NA" || mean < best) {
        best = mean;
        predicted = name;
      }
    }
    emit(*target, "baseline", predicted, means);
  }
  for (const auto& [k, acc] : accuracy) {
    out << "# accuracy k=" << k << ' ' << acc.first << '/' << acc.second << ' '
        << FormatDouble(acc.second ? static_cast<double>(acc.first) /
                                         static_cast<double>(acc.second)
                                   : 0.0)
        << '\n';
  }
}

// ---- zipf ----------------------------------------------------------------------

void WriteFit(std::ostream& out, const LogLogFit& fit) {
  out << "# fit slope=" << FormatDouble(fit.slope)
      << " intercept=" << FormatDouble(fit.intercept)
      << " r_squared=" << FormatDouble(fit.r_squared) << " points=" << fit.points << '\n';
}

struct ZipfArgs {
  FitOptions fit;
};

void RunZipfWords(const Common& c, const ZipfArgs& a, std::ostream& fallback) {
  const Corpus corpus = LoadCorpus(c.corpus);
  const RankTable table = WordRankTable(corpus);
  const LogLogFit fit = FitLogLog(table, a.fit);
  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("min_rank", std::to_string(a.fit.min_rank));
  params.emplace_back("max_rank", std::to_string(a.fit.max_rank));
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "zipf-words", params);
  WriteFit(out, fit);
  WriteTsvRow(out, {"rank", "count", "token"});
  for (const auto& row : table.rows) {
    WriteTsvRow(out, {std::to_string(row.rank), std::to_string(row.size),
                      EscapeTsv(row.label)});
  }
}

struct ClusterArgs {
  std::size_t k = 0;
  KMeansOptions kmeans;
  FitOptions fit;
  std::size_t inspect = 0;
};

void RunZipfClusters(const Common& c, const ClusterArgs& a, std::ostream& fallback) {
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpus(c.corpus);
  std::size_t skipped = 0;
  const LabeledPoints points = SentenceMeans(corpus, table, &skipped);
  const ClusterModel model = KMeansFit(points, a.k, c.seed, a.kmeans);
  const RankTable ranks = ClusterRankTable(model);

  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("k", std::to_string(a.k));
  params.emplace_back("max_iter", std::to_string(a.kmeans.max_iter));
  params.emplace_back("tol", FormatDouble(a.kmeans.tol));
  params.emplace_back("min_rank", std::to_string(a.fit.min_rank));
  params.emplace_back("max_rank", std::to_string(a.fit.max_rank));
  params.emplace_back("inspect", std::to_string(a.inspect));
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "zipf-clusters", params);
  out << "# kmeans sentences=" << points.size() << " skipped_unembeddable=" << skipped
      << " iterations=" << model.iterations << " converged=" << Bool(model.converged)
      << " inertia=" << FormatDouble(model.inertia)
      << " repaired_clusters=" << model.repaired_clusters << '\n';
  if (ranks.rows.size() >= 2) {
    WriteFit(out, FitLogLog(ranks, a.fit));
  } else {
    out << "# fit unavailable: fewer than 2 non-empty clusters\n";
  }

  if (a.inspect > 0) {
    std::map<std::string, const std::string*> text;
    for (const auto& d : corpus.documents) {
      for (const auto& s : d.sentences) text[s.id] = &s.raw_text;
    }
    WriteTsvRow(out, {"cluster", "size", "role", "position", "sentence_id", "distance",
                      "text"});
    for (const auto& insp : InspectClusters(points, model, a.inspect)) {
      for (const auto& [role, list] :
           {std::pair{"closest", &insp.closest}, std::pair{"furthest", &insp.furthest}}) {
        for (std::size_t i = 0; i < list->size(); ++i) {
          const auto& [id, dist] = (*list)[i];
          WriteTsvRow(out, {std::to_string(insp.cluster), std::to_string(insp.size), role,
                            std::to_string(i + 1), EscapeTsv(id), FormatDouble(dist),
                            EscapeTsv(*text.at(id))});
        }
      }
    }
    return;
  }
  WriteTsvRow(out, {"rank", "size", "cluster"});
  for (const auto& row : ranks.rows) {
    WriteTsvRow(out, {std::to_string(row.rank), std::to_string(row.size), row.label});
  }
}

struct SweepArgs {
  std::size_t k_center = 0;
  KMeansOptions kmeans;
};

void RunKSweep(const Common& c, const SweepArgs& a, std::ostream& fallback) {
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpus(c.corpus);
  const LabeledPoints points = SentenceMeans(corpus, table);
  const auto sweep = KSensitivity(points, a.k_center, c.seed, a.kmeans);
  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("k_center", std::to_string(a.k_center));
  params.emplace_back("max_iter", std::to_string(a.kmeans.max_iter));
  params.emplace_back("tol", FormatDouble(a.kmeans.tol));
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "k-sweep", params);
  WriteTsvRow(out, {"k", "slope", "intercept", "r_squared", "ranks"});
  for (const auto& p : sweep) {
    if (p.fit.points < 2) {
      WriteTsvRow(out, {std::to_string(p.k), "NA", "NA", "NA", std::to_string(p.fit.points)});
      continue;
    }
    WriteTsvRow(out, {std::to_string(p.k), FormatDouble(p.fit.slope),
                      FormatDouble(p.fit.intercept), FormatDouble(p.fit.r_squared),
                      std::to_string(p.fit.points)});
  }
}

struct PosArgs {
  std::vector<std::size_t> ks = {3, 5, 10, 20, 50};
  bool stats = false;
};

void RunPosNeighbors(const Common& c, const PosArgs& a, std::ostream& fallback) {
  const PosTagMap tags = LoadPosTags(c.pos);
  ParamList params = BaseParams(c);
  params.emplace_back("pos", c.pos);
  if (a.stats) {
    if (c.corpus.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--stats needs --corpus");
    }
    const Corpus corpus = LoadCorpus(c.corpus);
    const PosStatistics stats = ComputePosStatistics(corpus, tags);
    Sink sink(c.output, fallback);
    std::ostream& out = *sink;
    params.emplace_back("stats", "true");
    params.emplace_back("seed", std::to_string(c.seed));
    WriteHeader(out, "pos-neighbors", params);
    std::size_t total = stats.untagged_total, unique = stats.untagged_unique;
    for (std::size_t t = 0; t < 6; ++t) {
      total += stats.total[t];
      unique += stats.unique[t];
    }
    auto pct = [](std::size_t part, std::size_t whole) {
      return FormatDouble(whole ? 100.0 * static_cast<double>(part) /
                                      static_cast<double>(whole)
                                : 0.0);
    };
    WriteTsvRow(out, {"tag", "total", "total_pct", "unique", "unique_pct"});
    for (std::size_t t = 0; t < 6; ++t) {
      WriteTsvRow(out, {std::string(PosTagName(static_cast<PosTag>(t))),
                        std::to_string(stats.total[t]), pct(stats.total[t], total),
                        std::to_string(stats.unique[t]), pct(stats.unique[t], unique)});
    }
    WriteTsvRow(out, {"UNTAGGED", std::to_string(stats.untagged_total),
                      pct(stats.untagged_total, total), std::to_string(stats.untagged_unique),
                      pct(stats.untagged_unique, unique)});
    return;
  }
  const EmbeddingTable table = LoadVectors(c.vectors);
  const PosPurityReport report = PosPurity(table, tags, a.ks);
  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  params.emplace_back("k", Join(a.ks));
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "pos-neighbors", params);
  out << "# evaluated tokens=" << report.tokens << '\n';
  WriteTsvRow(out, {"k", "same_pos_pct"});
  for (const auto& [k, value] : report.per_k) {
    WriteTsvRow(out, {std::to_string(k), FormatDouble(value)});
  }
}

// ---- suggest / variety ---------------------------------------------------------

struct SuggestArgs {
  std::string algorithm = "set_cover";
  SuggestParams params;
  DatabaseOptions db;
  std::string ld_unit = "char";
  bool no_query_words = false;
  bool fill_zero = false;
  std::vector<std::string> queries;
  std::vector<std::string> query_ids;
  std::string query_file;
};

void AddSuggestParams(CLI::App* cmd, SuggestArgs& a) {
  cmd->add_option("--t", a.params.t, "Sentences to return")->capture_default_str();
  cmd->add_option("--r", a.params.r, "Nearest neighbours per query word")
      ->capture_default_str();
  cmd->add_option("--rho", a.params.rho, "Length penalty exponent")->capture_default_str();
  cmd->add_option("--ld-unit", a.ld_unit, "Levenshtein unit")
      ->check(CLI::IsMember({"char", "token"}))
      ->capture_default_str();
  cmd->add_flag("--no-query-words", a.no_query_words,
                "Leave the query's own words out of the target set");
  cmd->add_flag("--fill-zero-rounds", a.fill_zero,
                "Keep picking sentences after every score reaches zero");
  AddDatabaseOptions(cmd, a.db);
}

SuggestParams ResolveParams(const SuggestArgs& a) {
  SuggestParams p = a.params;
  p.ld_unit = *ParseEditUnit(a.ld_unit);
  p.include_query_words = !a.no_query_words;
  p.stop_on_zero = !a.fill_zero;
  return p;
}

void AddSuggestHeader(ParamList& params, const SuggestArgs& a, const SuggestParams& p) {
  params.emplace_back("t", std::to_string(p.t));
  params.emplace_back("r", std::to_string(p.r));
  params.emplace_back("rho", FormatDouble(p.rho));
  params.emplace_back("ld_unit", a.ld_unit);
  params.emplace_back("no_query_words", Bool(!p.include_query_words));
  params.emplace_back("fill_zero_rounds", Bool(!p.stop_on_zero));
  params.emplace_back("min_tokens", std::to_string(a.db.min_tokens));
  params.emplace_back("max_tokens", std::to_string(a.db.max_tokens));
}

void RunSuggest(const Common& c, const SuggestArgs& a, std::ostream& fallback) {
  const auto algorithm = ParseAlgorithm(a.algorithm);
  if (!algorithm) {
    throw Error(ErrorCode::kUnknownAlgorithm, "unknown algorithm '" + a.algorithm + "'");
  }
  const SuggestParams p = ResolveParams(a);
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpusWithStopwords(c);
  const SentenceDatabase db(corpus, table, corpus.stopwords, a.db);

  std::vector<Query> queries;
  for (const auto& text : a.queries) queries.push_back(Query::FromText(text));
  for (const auto& id : a.query_ids) {
    auto index = db.Find(id);
    if (!index) {
      throw Error(ErrorCode::kInvalidArgument,
                  "query sentence '" + id + "' is not in the filtered database");
    }
    queries.push_back(Query::FromEntry(db.entries()[*index]));
  }
  if (!a.query_file.empty()) {
    std::ifstream in(a.query_file);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.query_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) queries.push_back(Query::FromText(line));
    }
  }
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "give a query with --query, --query-id or --query-file");
  }

  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("stopwords", c.stopwords);
  params.emplace_back("algorithm", std::string(AlgorithmName(*algorithm)));
  AddSuggestHeader(params, a, p);
  for (const auto& q : a.queries) params.emplace_back("query", q);
  for (const auto& q : a.query_ids) params.emplace_back("query_id", q);
  if (!a.query_file.empty()) params.emplace_back("query_file", a.query_file);
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "suggest", params);
  WriteTsvRow(out, SuggestionColumns());
  for (const auto& q : queries) {
    const SuggestionResult result = Suggest(db, q, *algorithm, p);
    if (result.stopped_early) {
      out << "# stopped_early query=" << EscapeTsv(result.query) << " returned="
          << result.suggestions.size() << '\n';
    }
    for (const auto& s : result.suggestions) WriteTsvRow(out, SuggestionFields(result, s));
  }
}

struct VarietyArgs {
  SuggestArgs suggest;
  std::size_t queries = 200;
  std::vector<std::string> algorithms;
};

void RunVariety(const Common& c, const VarietyArgs& a, std::ostream& fallback) {
  std::vector<Algorithm> algorithms;
  if (a.algorithms.empty()) {
    algorithms.assign(AllAlgorithms().begin(), AllAlgorithms().end());
  }
  for (const auto& name : a.algorithms) {
    auto parsed = ParseAlgorithm(name);
    if (!parsed) throw Error(ErrorCode::kUnknownAlgorithm, "unknown algorithm '" + name + "'");
    algorithms.push_back(*parsed);
  }
  const SuggestParams p = ResolveParams(a.suggest);
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpusWithStopwords(c);
  const SentenceDatabase db(corpus, table, corpus.stopwords, a.suggest.db);
  if (db.empty()) throw Error(ErrorCode::kEmptyInput, "the filtered database is empty");

  std::vector<std::size_t> order(db.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(DeriveSeed(c.seed, "variety-queries"));
  rng.Shuffle(std::span<std::size_t>(order));

  std::map<std::string, QueryRun> runs;
  std::size_t skipped = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < order.size() && used < a.queries; ++i) {
    const Query q = Query::FromEntry(db.entries()[order[i]]);
    std::vector<SuggestionResult> results;
    try {
      for (Algorithm alg : algorithms) results.push_back(Suggest(db, q, alg, p));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnembeddable && e.code() != ErrorCode::kEmptyInput) throw;
      ++skipped;
      continue;
    }
    for (std::size_t j = 0; j < algorithms.size(); ++j) {
      runs[std::string(AlgorithmName(algorithms[j]))].push_back(std::move(results[j]));
    }
    ++used;
  }
  const VarietyReport report = BuildVarietyReport(runs, db.stopwords());

  Sink sink(c.output, fallback);
  std::ostream& out = *sink;
  ParamList params = BaseParams(c);
  params.emplace_back("stopwords", c.stopwords);
  std::string names;
  for (Algorithm alg : algorithms) {
    if (!names.empty()) names += ',';
    names += AlgorithmName(alg);
  }
  params.emplace_back("algorithms", names);
  params.emplace_back("queries", std::to_string(a.queries));
  AddSuggestHeader(params, a.suggest, p);
  params.emplace_back("seed", std::to_string(c.seed));
  WriteHeader(out, "variety", params);
  out << "# variety queries_run=" << report.queries << " skipped_unusable_queries=" << skipped
      << '\n';
  for (const auto& [key, intra] : report.intra_jaccard) {
    out << "# intra_jaccard_skipped algorithm=" << key.first
        << " rm_stop=" << (key.second ? "yes" : "no") << " skipped=" << intra.queries_skipped
        << '\n';
  }
  WriteVarietyTsv(out, report);
}

// ---- serve ---------------------------------------------------------------------

struct ServeArgs {
  ServeOptions serve;
  DatabaseOptions db;
  std::string static_dir;
};

void RunServe(const Common& c, const ServeArgs& a, std::ostream& err) {
  const EmbeddingTable table = LoadVectors(c.vectors);
  const Corpus corpus = LoadCorpusWithStopwords(c);
  const SuggestService service(corpus, table, a.db);
  ServeOptions options = a.serve;
  if (!a.static_dir.empty()) options.static_dir = a.static_dir;
  HttpFrontend frontend(service, options);
  const int port = frontend.Bind();
  err << "latent: serving " << service.database().size() << " sentences on http://"
      << options.host << ':' << port << std::endl;
  frontend.Run();
}

}  // namespace

void ApplyThreadOverride() {
  if (const char* env = std::getenv("LATENT_NUM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-space text statistics: KL estimation, Zipf analysis and "
               "similar-sentence search over word embeddings",
               "latent"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  std::function<void()> action;

  auto* embed = app.add_subcommand("embed-info", "Corpus and embedding coverage counts");
  AddVectors(embed, common);
  AddCorpus(embed, common);
  AddSeed(embed, common);
  AddOutput(embed, common);
  embed->callback([&] { action = [&] { RunEmbedInfo(common, out); }; });

  KlArgs kl;
  auto* kl_cmd = app.add_subcommand("kl", "Pairwise KL estimates between documents");
  AddVectors(kl_cmd, common);
  AddCorpus(kl_cmd, common);
  AddStopwords(kl_cmd, common);
  AddSeed(kl_cmd, common);
  AddOutput(kl_cmd, common);
  kl_cmd->add_option("--size", kl.size, "Tokens sampled per document")->capture_default_str();
  kl_cmd->add_option("--k", kl.ks, "Neighbour index k (comma list)")
      ->delimiter(',')
      ->capture_default_str();
  kl_cmd->add_option("--epsilon", kl.epsilon, "alpha = 1 +- epsilon")->capture_default_str();
  kl_cmd->add_option("--exponent", kl.exponent, "Distance-ratio power")
      ->check(CLI::IsMember({"ambient", "unit"}))
      ->capture_default_str();
  kl_cmd->add_option("--docs", kl.docs, "Restrict to these document ids")->delimiter(',');
  kl_cmd->callback([&] { action = [&] { RunKl(common, kl, out); }; });

  ClassifyArgs cls;
  auto* cls_cmd = app.add_subcommand("kl-classify", "Label documents by minimum mean KL");
  AddVectors(cls_cmd, common);
  AddCorpus(cls_cmd, common);
  AddStopwords(cls_cmd, common);
  AddSeed(cls_cmd, common);
  AddOutput(cls_cmd, common);
  cls_cmd->add_option("--label", cls.label, "Category label")
      ->check(CLI::IsMember({"author", "genre", "reading_level"}))
      ->capture_default_str();
  cls_cmd->add_option("--size", cls.size, "Tokens sampled per document")
      ->capture_default_str();
  cls_cmd->add_option("--k", cls.ks, "Neighbour index k (comma list)")
      ->delimiter(',')
      ->capture_default_str();
  cls_cmd->add_option("--epsilon", cls.epsilon, "alpha = 1 +- epsilon")
      ->capture_default_str();
  cls_cmd->add_option("--exponent", cls.exponent, "Distance-ratio power")
      ->check(CLI::IsMember({"ambient", "unit"}))
      ->capture_default_str();
  cls_cmd->add_flag("--baseline", cls.baseline, "Also classify with empirical word KL");
  cls_cmd->add_option("--smoothing", cls.smoothing, "Baseline smoothing")
      ->check(CLI::IsMember({"none", "laplace"}))
      ->capture_default_str();
  cls_cmd->callback([&] { action = [&] { RunKlClassify(common, cls, out); }; });

  ZipfArgs zw;
  auto* zw_cmd = app.add_subcommand("zipf-words", "Word count rank table and log-log fit");
  AddCorpus(zw_cmd, common);
  AddSeed(zw_cmd, common);
  AddOutput(zw_cmd, common);
  zw_cmd->add_option("--min-rank", zw.fit.min_rank, "First rank in the fit")
      ->capture_default_str();
  zw_cmd->add_option("--max-rank", zw.fit.max_rank, "Last rank in the fit (0 = all)")
      ->capture_default_str();
  zw_cmd->callback([&] { action = [&] { RunZipfWords(common, zw, out); }; });

  ClusterArgs zc;
  auto* zc_cmd = app.add_subcommand("zipf-clusters",
                                    "k-means over sentence means, cluster size ranks");
  AddVectors(zc_cmd, common);
  AddCorpus(zc_cmd, common);
  AddSeed(zc_cmd, common);
  AddOutput(zc_cmd, common);
  zc_cmd->add_option("--k", zc.k, "Number of clusters")->required();
  zc_cmd->add_option("--max-iter", zc.kmeans.max_iter, "Lloyd iteration cap")
      ->capture_default_str();
  zc_cmd->add_option("--tol", zc.kmeans.tol, "Centroid movement tolerance")
      ->capture_default_str();
  zc_cmd->add_option("--min-rank", zc.fit.min_rank, "First rank in the fit")
      ->capture_default_str();
  zc_cmd->add_option("--max-rank", zc.fit.max_rank, "Last rank in the fit (0 = all)")
      ->capture_default_str();
  zc_cmd->add_option("--inspect", zc.inspect,
                     "Dump the N sentences closest to and furthest from each centroid");
  zc_cmd->callback([&] { action = [&] { RunZipfClusters(common, zc, out); }; });

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("k-sweep", "Cluster-size slope for k around a centre");
  AddVectors(sw_cmd, common);
  AddCorpus(sw_cmd, common);
  AddSeed(sw_cmd, common);
  AddOutput(sw_cmd, common);
  sw_cmd->add_option("--k-center", sw.k_center, "Central k")->required();
  sw_cmd->add_option("--max-iter", sw.kmeans.max_iter, "Lloyd iteration cap")
      ->capture_default_str();
  sw_cmd->add_option("--tol", sw.kmeans.tol, "Centroid movement tolerance")
      ->capture_default_str();
  sw_cmd->callback([&] { action = [&] { RunKSweep(common, sw, out); }; });

  PosArgs pa;
  auto* pos_cmd = app.add_subcommand(
      "pos-neighbors", "Share of nearest neighbours with the same part of speech");
  pos_cmd->add_option("--vectors", common.vectors, "Word vector file (text format)");
  pos_cmd->add_option("--pos", common.pos, "token<TAB>TAG file")->required();
  AddCorpus(pos_cmd, common, /*required=*/false);
  AddSeed(pos_cmd, common);
  AddOutput(pos_cmd, common);
  pos_cmd->add_option("--k", pa.ks, "Neighbour counts (comma list)")
      ->delimiter(',')
      ->capture_default_str();
  pos_cmd->add_flag("--stats", pa.stats, "Per-tag token counts over --corpus instead");
  pos_cmd->callback([&] {
    action = [&] {
      if (!pa.stats && common.vectors.empty()) {
        throw CLI::RequiredError("--vectors");
      }
      RunPosNeighbors(common, pa, out);
    };
  });

  SuggestArgs sg;
  auto* sg_cmd = app.add_subcommand("suggest", "Similar sentences for one or more queries");
  AddVectors(sg_cmd, common);
  AddCorpus(sg_cmd, common);
  AddStopwords(sg_cmd, common);
  AddSeed(sg_cmd, common);
  AddOutput(sg_cmd, common);
  sg_cmd->add_option("--algorithm", sg.algorithm, "set_cover, avg, wmd, jaccard, levenshtein")
      ->capture_default_str();
  AddSuggestParams(sg_cmd, sg);
  sg_cmd->add_option("--query", sg.queries, "Query text (repeatable)");
  sg_cmd->add_option("--query-id", sg.query_ids, "Database sentence id (repeatable)");
  sg_cmd->add_option("--query-file", sg.query_file, "One query text per line");
  sg_cmd->callback([&] { action = [&] { RunSuggest(common, sg, out); }; });

  VarietyArgs va;
  auto* va_cmd = app.add_subcommand("variety", "Inter- and intra-algorithm variety");
  AddVectors(va_cmd, common);
  AddCorpus(va_cmd, common);
  AddStopwords(va_cmd, common);
  AddSeed(va_cmd, common);
  AddOutput(va_cmd, common);
  AddSuggestParams(va_cmd, va.suggest);
  va_cmd->add_option("--queries", va.queries, "Database sentences used as queries")
      ->capture_default_str();
  va_cmd->add_option("--algorithms", va.algorithms, "Comma list (default: all)")
      ->delimiter(',');
  va_cmd->callback([&] { action = [&] { RunVariety(common, va, out); }; });

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "HTTP suggestion service");
  AddVectors(sv_cmd, common);
  AddCorpus(sv_cmd, common);
  AddStopwords(sv_cmd, common);
  sv_cmd->add_option("--host", sv.serve.host, "Bind address")->capture_default_str();
  sv_cmd->add_option("--port", sv.serve.port, "Port (0 = any free port)")
      ->capture_default_str();
  sv_cmd->add_option("--workers", sv.serve.workers, "Concurrent request handlers")
      ->capture_default_str();
  sv_cmd->add_option("--static-dir", sv.static_dir, "Built web client served under /");
  AddDatabaseOptions(sv_cmd, sv.db);
  sv_cmd->callback([&] { action = [&] { RunServe(common, sv, err); }; });

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "latent: error[usage]: " << e.what() << '\n';
    err << "run 'latent --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (action) action();
  } catch (const CLI::ParseError& e) {
    err << "latent: error[usage]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "latent: error[" << ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "latent: error[internal]: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace latent
