#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "latent/embeddings.hpp"
#include "latent/simsearch.hpp"

namespace latent {

struct ServiceLimits {
  std::size_t t_min = 1, t_max = 25;
  std::size_t r_min = 0, r_max = 100;
  std::size_t query_max_chars = 1000;  // Unicode code points
};

struct ServiceDefaults {
  Algorithm algorithm = Algorithm::kSetCover;
  std::size_t t = 5;
  std::size_t r = 10;
  double rho = 0.5;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

// Request handling over an immutable database. Handlers are const and keep no
// per-request state, so one instance serves concurrent requests.
class SuggestService {
 public:
  SuggestService(const Corpus& corpus, const EmbeddingTable& table,
                 DatabaseOptions options = {});

  // POST /api/suggest. 400 for malformed or out-of-range parameters, 422 for a
  // query with no usable tokens, 500 for anything unexpected. The body carries
  // timing_ms, which is the only field that varies between identical requests.
  HttpReply HandleSuggest(const std::string& body) const;

  // GET /api/meta
  HttpReply HandleMeta() const;

  const SentenceDatabase& database() const { return db_; }
  const CorpusStats& stats() const { return stats_; }

 private:
  CorpusStats stats_;
  SentenceDatabase db_;
  ServiceLimits limits_;
  ServiceDefaults defaults_;
};

nlohmann::json CorpusStatsJson(const CorpusStats& stats);
nlohmann::json SuggestionsJson(const SuggestionResult& result);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t workers = 4;
  std::optional<std::filesystem::path> static_dir;
};

// HTTP front end: POST /api/suggest, GET /api/meta and, when configured, the
// static web client under /.
class HttpFrontend {
 public:
  HttpFrontend(const SuggestService& service, ServeOptions options);
  ~HttpFrontend();

  // Binds the socket and returns the port. Throws kIo on failure.
  int Bind();
  // Serves until Stop(); call after Bind().
  void Run();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace latent
