#include "latent/service.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "latent/error.hpp"

namespace latent {

namespace {

using nlohmann::json;

HttpReply ErrorReply(int status, std::string_view code, const std::string& message) {
  return {status, json{{"error", {{"code", code}, {"message", message}}}}};
}

HttpReply BadRequest(const std::string& message) {
  return ErrorReply(400, "invalid_argument", message);
}

// Reads an optional integer field bounded to [lo, hi].
std::optional<HttpReply> ReadCount(const json& body, const char* key, std::size_t lo,
                                   std::size_t hi, std::size_t& value) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  bool integral = it->is_number_integer();
  long long v = 0;
  if (integral) {
    v = it->get<long long>();
  } else if (it->is_number_float()) {
    const double d = it->get<double>();
    integral = std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15;
    v = static_cast<long long>(d);
  }
  if (!integral) return BadRequest(std::string(key) + " must be an integer");
  if (v < static_cast<long long>(lo) || v > static_cast<long long>(hi)) {
    return BadRequest(std::string(key) + " must be in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "], got " + std::to_string(v));
  }
  value = static_cast<std::size_t>(v);
  return std::nullopt;
}

}  // namespace

json CorpusStatsJson(const CorpusStats& stats) {
  return {{"documents", stats.documents},
          {"sentences", stats.sentences},
          {"unique_sentences", stats.unique_sentences},
          {"total_tokens", stats.total_tokens},
          {"unique_tokens", stats.unique_tokens},
          {"unembedded_tokens", stats.unembedded_tokens},
          {"unique_unembedded_tokens", stats.unique_unembedded_tokens}};
}

json SuggestionsJson(const SuggestionResult& result) {
  json rows = json::array();
  for (const auto& s : result.suggestions) {
    rows.push_back({{"rank", s.rank},
                    {"sentence_id", s.sentence_id},
                    {"text", s.text},
                    {"score", s.score},
                    {"covered_tokens", s.covered},
                    {"source_doc", s.doc_id}});
  }
  return rows;
}

SuggestService::SuggestService(const Corpus& corpus, const EmbeddingTable& table,
                               DatabaseOptions options)
    : stats_(ComputeCorpusStats(corpus, table)),
      db_(corpus, table, corpus.stopwords, options) {}

HttpReply SuggestService::HandleSuggest(const std::string& body_text) const {
  const auto start = std::chrono::steady_clock::now();
  const json body = json::parse(body_text, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded()) return BadRequest("request body is not valid JSON");
  if (!body.is_object()) return BadRequest("request body must be a JSON object");

  auto text_it = body.find("query_text");
  if (text_it == body.end() || !text_it->is_string()) {
    return BadRequest("query_text must be a string");
  }
  const std::string query_text = text_it->get<std::string>();
  if (DecodeUtf8(query_text).size() > limits_.query_max_chars) {
    return BadRequest("query_text exceeds " + std::to_string(limits_.query_max_chars) +
                      " characters");
  }

  Algorithm algorithm = defaults_.algorithm;
  if (auto it = body.find("algorithm"); it != body.end() && !it->is_null()) {
    auto parsed = it->is_string() ? ParseAlgorithm(it->get<std::string>()) : std::nullopt;
    if (!parsed) return BadRequest("unknown algorithm");
    algorithm = *parsed;
  }
  SuggestParams params;
  params.t = defaults_.t;
  params.r = defaults_.r;
  params.rho = defaults_.rho;
  if (auto bad = ReadCount(body, "t", limits_.t_min, limits_.t_max, params.t)) return *bad;
  if (auto bad = ReadCount(body, "r", limits_.r_min, limits_.r_max, params.r)) return *bad;
  if (auto it = body.find("rho"); it != body.end() && !it->is_null()) {
    if (!it->is_number() || !std::isfinite(it->get<double>()) || it->get<double>() < 0.0) {
      return BadRequest("rho must be a finite non-negative number");
    }
    params.rho = it->get<double>();
  }
  if (auto it = body.find("ld_unit"); it != body.end() && !it->is_null()) {
    auto unit = it->is_string() ? ParseEditUnit(it->get<std::string>()) : std::nullopt;
    if (!unit) return BadRequest("ld_unit must be \"char\" or \"token\"");
    params.ld_unit = *unit;
  }

  const Query query = Query::FromText(query_text);
  if (query.tokens.empty()) {
    return ErrorReply(422, ErrorCodeName(ErrorCode::kEmptyInput),
                      "the query has no tokens");
  }
  SuggestionResult result;
  try {
    result = Suggest(db_, query, algorithm, params);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnembeddable || e.code() == ErrorCode::kEmptyInput) {
      return ErrorReply(422, ErrorCodeName(e.code()), e.what());
    }
    if (e.code() == ErrorCode::kInvalidArgument) return BadRequest(e.what());
    return ErrorReply(500, ErrorCodeName(e.code()), e.what());
  }

  json reply = {
      {"suggestions", SuggestionsJson(result)},
      {"params_echo",
       {{"algorithm", AlgorithmName(algorithm)},
        {"t", params.t},
        {"r", params.r},
        {"rho", params.rho},
        {"ld_unit", EditUnitName(params.ld_unit)},
        {"query_text", query_text}}},
      {"stopped_early", result.stopped_early},
      {"empty_database", result.empty_database},
  };
  reply["timing_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return {200, std::move(reply)};
}

HttpReply SuggestService::HandleMeta() const {
  json algorithms = json::array();
  for (Algorithm a : AllAlgorithms()) algorithms.push_back(AlgorithmName(a));
  return {200,
          {{"corpus_stats", CorpusStatsJson(stats_)},
           {"database_sentences", db_.size()},
           {"available_algorithms", algorithms},
           {"defaults",
            {{"algorithm", AlgorithmName(defaults_.algorithm)},
             {"t", defaults_.t},
             {"r", defaults_.r},
             {"rho", defaults_.rho}}},
           {"bounds",
            {{"t", {limits_.t_min, limits_.t_max}},
             {"r", {limits_.r_min, limits_.r_max}},
             {"query_max_chars", limits_.query_max_chars}}}}};
}

struct HttpFrontend::Impl {
  Impl(const SuggestService& s, ServeOptions o) : service(s), options(std::move(o)) {}

  const SuggestService& service;
  ServeOptions options;
  httplib::Server server;
};

HttpFrontend::HttpFrontend(const SuggestService& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& server = impl_->server;
  const std::size_t workers = std::max<std::size_t>(1, impl_->options.workers);
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                    "application/json");
  };
  const SuggestService* svc = &impl_->service;
  server.Post("/api/suggest", [svc, send](const httplib::Request& req,
                                          httplib::Response& res) {
    send(res, svc->HandleSuggest(req.body));
  });
  server.Get("/api/meta", [svc, send](const httplib::Request&, httplib::Response& res) {
    send(res, svc->HandleMeta());
  });
  server.set_exception_handler(
      [send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        send(res, ErrorReply(500, ErrorCodeName(ErrorCode::kInternal), what));
      });
  if (impl_->options.static_dir) {
    if (!server.set_mount_point("/", impl_->options.static_dir->string())) {
      throw Error(ErrorCode::kIo,
                  "static directory not found: " + impl_->options.static_dir->string());
    }
  }
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::Bind() {
  auto& server = impl_->server;
  const auto& opts = impl_->options;
  int port = opts.port;
  if (port == 0) {
    port = server.bind_to_any_port(opts.host);
    if (port < 0) throw Error(ErrorCode::kIo, "cannot bind " + opts.host);
  } else if (!server.bind_to_port(opts.host, port)) {
    throw Error(ErrorCode::kIo,
                "cannot bind " + opts.host + ":" + std::to_string(port));
  }
  return port;
}

void HttpFrontend::Run() { impl_->server.listen_after_bind(); }

void HttpFrontend::Stop() { impl_->server.stop(); }

}  // namespace latent
