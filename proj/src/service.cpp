// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/service.h"

#include <httplib.h>

#include <charconv>
#include <fstream>
#include <thread>
#include <unordered_set>

namespace addrmatch {

namespace {

constexpr std::size_t kDefaultQueueLimit = 50;
constexpr std::size_t kMaxQueueLimit = 10000;

HttpResponse json_response(int status, const nlohmann::json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

HttpResponse error_response(const Error& e) {
  return error_response(http_status_for(e.code()), e.what(), {{"code", error_code_name(e.code())}});
}

std::optional<nlohmann::json> parse_body(std::string_view body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string index_fingerprint(const ShardedIndex& index) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(save_store(index))));
  return buf;
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidRecord:
    case ErrorCode::kMalformedZip:
    case ErrorCode::kInvalidCp4Prefix:
    case ErrorCode::kDuplicateId:
      return 400;
    case ErrorCode::kUnknownItem:
    case ErrorCode::kUnknownDoc:
      return 404;
    case ErrorCode::kAlreadyResolved: return 409;
    case ErrorCode::kNoCandidates: return 422;
    case ErrorCode::kSidecarUnreachable:
    case ErrorCode::kSidecarBadResponse:
      return 502;
    case ErrorCode::kEmptyIndex: return 503;
    default: return 500;
  }
}

MatchService::MatchService(ServiceConfig cfg, ProjectionWeights bi, std::optional<RerankerWeights> reranker)
    : cfg_(std::move(cfg)),
      bi_(std::move(bi)),
      reranker_(std::move(reranker)),
      queue_(cfg_.review_log, cfg_.feedback_pairs) {
  cfg_.pipeline.validate();
  cfg_.sidecar.validate();
  if (cfg_.sidecar.enabled) sidecar_ = std::make_shared<SidecarClient>(cfg_.sidecar);
  if (cfg_.pipeline.mode == MatchMode::kBiCe && !reranker_ && !cfg_.sidecar.scores()) {
    throw Error(ErrorCode::kInvalidArgument, "bice mode needs reranker weights or a scoring sidecar");
  }
}

std::shared_ptr<const MatchEngine> MatchService::make_engine(ShardedIndex index) const {
  auto engine = std::make_shared<MatchEngine>(std::move(index), bi_, reranker_, cfg_.bm25);
  if (cfg_.sidecar.embeds()) engine->set_encoder(std::make_shared<SidecarEncoder>(sidecar_, bi_));
  if (cfg_.sidecar.scores()) engine->set_scorer(std::make_shared<SidecarScorer>(sidecar_, reranker_));
  return engine;
}

void MatchService::swap_in(std::shared_ptr<const MatchEngine> engine) {
  auto fp = index_fingerprint(engine->index());
  std::lock_guard lock(snapshot_mu_);
  current_ = {std::move(engine), std::move(fp)};
}

void MatchService::install(ShardedIndex index) {
  std::lock_guard ingest(ingest_mu_);
  swap_in(make_engine(std::move(index)));
}

std::shared_ptr<const MatchEngine> MatchService::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return current_.engine;
}

std::optional<std::string> MatchService::current_fingerprint() const {
  std::lock_guard lock(snapshot_mu_);
  if (!current_.engine) return std::nullopt;
  return current_.fingerprint;
}

HttpResponse MatchService::post_match(std::string_view body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_response(400, "body must be a JSON object");
  if (!j->contains("raw") || !(*j)["raw"].is_string()) return error_response(400, "'raw' must be a string");
  UnnormalizedAddress query{(*j)["raw"].get<std::string>(), std::nullopt};
  if (query.raw.find_first_not_of(" \t\r\n") == std::string::npos) return error_response(400, "'raw' is empty");

  auto pipeline = cfg_.pipeline;
  if (j->contains("mode")) {
    if (!(*j)["mode"].is_string()) return error_response(400, "'mode' must be \"bi\" or \"bice\"");
    try {
      pipeline.mode = match_mode_from_string((*j)["mode"].get<std::string>());
    } catch (const Error& e) {
      return error_response(e);
    }
  }

  const auto engine = snapshot();
  if (!engine) return error_response(503, "index not loaded");
  try {
    const auto d = match(query, *engine, pipeline);
    auto out = to_json(d, true);
    if (d.outcome == Outcome::kForReview) out["review_item_id"] = queue_.enqueue(d).item_id;
    {
      std::lock_guard lock(metrics_mu_);
      confidences_.add(d.confidence);
      ++(d.outcome == Outcome::kAccepted ? n_accepted_ : n_for_review_);
    }
    return json_response(200, out);
  } catch (const Error& e) {
    return error_response(e);
  }
}

HttpResponse MatchService::get_queue(const std::optional<std::string>& status,
                                     const std::optional<std::string>& limit) const {
  std::optional<ReviewStatus> filter = ReviewStatus::kPending;
  if (status) {
    if (*status == "all") {
      filter.reset();
    } else {
      try {
        filter = review_status_from_string(*status);
      } catch (const Error& e) {
        return error_response(400, e.what());
      }
    }
  }
  std::size_t n = kDefaultQueueLimit;
  if (limit) {
    const auto* first = limit->data();
    const auto* last = first + limit->size();
    const auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc{} || ptr != last || n == 0 || n > kMaxQueueLimit) {
      return error_response(400, "limit must be an integer in [1, " + std::to_string(kMaxQueueLimit) + "]");
    }
  }
  auto items = nlohmann::json::array();
  for (const auto& item : queue_.list(filter, n)) items.push_back(to_json(item));
  return json_response(200, items);
}

HttpResponse MatchService::post_resolve(const std::string& item_id, std::string_view body) {
  const auto j = parse_body(body);
  if (!j) return error_response(400, "body must be JSON");
  try {
    const auto req = resolve_request_from_json(*j);
    const auto engine = snapshot();
    const NormTextLookup lookup = [&](const std::string& id) -> std::optional<std::string> {
      if (!engine) return std::nullopt;
      const auto* addr = engine->index().address(id);
      if (!addr) return std::nullopt;
      return render_normalized(*addr);
    };
    return json_response(200, to_json(queue_.resolve(item_id, req, lookup)));
  } catch (const Error& e) {
    return error_response(e);
  }
}

HttpResponse MatchService::post_ingest(std::string_view body) {
  const auto j = parse_body(body);
  if (!j || !j->is_object()) return error_response(400, "body must be a JSON object");

  // Inline records or a JSONL file; both are checked line by line (1-based).
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::vector<nlohmann::json> inline_records;
  if (j->contains("records")) {
    if (!(*j)["records"].is_array()) return error_response(400, "'records' must be an array");
    inline_records = (*j)["records"].get<std::vector<nlohmann::json>>();
  } else if (j->contains("path") && (*j)["path"].is_string()) {
    const auto path = (*j)["path"].get<std::string>();
    std::ifstream in(path);
    if (!in) return error_response(400, "cannot open '" + path + "'");
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) lines.emplace_back(no, line);
    }
  } else {
    return error_response(400, "give 'records' or 'path'");
  }

  std::vector<NormalizedAddress> corpus;
  auto errors = nlohmann::json::array();
  std::unordered_set<std::string> seen;
  auto take = [&](std::size_t line_no, const nlohmann::json& rec) {
    try {
      if (!rec.is_object()) throw Error(ErrorCode::kInvalidRecord, "record must be an object");
      auto addr = address_from_json(rec);
      if (!seen.insert(addr.id).second) throw Error(ErrorCode::kDuplicateId, addr.id);
      corpus.push_back(std::move(addr));
    } catch (const Error& e) {
      errors.push_back({{"line", line_no}, {"code", error_code_name(e.code())}, {"error", e.what()}});
    }
  };
  for (std::size_t i = 0; i < inline_records.size(); ++i) take(i + 1, inline_records[i]);
  for (const auto& [no, text] : lines) {
    const auto rec = parse_body(text);
    if (!rec) {
      errors.push_back({{"line", no}, {"code", "InvalidRecord"}, {"error", "invalid JSON"}});
      continue;
    }
    take(no, *rec);
  }
  if (!errors.empty()) return json_response(422, {{"error", "invalid records"}, {"errors", errors}});
  if (corpus.empty()) return error_response(422, "no records", {{"errors", nlohmann::json::array()}});

  std::lock_guard ingest(ingest_mu_);
  try {
    ShardedIndex index;
    if (cfg_.sidecar.embeds()) {
      const auto vectors = sidecar_embed_corpus(*sidecar_, corpus);
      index = build_index(corpus, vectors, fnv1a64("sidecar:" + cfg_.sidecar.base_url));
    } else {
      index = precompute_store(corpus, bi_);
    }
    auto engine = make_engine(std::move(index));
    const auto count = engine->index().size();
    swap_in(std::move(engine));
    return json_response(200, {{"count", count}, {"index_fingerprint", *current_fingerprint()}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

HttpResponse MatchService::get_metrics() const {
  std::lock_guard lock(metrics_mu_);
  return {200, confidences_.to_csv(), "text/csv"};
}

struct HttpServer::Impl {
  httplib::Server server;
  std::thread worker;
};

namespace {

void reply(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

std::optional<std::string> query_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

HttpServer::HttpServer(MatchService& service) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Post("/match", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_match(req.body));
  });
  s.Get("/review/queue", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_queue(query_param(req, "status"), query_param(req, "limit")));
  });
  s.Post(R"(/review/([^/]+)/resolve)", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_resolve(req.matches[1], req.body));
  });
  s.Post("/ingest", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_ingest(req.body));
  });
  s.Get("/metrics", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.get_metrics()); });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, what));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::start() {
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace addrmatch
