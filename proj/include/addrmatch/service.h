// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "addrmatch/evaluation.h"
#include "addrmatch/pipeline.h"
#include "addrmatch/review_queue.h"
#include "addrmatch/sidecar.h"

namespace addrmatch {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct ServiceConfig {
  PipelineConfig pipeline;
  std::string review_log;      // empty keeps the queue in memory
  std::string feedback_pairs;  // empty disables feedback pairs
  SidecarConfig sidecar;
  Bm25Params bm25;
};

/// Hex digest of the serialized store; equal corpora and weights give equal digests.
std::string index_fingerprint(const ShardedIndex& index);

/// HTTP status for a library error code.
int http_status_for(ErrorCode code);

/// Request handlers of the matching service, independent of any transport.
/// The engine is an immutable snapshot: /match grabs the current pointer and
/// keeps it alive for the whole call, /ingest builds a new one and swaps it in.
class MatchService {
 public:
  MatchService(ServiceConfig cfg, ProjectionWeights bi, std::optional<RerankerWeights> reranker);

  /// Installs a prebuilt index (its corpus must be attached).
  void install(ShardedIndex index);
  std::shared_ptr<const MatchEngine> snapshot() const;
  std::optional<std::string> current_fingerprint() const;

  ReviewQueue& queue() { return queue_; }
  const ServiceConfig& config() const { return cfg_; }

  HttpResponse post_match(std::string_view body);
  HttpResponse get_queue(const std::optional<std::string>& status, const std::optional<std::string>& limit) const;
  HttpResponse post_resolve(const std::string& item_id, std::string_view body);
  HttpResponse post_ingest(std::string_view body);
  HttpResponse get_metrics() const;

 private:
  struct Snapshot {
    std::shared_ptr<const MatchEngine> engine;
    std::string fingerprint;
  };
  std::shared_ptr<const MatchEngine> make_engine(ShardedIndex index) const;
  void swap_in(std::shared_ptr<const MatchEngine> engine);

  ServiceConfig cfg_;
  ProjectionWeights bi_;
  std::optional<RerankerWeights> reranker_;
  std::shared_ptr<const SidecarClient> sidecar_;
  ReviewQueue queue_;

  mutable std::mutex snapshot_mu_;
  Snapshot current_;
  std::mutex ingest_mu_;

  mutable std::mutex metrics_mu_;
  ConfidenceHistogram confidences_;
  std::size_t n_accepted_ = 0;
  std::size_t n_for_review_ = 0;
};

/// Binds a MatchService to an HTTP listener.
class HttpServer {
 public:
  explicit HttpServer(MatchService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread until stop() is called elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace addrmatch
