// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "addrmatch/core_model.h"
#include "addrmatch/embedding.h"
#include "addrmatch/error.h"
#include "addrmatch/lexical.h"
#include "addrmatch/reranker.h"
#include "addrmatch/training_pair.h"
#include "addrmatch/vector_index.h"

namespace addrmatch {

enum class MatchMode { kBiOnly, kBiCe };
enum class ShardFallback { kAllShards, kReject };
enum class Outcome { kAccepted, kForReview };

std::string_view to_string(MatchMode m);
std::string_view to_string(Outcome o);
MatchMode match_mode_from_string(std::string_view s);  // "bi" | "bice"

struct PipelineConfig {
  std::size_t top_k = 10;
  double cutoff_bice = 0.90;
  double cutoff_bi_only = 0.99;
  MatchMode mode = MatchMode::kBiCe;
  ShardFallback shard_fallback = ShardFallback::kAllShards;
  // When false every query scans all shards (the unsharded benchmark baseline).
  bool cp4_filter = true;

  double active_cutoff() const { return mode == MatchMode::kBiCe ? cutoff_bice : cutoff_bi_only; }
  void validate() const;
};

struct StageTimings {
  std::int64_t embed_us = 0;
  std::int64_t retrieve_us = 0;
  std::int64_t rerank_us = 0;
  std::int64_t total_us = 0;
};

struct MatchDecision {
  UnnormalizedAddress query;
  ScoredCandidate best;
  Outcome outcome = Outcome::kForReview;
  double confidence = 0.0;
  double cutoff = 0.0;
  MatchMode mode = MatchMode::kBiCe;
  std::vector<ScoredCandidate> candidates;
  std::optional<int> shard_used;  // nullopt = all shards
  StageTimings timings;
  std::vector<std::string> annotations;  // e.g. "fallback" when a sidecar was bypassed
};

/// Source of query embeddings. The built-in one runs the projection head.
class QueryEncoder {
 public:
  virtual ~QueryEncoder() = default;
  virtual EmbeddingVector encode(std::string_view text, std::vector<std::string>& annotations) const = 0;
};

/// Source of match probabilities for (query, candidate) pairs.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::vector<double> score(const QueryView& query, const std::vector<NormalizedAddress>& candidates,
                                    std::span<const PairFeatures> features,
                                    std::vector<std::string>& annotations) const = 0;
};

/// Immutable bundle of everything one match needs: sharded embeddings, the
/// BM25 index over the same corpus, and both models.
class MatchEngine {
 public:
  MatchEngine(ShardedIndex index, ProjectionWeights bi, std::optional<RerankerWeights> reranker,
              Bm25Params bm25 = {});

  const ShardedIndex& index() const { return index_; }
  const LexicalIndex& lexical() const { return lexical_; }
  const ProjectionWeights& biencoder() const { return bi_; }
  const std::optional<RerankerWeights>& reranker() const { return reranker_; }

  void set_encoder(std::shared_ptr<const QueryEncoder> encoder) { encoder_ = std::move(encoder); }
  void set_scorer(std::shared_ptr<const PairScorer> scorer) { scorer_ = std::move(scorer); }

  EmbeddingVector encode_query(std::string_view text, std::vector<std::string>& annotations) const;

  /// Reranker features for each candidate of one query; BM25 is normalized over this set.
  std::vector<PairFeatures> candidate_features(const QueryView& query, std::span<const Candidate> candidates) const;

  /// Probabilities for the candidates (sidecar scorer when set, else the built-in reranker).
  std::vector<double> score_candidates(const QueryView& query, std::span<const Candidate> candidates,
                                       std::vector<std::string>& annotations) const;

  /// Shard a query is routed to; nullopt means all shards.
  std::optional<int> route(const QueryView& query, const PipelineConfig& cfg) const;

 private:
  ShardedIndex index_;
  LexicalIndex lexical_;
  ProjectionWeights bi_;
  std::optional<RerankerWeights> reranker_;
  std::shared_ptr<const QueryEncoder> encoder_;
  std::shared_ptr<const PairScorer> scorer_;
};

/// Embed, route to the CP4 shard, retrieve top-k, optionally rerank, then
/// accept when confidence >= the mode's cutoff. Throws EmptyIndex / NoCandidates.
MatchDecision match(const UnnormalizedAddress& query, const MatchEngine& engine, const PipelineConfig& cfg);

struct BatchResult {
  std::optional<MatchDecision> decision;
  std::optional<ErrorCode> error_code;
  std::string error;
};

/// Element-wise equivalent to calling match() in order; errors stay per item.
std::vector<BatchResult> match_batch(std::span<const UnnormalizedAddress> queries, const MatchEngine& engine,
                                     const PipelineConfig& cfg);

/// Features and labels for cross-encoder pairs: pairs sharing an unnormalized
/// text form one candidate set. Normalized texts must render a corpus address.
std::vector<LabeledFeatures> make_reranker_examples(const std::vector<TrainingPair>& pairs,
                                                    const MatchEngine& engine);

/// Decision record line; timings are omitted when `include_timings` is false.
nlohmann::json to_json(const MatchDecision& d, bool include_timings = true);
MatchDecision decision_from_json(const nlohmann::json& j);

}  // namespace addrmatch
