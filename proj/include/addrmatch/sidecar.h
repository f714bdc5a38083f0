// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "addrmatch/pipeline.h"

namespace addrmatch {

enum class SidecarRole { kEmbedder, kScorer, kBoth };
enum class SidecarFallback { kError, kBuiltin };

std::string_view to_string(SidecarRole r);
SidecarRole sidecar_role_from_string(std::string_view s);  // "embedder" | "scorer" | "both"

struct SidecarConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8600"
  int timeout_ms = 2000;
  bool enabled = false;
  SidecarRole role = SidecarRole::kBoth;
  SidecarFallback fallback = SidecarFallback::kError;

  bool embeds() const { return enabled && role != SidecarRole::kScorer; }
  bool scores() const { return enabled && role != SidecarRole::kEmbedder; }
  /// Throws InvalidArgument when enabled without a base_url or with a bad timeout.
  void validate() const;
};

using TextPair = std::pair<std::string, std::string>;

// Wire protocol, JSON over HTTP POST:
//   /embed {"texts":[...]}      -> {"vectors":[[512 numbers], ...]}
//   /score {"pairs":[[a,b],...]} -> {"probabilities":[p, ...]}
nlohmann::json make_embed_request(const std::vector<std::string>& texts);
nlohmann::json make_score_request(const std::vector<TextPair>& pairs);

/// Validate a response body. Throws SidecarBadResponse on a missing field,
/// count mismatch, non-512 vectors, non-finite numbers, or probabilities
/// outside [0, 1].
std::vector<EmbeddingVector> parse_embed_response(const nlohmann::json& body, std::size_t expected);
std::vector<double> parse_score_response(const nlohmann::json& body, std::size_t expected);

/// Blocking HTTP client for the sidecar. Throws SidecarUnreachable on
/// connection failure, timeout or non-200 status, SidecarBadResponse on
/// malformed bodies.
class SidecarClient {
 public:
  explicit SidecarClient(SidecarConfig cfg);
  const SidecarConfig& config() const { return cfg_; }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const;
  std::vector<double> score(const std::vector<TextPair>& pairs) const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  SidecarConfig cfg_;
};

/// Query encoder backed by the sidecar; under the builtin fallback a failed
/// call uses `builtin` and annotates the decision with "fallback".
class SidecarEncoder : public QueryEncoder {
 public:
  SidecarEncoder(std::shared_ptr<const SidecarClient> client, ProjectionWeights builtin);
  EmbeddingVector encode(std::string_view text, std::vector<std::string>& annotations) const override;

 private:
  std::shared_ptr<const SidecarClient> client_;
  ProjectionWeights builtin_;
};

/// Pair scorer backed by the sidecar. Pairs are sent as
/// (raw query, rendered normalized address).
class SidecarScorer : public PairScorer {
 public:
  SidecarScorer(std::shared_ptr<const SidecarClient> client, std::optional<RerankerWeights> builtin);
  std::vector<double> score(const QueryView& query, const std::vector<NormalizedAddress>& candidates,
                            std::span<const PairFeatures> features,
                            std::vector<std::string>& annotations) const override;

 private:
  std::shared_ptr<const SidecarClient> client_;
  std::optional<RerankerWeights> builtin_;
};

/// Embeds a corpus through the sidecar in batches of `batch` texts.
std::vector<EmbeddingVector> sidecar_embed_corpus(const SidecarClient& client,
                                                  const std::vector<NormalizedAddress>& corpus,
                                                  std::size_t batch = 64);

}  // namespace addrmatch
