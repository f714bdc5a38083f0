// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "addrmatch/core_model.h"
#include "addrmatch/vector_index.h"

namespace addrmatch {

inline constexpr std::size_t kPairFeatureCount = 6;

/// Interpretable description of one (query, candidate) pair.
struct PairFeatures {
  double cosine_sim = 0.0;         // bi-encoder similarity, [-1, 1]
  double token_set = 0.0;          // token_set_ratio / 100
  double token_sort = 0.0;         // token_sort_ratio / 100
  double bm25_norm = 0.0;          // bm25 / max bm25 over the candidate set, 0 when that max is 0
  double cp4_digit_overlap = 0.0;  // shared leading CP4 digits / 4
  double door_exact = 0.0;         // 1 when the candidate's door (and unit) tokens occur in the query

  std::array<double, kPairFeatureCount> as_array() const {
    return {cosine_sim, token_set, token_sort, bm25_norm, cp4_digit_overlap, door_exact};
  }
};

const std::array<std::string_view, kPairFeatureCount>& pair_feature_names();

/// Per-candidate retrieval signals that are computed once per candidate set.
struct RetrievalContext {
  double cosine_sim = 0.0;
  double bm25 = 0.0;
  double bm25_max = 0.0;
};

/// Query-side tokens with the postal code removed, plus the parsed code.
struct QueryView {
  std::string raw;
  TokenList tokens;           // normalized tokens of the whole text
  TokenList tokens_sans_zip;  // normalized tokens outside the postal code
  std::optional<ZipCode> zip;
};
QueryView make_query_view(std::string_view raw);

PairFeatures extract_features(const QueryView& query, const NormalizedAddress& cand,
                              const RetrievalContext& ctx);
PairFeatures extract_features(const UnnormalizedAddress& query, const NormalizedAddress& cand,
                              const RetrievalContext& ctx);

struct RerankerWeights {
  std::array<double, kPairFeatureCount> coefficients{};
  double bias = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const RerankerWeights&) const = default;
};

/// logistic(w . f + bias)
double score_pair(const PairFeatures& f, const RerankerWeights& w);

struct LabeledFeatures {
  PairFeatures features;
  int label = 0;
};

/// Mean binary cross-entropy over `examples`.
double cross_entropy_loss(std::span<const LabeledFeatures> examples, const RerankerWeights& w);

/// Gradient of cross_entropy_loss: coefficients then bias.
std::array<double, kPairFeatureCount + 1> cross_entropy_grad(std::span<const LabeledFeatures> examples,
                                                             const RerankerWeights& w);

struct RerankerTrainConfig {
  int epochs = 15;
  int batch_size = 16;
  double learning_rate = 5e-2;
  double weight_decay = 0.01;
  int warmup_steps = 100;
  std::uint64_t seed = 0;
};

struct RerankerTrainResult {
  RerankerWeights weights;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // full-data loss after each epoch
};

/// Mini-batch AdamW on mean cross-entropy. Throws DegenerateData for a single label.
RerankerTrainResult train_reranker(const std::vector<LabeledFeatures>& examples,
                                   const RerankerTrainConfig& cfg);

struct ScoredCandidate {
  std::string id;
  double probability = 0.0;
  int rank = 0;            // 1-based after reranking
  double similarity = 0.0;
  int retrieval_rank = 0;
};

/// Sorts candidates by probability (descending), ties by retrieval rank.
std::vector<ScoredCandidate> rerank(std::span<const Candidate> candidates,
                                    std::span<const double> probabilities);
std::vector<ScoredCandidate> rerank(std::span<const Candidate> candidates,
                                    std::span<const PairFeatures> features, const RerankerWeights& w);

// Weights file: one JSON line {coefficients: {name: value}, bias, seed}.
nlohmann::json to_json(const RerankerWeights& w);
RerankerWeights reranker_weights_from_json(const nlohmann::json& j);
void save_reranker(const std::string& path, const RerankerWeights& w);
RerankerWeights load_reranker(const std::string& path);

}  // namespace addrmatch
