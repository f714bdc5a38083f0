// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/reranker.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "addrmatch/embedding.h"
#include "addrmatch/error.h"
#include "addrmatch/random.h"
#include "addrmatch/string_metrics.h"

namespace addrmatch {

const std::array<std::string_view, kPairFeatureCount>& pair_feature_names() {
  static const std::array<std::string_view, kPairFeatureCount> names = {
      "cosine_sim", "token_set", "token_sort", "bm25_norm", "cp4_digit_overlap", "door_exact"};
  return names;
}

QueryView make_query_view(std::string_view raw) {
  QueryView q;
  q.raw = std::string(raw);
  q.tokens = normalize_text(raw);
  if (const auto loc = locate_zip(raw)) {
    q.zip = loc->zip;
    q.tokens_sans_zip = normalize_text(raw.substr(0, loc->begin));
    for (auto& t : normalize_text(raw.substr(loc->end))) q.tokens_sans_zip.push_back(std::move(t));
  } else {
    q.tokens_sans_zip = q.tokens;
  }
  return q;
}

namespace {

bool contains_run(const TokenList& haystack, const TokenList& needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

double leading_digit_overlap(int a, int b) {
  const auto sa = std::to_string(a);
  const auto sb = std::to_string(b);
  std::size_t n = 0;
  while (n < 4 && n < sa.size() && n < sb.size() && sa[n] == sb[n]) ++n;
  return static_cast<double>(n) / 4.0;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(const PairFeatures& f, const RerankerWeights& w) {
  const auto x = f.as_array();
  double z = w.bias;
  for (std::size_t i = 0; i < kPairFeatureCount; ++i) z += w.coefficients[i] * x[i];
  return z;
}

}  // namespace

PairFeatures extract_features(const QueryView& query, const NormalizedAddress& cand,
                              const RetrievalContext& ctx) {
  PairFeatures f;
  f.cosine_sim = ctx.cosine_sim;
  const auto cand_tokens = normalize_text(render_normalized(cand));
  f.token_set = token_set_ratio(query.tokens, cand_tokens).fraction();
  f.token_sort = token_sort_ratio(query.tokens, cand_tokens).fraction();
  f.bm25_norm = ctx.bm25_max > 0.0 ? std::clamp(ctx.bm25 / ctx.bm25_max, 0.0, 1.0) : 0.0;
  f.cp4_digit_overlap = query.zip ? leading_digit_overlap(query.zip->cp4, cand.zip.cp4) : 0.0;
  const bool door = contains_run(query.tokens_sans_zip, normalize_text(cand.door_id));
  const bool unit = !cand.accommodation_id ||
                    contains_run(query.tokens_sans_zip, normalize_text(*cand.accommodation_id));
  f.door_exact = door && unit ? 1.0 : 0.0;
  return f;
}

PairFeatures extract_features(const UnnormalizedAddress& query, const NormalizedAddress& cand,
                              const RetrievalContext& ctx) {
  return extract_features(make_query_view(query.raw), cand, ctx);
}

double score_pair(const PairFeatures& f, const RerankerWeights& w) { return sigmoid(logit(f, w)); }

double cross_entropy_loss(std::span<const LabeledFeatures> examples, const RerankerWeights& w) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    const double z = logit(ex.features, w);
    // softplus(z) - y z, stable for large |z|
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - ex.label * z;
  }
  return total / static_cast<double>(examples.size());
}

std::array<double, kPairFeatureCount + 1> cross_entropy_grad(std::span<const LabeledFeatures> examples,
                                                             const RerankerWeights& w) {
  std::array<double, kPairFeatureCount + 1> g{};
  if (examples.empty()) return g;
  for (const auto& ex : examples) {
    const double r = sigmoid(logit(ex.features, w)) - ex.label;
    const auto x = ex.features.as_array();
    for (std::size_t i = 0; i < kPairFeatureCount; ++i) g[i] += r * x[i];
    g[kPairFeatureCount] += r;
  }
  for (auto& v : g) v /= static_cast<double>(examples.size());
  return g;
}

RerankerTrainResult train_reranker(const std::vector<LabeledFeatures>& examples,
                                   const RerankerTrainConfig& cfg) {
  if (cfg.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  const auto positives = std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.label == 1; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(examples.size())) {
    throw Error(ErrorCode::kDegenerateData, "reranker examples carry a single label");
  }

  RerankerTrainResult result;
  auto& w = result.weights;
  w.seed = cfg.seed;
  Rng rng(cfg.seed);
  for (auto& c : w.coefficients) c = uniform_real(rng, -0.01, 0.01);
  w.bias = 0.0;
  result.initial_loss = cross_entropy_loss(examples, w);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::array<double, kPairFeatureCount + 1> m{}, v{};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledFeatures> batch;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const int total_steps = static_cast<int>((examples.size() + bs - 1) / bs) * cfg.epochs;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += bs, ++step) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) batch.push_back(examples[order[k]]);
      const auto g = cross_entropy_grad(batch, w);
      const double lr = cfg.learning_rate * linear_schedule(step, cfg.warmup_steps, total_steps);
      const int t = step + 1;
      const double bc1 = 1.0 - std::pow(kBeta1, t);
      const double bc2 = 1.0 - std::pow(kBeta2, t);
      for (std::size_t i = 0; i <= kPairFeatureCount; ++i) {
        double& p = i < kPairFeatureCount ? w.coefficients[i] : w.bias;
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        p *= 1.0 - lr * cfg.weight_decay;
        p -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
      }
    }
    result.epoch_losses.push_back(cross_entropy_loss(examples, w));
  }
  return result;
}

std::vector<ScoredCandidate> rerank(std::span<const Candidate> candidates,
                                    std::span<const double> probabilities) {
  if (candidates.size() != probabilities.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one probability per candidate required");
  }
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int retrieval_rank = candidates[i].rank > 0 ? candidates[i].rank : static_cast<int>(i + 1);
    out.push_back({candidates[i].id, probabilities[i], 0, candidates[i].similarity, retrieval_rank});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.retrieval_rank < b.retrieval_rank;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::vector<ScoredCandidate> rerank(std::span<const Candidate> candidates,
                                    std::span<const PairFeatures> features, const RerankerWeights& w) {
  if (candidates.size() != features.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one feature row per candidate required");
  }
  std::vector<double> probs;
  probs.reserve(features.size());
  for (const auto& f : features) probs.push_back(score_pair(f, w));
  return rerank(candidates, probs);
}

nlohmann::json to_json(const RerankerWeights& w) {
  nlohmann::json coef = nlohmann::json::object();
  for (std::size_t i = 0; i < kPairFeatureCount; ++i) {
    coef[std::string(pair_feature_names()[i])] = w.coefficients[i];
  }
  return {{"coefficients", coef}, {"bias", w.bias}, {"seed", w.seed}};
}

RerankerWeights reranker_weights_from_json(const nlohmann::json& j) {
  RerankerWeights w;
  try {
    const auto& coef = j.at("coefficients");
    for (std::size_t i = 0; i < kPairFeatureCount; ++i) {
      w.coefficients[i] = coef.at(std::string(pair_feature_names()[i])).get<double>();
    }
    w.bias = j.at("bias").get<double>();
    w.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  for (double c : w.coefficients) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidRecord, "non-finite coefficient");
  }
  if (!std::isfinite(w.bias)) throw Error(ErrorCode::kInvalidRecord, "non-finite bias");
  return w;
}

void save_reranker(const std::string& path, const RerankerWeights& w) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json(w).dump() << '\n';
}

RerankerWeights load_reranker(const std::string& path) {
  const auto lines = read_jsonl(path);
  if (lines.empty()) throw Error(ErrorCode::kInvalidRecord, "empty reranker file " + path);
  return reranker_weights_from_json(lines.front());
}

}  // namespace addrmatch
