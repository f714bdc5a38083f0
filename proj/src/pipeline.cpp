// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/pipeline.h"

#include <algorithm>
#include <chrono>
#include <unordered_map>

namespace addrmatch {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t micros_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(MatchMode m) { return m == MatchMode::kBiCe ? "bice" : "bi"; }

std::string_view to_string(Outcome o) { return o == Outcome::kAccepted ? "accepted" : "for_review"; }

MatchMode match_mode_from_string(std::string_view s) {
  if (s == "bice") return MatchMode::kBiCe;
  if (s == "bi") return MatchMode::kBiOnly;
  throw Error(ErrorCode::kInvalidArgument, "mode must be 'bi' or 'bice', got '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  for (double c : {cutoff_bice, cutoff_bi_only}) {
    if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "cutoffs must lie in [0, 1]");
  }
}

MatchEngine::MatchEngine(ShardedIndex index, ProjectionWeights bi, std::optional<RerankerWeights> reranker,
                         Bm25Params bm25)
    : index_(std::move(index)), bi_(std::move(bi)), reranker_(std::move(reranker)) {
  if (index_.size() == 0) throw Error(ErrorCode::kEmptyIndex, "no addresses in the index");
  if (index_.addresses().size() != index_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "index has no corpus attached");
  }
  lexical_ = build_lexical_index(index_.corpus(), bm25);
}

EmbeddingVector MatchEngine::encode_query(std::string_view text, std::vector<std::string>& annotations) const {
  if (encoder_) return encoder_->encode(text, annotations);
  return embed(text, bi_);
}

std::vector<PairFeatures> MatchEngine::candidate_features(const QueryView& query,
                                                          std::span<const Candidate> candidates) const {
  std::vector<double> bm25(candidates.size());
  double bm25_max = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bm25[i] = bm25_score(lexical_, query.tokens, candidates[i].id);
    bm25_max = std::max(bm25_max, bm25[i]);
  }
  std::vector<PairFeatures> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto* addr = index_.address(candidates[i].id);
    if (!addr) throw Error(ErrorCode::kUnknownDoc, candidates[i].id);
    out.push_back(extract_features(query, *addr, {candidates[i].similarity, bm25[i], bm25_max}));
  }
  return out;
}

std::vector<double> MatchEngine::score_candidates(const QueryView& query, std::span<const Candidate> candidates,
                                                  std::vector<std::string>& annotations) const {
  const auto features = candidate_features(query, candidates);
  if (scorer_) {
    std::vector<NormalizedAddress> addrs;
    addrs.reserve(candidates.size());
    for (const auto& c : candidates) addrs.push_back(*index_.address(c.id));
    return scorer_->score(query, addrs, features, annotations);
  }
  if (!reranker_) throw Error(ErrorCode::kInvalidArgument, "cross-encoder mode needs reranker weights");
  std::vector<double> probs;
  probs.reserve(features.size());
  for (const auto& f : features) probs.push_back(score_pair(f, *reranker_));
  return probs;
}

std::optional<int> MatchEngine::route(const QueryView& query, const PipelineConfig& cfg) const {
  if (cfg.cp4_filter && query.zip && !index_.shard(query.zip->shard()).empty()) {
    return query.zip->shard();
  }
  if (cfg.shard_fallback == ShardFallback::kReject) {
    throw Error(ErrorCode::kNoCandidates,
                query.zip ? "shard " + std::to_string(query.zip->shard()) + " is empty"
                          : "no postal code in '" + query.raw + "'");
  }
  return std::nullopt;
}

MatchDecision match(const UnnormalizedAddress& query, const MatchEngine& engine, const PipelineConfig& cfg) {
  cfg.validate();
  validate(query);
  const auto t_start = Clock::now();
  if (engine.index().size() == 0) throw Error(ErrorCode::kEmptyIndex, "no addresses in the index");

  MatchDecision d;
  d.query = query;
  d.mode = cfg.mode;
  d.cutoff = cfg.active_cutoff();
  const auto view = make_query_view(query.raw);

  auto t0 = Clock::now();
  const auto e = engine.encode_query(query.raw, d.annotations);
  d.timings.embed_us = micros_since(t0);

  t0 = Clock::now();
  d.shard_used = engine.route(view, cfg);
  const auto candidates = engine.index().top_k(e.view(), d.shard_used, cfg.top_k);
  d.timings.retrieve_us = micros_since(t0);
  if (candidates.empty()) throw Error(ErrorCode::kNoCandidates, "retrieval returned nothing");

  t0 = Clock::now();
  if (cfg.mode == MatchMode::kBiCe) {
    const auto probs = engine.score_candidates(view, candidates, d.annotations);
    d.candidates = rerank(candidates, probs);
  } else {
    std::vector<double> probs;
    for (const auto& c : candidates) probs.push_back(std::max(0.0, c.similarity));
    d.candidates = rerank(candidates, probs);
  }
  d.timings.rerank_us = micros_since(t0);

  d.best = d.candidates.front();
  d.confidence = std::clamp(d.best.probability, 0.0, 1.0);
  d.outcome = d.confidence >= d.cutoff ? Outcome::kAccepted : Outcome::kForReview;
  d.timings.total_us = micros_since(t_start);
  return d;
}

std::vector<BatchResult> match_batch(std::span<const UnnormalizedAddress> queries, const MatchEngine& engine,
                                     const PipelineConfig& cfg) {
  std::vector<BatchResult> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    BatchResult r;
    try {
      r.decision = match(q, engine, cfg);
    } catch (const Error& err) {
      r.error_code = err.code();
      r.error = err.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabeledFeatures> make_reranker_examples(const std::vector<TrainingPair>& pairs,
                                                    const MatchEngine& engine) {
  std::unordered_map<std::string, std::string> id_by_render;
  for (const auto& addr : engine.index().corpus()) id_by_render.emplace(render_normalized(addr), addr.id);

  // Group by query text, preserving first-appearance order.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(pairs[i].unnorm_text);
    if (inserted) order.push_back(pairs[i].unnorm_text);
    it->second.push_back(i);
  }

  std::vector<LabeledFeatures> out;
  out.reserve(pairs.size());
  std::vector<std::string> annotations;
  for (const auto& text : order) {
    const auto& members = groups.at(text);
    const auto view = make_query_view(text);
    const auto e = engine.encode_query(text, annotations);
    std::vector<Candidate> cands;
    for (std::size_t i : members) {
      const auto it = id_by_render.find(pairs[i].norm_text);
      if (it == id_by_render.end()) {
        throw Error(ErrorCode::kInvalidRecord, "pair text is not a corpus address: " + pairs[i].norm_text);
      }
      const double sim = engine.index().similarity_to(e.view(), it->second).value_or(0.0);
      cands.push_back({it->second, sim, static_cast<int>(cands.size() + 1)});
    }
    const auto features = engine.candidate_features(view, cands);
    for (std::size_t k = 0; k < members.size(); ++k) {
      out.push_back({features[k], pairs[members[k]].label});
    }
  }
  return out;
}

nlohmann::json to_json(const MatchDecision& d, bool include_timings) {
  nlohmann::json j;
  j["query"] = d.query.raw;
  if (d.query.gold_id) j["gold_id"] = *d.query.gold_id;
  j["mode"] = std::string(to_string(d.mode));
  j["best_id"] = d.best.id;
  j["confidence"] = d.confidence;
  j["cutoff"] = d.cutoff;
  j["outcome"] = std::string(to_string(d.outcome));
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : d.candidates) {
    cands.push_back({{"id", c.id},
                     {"similarity", c.similarity},
                     {"probability", c.probability},
                     {"rank", c.rank},
                     {"retrieval_rank", c.retrieval_rank}});
  }
  j["candidates"] = std::move(cands);
  j["shard"] = d.shard_used ? nlohmann::json(*d.shard_used) : nlohmann::json("all");
  if (!d.annotations.empty()) j["annotations"] = d.annotations;
  if (include_timings) {
    j["timings_us"] = {{"embed", d.timings.embed_us},
                       {"retrieve", d.timings.retrieve_us},
                       {"rerank", d.timings.rerank_us},
                       {"total", d.timings.total_us}};
  }
  return j;
}

MatchDecision decision_from_json(const nlohmann::json& j) {
  MatchDecision d;
  try {
    d.query.raw = j.at("query").get<std::string>();
    if (j.contains("gold_id") && !j["gold_id"].is_null()) d.query.gold_id = j["gold_id"].get<std::string>();
    d.mode = match_mode_from_string(j.value("mode", std::string("bice")));
    d.confidence = j.at("confidence").get<double>();
    d.cutoff = j.value("cutoff", 0.0);
    d.outcome = j.at("outcome").get<std::string>() == "accepted" ? Outcome::kAccepted : Outcome::kForReview;
    for (const auto& c : j.at("candidates")) {
      d.candidates.push_back({c.at("id").get<std::string>(), c.at("probability").get<double>(),
                              c.at("rank").get<int>(), c.value("similarity", 0.0),
                              c.value("retrieval_rank", c.at("rank").get<int>())});
    }
    const auto& shard = j.at("shard");
    if (shard.is_number_integer()) d.shard_used = shard.get<int>();
    if (j.contains("annotations")) d.annotations = j["annotations"].get<std::vector<std::string>>();
    if (j.contains("timings_us")) {
      const auto& t = j["timings_us"];
      d.timings = {t.value("embed", std::int64_t{0}), t.value("retrieve", std::int64_t{0}),
                   t.value("rerank", std::int64_t{0}), t.value("total", std::int64_t{0})};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  if (d.candidates.empty()) throw Error(ErrorCode::kInvalidRecord, "decision without candidates");
  d.best = d.candidates.front();
  return d;
}

}  // namespace addrmatch
