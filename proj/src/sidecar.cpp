// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/sidecar.h"

#include <httplib.h>

#include <cmath>

namespace addrmatch {

std::string_view to_string(SidecarRole r) {
  switch (r) {
    case SidecarRole::kEmbedder: return "embedder";
    case SidecarRole::kScorer: return "scorer";
    case SidecarRole::kBoth: return "both";
  }
  return "both";
}

SidecarRole sidecar_role_from_string(std::string_view s) {
  if (s == "embedder") return SidecarRole::kEmbedder;
  if (s == "scorer") return SidecarRole::kScorer;
  if (s == "both") return SidecarRole::kBoth;
  throw Error(ErrorCode::kInvalidArgument, "sidecar role must be embedder, scorer or both");
}

void SidecarConfig::validate() const {
  if (enabled && base_url.empty()) throw Error(ErrorCode::kInvalidArgument, "sidecar enabled without base_url");
  if (timeout_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "sidecar timeout must be positive");
}

nlohmann::json make_embed_request(const std::vector<std::string>& texts) { return {{"texts", texts}}; }

nlohmann::json make_score_request(const std::vector<TextPair>& pairs) {
  auto arr = nlohmann::json::array();
  for (const auto& [a, b] : pairs) arr.push_back({a, b});
  return {{"pairs", arr}};
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kSidecarBadResponse, what); }

const nlohmann::json& field_array(const nlohmann::json& body, const char* name, std::size_t expected) {
  if (!body.is_object() || !body.contains(name) || !body[name].is_array()) {
    bad(std::string("response lacks a '") + name + "' array");
  }
  const auto& arr = body[name];
  if (arr.size() != expected) {
    bad(std::string(name) + ": expected " + std::to_string(expected) + " entries, got " + std::to_string(arr.size()));
  }
  return arr;
}

double finite_number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) bad(where + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where + " is not finite");
  return x;
}

}  // namespace

std::vector<EmbeddingVector> parse_embed_response(const nlohmann::json& body, std::size_t expected) {
  const auto& arr = field_array(body, "vectors", expected);
  std::vector<EmbeddingVector> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& v = arr[i];
    if (!v.is_array() || v.size() != kEmbeddingDim) {
      bad("vector " + std::to_string(i) + " has " + std::to_string(v.is_array() ? v.size() : 0) +
          " dims, expected 512");
    }
    EmbeddingVector e;
    e.values.reserve(kEmbeddingDim);
    for (const auto& x : v) e.values.push_back(finite_number(x, "vector " + std::to_string(i)));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<double> parse_score_response(const nlohmann::json& body, std::size_t expected) {
  const auto& arr = field_array(body, "probabilities", expected);
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const double p = finite_number(arr[i], "probability " + std::to_string(i));
    if (p < 0.0 || p > 1.0) bad("probability " + std::to_string(i) + " = " + std::to_string(p) + " outside [0, 1]");
    out.push_back(p);
  }
  return out;
}

SidecarClient::SidecarClient(SidecarConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw Error(ErrorCode::kInvalidArgument, "sidecar base_url is empty");
  cfg_.validate();
}

nlohmann::json SidecarClient::post(const std::string& path, const nlohmann::json& body) const {
  httplib::Client cli(cfg_.base_url);
  if (!cli.is_valid()) throw Error(ErrorCode::kInvalidArgument, "bad sidecar url '" + cfg_.base_url + "'");
  const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kSidecarUnreachable, cfg_.base_url + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kSidecarUnreachable, cfg_.base_url + path + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
}

std::vector<EmbeddingVector> SidecarClient::embed(const std::vector<std::string>& texts) const {
  if (texts.empty()) return {};
  return parse_embed_response(post("/embed", make_embed_request(texts)), texts.size());
}

std::vector<double> SidecarClient::score(const std::vector<TextPair>& pairs) const {
  if (pairs.empty()) return {};
  return parse_score_response(post("/score", make_score_request(pairs)), pairs.size());
}

namespace {

bool may_fall_back(const SidecarClient& client, const Error& e) {
  return client.config().fallback == SidecarFallback::kBuiltin &&
         (e.code() == ErrorCode::kSidecarUnreachable || e.code() == ErrorCode::kSidecarBadResponse);
}

void annotate_fallback(std::vector<std::string>& annotations) {
  if (std::find(annotations.begin(), annotations.end(), "fallback") == annotations.end()) {
    annotations.emplace_back("fallback");
  }
}

}  // namespace

SidecarEncoder::SidecarEncoder(std::shared_ptr<const SidecarClient> client, ProjectionWeights builtin)
    : client_(std::move(client)), builtin_(std::move(builtin)) {}

EmbeddingVector SidecarEncoder::encode(std::string_view text, std::vector<std::string>& annotations) const {
  try {
    return client_->embed({std::string(text)}).front();
  } catch (const Error& e) {
    if (!may_fall_back(*client_, e)) throw;
    annotate_fallback(annotations);
    return embed(text, builtin_);
  }
}

SidecarScorer::SidecarScorer(std::shared_ptr<const SidecarClient> client, std::optional<RerankerWeights> builtin)
    : client_(std::move(client)), builtin_(std::move(builtin)) {}

std::vector<double> SidecarScorer::score(const QueryView& query, const std::vector<NormalizedAddress>& candidates,
                                         std::span<const PairFeatures> features,
                                         std::vector<std::string>& annotations) const {
  std::vector<TextPair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) pairs.emplace_back(query.raw, render_normalized(c));
  try {
    return client_->score(pairs);
  } catch (const Error& e) {
    if (!may_fall_back(*client_, e) || !builtin_) throw;
    annotate_fallback(annotations);
    std::vector<double> probs;
    probs.reserve(features.size());
    for (const auto& f : features) probs.push_back(score_pair(f, *builtin_));
    return probs;
  }
}

std::vector<EmbeddingVector> sidecar_embed_corpus(const SidecarClient& client,
                                                  const std::vector<NormalizedAddress>& corpus, std::size_t batch) {
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "batch must be positive");
  std::vector<EmbeddingVector> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); i += batch) {
    std::vector<std::string> texts;
    for (std::size_t j = i; j < std::min(corpus.size(), i + batch); ++j) texts.push_back(render_normalized(corpus[j]));
    auto part = client.embed(texts);
    for (auto& e : part) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace addrmatch
