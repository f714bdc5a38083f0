// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/training_pair.h"

#include <fstream>

#include "addrmatch/core_model.h"
#include "addrmatch/error.h"

namespace addrmatch {

std::string_view to_string(NegCategory c) {
  switch (c) {
    case NegCategory::kNone: return "none";
    case NegCategory::kEasy: return "easy";
    case NegCategory::kHard: return "hard";
    case NegCategory::kVeryHard: return "very_hard";
    case NegCategory::kRetrievedTopK: return "retrieved_top_k";
  }
  return "none";
}

NegCategory neg_category_from_string(std::string_view s) {
  for (auto c : {NegCategory::kNone, NegCategory::kEasy, NegCategory::kHard,
                 NegCategory::kVeryHard, NegCategory::kRetrievedTopK}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::kInvalidRecord, "unknown pair category '" + std::string(s) + "'");
}

nlohmann::json to_json(const TrainingPair& pair) {
  nlohmann::json j;
  j["unnorm"] = pair.unnorm_text;
  j["norm"] = pair.norm_text;
  j["label"] = pair.label;
  j["category"] = std::string(to_string(pair.neg_category));
  if (pair.fallback) j["fallback"] = true;
  return j;
}

TrainingPair training_pair_from_json(const nlohmann::json& j) {
  TrainingPair pair;
  try {
    pair.unnorm_text = j.at("unnorm").get<std::string>();
    pair.norm_text = j.at("norm").get<std::string>();
    pair.label = j.at("label").get<int>();
    pair.neg_category = neg_category_from_string(j.value("category", std::string("none")));
    pair.fallback = j.value("fallback", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  if (pair.label != 0 && pair.label != 1) {
    throw Error(ErrorCode::kInvalidRecord, "label must be 0 or 1");
  }
  if (pair.label == 1 && pair.neg_category != NegCategory::kNone) {
    throw Error(ErrorCode::kInvalidRecord, "positive pair with a negative category");
  }
  return pair;
}

std::vector<TrainingPair> read_pairs(const std::string& path) {
  std::vector<TrainingPair> pairs;
  for (const auto& j : read_jsonl(path)) pairs.push_back(training_pair_from_json(j));
  return pairs;
}

void write_pairs(const std::string& path, const std::vector<TrainingPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

void append_pair(const std::string& path, const TrainingPair& pair) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + path);
  out << to_json(pair).dump() << '\n';
  out.flush();
}

}  // namespace addrmatch
