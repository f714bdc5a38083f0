// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace addrmatch {

enum class NegCategory { kNone, kEasy, kHard, kVeryHard, kRetrievedTopK };

std::string_view to_string(NegCategory c);
NegCategory neg_category_from_string(std::string_view s);

struct TrainingPair {
  std::string unnorm_text;
  std::string norm_text;
  int label = 0;  // 1 = same address
  NegCategory neg_category = NegCategory::kNone;
  // Set when the drawn negative category could not be satisfied and a
  // weaker one (or the best available candidate) was used instead.
  bool fallback = false;

  bool operator==(const TrainingPair&) const = default;
};

// Pair file record: {unnorm, norm, label, category[, fallback]}.
nlohmann::json to_json(const TrainingPair& pair);
TrainingPair training_pair_from_json(const nlohmann::json& j);
std::vector<TrainingPair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<TrainingPair>& pairs);
void append_pair(const std::string& path, const TrainingPair& pair);

}  // namespace addrmatch
