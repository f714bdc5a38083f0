// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "addrmatch/core_model.h"

namespace addrmatch {

/// Integer similarity in [0, 100]; Table-style filter values on a 0-1 scale are value / 100.
struct SimilarityScore {
  int value = 0;

  double fraction() const { return value / 100.0; }
  auto operator<=>(const SimilarityScore&) const = default;
};

/// Unit-cost edit distance over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Edit distance with insert/delete cost 1 and substitution cost 2
/// (equivalently |a| + |b| - 2 * LCS(a, b)).
std::size_t indel_distance(std::string_view a, std::string_view b);

/// round(100 * (|a| + |b| - indel_distance) / (|a| + |b|)); 100 for two empty strings.
SimilarityScore similarity_ratio(std::string_view a, std::string_view b);

/// Word-order-insensitive ratio: normalized tokens sorted and rejoined.
SimilarityScore token_sort_ratio(std::string_view a, std::string_view b);
SimilarityScore token_sort_ratio(const TokenList& a, const TokenList& b);

/// Best ratio among the intersection / intersection+difference strings.
SimilarityScore token_set_ratio(std::string_view a, std::string_view b);
SimilarityScore token_set_ratio(const TokenList& a, const TokenList& b);
/// Same as token_set_ratio for inputs that are already sorted and deduplicated.
SimilarityScore token_set_ratio_sorted(const TokenList& set_a, const TokenList& set_b);
TokenList sorted_unique_tokens(TokenList tokens);

}  // namespace addrmatch
