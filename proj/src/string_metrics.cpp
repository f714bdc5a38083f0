// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/string_metrics.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace addrmatch {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    std::size_t diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const std::size_t up = row[i];
      row[i] = a[i - 1] == b[j - 1] ? diag : std::min({row[i - 1], row[i], diag}) + 1;
      diag = up;
    }
  }
  return row[a.size()];
}

namespace {

// Bit-parallel LCS length (Allison-Dix / Hyyrö) for |a| <= 64.
std::size_t lcs_bitparallel(std::string_view a, std::string_view b) {
  std::array<std::uint64_t, 256> match{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    match[static_cast<unsigned char>(a[i])] |= std::uint64_t{1} << i;
  }
  std::uint64_t v = ~std::uint64_t{0};
  for (char c : b) {
    const std::uint64_t u = v & match[static_cast<unsigned char>(c)];
    v = (v + u) | (v - u);
  }
  const std::uint64_t mask = a.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << a.size()) - 1;
  return static_cast<std::size_t>(std::popcount(~v & mask));
}

std::size_t lcs_dp(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

std::string join_parts(const std::vector<std::string>& head, const std::vector<std::string>& tail) {
  std::string out;
  for (const auto* part : {&head, &tail}) {
    for (const auto& t : *part) {
      if (!out.empty()) out.push_back(' ');
      out += t;
    }
  }
  return out;
}

}  // namespace

std::size_t indel_distance(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t lcs = a.size() <= 64 ? lcs_bitparallel(a, b) : lcs_dp(a, b);
  return a.size() + b.size() - 2 * lcs;
}

SimilarityScore similarity_ratio(std::string_view a, std::string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return {100};
  const double dist = static_cast<double>(indel_distance(a, b));
  const double ratio = 100.0 * (static_cast<double>(total) - dist) / static_cast<double>(total);
  return {static_cast<int>(std::lround(ratio))};
}

SimilarityScore token_sort_ratio(const TokenList& a, const TokenList& b) {
  TokenList sa = a;
  TokenList sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return similarity_ratio(join_tokens(sa), join_tokens(sb));
}

SimilarityScore token_sort_ratio(std::string_view a, std::string_view b) {
  return token_sort_ratio(normalize_text(a), normalize_text(b));
}

TokenList sorted_unique_tokens(TokenList tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

SimilarityScore token_set_ratio(const TokenList& a, const TokenList& b) {
  return token_set_ratio_sorted(sorted_unique_tokens(a), sorted_unique_tokens(b));
}

SimilarityScore token_set_ratio_sorted(const TokenList& set_a, const TokenList& set_b) {
  std::vector<std::string> common, only_a, only_b;
  std::set_intersection(set_a.begin(), set_a.end(), set_b.begin(), set_b.end(),
                        std::back_inserter(common));
  std::set_difference(set_a.begin(), set_a.end(), set_b.begin(), set_b.end(),
                      std::back_inserter(only_a));
  std::set_difference(set_b.begin(), set_b.end(), set_a.begin(), set_a.end(),
                      std::back_inserter(only_b));
  const std::string s0 = join_parts(common, {});
  const std::string s1 = join_parts(common, only_a);
  const std::string s2 = join_parts(common, only_b);
  return std::max({similarity_ratio(s0, s1), similarity_ratio(s0, s2), similarity_ratio(s1, s2)});
}

SimilarityScore token_set_ratio(std::string_view a, std::string_view b) {
  return token_set_ratio(normalize_text(a), normalize_text(b));
}

}  // namespace addrmatch
