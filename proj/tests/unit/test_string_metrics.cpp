// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "addrmatch/string_metrics.h"
#include "oracles.h"
#include "test_util.h"

using namespace addrmatch;

namespace {

std::vector<std::string> all_strings(std::string_view alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char c : alphabet) out.push_back(out[i] + c);
    }
    begin = end;
  }
  return out;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("kitten", "sitting") == oracle::levenshtein("kitten", "sitting"));
  CHECK(levenshtein("abc", "abc") == 0);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("abc", "") == 3);
}

TEST_CASE("similarity_ratio examples") {
  CHECK(similarity_ratio("abcd", "abcd").value == 100);
  CHECK(similarity_ratio("ab", "ac").value == 50);
  CHECK(similarity_ratio("", "").value == 100);
  CHECK(similarity_ratio("", "abc").value == 0);
  CHECK(similarity_ratio("ab", "ac").fraction() == doctest::Approx(0.5));
}

TEST_CASE("token ratio examples") {
  CHECK(token_sort_ratio("rua das flores", "flores das rua").value == 100);
  CHECK(token_sort_ratio("rua das flores", "rua das flore") == similarity_ratio("das flore rua", "das flores rua"));
  CHECK(token_sort_ratio("a", "b").value == 0);
  CHECK(token_set_ratio("rua das flores", "rua das flores 12").value == 100);
  CHECK(token_set_ratio("Rua das Flôres", "rua das flores").value == 100);
  CHECK(token_set_ratio("a b", "c d").value == oracle::token_set("a b", "c d"));
  CHECK(token_set_ratio("a b", "c d").value == similarity_ratio("a b", "c d").value);
}

TEST_CASE("exhaustive agreement with DP oracles, length <= 5 over {a,b,c}") {
  const auto strings = all_strings("abc", 5);
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      const auto lev = levenshtein(a, b);
      const auto ind = indel_distance(a, b);
      if (lev != oracle::levenshtein(a, b) || ind != oracle::indel(a, b) ||
          similarity_ratio(a, b).value != oracle::ratio(a, b)) {
        FAIL_CHECK("mismatch for '" << a << "' vs '" << b << "'");
      }
    }
  }
}

TEST_CASE("token metrics agree with oracles, length <= 5 over {a,b,space}") {
  const auto strings = all_strings("ab ", 5);
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      if (token_sort_ratio(a, b).value != oracle::token_sort(a, b) ||
          token_set_ratio(a, b).value != oracle::token_set(a, b)) {
        FAIL_CHECK("mismatch for '" << a << "' vs '" << b << "'");
      }
    }
  }
}

TEST_CASE("long strings use the same definition as short ones") {
  // Crosses the 64-character bit-parallel boundary.
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const auto a = testutil::random_string(rng, "abcd", 140);
    const auto b = testutil::random_string(rng, "abcd", 140);
    CHECK(indel_distance(a, b) == oracle::indel(a, b));
    CHECK(levenshtein(a, b) == oracle::levenshtein(a, b));
  }
}

TEST_CASE("symmetry of every metric on 500 random pairs") {
  Rng rng(22);
  for (int i = 0; i < 500; ++i) {
    const auto a = testutil::random_string(rng, "abc de", 24);
    const auto b = testutil::random_string(rng, "abc de", 24);
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK(similarity_ratio(a, b) == similarity_ratio(b, a));
    CHECK(token_sort_ratio(a, b) == token_sort_ratio(b, a));
    CHECK(token_set_ratio(a, b) == token_set_ratio(b, a));
  }
}

TEST_CASE("levenshtein triangle inequality on 200 triples") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto a = testutil::random_string(rng, "abc", 12);
    const auto b = testutil::random_string(rng, "abc", 12);
    const auto c = testutil::random_string(rng, "abc", 12);
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST_CASE("token_sort_ratio is invariant under token permutation") {
  Rng rng(24);
  const std::vector<std::string> vocab{"rua", "das", "flores", "12", "lisboa", "1000", "001", "av", "sol"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ta, tb;
    for (std::size_t k = 0, n = 1 + uniform_index(rng, 6); k < n; ++k) ta.push_back(vocab[uniform_index(rng, 9)]);
    for (std::size_t k = 0, n = 1 + uniform_index(rng, 6); k < n; ++k) tb.push_back(vocab[uniform_index(rng, 9)]);
    const auto base = token_sort_ratio(oracle::join(ta), oracle::join(tb));
    shuffle(ta, rng);
    shuffle(tb, rng);
    CHECK(token_sort_ratio(oracle::join(ta), oracle::join(tb)) == base);
  }
}

TEST_CASE("token_set >= token_sort when one token set contains the other") {
  Rng rng(25);
  const std::vector<std::string> vocab{"rua", "das", "flores", "12", "lisboa", "1000", "001", "av", "sol", "3"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> big;
    for (std::size_t k = 0, n = 2 + uniform_index(rng, 6); k < n; ++k) big.push_back(vocab[uniform_index(rng, 10)]);
    auto small = sorted_unique_tokens(big);
    small.resize(1 + uniform_index(rng, small.size()));
    shuffle(big, rng);
    const auto a = oracle::join(big), b = oracle::join(small);
    CHECK(token_set_ratio(a, b) >= token_sort_ratio(a, b));
  }
}

TEST_CASE("scores stay within [0, 100]") {
  Rng rng(26);
  for (int i = 0; i < 500; ++i) {
    const auto a = testutil::random_string(rng, "xy z", 10);
    const auto b = testutil::random_string(rng, "xy z", 10);
    for (const auto s : {similarity_ratio(a, b), token_sort_ratio(a, b), token_set_ratio(a, b)}) {
      CHECK(s.value >= 0);
      CHECK(s.value <= 100);
    }
  }
}
