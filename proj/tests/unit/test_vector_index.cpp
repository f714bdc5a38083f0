// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "addrmatch/error.h"
#include "addrmatch/vector_index.h"
#include "oracles.h"
#include "test_util.h"

using namespace addrmatch;

namespace {

using FVec = std::vector<float>;

struct Fixture {
  std::vector<NormalizedAddress> corpus;
  std::vector<EmbeddingVector> vectors;
  std::vector<std::pair<std::string, FVec>> items;
};

// Float-valued vectors so the double-precision oracle sees exactly the stored values.
FVec random_fvec(Rng& rng) {
  FVec v(kEmbeddingDim);
  for (auto& x : v) x = static_cast<float>(uniform_real(rng, -1.0, 1.0));
  return v;
}

std::vector<double> widen(const FVec& v) { return {v.begin(), v.end()}; }

Fixture random_fixture(Rng& rng, std::size_t n, std::size_t duplicates = 0) {
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "v%05zu", i);
    const int cp4 = 1000 * static_cast<int>(1 + uniform_index(rng, 9)) + static_cast<int>(uniform_index(rng, 1000));
    f.corpus.push_back(testutil::make_address(id, "Rua", "Teste", std::to_string(i), cp4, 0, "Lugar"));
    // Some rows copy an earlier vector so equal similarities exercise the id tie-break.
    FVec v = (i > 0 && i + duplicates >= n) ? f.items[uniform_index(rng, i)].second : random_fvec(rng);
    f.vectors.push_back({widen(v)});
    f.items.emplace_back(id, std::move(v));
  }
  return f;
}

ShardedIndex index_of(const Fixture& f) { return build_index(f.corpus, f.vectors, 7); }

ErrorCode load_code(std::string_view bytes) {
  try {
    load_store(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("shard assignment by CP4 first digit") {
  std::vector<NormalizedAddress> corpus{testutil::make_address("a", "Rua", "A", "1", 1000, 1, "X"),
                                        testutil::make_address("b", "Rua", "B", "1", 4715, 1, "X"),
                                        testutil::make_address("c", "Rua", "C", "1", 9000, 1, "X")};
  Rng rng(51);
  std::vector<EmbeddingVector> vecs;
  for (int i = 0; i < 3; ++i) vecs.push_back({widen(random_fvec(rng))});
  const auto index = build_index(corpus, vecs, 1);
  CHECK(index.size() == 3);
  CHECK(index.shard(1).size() == 1);
  CHECK(index.shard(1).id(0) == "a");
  CHECK(index.shard(4).id(0) == "b");
  CHECK(index.shard(9).id(0) == "c");
  for (int d : {2, 3, 5, 6, 7, 8}) CHECK(index.shard(d).empty());
  CHECK(index.address("b")->zip.cp4 == 4715);
  CHECK(index.address("zz") == nullptr);
}

TEST_CASE("build_index preconditions") {
  Rng rng(52);
  auto f = random_fixture(rng, 5);
  CHECK_THROWS_AS(build_index({}, {}, 0), Error);
  CHECK_THROWS_AS(build_index(f.corpus, std::span<const EmbeddingVector>(f.vectors).first(4), 0), Error);
  auto short_vec = f.vectors;
  short_vec[2].values.pop_back();
  try {
    build_index(f.corpus, short_vec, 0);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  auto dup = f.corpus;
  dup[3].id = dup[0].id;
  try {
    build_index(dup, f.vectors, 0);
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
  }
}

TEST_CASE("shards partition the corpus") {
  Rng rng(53);
  const auto f = random_fixture(rng, 800);
  const auto index = index_of(f);
  std::set<std::string> seen;
  for (int d = 1; d <= kShardCount; ++d) {
    const auto& s = index.shard(d);
    for (std::size_t r = 0; r < s.size(); ++r) {
      CHECK(seen.insert(s.id(r)).second);
      CHECK(index.address(s.id(r))->zip.cp4 / 1000 == d);
    }
  }
  CHECK(seen.size() == f.corpus.size());
}

TEST_CASE("top_k equals brute force on 1000 vectors x 100 queries") {
  Rng rng(54);
  const auto f = random_fixture(rng, 1000, 50);
  const auto index = index_of(f);
  std::size_t mismatches = 0;
  for (int q = 0; q < 100; ++q) {
    const auto query = random_fvec(rng);
    for (std::size_t k : {1, 10}) {
      const auto expected = oracle::brute_top_k(f.items, query, k);
      const auto got = index.top_k(widen(query), std::nullopt, k);
      if (got.size() != expected.size()) ++mismatches;
      for (std::size_t i = 0; i < std::min(got.size(), expected.size()); ++i) {
        if (got[i].id != expected[i].first || std::abs(got[i].similarity - expected[i].second) > 1e-12 ||
            got[i].rank != static_cast<int>(i + 1)) {
          ++mismatches;
        }
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("filtered top_k equals brute force over the shard") {
  Rng rng(55);
  const auto f = random_fixture(rng, 600, 30);
  const auto index = index_of(f);
  for (int q = 0; q < 40; ++q) {
    const int digit = static_cast<int>(1 + uniform_index(rng, 9));
    std::vector<std::pair<std::string, FVec>> shard_items;
    for (std::size_t i = 0; i < f.corpus.size(); ++i) {
      if (f.corpus[i].zip.cp4 / 1000 == digit) shard_items.push_back(f.items[i]);
    }
    const auto query = random_fvec(rng);
    const auto expected = oracle::brute_top_k(shard_items, query, 10);
    const auto got = index.top_k(widen(query), digit, 10);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == expected[i].first);
  }
}

TEST_CASE("top_k edge cases") {
  Rng rng(56);
  const auto f = random_fixture(rng, 50);
  const auto index = index_of(f);
  const auto q = widen(random_fvec(rng));
  // k beyond the store size returns everything.
  CHECK(index.top_k(q, std::nullopt, 500).size() == 50);
  const int digit = f.corpus[0].zip.cp4 / 1000;
  CHECK(index.top_k(q, digit, 500).size() == index.shard(digit).size());
  // Self query ranks first.
  for (std::size_t i = 0; i < f.corpus.size(); ++i) {
    const auto hits = index.top_k(f.vectors[i].values, std::nullopt, 1);
    CHECK(hits[0].id == f.corpus[i].id);
    CHECK(hits[0].similarity == doctest::Approx(1.0));
  }
  // Similarities are non-increasing and bounded.
  const auto all = index.top_k(q, std::nullopt, 50);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(std::abs(all[i].similarity) <= 1.0);
    if (i > 0) CHECK(all[i - 1].similarity >= all[i].similarity);
  }
  CHECK_THROWS_AS(index.top_k(q, std::nullopt, 0), Error);
  CHECK_THROWS_AS(index.top_k(q, 0, 5), Error);
  CHECK_THROWS_AS(index.top_k(std::vector<double>(10, 1.0), std::nullopt, 5), Error);
  try {
    index.top_k(std::vector<double>(kEmbeddingDim, 0.0), std::nullopt, 5);
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroVector);
  }
}

TEST_CASE("vector_of and similarity_to") {
  Rng rng(57);
  const auto f = random_fixture(rng, 20);
  const auto index = index_of(f);
  CHECK(*index.vector_of(f.corpus[3].id) == f.vectors[3].values);
  CHECK_FALSE(index.vector_of("nope"));
  CHECK(*index.similarity_to(f.vectors[3].values, f.corpus[3].id) == doctest::Approx(1.0));
  CHECK_FALSE(index.similarity_to(f.vectors[3].values, "nope"));
}

TEST_CASE("ABES round-trip") {
  Rng rng(58);
  const auto f = random_fixture(rng, 120);
  const auto index = index_of(f);
  const auto bytes = save_store(index);
  CHECK(bytes.substr(0, 4) == "ABES");
  CHECK(save_store(index) == bytes);
  auto loaded = load_store(bytes, 7);
  CHECK_FALSE(loaded.fingerprint_mismatch);
  CHECK(loaded.index.weights_fingerprint() == 7);
  CHECK(loaded.index.size() == index.size());
  loaded.index.attach_corpus(f.corpus);
  CHECK(save_store(loaded.index) == bytes);
  const auto q = widen(random_fvec(rng));
  const auto a = index.top_k(q, std::nullopt, 10);
  const auto b = loaded.index.top_k(q, std::nullopt, 10);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].similarity == b[i].similarity);
  }
  CHECK(load_store(bytes, 8).fingerprint_mismatch);
}

TEST_CASE("ABES corruption is detected") {
  Rng rng(59);
  const auto f = random_fixture(rng, 10);
  const auto bytes = save_store(index_of(f));
  CHECK(load_code("") == ErrorCode::kCorruptStore);
  CHECK(load_code("XBES" + bytes.substr(4)) == ErrorCode::kCorruptStore);
  for (std::size_t cut : {5ul, 20ul, bytes.size() / 2, bytes.size() - 1}) {
    CHECK(load_code(std::string_view(bytes).substr(0, cut)) == ErrorCode::kCorruptStore);
  }
  CHECK(load_code(bytes + "x") == ErrorCode::kCorruptStore);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(load_code(bad_version) == ErrorCode::kCorruptStore);
  auto bad_dim = bytes;
  bad_dim[8] = 0x01;
  CHECK(load_code(bad_dim) == ErrorCode::kDimensionMismatch);
  auto huge_count = bytes;
  for (int i = 0; i < 8; ++i) huge_count[21 + i] = '\xff';
  CHECK(load_code(huge_count) == ErrorCode::kCorruptStore);
}

TEST_CASE("attach_corpus validates membership") {
  Rng rng(60);
  const auto f = random_fixture(rng, 10);
  auto loaded = load_store(save_store(index_of(f)));
  auto missing = f.corpus;
  missing.pop_back();
  CHECK_THROWS_AS(loaded.index.attach_corpus(missing), Error);
  auto moved = f.corpus;
  moved[0].zip.cp4 = moved[0].zip.cp4 >= 5000 ? 1000 : 9000;
  CHECK_THROWS_AS(loaded.index.attach_corpus(moved), Error);
  CHECK_NOTHROW(loaded.index.attach_corpus(f.corpus));
  CHECK(loaded.index.corpus().size() == 10);
}
