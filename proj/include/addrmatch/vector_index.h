// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "addrmatch/core_model.h"
#include "addrmatch/embedding.h"

namespace addrmatch {

inline constexpr int kShardCount = 9;

struct LoadedStore;

/// One retrieval hit; `rank` is 1-based.
struct Candidate {
  std::string id;
  double similarity = 0.0;
  int rank = 0;
};

/// Flat float32 store of (id, embedding) rows for one CP4 first digit.
class EmbeddingStore {
 public:
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const float> vector(std::size_t row) const {
    return std::span<const float>(data_).subspan(row * kEmbeddingDim, kEmbeddingDim);
  }
  double norm(std::size_t row) const { return norms_[row]; }

  void add(std::string id, std::span<const double> values);
  void add(std::string id, std::span<const float> values);

 private:
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::vector<double> norms_;
};

/// Nine CP4-first-digit stores plus the addresses they were built from.
class ShardedIndex {
 public:
  ShardedIndex() = default;

  const EmbeddingStore& shard(int digit) const { return shards_.at(static_cast<std::size_t>(digit - 1)); }
  std::size_t size() const;
  std::uint64_t weights_fingerprint() const { return weights_fingerprint_; }

  /// Exact cosine top-k, ties by ascending id. `shard` restricts the scan to one
  /// store; otherwise every store is scanned. Throws ZeroVector for a zero query.
  std::vector<Candidate> top_k(std::span<const double> query, std::optional<int> shard,
                               std::size_t k) const;

  /// Stored embedding of `id` (float32 precision), or nullopt.
  std::optional<std::vector<double>> vector_of(const std::string& id) const;
  /// Cosine between a query and the stored vector of `id`.
  std::optional<double> similarity_to(std::span<const double> query, const std::string& id) const;

  const NormalizedAddress* address(const std::string& id) const;
  const std::unordered_map<std::string, NormalizedAddress>& addresses() const { return id_to_address_; }
  /// Corpus in id order (deterministic).
  std::vector<NormalizedAddress> corpus() const;

  /// Binds the normalized records to a loaded store; every stored id must be
  /// present and sit in the shard of its CP4. Throws CorruptStore otherwise.
  void attach_corpus(const std::vector<NormalizedAddress>& corpus);

 private:
  friend ShardedIndex precompute_store(const std::vector<NormalizedAddress>&, const ProjectionWeights&);
  friend ShardedIndex build_index(const std::vector<NormalizedAddress>&, std::span<const EmbeddingVector>,
                                  std::uint64_t);
  friend std::string save_store(const ShardedIndex&);
  friend LoadedStore load_store(std::string_view, std::optional<std::uint64_t>);

  void add_entry(int digit, std::string id, std::span<const float> values);

  std::array<EmbeddingStore, kShardCount> shards_;
  std::unordered_map<std::string, std::pair<int, std::size_t>> locations_;
  std::unordered_map<std::string, NormalizedAddress> id_to_address_;
  std::uint64_t weights_fingerprint_ = 0;
};

/// Embeds every rendered address with `w` and places it in its CP4 shard.
/// Throws InvalidArgument (empty corpus), DuplicateId, InvalidCp4Prefix.
ShardedIndex precompute_store(const std::vector<NormalizedAddress>& corpus, const ProjectionWeights& w);

/// Same as precompute_store but with embeddings computed elsewhere (e.g. a
/// sidecar). `vectors[i]` belongs to `corpus[i]`.
ShardedIndex build_index(const std::vector<NormalizedAddress>& corpus, std::span<const EmbeddingVector> vectors,
                         std::uint64_t weights_fingerprint);

/// "ABES" binary store (see README for the layout).
std::string save_store(const ShardedIndex& index);

struct LoadedStore {
  ShardedIndex index;
  bool fingerprint_mismatch = false;
};

/// Throws CorruptStore on bad magic/version/truncation and DimensionMismatch on dim != 512.
/// `expected_fingerprint`, when given, is compared against the stored one.
LoadedStore load_store(std::string_view bytes, std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

}  // namespace addrmatch
