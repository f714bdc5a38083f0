// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/vector_index.h"

#include <algorithm>
#include <cmath>

#include "addrmatch/error.h"
#include "binary_io.h"

namespace addrmatch {

namespace {

constexpr std::uint32_t kStoreVersion = 1;
constexpr double kZeroNorm = 1e-12;

double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

std::vector<float> to_float(std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(values[i]);
  return out;
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

}  // namespace

void EmbeddingStore::add(std::string id, std::span<const float> values) {
  if (values.size() != kEmbeddingDim) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding of size " + std::to_string(values.size()));
  }
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
  norms_.push_back(norm_of(values));
}

void EmbeddingStore::add(std::string id, std::span<const double> values) {
  const auto f = to_float(values);
  add(std::move(id), std::span<const float>(f));
}

std::size_t ShardedIndex::size() const {
  std::size_t n = 0;
  for (const auto& s : shards_) n += s.size();
  return n;
}

void ShardedIndex::add_entry(int digit, std::string id, std::span<const float> values) {
  if (digit < 1 || digit > kShardCount) {
    throw Error(ErrorCode::kInvalidCp4Prefix, "shard digit " + std::to_string(digit) + " for " + id);
  }
  auto& store = shards_[static_cast<std::size_t>(digit - 1)];
  if (!locations_.emplace(id, std::make_pair(digit, store.size())).second) {
    throw Error(ErrorCode::kDuplicateId, id);
  }
  store.add(std::move(id), values);
}

std::vector<Candidate> ShardedIndex::top_k(std::span<const double> query, std::optional<int> shard,
                                           std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.size() != kEmbeddingDim) {
    throw Error(ErrorCode::kDimensionMismatch, "query of size " + std::to_string(query.size()));
  }
  if (shard && (*shard < 1 || *shard > kShardCount)) {
    throw Error(ErrorCode::kInvalidArgument, "shard must be in 1..9");
  }
  // Compare in the same precision the store holds.
  const auto q = to_float(query);
  const double qn = norm_of(q);
  if (qn < kZeroNorm) throw Error(ErrorCode::kZeroVector, "zero query vector");

  std::vector<Candidate> heap;  // min-heap on `better`, worst at front
  heap.reserve(k + 1);
  const auto worse_first = [](const Candidate& a, const Candidate& b) { return better(a, b); };
  auto scan = [&](const EmbeddingStore& store) {
    for (std::size_t row = 0; row < store.size(); ++row) {
      const auto v = store.vector(row);
      double dotp = 0.0;
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) dotp += static_cast<double>(q[j]) * v[j];
      const double vn = store.norm(row);
      const double sim = vn < kZeroNorm ? 0.0 : std::clamp(dotp / (qn * vn), -1.0, 1.0);
      if (heap.size() == k) {
        if (sim < heap.front().similarity) continue;
        Candidate c{store.id(row), sim, 0};
        if (!better(c, heap.front())) continue;
        std::pop_heap(heap.begin(), heap.end(), worse_first);
        heap.back() = std::move(c);
      } else {
        heap.push_back({store.id(row), sim, 0});
      }
      std::push_heap(heap.begin(), heap.end(), worse_first);
    }
  };
  if (shard) {
    scan(this->shard(*shard));
  } else {
    for (const auto& s : shards_) scan(s);
  }
  std::sort(heap.begin(), heap.end(), better);
  for (std::size_t i = 0; i < heap.size(); ++i) heap[i].rank = static_cast<int>(i + 1);
  return heap;
}

std::optional<std::vector<double>> ShardedIndex::vector_of(const std::string& id) const {
  const auto it = locations_.find(id);
  if (it == locations_.end()) return std::nullopt;
  const auto v = shard(it->second.first).vector(it->second.second);
  return std::vector<double>(v.begin(), v.end());
}

std::optional<double> ShardedIndex::similarity_to(std::span<const double> query, const std::string& id) const {
  const auto it = locations_.find(id);
  if (it == locations_.end()) return std::nullopt;
  const auto& store = shard(it->second.first);
  const auto row = it->second.second;
  const auto q = to_float(query);
  const double qn = norm_of(q);
  const double vn = store.norm(row);
  if (qn < kZeroNorm || vn < kZeroNorm) return 0.0;
  const auto v = store.vector(row);
  double dotp = 0.0;
  for (std::size_t j = 0; j < kEmbeddingDim; ++j) dotp += static_cast<double>(q[j]) * v[j];
  return std::clamp(dotp / (qn * vn), -1.0, 1.0);
}

const NormalizedAddress* ShardedIndex::address(const std::string& id) const {
  const auto it = id_to_address_.find(id);
  return it == id_to_address_.end() ? nullptr : &it->second;
}

std::vector<NormalizedAddress> ShardedIndex::corpus() const {
  std::vector<NormalizedAddress> out;
  out.reserve(id_to_address_.size());
  for (const auto& [id, addr] : id_to_address_) out.push_back(addr);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void ShardedIndex::attach_corpus(const std::vector<NormalizedAddress>& corpus) {
  std::unordered_map<std::string, NormalizedAddress> by_id;
  for (const auto& addr : corpus) {
    if (!locations_.count(addr.id)) continue;
    const int digit = locations_.at(addr.id).first;
    if (addr.zip.shard() != digit) {
      throw Error(ErrorCode::kCorruptStore, "address " + addr.id + " stored in shard " + std::to_string(digit));
    }
    by_id.emplace(addr.id, addr);
  }
  if (by_id.size() != locations_.size()) {
    throw Error(ErrorCode::kCorruptStore, "corpus does not cover every stored id");
  }
  id_to_address_ = std::move(by_id);
}

ShardedIndex precompute_store(const std::vector<NormalizedAddress>& corpus, const ProjectionWeights& w) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  ShardedIndex index;
  index.weights_fingerprint_ = w.fingerprint();
  for (const auto& addr : corpus) {
    validate(addr);
    const auto e = embed(render_normalized(addr), w);
    const auto f = to_float(e.values);
    index.add_entry(addr.zip.shard(), addr.id, f);
    index.id_to_address_.emplace(addr.id, addr);
  }
  return index;
}

ShardedIndex build_index(const std::vector<NormalizedAddress>& corpus, std::span<const EmbeddingVector> vectors,
                         std::uint64_t weights_fingerprint) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  if (corpus.size() != vectors.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one vector per address required");
  }
  ShardedIndex index;
  index.weights_fingerprint_ = weights_fingerprint;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& addr = corpus[i];
    validate(addr);
    if (vectors[i].values.size() != kEmbeddingDim) {
      throw Error(ErrorCode::kDimensionMismatch, "vector for " + addr.id + " is not 512-dim");
    }
    index.add_entry(addr.zip.shard(), addr.id, to_float(vectors[i].values));
    index.id_to_address_.emplace(addr.id, addr);
  }
  return index;
}

std::string save_store(const ShardedIndex& index) {
  detail::ByteWriter out;
  out.bytes("ABES");
  out.uint<std::uint32_t>(kStoreVersion);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(kEmbeddingDim));
  out.uint<std::uint64_t>(index.weights_fingerprint_);
  out.uint<std::uint8_t>(kShardCount);
  for (const auto& store : index.shards_) {
    out.uint<std::uint64_t>(store.size());
    for (std::size_t row = 0; row < store.size(); ++row) {
      const auto& id = store.id(row);
      out.uint<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
      out.bytes(id);
      out.floats(store.vector(row));
    }
  }
  return out.take();
}

LoadedStore load_store(std::string_view bytes, std::optional<std::uint64_t> expected_fingerprint) {
  detail::ByteReader in(bytes, ErrorCode::kCorruptStore);
  if (in.bytes(4) != "ABES") throw Error(ErrorCode::kCorruptStore, "bad store magic");
  if (in.uint<std::uint32_t>() != kStoreVersion) throw Error(ErrorCode::kCorruptStore, "unsupported store version");
  const auto dim = in.uint<std::uint32_t>();
  if (dim != kEmbeddingDim) throw Error(ErrorCode::kDimensionMismatch, "store dim " + std::to_string(dim));
  LoadedStore out;
  out.index.weights_fingerprint_ = in.uint<std::uint64_t>();
  if (in.uint<std::uint8_t>() != kShardCount) throw Error(ErrorCode::kCorruptStore, "shard count != 9");
  std::vector<float> v(kEmbeddingDim);
  for (int digit = 1; digit <= kShardCount; ++digit) {
    const auto count = in.uint<std::uint64_t>();
    if (count > in.remaining() / (2 + kEmbeddingDim * sizeof(float))) {
      throw Error(ErrorCode::kCorruptStore, "shard count exceeds payload");
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto len = in.uint<std::uint16_t>();
      std::string id(in.bytes(len));
      in.floats(v);
      out.index.add_entry(digit, std::move(id), v);
    }
  }
  if (!in.at_end()) throw Error(ErrorCode::kCorruptStore, "trailing bytes in store");
  out.fingerprint_mismatch = expected_fingerprint && *expected_fingerprint != out.index.weights_fingerprint_;
  return out;
}

}  // namespace addrmatch
