// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "addrmatch/core_model.h"

namespace addrmatch {

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct Posting {
  std::uint32_t doc = 0;  // internal document number
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Okapi BM25 inverted index over rendered normalized addresses.
class LexicalIndex {
 public:
  LexicalIndex() = default;

  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const Bm25Params& params() const { return params_; }

  /// Postings for `token`, or nullptr when the token occurs in no document.
  const std::vector<Posting>* postings(const std::string& token) const;
  std::size_t doc_length(const std::string& doc_id) const;
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_[doc]; }
  std::optional<std::uint32_t> doc_number(const std::string& doc_id) const;
  std::size_t vocabulary_size() const { return postings_.size(); }

  /// Smoothed idf: ln((N - n + 0.5) / (n + 0.5) + 1); never negative.
  double idf(const std::string& token) const;

 private:
  friend LexicalIndex build_lexical_index(const std::vector<NormalizedAddress>&, Bm25Params);
  friend double bm25_score(const LexicalIndex&, const TokenList&, const std::string&);
  friend std::vector<std::pair<std::string, double>> top_k_lexical(const LexicalIndex&,
                                                                   std::string_view, std::size_t,
                                                                   std::optional<int>);

  double idf_for_df(std::size_t df) const;

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::uint8_t> doc_shards_;  // CP4 first digit per document
  std::unordered_map<std::string, std::uint32_t> doc_numbers_;
  double avg_doc_length_ = 0.0;
};

/// Throws DuplicateId; an empty corpus is an InvalidArgument.
LexicalIndex build_lexical_index(const std::vector<NormalizedAddress>& corpus,
                                 Bm25Params params = {});

/// Score of one document; every occurrence of a query token contributes. Throws UnknownDoc.
double bm25_score(const LexicalIndex& index, const TokenList& query, const std::string& doc_id);

/// Descending score, ties by ascending doc id; at most min(k, docs considered) entries.
/// With `shard` set only documents whose CP4 starts with that digit are ranked.
std::vector<std::pair<std::string, double>> top_k_lexical(const LexicalIndex& index,
                                                          std::string_view query, std::size_t k,
                                                          std::optional<int> shard = std::nullopt);

}  // namespace addrmatch
