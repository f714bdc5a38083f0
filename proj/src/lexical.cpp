// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/lexical.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "addrmatch/error.h"

namespace addrmatch {

const std::vector<Posting>* LexicalIndex::postings(const std::string& token) const {
  const auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

std::optional<std::uint32_t> LexicalIndex::doc_number(const std::string& doc_id) const {
  const auto it = doc_numbers_.find(doc_id);
  if (it == doc_numbers_.end()) return std::nullopt;
  return it->second;
}

std::size_t LexicalIndex::doc_length(const std::string& doc_id) const {
  const auto doc = doc_number(doc_id);
  if (!doc) throw Error(ErrorCode::kUnknownDoc, doc_id);
  return doc_lengths_[*doc];
}

double LexicalIndex::idf_for_df(std::size_t df) const {
  const double n = static_cast<double>(doc_ids_.size());
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double LexicalIndex::idf(const std::string& token) const {
  const auto* p = postings(token);
  return idf_for_df(p ? p->size() : 0);
}

LexicalIndex build_lexical_index(const std::vector<NormalizedAddress>& corpus, Bm25Params params) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  LexicalIndex index;
  index.params_ = params;
  std::size_t total_length = 0;
  for (const auto& addr : corpus) {
    const auto doc = static_cast<std::uint32_t>(index.doc_ids_.size());
    if (!index.doc_numbers_.emplace(addr.id, doc).second) {
      throw Error(ErrorCode::kDuplicateId, addr.id);
    }
    index.doc_ids_.push_back(addr.id);
    index.doc_shards_.push_back(static_cast<std::uint8_t>(addr.zip.shard()));

    auto tokens = normalize_text(render_normalized(addr));
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_length += tokens.size();
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens.size();) {
      std::size_t j = i;
      while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
      index.postings_[tokens[i]].push_back({doc, static_cast<std::uint32_t>(j - i)});
      i = j;
    }
  }
  index.avg_doc_length_ = static_cast<double>(total_length) / static_cast<double>(corpus.size());
  return index;
}

namespace {

double term_weight(double idf, double tf, double doc_len, double avgdl, const Bm25Params& p) {
  const double norm = avgdl > 0.0 ? doc_len / avgdl : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

double bm25_score(const LexicalIndex& index, const TokenList& query, const std::string& doc_id) {
  const auto doc = index.doc_number(doc_id);
  if (!doc) throw Error(ErrorCode::kUnknownDoc, doc_id);
  const double len = index.doc_lengths_[*doc];
  double score = 0.0;
  for (const auto& token : query) {
    const auto* plist = index.postings(token);
    if (!plist) continue;
    const auto it = std::lower_bound(plist->begin(), plist->end(), *doc,
                                     [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == plist->end() || it->doc != *doc) continue;
    score += term_weight(index.idf_for_df(plist->size()), it->tf, len, index.avg_doc_length_,
                         index.params_);
  }
  return score;
}

std::vector<std::pair<std::string, double>> top_k_lexical(const LexicalIndex& index,
                                                          std::string_view query, std::size_t k,
                                                          std::optional<int> shard) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::vector<double> scores(index.doc_count(), 0.0);
  for (const auto& token : normalize_text(query)) {
    const auto* plist = index.postings(token);
    if (!plist) continue;
    const double idf = index.idf_for_df(plist->size());
    for (const auto& p : *plist) {
      scores[p.doc] += term_weight(idf, p.tf, index.doc_lengths_[p.doc], index.avg_doc_length_,
                                   index.params_);
    }
  }
  std::vector<std::uint32_t> docs;
  docs.reserve(scores.size());
  for (std::uint32_t d = 0; d < scores.size(); ++d) {
    if (!shard || index.doc_shards_[d] == *shard) docs.push_back(d);
  }
  const auto better = [&](std::uint32_t x, std::uint32_t y) {
    if (scores[x] != scores[y]) return scores[x] > scores[y];
    return index.doc_ids_[x] < index.doc_ids_[y];
  };
  const std::size_t n = std::min(k, docs.size());
  std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n), docs.end(), better);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(index.doc_ids_[docs[i]], scores[docs[i]]);
  return out;
}

}  // namespace addrmatch
