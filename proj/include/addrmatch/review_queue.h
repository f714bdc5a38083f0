// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "addrmatch/pipeline.h"

namespace addrmatch {

enum class ReviewStatus { kPending, kResolved, kUndeliverable };

std::string_view to_string(ReviewStatus s);
ReviewStatus review_status_from_string(std::string_view s);  // "pending" | "resolved" | "undeliverable"

/// A ForReview decision waiting for (or having received) an operator verdict.
/// Resolved items carry a resolution; Pending and Undeliverable items do not.
struct ReviewItem {
  std::string item_id;
  std::uint64_t seq = 0;
  MatchDecision decision;
  ReviewStatus status = ReviewStatus::kPending;
  std::optional<std::string> resolution;
  std::optional<std::string> resolver;
  std::int64_t created_at_ms = 0;
  std::optional<std::int64_t> resolved_at_ms;
};

nlohmann::json to_json(const ReviewItem& item);
ReviewItem review_item_from_json(const nlohmann::json& j);

struct ResolveRequest {
  std::optional<std::string> chosen_id;
  bool undeliverable = false;
  std::optional<std::string> resolver;
};

/// Parses a resolve body. Throws InvalidArgument unless exactly one of
/// chosen_id / undeliverable=true is given.
ResolveRequest resolve_request_from_json(const nlohmann::json& j);

/// Maps an address id to the normalized text recorded in feedback pairs;
/// nullopt means the id is unknown.
using NormTextLookup = std::function<std::optional<std::string>(const std::string& id)>;

/// Review queue persisted as an append-only JSONL event log. Every enqueue and
/// resolve is written (and fsynced) before it becomes visible; construction
/// replays the log. An empty log path keeps the queue in memory.
class ReviewQueue {
 public:
  explicit ReviewQueue(std::string log_path = {}, std::string feedback_path = {});
  ~ReviewQueue();
  ReviewQueue(const ReviewQueue&) = delete;
  ReviewQueue& operator=(const ReviewQueue&) = delete;

  /// Throws InvalidArgument unless the decision's outcome is for_review.
  ReviewItem enqueue(const MatchDecision& decision);

  /// Newest first; `status` nullopt lists every item.
  std::vector<ReviewItem> list(std::optional<ReviewStatus> status, std::size_t limit) const;
  std::optional<ReviewItem> get(const std::string& item_id) const;
  std::size_t size() const;

  /// Pending -> Resolved (chosen_id) or Pending -> Undeliverable, as one
  /// compare-and-set. A chosen id appends a label-1 pair to the feedback file.
  /// Throws UnknownItem, AlreadyResolved, or InvalidArgument (bad request or
  /// chosen id unknown to `lookup`).
  ReviewItem resolve(const std::string& item_id, const ResolveRequest& req, const NormTextLookup& lookup);

 private:
  void replay();
  void append_event(const nlohmann::json& event);
  void apply_resolve(ReviewItem& item, const nlohmann::json& event);

  std::string log_path_;
  std::string feedback_path_;
  std::FILE* log_ = nullptr;
  mutable std::mutex mu_;
  std::map<std::uint64_t, ReviewItem> items_;
  std::map<std::string, std::uint64_t> by_id_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace addrmatch
