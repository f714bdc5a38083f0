// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/review_queue.h"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>

namespace addrmatch {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string make_item_id(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rv-%06llu", static_cast<unsigned long long>(seq));
  return buf;
}

}  // namespace

std::string_view to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::kPending: return "pending";
    case ReviewStatus::kResolved: return "resolved";
    case ReviewStatus::kUndeliverable: return "undeliverable";
  }
  return "pending";
}

ReviewStatus review_status_from_string(std::string_view s) {
  if (s == "pending") return ReviewStatus::kPending;
  if (s == "resolved") return ReviewStatus::kResolved;
  if (s == "undeliverable") return ReviewStatus::kUndeliverable;
  throw Error(ErrorCode::kInvalidArgument, "unknown review status '" + std::string(s) + "'");
}

nlohmann::json to_json(const ReviewItem& item) {
  nlohmann::json j{{"item_id", item.item_id},
                   {"seq", item.seq},
                   {"status", to_string(item.status)},
                   {"decision", to_json(item.decision, false)},
                   {"created_at_ms", item.created_at_ms}};
  j["resolution"] = item.resolution ? nlohmann::json(*item.resolution) : nlohmann::json(nullptr);
  j["resolver"] = item.resolver ? nlohmann::json(*item.resolver) : nlohmann::json(nullptr);
  j["resolved_at_ms"] = item.resolved_at_ms ? nlohmann::json(*item.resolved_at_ms) : nlohmann::json(nullptr);
  return j;
}

ReviewItem review_item_from_json(const nlohmann::json& j) {
  ReviewItem item;
  try {
    item.item_id = j.at("item_id").get<std::string>();
    item.seq = j.at("seq").get<std::uint64_t>();
    item.status = review_status_from_string(j.at("status").get<std::string>());
    item.decision = decision_from_json(j.at("decision"));
    item.created_at_ms = j.value("created_at_ms", std::int64_t{0});
    if (j.contains("resolution") && !j["resolution"].is_null()) item.resolution = j["resolution"].get<std::string>();
    if (j.contains("resolver") && !j["resolver"].is_null()) item.resolver = j["resolver"].get<std::string>();
    if (j.contains("resolved_at_ms") && !j["resolved_at_ms"].is_null()) {
      item.resolved_at_ms = j["resolved_at_ms"].get<std::int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  return item;
}

ResolveRequest resolve_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "resolve body must be a JSON object");
  ResolveRequest req;
  try {
    if (j.contains("chosen_id") && !j["chosen_id"].is_null()) req.chosen_id = j["chosen_id"].get<std::string>();
    if (j.contains("undeliverable") && !j["undeliverable"].is_null()) {
      req.undeliverable = j["undeliverable"].get<bool>();
    }
    if (j.contains("resolver") && !j["resolver"].is_null()) req.resolver = j["resolver"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  if (req.chosen_id && req.chosen_id->empty()) throw Error(ErrorCode::kInvalidArgument, "chosen_id is empty");
  if (!req.chosen_id && !req.undeliverable) {
    throw Error(ErrorCode::kInvalidArgument, "give chosen_id or undeliverable=true");
  }
  if (req.chosen_id && req.undeliverable) {
    throw Error(ErrorCode::kInvalidArgument, "chosen_id and undeliverable are exclusive");
  }
  return req;
}

ReviewQueue::ReviewQueue(std::string log_path, std::string feedback_path)
    : log_path_(std::move(log_path)), feedback_path_(std::move(feedback_path)) {
  if (log_path_.empty()) return;
  replay();
  log_ = std::fopen(log_path_.c_str(), "ab");
  if (!log_) throw Error(ErrorCode::kIo, "cannot open review log " + log_path_);
}

ReviewQueue::~ReviewQueue() {
  if (log_) std::fclose(log_);
}

void ReviewQueue::replay() {
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  const bool last_complete = [&] {
    in.clear();
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::streamoff>(in.tellg());
    if (size == 0) return true;
    in.seekg(size - 1);
    return in.get() == '\n';
  }();

  std::uint64_t valid_bytes = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    // A line without its newline was never acknowledged (crash mid-append).
    if (i + 1 == lines.size() && !last_complete) break;
    if (lines[i].empty()) {
      valid_bytes += 1;
      continue;
    }
    nlohmann::json ev;
    try {
      ev = nlohmann::json::parse(lines[i]);
      const auto kind = ev.at("event").get<std::string>();
      if (kind == "enqueue") {
        auto item = review_item_from_json(ev.at("item"));
        if (by_id_.count(item.item_id)) throw Error(ErrorCode::kCorruptStore, "duplicate item " + item.item_id);
        next_seq_ = std::max(next_seq_, item.seq + 1);
        by_id_[item.item_id] = item.seq;
        items_[item.seq] = std::move(item);
      } else if (kind == "resolve") {
        const auto id = ev.at("item_id").get<std::string>();
        const auto it = by_id_.find(id);
        if (it == by_id_.end()) throw Error(ErrorCode::kCorruptStore, "resolve of unknown item " + id);
        apply_resolve(items_.at(it->second), ev);
      } else {
        throw Error(ErrorCode::kCorruptStore, "unknown event '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kCorruptStore, log_path_ + " line " + std::to_string(i + 1) + ": " + e.what());
    }
    valid_bytes += lines[i].size() + 1;
  }
  if (!last_complete) {
    // Cut the torn tail so the next append starts on a fresh line.
    if (::truncate(log_path_.c_str(), static_cast<off_t>(valid_bytes)) != 0) {
      throw Error(ErrorCode::kIo, "cannot truncate " + log_path_);
    }
  }
}

void ReviewQueue::append_event(const nlohmann::json& event) {
  if (!log_) return;
  const auto line = event.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() || std::fflush(log_) != 0 ||
      ::fsync(::fileno(log_)) != 0) {
    throw Error(ErrorCode::kIo, "cannot append to review log " + log_path_);
  }
}

void ReviewQueue::apply_resolve(ReviewItem& item, const nlohmann::json& event) {
  if (item.status != ReviewStatus::kPending) throw Error(ErrorCode::kAlreadyResolved, item.item_id);
  item.status = review_status_from_string(event.at("status").get<std::string>());
  if (item.status == ReviewStatus::kPending) throw Error(ErrorCode::kCorruptStore, "resolve back to pending");
  if (event.contains("resolution") && !event["resolution"].is_null()) {
    item.resolution = event["resolution"].get<std::string>();
  }
  if (event.contains("resolver") && !event["resolver"].is_null()) item.resolver = event["resolver"].get<std::string>();
  item.resolved_at_ms = event.value("at_ms", std::int64_t{0});
}

ReviewItem ReviewQueue::enqueue(const MatchDecision& decision) {
  if (decision.outcome != Outcome::kForReview) {
    throw Error(ErrorCode::kInvalidArgument, "only for_review decisions are queued");
  }
  std::lock_guard lock(mu_);
  ReviewItem item;
  item.seq = next_seq_;
  item.item_id = make_item_id(item.seq);
  item.decision = decision;
  item.decision.timings = {};
  item.created_at_ms = now_ms();
  append_event({{"event", "enqueue"}, {"item", to_json(item)}});
  ++next_seq_;
  by_id_[item.item_id] = item.seq;
  items_[item.seq] = item;
  return item;
}

std::vector<ReviewItem> ReviewQueue::list(std::optional<ReviewStatus> status, std::size_t limit) const {
  std::lock_guard lock(mu_);
  std::vector<ReviewItem> out;
  for (auto it = items_.rbegin(); it != items_.rend() && out.size() < limit; ++it) {
    if (!status || it->second.status == *status) out.push_back(it->second);
  }
  return out;
}

std::optional<ReviewItem> ReviewQueue::get(const std::string& item_id) const {
  std::lock_guard lock(mu_);
  const auto it = by_id_.find(item_id);
  if (it == by_id_.end()) return std::nullopt;
  return items_.at(it->second);
}

std::size_t ReviewQueue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

ReviewItem ReviewQueue::resolve(const std::string& item_id, const ResolveRequest& req, const NormTextLookup& lookup) {
  if (req.chosen_id.has_value() == req.undeliverable) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of chosen_id or undeliverable=true");
  }
  std::lock_guard lock(mu_);
  const auto it = by_id_.find(item_id);
  if (it == by_id_.end()) throw Error(ErrorCode::kUnknownItem, item_id);
  auto& item = items_.at(it->second);
  if (item.status != ReviewStatus::kPending) {
    throw Error(ErrorCode::kAlreadyResolved, item_id + " is " + std::string(to_string(item.status)));
  }

  std::optional<std::string> norm_text;
  if (req.chosen_id) {
    if (lookup) norm_text = lookup(*req.chosen_id);
    if (!norm_text) throw Error(ErrorCode::kInvalidArgument, "unknown address id '" + *req.chosen_id + "'");
  }

  nlohmann::json ev{{"event", "resolve"},
                    {"item_id", item_id},
                    {"status", req.chosen_id ? "resolved" : "undeliverable"},
                    {"at_ms", now_ms()}};
  if (req.chosen_id) ev["resolution"] = *req.chosen_id;
  if (req.resolver) ev["resolver"] = *req.resolver;
  append_event(ev);
  apply_resolve(item, ev);

  if (norm_text && !feedback_path_.empty()) {
    append_pair(feedback_path_, TrainingPair{item.decision.query.raw, *norm_text, 1, NegCategory::kNone, false});
  }
  return item;
}

}  // namespace addrmatch
