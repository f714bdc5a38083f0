// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace addrmatch {

/// 7-digit Portuguese postal code (CP4-CP3) plus the post-office designation.
struct ZipCode {
  int cp4 = 1000;
  int cp3 = 0;
  std::string designation;

  /// "CP4-CP3", cp3 zero-padded.
  std::string code() const;
  /// "CP4-CP3 DESIGNATION" (no trailing space when the designation is empty).
  std::string render() const;
  int shard() const { return cp4 / 1000; }

  bool operator==(const ZipCode&) const = default;
};

/// Parses "DDDD-DDD", "DDDD DDD" or "DDDDDDD" at the start of `text`; whatever
/// follows becomes the designation. Throws MalformedZip / InvalidCp4Prefix.
ZipCode parse_zip(std::string_view text);

/// Scans free text for the first well-formed postal code with a valid CP4.
/// Used on unnormalized input where the code sits somewhere in the middle.
std::optional<ZipCode> find_zip(std::string_view text);

/// find_zip plus the byte range [begin, end) the digits occupy in `text`.
struct ZipLocation {
  ZipCode zip;
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::optional<ZipLocation> locate_zip(std::string_view text);

struct NormalizedAddress {
  std::string id;
  std::string artery_type;
  std::string artery_name;
  std::string door_id;
  std::optional<std::string> accommodation_id;
  ZipCode zip;

  bool operator==(const NormalizedAddress&) const = default;
};

struct UnnormalizedAddress {
  std::string raw;
  std::optional<std::string> gold_id;
};

using TokenList = std::vector<std::string>;

/// Lowercase, fold Portuguese diacritics, split on anything outside [a-z0-9].
TokenList normalize_text(std::string_view text);
std::string join_tokens(const TokenList& tokens);

/// "ARTERY_TYPE ARTERY_NAME DOOR_ID [ACCOMMODATION_ID] CP4-CP3 DESIGNATION"
std::string render_normalized(const NormalizedAddress& addr);

std::string artery_key(const NormalizedAddress& addr);
std::string door_key(const NormalizedAddress& addr);

/// Throws InvalidRecord / InvalidCp4Prefix when the record breaks a field invariant.
void validate(const NormalizedAddress& addr);
void validate(const UnnormalizedAddress& addr);

/// Abbreviations commonly used for artery types ("Rua" -> "R.").
const std::vector<std::pair<std::string, std::string>>& artery_abbreviations();

// Line-delimited JSON corpus records.
nlohmann::json to_json(const NormalizedAddress& addr);
NormalizedAddress address_from_json(const nlohmann::json& j);
std::vector<NormalizedAddress> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<NormalizedAddress>& corpus);

// Gold file records: {raw, gold_id}.
nlohmann::json to_json(const UnnormalizedAddress& addr);
UnnormalizedAddress unnormalized_from_json(const nlohmann::json& j);
std::vector<UnnormalizedAddress> read_gold(const std::string& path);
void write_gold(const std::string& path, const std::vector<UnnormalizedAddress>& gold);

/// Reads every non-blank line of a JSONL file. Throws kIo on open failure.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

}  // namespace addrmatch
