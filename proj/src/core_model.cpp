// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/core_model.h"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "addrmatch/error.h"

namespace addrmatch {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedZip: return "MalformedZip";
    case ErrorCode::kInvalidCp4Prefix: return "InvalidCp4Prefix";
    case ErrorCode::kInvalidRecord: return "InvalidRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnknownDoc: return "UnknownDoc";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kCorruptStore: return "CorruptStore";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kSidecarUnreachable: return "SidecarUnreachable";
    case ErrorCode::kSidecarBadResponse: return "SidecarBadResponse";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kUnknownItem: return "UnknownItem";
    case ErrorCode::kAlreadyResolved: return "AlreadyResolved";
  }
  return "Unknown";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

int to_int(std::string_view digits) {
  int v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

struct ZipMatch {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last digit
  int cp4 = 0;
  int cp3 = 0;
};

// Matches a zip starting exactly at `pos`, which must be the start of a digit run.
std::optional<ZipMatch> match_zip_at(std::string_view text, std::size_t pos) {
  std::size_t run = pos;
  while (run < text.size() && is_digit(text[run])) ++run;
  const std::size_t len = run - pos;
  if (len == 7) {
    return ZipMatch{pos, run, to_int(text.substr(pos, 4)), to_int(text.substr(pos + 4, 3))};
  }
  if (len != 4 || run >= text.size()) return std::nullopt;
  if (text[run] != '-' && text[run] != ' ') return std::nullopt;
  const std::size_t second = run + 1;
  std::size_t run2 = second;
  while (run2 < text.size() && is_digit(text[run2])) ++run2;
  if (run2 - second != 3) return std::nullopt;
  return ZipMatch{pos, run2, to_int(text.substr(pos, 4)), to_int(text.substr(second, 3))};
}

// Decodes one UTF-8 code point; returns 0xFFFD and advances one byte on malformed input.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + extra >= s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += extra + 1;
  return cp;
}

// Latin-1 supplement letters used in Portuguese (and a few neighbours), folded
// to lowercase ASCII. Anything else outside ASCII acts as a separator.
char fold_latin1(char32_t cp) {
  if (cp >= 0xE0 && cp <= 0xFE) cp -= 0x20;  // lowercase block mirrors uppercase
  switch (cp) {
    case 0xC0: case 0xC1: case 0xC2: case 0xC3: case 0xC4: return 'a';
    case 0xC7: return 'c';
    case 0xC8: case 0xC9: case 0xCA: case 0xCB: return 'e';
    case 0xCC: case 0xCD: case 0xCE: case 0xCF: return 'i';
    case 0xD1: return 'n';
    case 0xD2: case 0xD3: case 0xD4: case 0xD5: case 0xD6: return 'o';
    case 0xD9: case 0xDA: case 0xDB: case 0xDC: return 'u';
    default: return 0;
  }
}

}  // namespace

std::string ZipCode::code() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%03d", cp4, cp3);
  return buf;
}

std::string ZipCode::render() const {
  if (designation.empty()) return code();
  return code() + " " + designation;
}

ZipCode parse_zip(std::string_view text) {
  const auto body = trim(text);
  if (body.empty() || !is_digit(body.front())) {
    throw Error(ErrorCode::kMalformedZip, "no postal code in '" + std::string(text) + "'");
  }
  const auto m = match_zip_at(body, 0);
  if (!m || (m->end < body.size() && is_digit(body[m->end]))) {
    throw Error(ErrorCode::kMalformedZip, "no postal code in '" + std::string(text) + "'");
  }
  if (m->cp4 < 1000) {
    throw Error(ErrorCode::kInvalidCp4Prefix, "CP4 must not start with 0: '" + std::string(text) + "'");
  }
  return ZipCode{m->cp4, m->cp3, std::string(trim(body.substr(m->end)))};
}

std::optional<ZipLocation> locate_zip(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_digit(text[i]) || (i > 0 && is_digit(text[i - 1]))) continue;
    const auto m = match_zip_at(text, i);
    if (!m || (m->end < text.size() && is_digit(text[m->end]))) continue;
    if (m->cp4 < 1000) continue;
    return ZipLocation{ZipCode{m->cp4, m->cp3, std::string(trim(text.substr(m->end)))}, m->begin, m->end};
  }
  return std::nullopt;
}

std::optional<ZipCode> find_zip(std::string_view text) {
  auto loc = locate_zip(text);
  if (!loc) return std::nullopt;
  return std::move(loc->zip);
}

TokenList normalize_text(std::string_view text) {
  TokenList tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    char folded = 0;
    if (cp < 0x80) {
      const auto c = static_cast<char>(cp);
      if (std::isalnum(static_cast<unsigned char>(c))) {
        folded = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    } else {
      folded = fold_latin1(cp);
    }
    if (folded) {
      current.push_back(folded);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string render_normalized(const NormalizedAddress& addr) {
  std::string out = addr.artery_type;
  out += ' ';
  out += addr.artery_name;
  out += ' ';
  out += addr.door_id;
  if (addr.accommodation_id && !addr.accommodation_id->empty()) {
    out += ' ';
    out += *addr.accommodation_id;
  }
  out += ' ';
  out += addr.zip.render();
  return out;
}

std::string artery_key(const NormalizedAddress& addr) {
  return join_tokens(normalize_text(addr.artery_type)) + "|" +
         join_tokens(normalize_text(addr.artery_name)) + "|" + std::to_string(addr.zip.cp4);
}

std::string door_key(const NormalizedAddress& addr) {
  return artery_key(addr) + "|" + join_tokens(normalize_text(addr.door_id)) + "|" +
         join_tokens(normalize_text(addr.accommodation_id.value_or("")));
}

void validate(const NormalizedAddress& addr) {
  if (addr.id.empty()) throw Error(ErrorCode::kInvalidRecord, "empty id");
  if (trim(addr.artery_name).empty()) {
    throw Error(ErrorCode::kInvalidRecord, "empty artery_name for id " + addr.id);
  }
  if (trim(addr.door_id).empty()) {
    throw Error(ErrorCode::kInvalidRecord, "empty door_id for id " + addr.id);
  }
  if (addr.zip.cp4 < 1000 || addr.zip.cp4 > 9999) {
    throw Error(addr.zip.cp4 >= 0 && addr.zip.cp4 < 1000 ? ErrorCode::kInvalidCp4Prefix
                                                         : ErrorCode::kInvalidRecord,
                "cp4 out of range for id " + addr.id + ": " + std::to_string(addr.zip.cp4));
  }
  if (addr.zip.cp3 < 0 || addr.zip.cp3 > 999) {
    throw Error(ErrorCode::kInvalidRecord, "cp3 out of range for id " + addr.id);
  }
}

void validate(const UnnormalizedAddress& addr) {
  if (trim(addr.raw).empty()) throw Error(ErrorCode::kInvalidRecord, "empty raw address");
}

const std::vector<std::pair<std::string, std::string>>& artery_abbreviations() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"Rua", "R."},         {"Avenida", "Av."},   {"Travessa", "Tv."}, {"Praça", "Pç."},
      {"Largo", "Lg."},      {"Estrada", "Estr."}, {"Beco", "Bc."},     {"Calçada", "Cç."},
      {"Alameda", "Al."},    {"Rotunda", "Rot."},
  };
  return table;
}

nlohmann::json to_json(const NormalizedAddress& addr) {
  nlohmann::json j;
  j["id"] = addr.id;
  j["artery_type"] = addr.artery_type;
  j["artery_name"] = addr.artery_name;
  j["door_id"] = addr.door_id;
  j["accommodation_id"] =
      addr.accommodation_id ? nlohmann::json(*addr.accommodation_id) : nlohmann::json(nullptr);
  j["cp4"] = addr.zip.cp4;
  j["cp3"] = addr.zip.cp3;
  j["designation"] = addr.zip.designation;
  return j;
}

NormalizedAddress address_from_json(const nlohmann::json& j) {
  NormalizedAddress addr;
  try {
    addr.id = j.at("id").get<std::string>();
    addr.artery_type = j.at("artery_type").get<std::string>();
    addr.artery_name = j.at("artery_name").get<std::string>();
    addr.door_id = j.at("door_id").get<std::string>();
    if (j.contains("accommodation_id") && !j["accommodation_id"].is_null()) {
      addr.accommodation_id = j["accommodation_id"].get<std::string>();
    }
    addr.zip.cp4 = j.at("cp4").get<int>();
    addr.zip.cp3 = j.at("cp3").get<int>();
    addr.zip.designation = j.value("designation", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  validate(addr);
  return addr;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidRecord, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

template <typename T, typename Fn>
void write_jsonl(const std::string& path, const std::vector<T>& items, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const auto& item : items) out << fn(item).dump() << '\n';
}

}  // namespace

std::vector<NormalizedAddress> read_corpus(const std::string& path) {
  std::vector<NormalizedAddress> corpus;
  for (const auto& j : read_jsonl(path)) corpus.push_back(address_from_json(j));
  return corpus;
}

void write_corpus(const std::string& path, const std::vector<NormalizedAddress>& corpus) {
  write_jsonl(path, corpus, [](const NormalizedAddress& a) { return to_json(a); });
}

nlohmann::json to_json(const UnnormalizedAddress& addr) {
  nlohmann::json j;
  j["raw"] = addr.raw;
  j["gold_id"] = addr.gold_id ? nlohmann::json(*addr.gold_id) : nlohmann::json(nullptr);
  return j;
}

UnnormalizedAddress unnormalized_from_json(const nlohmann::json& j) {
  UnnormalizedAddress addr;
  try {
    addr.raw = j.at("raw").get<std::string>();
    if (j.contains("gold_id") && !j["gold_id"].is_null()) addr.gold_id = j["gold_id"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRecord, e.what());
  }
  validate(addr);
  return addr;
}

std::vector<UnnormalizedAddress> read_gold(const std::string& path) {
  std::vector<UnnormalizedAddress> gold;
  for (const auto& j : read_jsonl(path)) gold.push_back(unnormalized_from_json(j));
  return gold;
}

void write_gold(const std::string& path, const std::vector<UnnormalizedAddress>& gold) {
  write_jsonl(path, gold, [](const UnnormalizedAddress& a) { return to_json(a); });
}

}  // namespace addrmatch
