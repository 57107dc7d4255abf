#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pollmster/csv.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

struct TweetRecord {
  std::string id;
  std::string created_at_raw;
  std::int64_t created_at_utc = 0;
  std::string username;
  std::string text;  // byte-exact as ingested
  std::string source_file;
};

enum class CorpusFormat { Jsonl, Csv };

struct LoadStats {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::vector<std::string> skip_reasons;  // capped, for diagnostics

  void skip(const std::string& reason) {
    ++skipped;
    if (skip_reasons.size() < 50) skip_reasons.push_back(reason);
  }
};

namespace detail {

inline const nlohmann::json* find_json_field(const nlohmann::json& obj,
                                             std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = obj.find(n);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

inline std::string json_as_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  return v.dump();
}

}  // namespace detail

// Accepts JSONL (one object per line) or CSV with a header row. Field names:
// id, created_at, username (or user), text (or tweet). Records with missing
// fields or unparseable timestamps are skipped and counted, never fatal.
inline std::vector<TweetRecord> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                            LoadStats* stats = nullptr) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  std::string content = read_file(path);
  std::vector<TweetRecord> out;
  std::string fname = path.filename().string();

  auto push = [&](std::string id, std::string created_raw, std::string user, std::string text,
                  std::size_t lineno) {
    if (id.empty() || created_raw.empty() || user.empty() || text.empty()) {
      st.skip(fname + ":" + std::to_string(lineno) + ": missing required field");
      return;
    }
    auto ts = parse_timestamp_utc(created_raw);
    if (!ts) {
      st.skip(fname + ":" + std::to_string(lineno) + ": bad timestamp '" + created_raw + "'");
      return;
    }
    TweetRecord rec;
    rec.id = std::move(id);
    rec.created_at_raw = std::move(created_raw);
    rec.created_at_utc = *ts;
    rec.username = std::move(user);
    rec.text = std::move(text);
    rec.source_file = fname;
    out.push_back(std::move(rec));
    ++st.loaded;
  };

  if (format == CorpusFormat::Jsonl) {
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t nl = content.find('\n', pos);
      std::string_view line(content.data() + pos,
                            (nl == std::string::npos ? content.size() : nl) - pos);
      pos = (nl == std::string::npos) ? content.size() + 1 : nl + 1;
      ++lineno;
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(trimmed, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        st.skip(fname + ":" + std::to_string(lineno) + ": invalid json");
        continue;
      }
      const auto* id = detail::find_json_field(j, {"id", "tweet_id", "id_str"});
      const auto* created = detail::find_json_field(j, {"created_at", "timestamp", "date"});
      const auto* user = detail::find_json_field(j, {"username", "user", "screen_name"});
      const auto* text = detail::find_json_field(j, {"text", "tweet", "content"});
      push(id ? detail::json_as_string(*id) : "", created ? detail::json_as_string(*created) : "",
           user ? detail::json_as_string(*user) : "", text ? detail::json_as_string(*text) : "",
           lineno);
    }
    return out;
  }

  // CSV path.
  auto rows = parse_csv(content);
  if (rows.empty()) return out;
  const auto& header = rows.front();
  auto col = [&](std::initializer_list<const char*> names) -> int {
    for (const char* n : names)
      for (std::size_t i = 0; i < header.size(); ++i)
        if (fold_key(header[i]) == n) return static_cast<int>(i);
    return -1;
  };
  int ci = col({"id", "tweet_id", "id_str"});
  int cc = col({"created_at", "timestamp", "date"});
  int cu = col({"username", "user", "screen_name"});
  int ct = col({"text", "tweet", "content"});
  if (ci < 0 || cc < 0 || cu < 0 || ct < 0)
    throw DataError(fname + ": csv header missing one of id/created_at/username/text");
  auto cell = [](const std::vector<std::string>& r, int idx) -> std::string {
    return idx >= 0 && static_cast<std::size_t>(idx) < r.size() ? r[static_cast<std::size_t>(idx)]
                                                                : std::string();
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    push(cell(rows[r], ci), cell(rows[r], cc), cell(rows[r], cu), cell(rows[r], ct), r + 1);
  }
  return out;
}

// Exact-duplicate removal on (id, normalized UTC timestamp, username, text).
// First occurrence wins; input order is preserved.
inline std::vector<TweetRecord> dedupe(const std::vector<TweetRecord>& records,
                                       std::size_t* removed = nullptr) {
  std::set<std::tuple<std::string, std::int64_t, std::string, std::string>> seen;
  std::vector<TweetRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto key = std::make_tuple(r.id, r.created_at_utc, r.username, r.text);
    if (seen.insert(std::move(key)).second) out.push_back(r);
  }
  if (removed) *removed = records.size() - out.size();
  return out;
}

struct QuerySet {
  std::string label;  // party name or GENERAL
  std::vector<std::string> terms;
};

inline std::vector<QuerySet> load_query_sets(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("query_sets") ||
      !j["query_sets"].is_array())
    throw ConfigError("query set file must be an object with a 'query_sets' array: " +
                      path.string());
  std::vector<QuerySet> sets;
  std::unordered_set<std::string> seen_terms;
  for (const auto& entry : j["query_sets"]) {
    if (!entry.is_object() || !entry.contains("party") || !entry.contains("terms"))
      throw ConfigError("each query set needs 'party' and 'terms': " + path.string());
    QuerySet qs;
    qs.label = entry["party"].get<std::string>();
    for (const auto& t : entry["terms"]) {
      std::string term = trim(t.get<std::string>());
      if (term.empty()) throw ConfigError("empty search term in set '" + qs.label + "'");
      if (!seen_terms.insert(to_lower(term)).second)
        throw ConfigError("duplicate search term across sets: '" + term + "'");
      qs.terms.push_back(std::move(term));
    }
    if (qs.terms.empty()) throw ConfigError("query set '" + qs.label + "' has no terms");
    sets.push_back(std::move(qs));
  }
  if (sets.empty()) throw ConfigError("no query sets defined: " + path.string());
  return sets;
}

namespace detail {

// Case-insensitive substring scan; when `word_boundary` is set the match must
// not touch an alphanumeric character on either side.
inline bool contains_term(const std::string& haystack_lower, const std::string& needle_lower,
                          bool word_boundary) {
  std::size_t pos = haystack_lower.find(needle_lower);
  while (pos != std::string::npos) {
    if (!word_boundary) return true;
    bool left_ok = pos == 0 || !ascii_alnum(haystack_lower[pos - 1]);
    std::size_t end = pos + needle_lower.size();
    bool right_ok = end >= haystack_lower.size() || !ascii_alnum(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    pos = haystack_lower.find(needle_lower, pos + 1);
  }
  return false;
}

}  // namespace detail

struct QueryMatch {
  TweetRecord record;
  std::vector<std::string> matched_terms;
};

// Keeps records matching at least one term from any set. #tag and @handle
// terms match as raw substrings; bare keywords and phrases require word
// boundaries. Matching is case-insensitive.
inline std::vector<QueryMatch> filter_by_queries(const std::vector<TweetRecord>& records,
                                                 const std::vector<QuerySet>& sets) {
  struct Prepared {
    std::string original;
    std::string lowered;
    bool boundary;
  };
  std::vector<Prepared> terms;
  for (const auto& qs : sets)
    for (const auto& t : qs.terms)
      terms.push_back({t, to_lower(t), !(t.front() == '#' || t.front() == '@')});

  std::vector<QueryMatch> out;
  for (const auto& rec : records) {
    std::string lowered = to_lower(rec.text);
    QueryMatch m;
    for (const auto& term : terms) {
      if (detail::contains_term(lowered, term.lowered, term.boundary)) {
        if (std::find(m.matched_terms.begin(), m.matched_terms.end(), term.original) ==
            m.matched_terms.end())
          m.matched_terms.push_back(term.original);
      }
    }
    if (!m.matched_terms.empty()) {
      m.record = rec;
      out.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace pollmster
