#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pollmster/util.hpp"

namespace pollmster {

// Recovery ladder for model output. Each stage is tried in order and the
// ladder stops at the first stage producing at least one valid mention.
enum class Stage { DirectJson, RegexJson, TokenScavenge, Failed };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::DirectJson: return "direct_json";
    case Stage::RegexJson: return "regex_json";
    case Stage::TokenScavenge: return "token_scavenge";
    case Stage::Failed: return "failed";
  }
  return "failed";
}

inline std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : {Stage::DirectJson, Stage::RegexJson, Stage::TokenScavenge, Stage::Failed})
    if (name == stage_name(s)) return s;
  return std::nullopt;
}

struct RawMention {
  std::string party_raw;
  std::string state_raw;
  double sentiment = 0.0;

  bool operator==(const RawMention&) const = default;
};

struct ExtractionResult {
  Stage stage = Stage::Failed;
  std::vector<RawMention> mentions;
  std::vector<std::string> warnings;
};

struct SentimentBounds {
  double min = -1.0;
  double max = 1.0;
};

namespace detail {

enum class Field { Party, State, Sentiment };

// Alias lists per field. Keys are matched after folding, with '_' treated as
// a space, so "Sentiment_Score" and "sentiment score" are the same key.
struct KeyAlias {
  Field field;
  std::string_view name;  // folded spelling with single spaces
};

// Longest spellings first so "party name" wins over "party" and the scan
// consumes the full key.
inline constexpr std::array<KeyAlias, 7> kKeyAliases = {{
    {Field::Sentiment, "sentiment score"},
    {Field::Party, "party name"},
    {Field::State, "state name"},
    {Field::Sentiment, "sentiment"},
    {Field::Party, "party"},
    {Field::State, "state"},
    {Field::Sentiment, "score"},
}};

inline std::string fold_json_key(std::string_view key) {
  std::string replaced(key);
  for (char& c : replaced)
    if (c == '_') c = ' ';
  return fold_key(replaced);
}

inline std::optional<Field> classify_key(std::string_view key) {
  std::string folded = fold_json_key(key);
  for (const auto& alias : kKeyAliases)
    if (folded == alias.name) return alias.field;
  return std::nullopt;
}

}  // namespace detail

// A mention as pulled from text, before numeric validation.
struct MentionCandidate {
  std::optional<std::string> party;
  std::optional<std::string> state;
  std::optional<std::string> sentiment_token;
  std::optional<double> sentiment_value;  // set when the source was a json number

  bool complete() const { return party && state && (sentiment_token || sentiment_value); }
};

// Applies the acceptance rules: party must be non-empty, sentiment must be
// numeric (strings holding numbers are fine), out-of-range scores clamp to the
// nearer bound with a warning. Returns nullopt when the mention is dropped.
inline std::optional<RawMention> validate_mention(const MentionCandidate& cand,
                                                  std::vector<std::string>& warnings,
                                                  SentimentBounds bounds = {},
                                                  bool prefix_numeric = false) {
  if (!cand.complete()) {
    std::string missing;
    if (!cand.party) missing = "party";
    else if (!cand.state) missing = "state";
    else missing = "sentiment";
    warnings.push_back("mention dropped: missing " + missing + " key");
    return std::nullopt;
  }
  std::string party = trim(*cand.party);
  if (party.empty()) {
    warnings.push_back("mention dropped: empty party");
    return std::nullopt;
  }
  double score;
  if (cand.sentiment_value) {
    score = *cand.sentiment_value;
  } else {
    auto parsed = prefix_numeric ? parse_double_prefix(*cand.sentiment_token)
                                 : parse_double_strict(*cand.sentiment_token);
    if (!parsed) {
      warnings.push_back("mention dropped: non-numeric sentiment '" + *cand.sentiment_token + "'");
      return std::nullopt;
    }
    score = *parsed;
  }
  if (std::isnan(score)) {
    warnings.push_back("mention dropped: sentiment is not a number");
    return std::nullopt;
  }
  if (score < bounds.min) {
    warnings.push_back("sentiment " + format_fraction(score) + " clamped to " +
                       format_fraction(bounds.min));
    score = bounds.min;
  } else if (score > bounds.max) {
    warnings.push_back("sentiment " + format_fraction(score) + " clamped to " +
                       format_fraction(bounds.max));
    score = bounds.max;
  }
  RawMention m;
  m.party_raw = std::move(party);
  m.state_raw = trim(*cand.state);
  m.sentiment = score;
  return m;
}

namespace detail {

inline std::optional<MentionCandidate> candidate_from_object(const nlohmann::json& obj,
                                                             std::vector<std::string>& warnings) {
  if (!obj.is_object()) {
    warnings.push_back("non-object json element skipped");
    return std::nullopt;
  }
  MentionCandidate cand;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto field = classify_key(it.key());
    if (!field) continue;
    const nlohmann::json& v = it.value();
    switch (*field) {
      case Field::Party:
        if (!cand.party && v.is_string()) cand.party = v.get<std::string>();
        break;
      case Field::State:
        if (!cand.state && v.is_string()) cand.state = v.get<std::string>();
        break;
      case Field::Sentiment:
        if (cand.sentiment_token || cand.sentiment_value) break;
        if (v.is_number()) cand.sentiment_value = v.get<double>();
        else if (v.is_string()) cand.sentiment_token = v.get<std::string>();
        else cand.sentiment_token = v.dump();
        break;
    }
  }
  if (!cand.party && !cand.state && !cand.sentiment_token && !cand.sentiment_value)
    return std::nullopt;  // unrelated object, not worth a warning
  return cand;
}

inline std::vector<RawMention> mentions_from_json(const nlohmann::json& j,
                                                  std::vector<std::string>& warnings,
                                                  SentimentBounds bounds) {
  std::vector<RawMention> mentions;
  auto consume = [&](const nlohmann::json& node) {
    auto cand = candidate_from_object(node, warnings);
    if (!cand) return;
    if (auto m = validate_mention(*cand, warnings, bounds)) mentions.push_back(std::move(*m));
  };
  if (j.is_array()) {
    for (const auto& e : j) consume(e);
  } else if (j.is_object()) {
    consume(j);
  }
  return mentions;
}

// Locates balanced {...} / [...] spans, honoring string literals and escapes.
// Returns byte ranges [begin, end). Spans never nest in the output: once a
// balanced span is found the scan resumes after it; an unbalanced opener is
// stepped over so inner structures can still be rescued.
struct Span {
  std::size_t begin;
  std::size_t end;
};

inline std::optional<std::size_t> match_balanced(std::string_view text, std::size_t start) {
  char open = text[start];
  char close = (open == '{') ? '}' : ']';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == open) ++depth;
    else if (c == close && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

inline std::vector<Span> balanced_spans(std::string_view text) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '{' || c == '[') {
      if (auto end = match_balanced(text, i)) {
        spans.push_back({i, *end});
        i = *end;
        continue;
      }
    }
    ++i;
  }
  return spans;
}

// ---- token scavenging -----------------------------------------------------

// Matches a key alias at `pos`: folded spelling with '_' or whitespace runs
// behaving as one space, non-alphanumeric boundaries on both sides, and a
// ':' or '=' separator after (closing quote and spaces allowed in between).
struct KeyHit {
  Field field;
  std::size_t value_start;  // position just past the separator
};

inline std::optional<std::size_t> match_alias_at(std::string_view text, std::size_t pos,
                                                 std::string_view alias) {
  std::size_t i = pos;
  for (std::size_t a = 0; a < alias.size(); ++a) {
    if (alias[a] == ' ') {
      std::size_t before = i;
      while (i < text.size() && (text[i] == '_' || ascii_space(text[i]))) ++i;
      if (i == before) return std::nullopt;
      continue;
    }
    if (i >= text.size() || ascii_lower(text[i]) != alias[a]) return std::nullopt;
    ++i;
  }
  return i;
}

inline std::optional<KeyHit> key_at(std::string_view text, std::size_t pos) {
  if (pos > 0 && (ascii_alnum(text[pos - 1]) || text[pos - 1] == '_')) return std::nullopt;
  for (const auto& alias : kKeyAliases) {
    auto end = match_alias_at(text, pos, alias.name);
    if (!end) continue;
    std::size_t i = *end;
    if (i < text.size() && (ascii_alnum(text[i]) || text[i] == '_')) continue;
    if (i < text.size() && (text[i] == '"' || text[i] == '\'')) ++i;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i >= text.size() || (text[i] != ':' && text[i] != '=')) continue;
    ++i;
    return KeyHit{alias.field, i};
  }
  return std::nullopt;
}

struct ScavengedValue {
  std::string text;
  std::size_t next_pos;
  bool quoted;
};

inline ScavengedValue scavenge_value(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  ScavengedValue out{std::string(), pos, false};
  if (pos < text.size() && (text[pos] == '"' || text[pos] == '\'')) {
    char q = text[pos];
    std::size_t end = pos + 1;
    while (end < text.size() && text[end] != q && text[end] != '\n' && text[end] != '\r') ++end;
    out.text = std::string(text.substr(pos + 1, end - pos - 1));
    out.next_pos = end < text.size() && text[end] == q ? end + 1 : end;
    out.quoted = true;
    return out;
  }
  std::size_t end = pos;
  while (end < text.size()) {
    char c = text[end];
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '}' || c == ']' || c == '"' ||
        c == '\'')
      break;
    if (key_at(text, end)) break;
    ++end;
  }
  std::string value = trim(text.substr(pos, end - pos));
  // Drop sentence punctuation stuck to a bare value; ')' stays because raw
  // labels like "Congress (INC)" are real values.
  while (!value.empty()) {
    char c = value.back();
    if (c == '.' || c == '!' || c == '?') value.pop_back();
    else break;
  }
  out.text = std::move(value);
  out.next_pos = end;
  return out;
}

inline std::vector<RawMention> scavenge_tokens(std::string_view text,
                                               std::vector<std::string>& warnings,
                                               SentimentBounds bounds) {
  std::vector<RawMention> mentions;
  MentionCandidate cand;
  bool cand_open = false;

  auto flush_incomplete = [&]() {
    if (cand_open) warnings.push_back("scavenge: incomplete mention discarded");
    cand = MentionCandidate{};
    cand_open = false;
  };
  auto set_field = [&](Field f, std::string value) {
    auto assign = [&](std::optional<std::string>& slot) {
      if (slot) flush_incomplete();
      slot = std::move(value);
      cand_open = true;
    };
    if (f == Field::Party) assign(cand.party);
    else if (f == Field::State) assign(cand.state);
    else assign(cand.sentiment_token);
    if (cand.complete()) {
      if (auto m = validate_mention(cand, warnings, bounds, /*prefix_numeric=*/true))
        mentions.push_back(std::move(*m));
      cand = MentionCandidate{};
      cand_open = false;
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    auto hit = key_at(text, i);
    if (!hit) {
      ++i;
      continue;
    }
    auto value = scavenge_value(text, hit->value_start);
    set_field(hit->field, std::move(value.text));
    i = value.next_pos > i ? value.next_pos : i + 1;
  }
  flush_incomplete();
  return mentions;
}

}  // namespace detail

// Three-stage extraction. Sentiment bounds default to [-1, 1].
inline ExtractionResult extract_mentions(std::string_view raw_output,
                                         SentimentBounds bounds = {}) {
  ExtractionResult result;

  // Stage 1: the whole payload parses as JSON.
  {
    std::vector<std::string> warnings;
    nlohmann::json j = nlohmann::json::parse(raw_output, nullptr, false);
    if (!j.is_discarded()) {
      auto mentions = detail::mentions_from_json(j, warnings, bounds);
      if (!mentions.empty()) {
        result.stage = Stage::DirectJson;
        result.mentions = std::move(mentions);
        result.warnings = std::move(warnings);
        return result;
      }
      result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    }
  }

  // Stage 2: balanced {...} / [...] spans inside prose, longest first, then
  // leftmost. The first span yielding valid mentions wins.
  {
    auto spans = detail::balanced_spans(raw_output);
    std::stable_sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
      std::size_t la = a.end - a.begin, lb = b.end - b.begin;
      if (la != lb) return la > lb;
      return a.begin < b.begin;
    });
    for (const auto& span : spans) {
      std::vector<std::string> warnings;
      nlohmann::json j = nlohmann::json::parse(
          raw_output.substr(span.begin, span.end - span.begin), nullptr, false);
      if (j.is_discarded()) continue;
      auto mentions = detail::mentions_from_json(j, warnings, bounds);
      if (!mentions.empty()) {
        result.stage = Stage::RegexJson;
        result.mentions = std::move(mentions);
        result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
        return result;
      }
      result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    }
  }

  // Stage 3: key/value scavenging over the raw text.
  {
    std::vector<std::string> warnings;
    auto mentions = detail::scavenge_tokens(raw_output, warnings, bounds);
    result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    if (!mentions.empty()) {
      result.stage = Stage::TokenScavenge;
      result.mentions = std::move(mentions);
      return result;
    }
  }

  result.stage = Stage::Failed;
  return result;
}

// Canonical serialized shape, also used by the round-trip tests: extracting
// this output again must land in stage direct_json with equal mentions.
inline std::string mentions_to_json(const std::vector<RawMention>& mentions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : mentions) {
    nlohmann::json o;
    o["party"] = m.party_raw;
    o["state"] = m.state_raw;
    o["sentiment_score"] = m.sentiment;
    arr.push_back(std::move(o));
  }
  return arr.dump();
}

}  // namespace pollmster
