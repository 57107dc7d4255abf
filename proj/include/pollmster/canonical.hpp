#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pollmster/csv.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

enum class AliasKind { Party, State };

// Alias table mapping folded raw strings to canonical names. Canonical names
// themselves always resolve (identity fallback), which makes lookup
// idempotent: lookup(lookup(x)) == lookup(x) whenever x resolves.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(AliasKind kind) : kind_(kind) {}

  void add(std::string_view raw, std::string_view canonical) {
    std::string folded = fold_key(raw);
    if (folded.empty()) throw ConfigError("alias table: empty raw value");
    std::string canon(trim(canonical));
    if (canon.empty()) throw ConfigError("alias table: empty canonical for '" + folded + "'");
    auto [it, inserted] = entries_.emplace(std::move(folded), canon);
    if (!inserted && it->second != canon)
      throw ConfigError("alias table: conflicting mappings for '" + it->first + "'");
    canonical_self_[fold_key(canon)] = canon;
  }

  std::optional<std::string> lookup(std::string_view raw) const {
    std::string folded = fold_key(raw);
    if (folded.empty()) return std::nullopt;
    if (auto it = entries_.find(folded); it != entries_.end()) return it->second;
    if (auto it = canonical_self_.find(folded); it != canonical_self_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t size() const { return entries_.size(); }
  AliasKind kind() const { return kind_; }

 private:
  AliasKind kind_ = AliasKind::Party;
  std::unordered_map<std::string, std::string> entries_;
  std::unordered_map<std::string, std::string> canonical_self_;
};

struct AliasTables {
  AliasTable party{AliasKind::Party};
  AliasTable state{AliasKind::State};
};

// CSV with header kind,raw,canonical where kind is "party" or "state".
inline AliasTables load_alias_tables(const std::filesystem::path& path) {
  auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw ConfigError("alias table is empty: " + path.string());
  const auto& header = rows.front();
  if (header.size() < 3 || fold_key(header[0]) != "kind" || fold_key(header[1]) != "raw" ||
      fold_key(header[2]) != "canonical")
    throw ConfigError("alias table header must be kind,raw,canonical: " + path.string());
  AliasTables tables;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 3)
      throw ConfigError(path.string() + ": row " + std::to_string(i + 1) + " has too few fields");
    std::string kind = fold_key(row[0]);
    if (kind == "party") tables.party.add(row[1], row[2]);
    else if (kind == "state") tables.state.add(row[1], row[2]);
    else
      throw ConfigError(path.string() + ": unknown alias kind '" + row[0] + "' at row " +
                        std::to_string(i + 1));
  }
  return tables;
}

// state -> parties contesting there. Parties outside a state's universe fold
// into OTHER.
using PartyUniverse = std::map<std::string, std::vector<std::string>>;

inline constexpr std::string_view kOtherParty = "OTHER";

struct CanonicalMention {
  std::string tweet_id;
  std::string state;
  std::string party;
  double sentiment = 0.0;
};

struct CanonicalizeOutcome {
  std::optional<CanonicalMention> mention;
  bool party_unresolved = false;
  bool state_unresolved = false;
  bool mapped_to_other = false;
};

struct CanonicalizeOptions {
  bool include_other = false;  // keep OTHER mentions in downstream aggregation
};

// Raw strings resolve through the alias tables; unmatched values leave the
// mention unresolved (excluded, counted). A resolved party that does not
// contest the resolved state becomes OTHER, which is dropped unless
// include_other is set.
inline CanonicalizeOutcome canonicalize_mention(std::string_view party_raw,
                                                std::string_view state_raw, double sentiment,
                                                std::string tweet_id, const AliasTables& tables,
                                                const PartyUniverse& universe,
                                                const CanonicalizeOptions& opts = {}) {
  CanonicalizeOutcome out;
  auto state = tables.state.lookup(state_raw);
  auto party = tables.party.lookup(party_raw);
  out.state_unresolved = !state;
  out.party_unresolved = !party;
  if (!state || !party) return out;
  std::string resolved_party = *party;
  if (resolved_party != kOtherParty) {
    auto uni = universe.find(*state);
    if (uni != universe.end() &&
        std::find(uni->second.begin(), uni->second.end(), resolved_party) == uni->second.end())
      resolved_party = std::string(kOtherParty);
  }
  if (resolved_party == kOtherParty) {
    out.mapped_to_other = true;
    if (!opts.include_other) return out;
  }
  CanonicalMention m;
  m.tweet_id = std::move(tweet_id);
  m.state = *state;
  m.party = std::move(resolved_party);
  m.sentiment = sentiment;
  out.mention = std::move(m);
  return out;
}

// Fraction of raw strings the table resolves; an empty input counts as fully
// covered. Used against the coverage target (default 0.999).
inline double alias_coverage(const AliasTable& table, const std::vector<std::string>& raws) {
  if (raws.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& r : raws)
    if (table.lookup(r)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(raws.size());
}

struct FrequencyRow {
  std::string raw;
  std::size_t count = 0;
  double cumulative = 0.0;   // running fraction of all observations
  bool within_target = false;  // part of the minimal prefix reaching the target
};

// Distinct raw strings by descending count (ties: raw ascending), with the
// rows needed to reach the coverage target flagged. This is the worklist for
// growing the alias table.
inline std::vector<FrequencyRow> frequency_report(const std::vector<std::string>& raws,
                                                  double coverage_target) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : raws) ++counts[r];
  std::vector<FrequencyRow> rows;
  rows.reserve(counts.size());
  for (const auto& [raw, count] : counts) rows.push_back({raw, count, 0.0, false});
  std::sort(rows.begin(), rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.raw < b.raw;
  });
  double total = static_cast<double>(raws.size());
  double running = 0.0;
  for (auto& row : rows) {
    row.within_target = running < coverage_target;
    running += static_cast<double>(row.count) / total;
    row.cumulative = running;
  }
  return rows;
}

}  // namespace pollmster
