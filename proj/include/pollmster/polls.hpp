#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pollmster/csv.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

enum class PollType { Opinion, Exit };
enum class PollUnit { Seats, Percent };

inline const char* poll_type_name(PollType t) { return t == PollType::Opinion ? "opinion" : "exit"; }
inline const char* poll_unit_name(PollUnit u) { return u == PollUnit::Seats ? "seats" : "percent"; }

struct PollRecord {
  std::string pollster;
  PollType type = PollType::Opinion;
  std::string state;
  std::string party;
  double low = 0.0;
  double high = 0.0;
  PollUnit unit = PollUnit::Percent;

  double median() const { return (low + high) / 2.0; }
};

struct PollLoadStats {
  std::size_t loaded = 0;
  std::size_t rejected = 0;
  std::vector<std::string> reasons;

  void reject(const std::string& reason) {
    ++rejected;
    if (reasons.size() < 50) reasons.push_back(reason);
  }
};

// CSV header: pollster,poll_type,state,party,low,high,unit. Rows with
// inverted ranges, negative values, or percent bounds above 100 are rejected
// and counted; a malformed header is fatal.
inline std::vector<PollRecord> load_poll_records(const std::filesystem::path& path,
                                                 PollLoadStats* stats = nullptr) {
  PollLoadStats local;
  PollLoadStats& st = stats ? *stats : local;
  auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw DataError("poll file is empty: " + path.string());
  const auto& header = rows.front();
  const std::array<const char*, 7> expect = {"pollster", "poll_type", "state", "party",
                                             "low",      "high",      "unit"};
  if (header.size() < expect.size())
    throw DataError("poll header must be pollster,poll_type,state,party,low,high,unit: " +
                    path.string());
  for (std::size_t i = 0; i < expect.size(); ++i)
    if (fold_key(header[i]) != expect[i])
      throw DataError("poll header must be pollster,poll_type,state,party,low,high,unit: " +
                      path.string());

  std::vector<PollRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    std::string where = path.filename().string() + ":" + std::to_string(i + 1);
    if (row.size() < expect.size()) {
      st.reject(where + ": too few fields");
      continue;
    }
    PollRecord rec;
    rec.pollster = trim(row[0]);
    std::string type = fold_key(row[1]);
    if (type == "opinion") rec.type = PollType::Opinion;
    else if (type == "exit") rec.type = PollType::Exit;
    else {
      st.reject(where + ": unknown poll_type '" + row[1] + "'");
      continue;
    }
    rec.state = trim(row[2]);
    rec.party = trim(row[3]);
    auto low = parse_double_strict(row[4]);
    auto high = parse_double_strict(row[5]);
    std::string unit = fold_key(row[6]);
    if (unit == "seats") rec.unit = PollUnit::Seats;
    else if (unit == "percent") rec.unit = PollUnit::Percent;
    else {
      st.reject(where + ": unknown unit '" + row[6] + "'");
      continue;
    }
    if (rec.pollster.empty() || rec.state.empty() || rec.party.empty()) {
      st.reject(where + ": missing pollster/state/party");
      continue;
    }
    if (!low || !high) {
      st.reject(where + ": non-numeric range");
      continue;
    }
    rec.low = *low;
    rec.high = *high;
    if (rec.low > rec.high) {
      st.reject(where + ": inverted range " + row[4] + ".." + row[5]);
      continue;
    }
    if (rec.low < 0) {
      st.reject(where + ": negative bound");
      continue;
    }
    if (rec.unit == PollUnit::Percent && rec.high > 100.0) {
      st.reject(where + ": percent above 100");
      continue;
    }
    out.push_back(std::move(rec));
    ++st.loaded;
  }
  return out;
}

// (state, poll_type) -> pollster -> that pollster's records.
using GroupedPolls =
    std::map<std::pair<std::string, PollType>, std::map<std::string, std::vector<PollRecord>>>;

inline GroupedPolls group_poll_records(const std::vector<PollRecord>& records) {
  GroupedPolls out;
  for (const auto& r : records) out[{r.state, r.type}][r.pollster].push_back(r);
  return out;
}

// One pollster's party percentages for a state. Seat projections convert via
// each party's share of the pollster's total projected seats; percent ranges
// renormalize so the parties sum to 100. Mixed units within one pollster and
// state cannot be reconciled and reject the whole group; so does a group
// whose medians sum to zero.
inline std::optional<std::map<std::string, double>> pollster_share(
    const std::vector<PollRecord>& records, std::string* reject_reason = nullptr) {
  auto fail = [&](const std::string& why) -> std::optional<std::map<std::string, double>> {
    if (reject_reason) *reject_reason = why;
    return std::nullopt;
  };
  if (records.empty()) return fail("no records");
  PollUnit unit = records.front().unit;
  for (const auto& r : records)
    if (r.unit != unit) return fail("mixed seat/percent units");
  double total = 0.0;
  std::map<std::string, double> medians;
  for (const auto& r : records) {
    if (medians.count(r.party)) return fail("duplicate party '" + r.party + "'");
    medians[r.party] = r.median();
    total += r.median();
  }
  if (total <= 0.0) return fail("medians sum to zero");
  std::map<std::string, double> out;
  for (const auto& [party, median] : medians) out[party] = median / total * 100.0;
  return out;
}

enum class ConsensusCombiner { Mean, Median };

// Combines per-pollster percentage maps into one consensus table. Parties a
// pollster omits contribute zero, then the combined row renormalizes to 100.
inline std::map<std::string, double> consensus_share(
    const std::vector<std::map<std::string, double>>& pollster_shares,
    ConsensusCombiner combiner = ConsensusCombiner::Mean) {
  std::map<std::string, double> out;
  if (pollster_shares.empty()) return out;
  std::map<std::string, std::vector<double>> columns;
  for (const auto& shares : pollster_shares)
    for (const auto& [party, value] : shares) columns[party];
  for (const auto& shares : pollster_shares)
    for (auto& [party, column] : columns) {
      auto it = shares.find(party);
      column.push_back(it == shares.end() ? 0.0 : it->second);
    }
  double total = 0.0;
  for (auto& [party, column] : columns) {
    double combined;
    if (combiner == ConsensusCombiner::Mean) {
      double sum = 0.0;
      for (double v : column) sum += v;
      combined = sum / static_cast<double>(column.size());
    } else {
      std::vector<double> sorted = column;
      std::sort(sorted.begin(), sorted.end());
      std::size_t n = sorted.size();
      combined = (n % 2 == 1) ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    }
    out[party] = combined;
    total += combined;
  }
  if (total > 0.0)
    for (auto& [party, value] : out) value = value / total * 100.0;
  return out;
}

struct DispersionRow {
  std::string party;
  double min = 0.0;
  double max = 0.0;
  double spread = 0.0;
  std::string min_pollster;
  std::string max_pollster;
};

// Per-party disagreement across pollsters: max minus min of their percentage
// for playing back how far apart the houses were.
inline std::vector<DispersionRow> dispersion(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& pollster_shares) {
  std::map<std::string, DispersionRow> rows;
  for (const auto& [pollster, shares] : pollster_shares) {
    for (const auto& [party, value] : shares) {
      auto it = rows.find(party);
      if (it == rows.end()) {
        rows[party] = DispersionRow{party, value, value, 0.0, pollster, pollster};
        continue;
      }
      if (value < it->second.min) {
        it->second.min = value;
        it->second.min_pollster = pollster;
      }
      if (value > it->second.max) {
        it->second.max = value;
        it->second.max_pollster = pollster;
      }
    }
  }
  std::vector<DispersionRow> out;
  for (auto& [party, row] : rows) {
    row.spread = row.max - row.min;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace pollmster
