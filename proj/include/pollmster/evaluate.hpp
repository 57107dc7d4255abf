#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pollmster/util.hpp"
#include "pollmster/voteshare.hpp"

namespace pollmster {

struct DeviationRow {
  std::string state;
  std::string party;
  double deviation_pp = 0.0;  // absolute difference in percentage points
};

struct DeviationReport {
  std::string source_a;
  std::string source_b;
  std::vector<DeviationRow> rows;  // ordered by (state, party)
  double mean_pp = 0.0;
  double max_pp = 0.0;
  std::string max_state;
  std::string max_party;
  bool whole_percent = false;  // computed on rounded whole percents
};

namespace detail {

inline void finish_report(DeviationReport& report) {
  double sum = 0.0;
  report.max_pp = 0.0;
  for (const auto& row : report.rows) {
    sum += row.deviation_pp;
    if (row.deviation_pp > report.max_pp) {
      report.max_pp = row.deviation_pp;
      report.max_state = row.state;
      report.max_party = row.party;
    }
  }
  report.mean_pp = report.rows.empty() ? 0.0 : sum / static_cast<double>(report.rows.size());
}

inline void append_deviation_rows(DeviationReport& report, const ShareTable& a,
                                  const ShareTable& b) {
  std::set<std::string> parties;
  bool overlap = false;
  for (const auto& [party, share] : a.shares) parties.insert(party);
  for (const auto& [party, share] : b.shares) {
    if (parties.count(party)) overlap = true;
    parties.insert(party);
  }
  if (!a.shares.empty() && !b.shares.empty() && !overlap)
    throw ConfigError("share tables '" + a.source + "' and '" + b.source + "' for state '" +
                      a.state + "' have disjoint party sets; wrong file paired?");
  bool whole = a.whole_percent && b.whole_percent;
  auto value = [&](const ShareTable& t, const std::string& party) {
    auto it = t.shares.find(party);
    return it == t.shares.end() ? 0.0 : it->second;
  };
  for (const auto& party : parties) {
    double va = value(a, party);
    double vb = value(b, party);
    double dev = whole ? std::abs(static_cast<double>(percent_rounded(va) - percent_rounded(vb)))
                       : std::abs(va - vb) * 100.0;
    report.rows.push_back({a.state, party, dev});
  }
}

}  // namespace detail

// Per-party absolute deviation between two tables for the same state, scored
// over the union of their parties (missing entries count as zero). When both
// tables carry whole percents the difference is taken on the rounded values,
// matching how published tables read.
inline DeviationReport compare_tables(const ShareTable& a, const ShareTable& b) {
  if (a.state != b.state)
    throw ConfigError("cannot compare share tables for different states: '" + a.state +
                      "' vs '" + b.state + "'");
  DeviationReport report;
  report.source_a = a.source;
  report.source_b = b.source;
  report.whole_percent = a.whole_percent && b.whole_percent;
  detail::append_deviation_rows(report, a, b);
  detail::finish_report(report);
  return report;
}

// Pools per-state comparisons into one report; states are matched by name and
// every (state, party) row carries equal weight, so the mean is the
// row-count-weighted mean of the per-state means.
inline DeviationReport compare_table_sets(const std::vector<ShareTable>& a,
                                          const std::vector<ShareTable>& b) {
  DeviationReport report;
  std::map<std::string, const ShareTable*> by_state;
  for (const auto& t : b) by_state[t.state] = &t;
  bool whole = true;
  bool any = false;
  for (const auto& t : a) {
    auto it = by_state.find(t.state);
    if (it == by_state.end()) continue;
    if (report.source_a.empty()) {
      report.source_a = t.source;
      report.source_b = it->second->source;
    }
    any = true;
    whole = whole && t.whole_percent && it->second->whole_percent;
  }
  if (!any) throw ConfigError("no common states between share table sets");
  report.whole_percent = whole;
  for (const auto& t : a) {
    auto it = by_state.find(t.state);
    if (it == by_state.end()) continue;
    ShareTable ta = t;
    ShareTable tb = *it->second;
    ta.whole_percent = whole;
    tb.whole_percent = whole;
    detail::append_deviation_rows(report, ta, tb);
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const DeviationRow& x, const DeviationRow& y) {
    if (x.state != y.state) return x.state < y.state;
    return x.party < y.party;
  });
  detail::finish_report(report);
  return report;
}

// Highest share wins; exact ties return every tied party (name order).
inline std::vector<std::string> winners(const ShareTable& table) {
  std::vector<std::string> out;
  double best = 0.0;
  bool first = true;
  for (const auto& [party, share] : table.shares) {
    if (first || share > best) {
      best = share;
      out.clear();
      out.push_back(party);
      first = false;
    } else if (share == best) {
      out.push_back(party);
    }
  }
  return out;
}

}  // namespace pollmster
