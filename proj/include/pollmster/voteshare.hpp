#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pollmster/canonical.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

// Per-party sentiment rollup inside one state.
struct SentimentAggregate {
  double positive_magnitude = 0.0;  // sum of scores over positive mentions
  double negative_magnitude = 0.0;  // sum of |score| over negative mentions
  std::int64_t positive_volume = 0;
  std::int64_t negative_volume = 0;
  std::int64_t total_volume = 0;
};

using PartyAggregates = std::map<std::string, SentimentAggregate>;
using StateAggregates = std::map<std::string, PartyAggregates>;

struct VoteShareOptions {
  // Divide the cross-party numerators (NM, NV) by n-1 so each method's shares
  // sum to one. Off reproduces the raw formula; those shares are then flagged
  // as non-normalized.
  bool cross_method_normalizer = true;
  bool neutral_counts_in_total = true;
  enum class InvalidMethodPolicy { Exclude, Uniform } invalid_method_policy =
      InvalidMethodPolicy::Exclude;
};

inline StateAggregates aggregate_mentions(const std::vector<CanonicalMention>& mentions,
                                          const VoteShareOptions& opts = {}) {
  StateAggregates out;
  for (const auto& m : mentions) {
    auto& agg = out[m.state][m.party];
    if (m.sentiment > 0) {
      agg.positive_magnitude += m.sentiment;
      ++agg.positive_volume;
      ++agg.total_volume;
    } else if (m.sentiment < 0) {
      agg.negative_magnitude += -m.sentiment;
      ++agg.negative_volume;
      ++agg.total_volume;
    } else if (opts.neutral_counts_in_total) {
      ++agg.total_volume;
    }
  }
  return out;
}

enum class Method { PM, NM, PV, NV, TV };

inline constexpr std::array<Method, 5> kAllMethods = {Method::PM, Method::NM, Method::PV,
                                                      Method::NV, Method::TV};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::PM: return "PM";
    case Method::NM: return "NM";
    case Method::PV: return "PV";
    case Method::NV: return "NV";
    case Method::TV: return "TV";
  }
  return "?";
}

struct MethodShares {
  Method method = Method::PM;
  bool valid = false;       // underlying quantities were all-zero otherwise
  bool normalized = true;   // false only for NM/NV with the normalizer off
  std::map<std::string, double> shares;
};

namespace detail {

inline double method_quantity(const SentimentAggregate& a, Method m) {
  switch (m) {
    case Method::PM: return a.positive_magnitude;
    case Method::NM: return a.negative_magnitude;
    case Method::PV: return static_cast<double>(a.positive_volume);
    case Method::NV: return static_cast<double>(a.negative_volume);
    case Method::TV: return static_cast<double>(a.total_volume);
  }
  return 0.0;
}

inline bool is_cross_method(Method m) { return m == Method::NM || m == Method::NV; }

}  // namespace detail

// One state, one method. Same-signal methods (PM, PV, TV) score a party by
// its own fraction of the state total. Cross-signal methods (NM, NV) credit a
// party with everyone else's negativity; with the normalizer on, that
// numerator is averaged over the n-1 rivals so shares still sum to one.
inline MethodShares method_share(const PartyAggregates& aggs, Method method,
                                 const VoteShareOptions& opts = {}) {
  MethodShares out;
  out.method = method;
  double total = 0.0;
  for (const auto& [party, agg] : aggs) total += detail::method_quantity(agg, method);
  if (aggs.empty() || total <= 0.0) {
    out.valid = false;
    return out;
  }
  out.valid = true;
  std::size_t n = aggs.size();
  if (n == 1) {
    out.shares[aggs.begin()->first] = 1.0;
    return out;
  }
  if (!detail::is_cross_method(method)) {
    for (const auto& [party, agg] : aggs)
      out.shares[party] = detail::method_quantity(agg, method) / total;
    return out;
  }
  double denom = opts.cross_method_normalizer ? total * static_cast<double>(n - 1) : total;
  out.normalized = opts.cross_method_normalizer;
  for (const auto& [party, agg] : aggs)
    out.shares[party] = (total - detail::method_quantity(agg, method)) / denom;
  return out;
}

struct EnsembleShares {
  bool valid = false;  // no method produced shares: state is unpredictable
  bool renormalized = false;
  std::vector<Method> methods_used;
  std::map<std::string, double> shares;
};

// Unweighted mean over the methods that produced shares. When any method had
// to be excluded the mean no longer sums to one, so the result is rescaled
// (and flagged). The uniform policy instead substitutes 1/n for an invalid
// method, keeping all five in the average.
inline EnsembleShares ensemble_share(const PartyAggregates& aggs,
                                     const VoteShareOptions& opts = {}) {
  EnsembleShares out;
  if (aggs.empty()) return out;
  std::map<std::string, double> sums;
  for (const auto& [party, agg] : aggs) sums[party] = 0.0;
  std::size_t used = 0;
  bool excluded_any = false;
  for (Method m : kAllMethods) {
    MethodShares ms = method_share(aggs, m, opts);
    if (!ms.valid) {
      if (opts.invalid_method_policy == VoteShareOptions::InvalidMethodPolicy::Uniform) {
        double uniform = 1.0 / static_cast<double>(aggs.size());
        for (auto& [party, sum] : sums) sum += uniform;
        out.methods_used.push_back(m);
        ++used;
      } else {
        excluded_any = true;
      }
      continue;
    }
    for (const auto& [party, share] : ms.shares) sums[party] += share;
    out.methods_used.push_back(m);
    ++used;
  }
  if (used == 0) return out;
  out.valid = true;
  double total = 0.0;
  for (auto& [party, sum] : sums) {
    sum /= static_cast<double>(used);
    total += sum;
  }
  if (excluded_any && total > 0.0 && std::abs(total - 1.0) > 1e-12) {
    for (auto& [party, sum] : sums) sum /= total;
    out.renormalized = true;
  }
  out.shares = std::move(sums);
  return out;
}

// Whole-percent view used by the report tables.
inline std::map<std::string, long long> to_whole_percent(
    const std::map<std::string, double>& shares) {
  std::map<std::string, long long> out;
  for (const auto& [party, share] : shares) out[party] = percent_rounded(share);
  return out;
}

// A named table of party -> share (fractions of one). whole_percent marks
// tables that carry rounded percents, which switches comparisons to
// whole-point arithmetic.
struct ShareTable {
  std::string source;
  std::string state;
  std::map<std::string, double> shares;
  bool whole_percent = false;
};

inline std::vector<ShareTable> load_share_tables_csv(const std::filesystem::path& path) {
  auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw DataError("share table file is empty: " + path.string());
  const auto& header = rows.front();
  if (header.size() < 4 || fold_key(header[0]) != "source" || fold_key(header[1]) != "state" ||
      fold_key(header[2]) != "party" || fold_key(header[3]) != "share_percent")
    throw DataError("share table header must be source,state,party,share_percent: " +
                    path.string());
  std::map<std::pair<std::string, std::string>, ShareTable> grouped;
  std::map<std::pair<std::string, std::string>, bool> integral;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 4)
      throw DataError(path.string() + ": row " + std::to_string(i + 1) + " has too few fields");
    auto value = parse_double_strict(row[3]);
    if (!value)
      throw DataError(path.string() + ": bad share_percent '" + row[3] + "' at row " +
                      std::to_string(i + 1));
    auto key = std::make_pair(row[0], row[1]);
    auto& table = grouped[key];
    table.source = row[0];
    table.state = row[1];
    if (table.shares.count(row[2]))
      throw DataError(path.string() + ": duplicate party '" + row[2] + "' for " + row[0] + "/" +
                      row[1]);
    table.shares[row[2]] = *value / 100.0;
    auto [it, inserted] = integral.emplace(key, true);
    it->second = it->second && std::floor(*value) == *value;
  }
  std::vector<ShareTable> out;
  for (auto& [key, table] : grouped) {
    table.whole_percent = integral[key];
    out.push_back(std::move(table));
  }
  return out;
}

}  // namespace pollmster
