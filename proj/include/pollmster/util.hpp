#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pollmster {

// Error taxonomy mapped to distinct CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool ascii_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && ascii_space(s[b])) ++b;
  while (e > b && ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

// Lookup normalization for alias tables and scavenged keys: trim, lowercase,
// collapse internal whitespace runs to a single space.
inline std::string fold_key(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ascii_lower(c));
  }
  return out;
}

// Table-style rounding: halves round away from zero.
inline double round_half_away(double x) {
  return x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
}

inline long long percent_rounded(double fraction) {
  return static_cast<long long>(round_half_away(fraction * 100.0));
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Whole-string numeric parse (leading/trailing whitespace allowed).
inline std::optional<double> parse_double_strict(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || std::isnan(v)) return std::nullopt;
  return v;
}

// Longest numeric prefix; tolerates trailing sentence punctuation ("0.8.").
inline std::optional<double> parse_double_prefix(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || errno == ERANGE || std::isnan(v)) return std::nullopt;
  return v;
}

namespace detail {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool parse_int(std::string_view s, std::size_t& pos, int digits, int& out) {
  if (pos + static_cast<std::size_t>(digits) > s.size()) return false;
  int v = 0;
  for (int i = 0; i < digits; ++i) {
    char c = s[pos + static_cast<std::size_t>(i)];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += static_cast<std::size_t>(digits);
  out = v;
  return true;
}

inline int month_from_abbrev(std::string_view m) {
  static constexpr const char* names[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                          "jul", "aug", "sep", "oct", "nov", "dec"};
  std::string low = to_lower(m);
  for (int i = 0; i < 12; ++i)
    if (low == names[i]) return i + 1;
  return 0;
}

inline bool is_weekday_abbrev(std::string_view w) {
  static constexpr const char* names[] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
  std::string low = to_lower(w);
  for (const char* n : names)
    if (low == n) return true;
  return false;
}

}  // namespace detail

// Parses ISO 8601 ("2022-02-01T10:00:00Z", space separator, ±hh[:]mm offsets,
// fractional seconds ignored) and the classic Twitter API format
// ("Tue Feb 01 10:00:00 +0000 2022"). Returns UTC epoch seconds.
inline std::optional<std::int64_t> parse_timestamp_utc(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;

  auto assemble = [](int y, int mo, int d, int h, int mi, int se,
                     int off_sign, int off_h, int off_m) -> std::optional<std::int64_t> {
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return std::nullopt;
    std::int64_t t = detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
    t -= off_sign * (off_h * 3600 + off_m * 60);
    return t;
  };

  // Twitter classic: "Wed Feb 02 03:04:05 +0000 2022"
  if (s.size() >= 4 && !std::isdigit(static_cast<unsigned char>(s[0]))) {
    std::istringstream in{s};
    std::string wday, mon;
    int day, h, mi, se, year;
    char c1, c2;
    std::string off;
    in >> wday >> mon >> day >> h >> c1 >> mi >> c2 >> se >> off >> year;
    if (!in.fail() && detail::is_weekday_abbrev(wday) && c1 == ':' && c2 == ':' &&
        off.size() == 5 && (off[0] == '+' || off[0] == '-')) {
      int mo = detail::month_from_abbrev(mon);
      if (mo == 0) return std::nullopt;
      int off_h = (off[1] - '0') * 10 + (off[2] - '0');
      int off_m = (off[3] - '0') * 10 + (off[4] - '0');
      return assemble(year, mo, day, h, mi, se, off[0] == '-' ? -1 : 1, off_h, off_m);
    }
    return std::nullopt;
  }

  // ISO 8601.
  std::size_t pos = 0;
  int y, mo, d, h = 0, mi = 0, se = 0;
  if (!detail::parse_int(s, pos, 4, y)) return std::nullopt;
  if (pos >= s.size() || s[pos] != '-') return std::nullopt;
  ++pos;
  if (!detail::parse_int(s, pos, 2, mo)) return std::nullopt;
  if (pos >= s.size() || s[pos] != '-') return std::nullopt;
  ++pos;
  if (!detail::parse_int(s, pos, 2, d)) return std::nullopt;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!detail::parse_int(s, pos, 2, h)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!detail::parse_int(s, pos, 2, mi)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!detail::parse_int(s, pos, 2, se)) return std::nullopt;
    }
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
  }
  int off_sign = 0, off_h = 0, off_m = 0;
  if (pos < s.size()) {
    char z = s[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      off_sign = (z == '-') ? -1 : 1;
      ++pos;
      if (!detail::parse_int(s, pos, 2, off_h)) return std::nullopt;
      if (pos < s.size() && s[pos] == ':') ++pos;
      if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        if (!detail::parse_int(s, pos, 2, off_m)) return std::nullopt;
      }
    }
  }
  if (pos != s.size()) return std::nullopt;
  return assemble(y, mo, d, h, mi, se, off_sign == 0 ? 1 : off_sign, off_sign == 0 ? 0 : off_h,
                  off_sign == 0 ? 0 : off_m);
}

inline std::string format_utc(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  // civil_from_days (inverse of days_from_civil)
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<long long>(y + (m <= 2)), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return std::string(buf);
}

// Fixed-width fraction formatting keeps report files byte-stable across runs.
inline std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return std::string(buf);
}

}  // namespace pollmster
