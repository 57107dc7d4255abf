#include <catch2/catch_amalgamated.hpp>

#include "pollmster/csv.hpp"
#include "pollmster/util.hpp"

using namespace pollmster;

TEST_CASE("fold_key trims, lowercases, and collapses whitespace") {
  CHECK(fold_key("  Uttar   Pradesh \t") == "uttar pradesh");
  CHECK(fold_key("PUNJAB") == "punjab");
  CHECK(fold_key("") == "");
  CHECK(fold_key(" \t\n ") == "");
  CHECK(fold_key("a  b\tc") == "a b c");
}

TEST_CASE("round_half_away rounds halves away from zero") {
  CHECK(round_half_away(0.5) == 1.0);
  CHECK(round_half_away(1.5) == 2.0);
  CHECK(round_half_away(2.5) == 3.0);
  CHECK(round_half_away(-0.5) == -1.0);
  CHECK(round_half_away(21.666666) == 22.0);
  CHECK(round_half_away(21.333333) == 21.0);
  CHECK(percent_rounded(0.4366) == 44);
  CHECK(percent_rounded(0.005) == 1);
}

TEST_CASE("fnv1a64 matches reference vectors") {
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("strict double parse takes whole strings only") {
  CHECK(parse_double_strict("0.5") == 0.5);
  CHECK(parse_double_strict(" -0.25 ") == -0.25);
  CHECK(parse_double_strict("+0.5") == 0.5);
  CHECK(parse_double_strict("1e-3") == 0.001);
  CHECK_FALSE(parse_double_strict("0.8.").has_value());
  CHECK_FALSE(parse_double_strict("very positive").has_value());
  CHECK_FALSE(parse_double_strict("").has_value());
  CHECK_FALSE(parse_double_strict("nan").has_value());
}

TEST_CASE("prefix double parse tolerates trailing punctuation") {
  CHECK(parse_double_prefix("0.8.") == 0.8);
  CHECK(parse_double_prefix("+0.5") == 0.5);
  CHECK(parse_double_prefix("-1 (negative)") == -1.0);
  CHECK_FALSE(parse_double_prefix("positive 0.5").has_value());
  CHECK_FALSE(parse_double_prefix("").has_value());
}

TEST_CASE("timestamp parsing accepts iso-8601 variants") {
  CHECK(parse_timestamp_utc("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_timestamp_utc("2022-02-01T10:30:00Z") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01 10:30:00Z") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01T10:30:00") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01T16:00:00+05:30") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01T05:30:00-05:00") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01T10:30:00.123Z") == 1643711400);
  CHECK(parse_timestamp_utc("2022-02-01") == 1643673600);
}

TEST_CASE("timestamp parsing accepts the twitter api format") {
  CHECK(parse_timestamp_utc("Tue Feb 01 10:30:00 +0000 2022") == 1643711400);
  CHECK(parse_timestamp_utc("Tue Feb 01 16:00:00 +0530 2022") == 1643711400);
  CHECK(parse_timestamp_utc("Wed Feb 02 03:04:05 +0000 2022") == 1643771045);
}

TEST_CASE("timestamp parsing rejects malformed input") {
  CHECK_FALSE(parse_timestamp_utc("").has_value());
  CHECK_FALSE(parse_timestamp_utc("not a date").has_value());
  CHECK_FALSE(parse_timestamp_utc("2022-13-01T00:00:00Z").has_value());
  CHECK_FALSE(parse_timestamp_utc("2022-02-32T00:00:00Z").has_value());
  CHECK_FALSE(parse_timestamp_utc("2022-02-01T25:00:00Z").has_value());
  CHECK_FALSE(parse_timestamp_utc("2022/02/01").has_value());
  CHECK_FALSE(parse_timestamp_utc("Xyz Feb 01 10:30:00 +0000 2022").has_value());
}

TEST_CASE("timestamps normalize equal instants to one key") {
  auto a = parse_timestamp_utc("2022-02-01T10:30:00Z");
  auto b = parse_timestamp_utc("Tue Feb 01 16:00:00 +0530 2022");
  auto c = parse_timestamp_utc("2022-02-01 10:30:00+00:00");
  REQUIRE(a.has_value());
  CHECK(a == b);
  CHECK(a == c);
  CHECK(format_utc(*a) == "2022-02-01T10:30:00Z");
}

TEST_CASE("csv parser handles quotes, escapes, and newlines") {
  auto rows = parse_csv("a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"1", "x,y", "he said \"hi\""});

  auto crlf = parse_csv("a,b\r\n1,2\r\n");
  REQUIRE(crlf.size() == 2);
  CHECK(crlf[1] == std::vector<std::string>{"1", "2"});

  auto embedded = parse_csv("a\n\"line1\nline2\",z\n");
  REQUIRE(embedded.size() == 2);
  CHECK(embedded[1][0] == "line1\nline2");

  auto no_trailing_newline = parse_csv("a,b\n1,2");
  REQUIRE(no_trailing_newline.size() == 2);

  auto bom = parse_csv("\xef\xbb\xbfid,x\n1,2\n");
  CHECK(bom[0][0] == "id");
}

TEST_CASE("csv escape round-trips through the parser") {
  std::vector<std::string> nasty = {"plain", "with,comma", "with\"quote", "with\nnewline", ""};
  std::string line;
  for (std::size_t i = 0; i < nasty.size(); ++i) {
    if (i) line.push_back(',');
    line += csv_escape(nasty[i]);
  }
  line.push_back('\n');
  auto rows = parse_csv(line);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == nasty);
}
