#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "pollmster/canonical.hpp"

using namespace pollmster;

namespace {

void write_temp(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

AliasTables bundled_tables() {
  return load_alias_tables(testutil::data_dir() / "aliases.csv");
}

PartyUniverse bundled_universe() {
  return {
      {"Punjab", {"AAP", "BJP", "INC", "SAD"}},
      {"Uttar Pradesh", {"BJP", "SP", "BSP", "INC", "AAP", "AIMIM"}},
  };
}

}  // namespace

TEST_CASE("state aliases from the documented list resolve") {
  auto tables = bundled_tables();
  CHECK(tables.state.lookup("UP") == "Uttar Pradesh");
  CHECK(tables.state.lookup("Uttar Pradesh (UP)") == "Uttar Pradesh");
  CHECK(tables.state.lookup("Jaunpur") == "Uttar Pradesh");
  CHECK(tables.state.lookup("Amethi") == "Uttar Pradesh");
  CHECK(tables.state.lookup("Varanasi") == "Uttar Pradesh");
  CHECK(tables.state.lookup("punjab") == "Punjab");
  CHECK(tables.state.lookup("Ludhiana") == "Punjab");
}

TEST_CASE("lookup folds case and whitespace") {
  auto tables = bundled_tables();
  CHECK(tables.state.lookup("  uttar   pradesh (up) ") == "Uttar Pradesh");
  CHECK(tables.party.lookup("AAM AADMI PARTY (AAP)") == "AAP");
  CHECK(tables.party.lookup(" bjp ") == "BJP");
}

TEST_CASE("canonical names resolve to themselves") {
  auto tables = bundled_tables();
  CHECK(tables.state.lookup("Uttar Pradesh") == "Uttar Pradesh");
  CHECK(tables.state.lookup("Punjab") == "Punjab");
  CHECK(tables.party.lookup("AAP") == "AAP");
  CHECK(tables.party.lookup("OTHER") == "OTHER");
}

TEST_CASE("lookup is idempotent on resolvable strings") {
  auto tables = bundled_tables();
  for (const char* raw : {"UP", "u.p.", "Varanasi", "Uttar Pradesh", "punjab", "Mohali"}) {
    auto once = tables.state.lookup(raw);
    REQUIRE(once.has_value());
    CHECK(tables.state.lookup(*once) == once);
  }
}

TEST_CASE("unknown strings stay unresolved") {
  auto tables = bundled_tables();
  CHECK_FALSE(tables.state.lookup("Maharashtra").has_value());
  CHECK_FALSE(tables.state.lookup("").has_value());
  CHECK_FALSE(tables.party.lookup("The Martian Party").has_value());
}

TEST_CASE("conflicting alias rows are rejected") {
  AliasTable t(AliasKind::State);
  t.add("up", "Uttar Pradesh");
  CHECK_THROWS_AS(t.add("UP", "Punjab"), ConfigError);
  CHECK_NOTHROW(t.add("U.P. ", "Uttar Pradesh") /* same mapping differs only by fold */);
}

TEST_CASE("canonicalize resolves a mention end to end") {
  auto tables = bundled_tables();
  auto universe = bundled_universe();
  auto out = canonicalize_mention("Aam Aadmi Party (AAP)", "punjab", 0.8, "t1", tables, universe);
  REQUIRE(out.mention.has_value());
  CHECK(out.mention->party == "AAP");
  CHECK(out.mention->state == "Punjab");
  CHECK(out.mention->sentiment == 0.8);
  CHECK(out.mention->tweet_id == "t1");
  CHECK_FALSE(out.party_unresolved);
  CHECK_FALSE(out.state_unresolved);
  CHECK_FALSE(out.mapped_to_other);
}

TEST_CASE("unresolved strings exclude the mention and set flags") {
  auto tables = bundled_tables();
  auto universe = bundled_universe();
  auto no_state = canonicalize_mention("BJP", "Maharashtra", 0.1, "t", tables, universe);
  CHECK_FALSE(no_state.mention.has_value());
  CHECK(no_state.state_unresolved);
  CHECK_FALSE(no_state.party_unresolved);

  auto no_party = canonicalize_mention("Unknown Front", "UP", 0.1, "t", tables, universe);
  CHECK_FALSE(no_party.mention.has_value());
  CHECK(no_party.party_unresolved);
  CHECK_FALSE(no_party.state_unresolved);
}

TEST_CASE("a party outside the state universe maps to OTHER") {
  auto tables = bundled_tables();
  auto universe = bundled_universe();
  // SAD contests Punjab but not UP.
  auto dropped = canonicalize_mention("Shiromani Akali Dal (SAD)", "UP", 0.4, "t", tables,
                                      universe);
  CHECK_FALSE(dropped.mention.has_value());
  CHECK(dropped.mapped_to_other);

  CanonicalizeOptions keep;
  keep.include_other = true;
  auto kept = canonicalize_mention("Shiromani Akali Dal (SAD)", "UP", 0.4, "t", tables, universe,
                                   keep);
  REQUIRE(kept.mention.has_value());
  CHECK(kept.mention->party == "OTHER");
  CHECK(kept.mapped_to_other);

  auto in_universe =
      canonicalize_mention("Shiromani Akali Dal (SAD)", "Punjab", 0.4, "t", tables, universe);
  REQUIRE(in_universe.mention.has_value());
  CHECK(in_universe.mention->party == "SAD");
}

TEST_CASE("alias-table OTHER mappings behave like out-of-universe parties") {
  auto tables = bundled_tables();
  auto universe = bundled_universe();
  auto out = canonicalize_mention("Shiv Sena", "Punjab", -0.2, "t", tables, universe);
  CHECK_FALSE(out.mention.has_value());
  CHECK(out.mapped_to_other);
  CHECK_FALSE(out.party_unresolved);
}

TEST_CASE("coverage is the resolved fraction with empty input fully covered") {
  auto tables = bundled_tables();
  CHECK(alias_coverage(tables.state, {}) == 1.0);
  CHECK(alias_coverage(tables.state, {"UP", "Punjab"}) == 1.0);
  CHECK(alias_coverage(tables.state, {"UP", "Atlantis"}) == 0.5);
}

TEST_CASE("coverage on a thousand raws with two unresolved misses the target") {
  auto tables = bundled_tables();
  std::vector<std::string> raws(998, "UP");
  raws.push_back("Atlantis");
  raws.push_back("Elbonia");
  double coverage = alias_coverage(tables.state, raws);
  CHECK(coverage == Catch::Approx(0.998).margin(1e-12));
  CHECK(coverage < 0.999);
}

TEST_CASE("frequency report orders by count then raw and flags the target prefix") {
  std::vector<std::string> raws;
  for (int i = 0; i < 6; ++i) raws.push_back("UP");
  for (int i = 0; i < 3; ++i) raws.push_back("Punjab");
  raws.push_back("zeta");
  raws.push_back("alpha");  // count tie with zeta, alphabetical order wins
  auto rows = frequency_report(raws, 0.9);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].raw == "UP");
  CHECK(rows[0].count == 6);
  CHECK(rows[1].raw == "Punjab");
  CHECK(rows[2].raw == "alpha");
  CHECK(rows[3].raw == "zeta");
  CHECK(rows[0].cumulative == Catch::Approx(6.0 / 11.0));
  CHECK(rows[3].cumulative == Catch::Approx(1.0));
  // 6/11 and 9/11 are below 0.9, so the first three rows are needed.
  CHECK(rows[0].within_target);
  CHECK(rows[1].within_target);
  CHECK(rows[2].within_target);
  CHECK_FALSE(rows[3].within_target);
}

TEST_CASE("alias csv loader validates the header and kinds") {
  testutil::ScratchDir dir("alias");
  auto bad_header = dir.path / "bad.csv";
  write_temp(bad_header, "raw,canonical\nup,UP\n");
  CHECK_THROWS_AS(load_alias_tables(bad_header), ConfigError);

  auto bad_kind = dir.path / "kind.csv";
  write_temp(bad_kind, "kind,raw,canonical\ncity,x,y\n");
  CHECK_THROWS_AS(load_alias_tables(bad_kind), ConfigError);
}
