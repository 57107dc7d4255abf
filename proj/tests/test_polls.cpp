#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "pollmster/polls.hpp"
#include "pollmster/util.hpp"

using namespace pollmster;

namespace {

PollRecord rec(const std::string& pollster, const std::string& party, double low, double high,
               PollUnit unit = PollUnit::Percent) {
  PollRecord r;
  r.pollster = pollster;
  r.type = PollType::Opinion;
  r.state = "S";
  r.party = party;
  r.low = low;
  r.high = high;
  r.unit = unit;
  return r;
}

std::filesystem::path write_temp(const testutil::ScratchDir& dir, const std::string& name,
                                 const std::string& content) {
  auto path = dir.path / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("range medians are the midpoint") {
  CHECK(rec("p", "A", 56, 58).median() == 57.0);
  CHECK(rec("p", "A", 10, 10).median() == 10.0);
  CHECK(rec("p", "A", 15, 20).median() == 17.5);
}

TEST_CASE("seat projections convert through the seat share") {
  // 58.5 median seats out of a 117-seat house is exactly half.
  std::vector<PollRecord> recs = {rec("p", "A", 58, 59, PollUnit::Seats),
                                  rec("p", "B", 58, 59, PollUnit::Seats)};
  auto shares = pollster_share(recs);
  REQUIRE(shares.has_value());
  CHECK(shares->at("A") == Catch::Approx(50.0));
  CHECK(shares->at("B") == Catch::Approx(50.0));
}

TEST_CASE("percent ranges renormalize to a hundred") {
  std::vector<PollRecord> recs = {rec("p", "A", 40, 42), rec("p", "B", 38, 40),
                                  rec("p", "C", 16, 18)};
  // medians 41, 39, 17 sum to 97.
  auto shares = pollster_share(recs);
  REQUIRE(shares.has_value());
  CHECK(shares->at("A") == Catch::Approx(41.0 / 97.0 * 100.0));
  double total = shares->at("A") + shares->at("B") + shares->at("C");
  CHECK(total == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("mixed units within one pollster reject the group") {
  std::vector<PollRecord> recs = {rec("p", "A", 40, 42, PollUnit::Percent),
                                  rec("p", "B", 100, 120, PollUnit::Seats)};
  std::string reason;
  CHECK_FALSE(pollster_share(recs, &reason).has_value());
  CHECK(reason.find("mixed") != std::string::npos);
}

TEST_CASE("zero-sum and duplicate-party groups reject") {
  std::vector<PollRecord> zero = {rec("p", "A", 0, 0), rec("p", "B", 0, 0)};
  CHECK_FALSE(pollster_share(zero).has_value());
  std::vector<PollRecord> dup = {rec("p", "A", 10, 12), rec("p", "A", 11, 13)};
  CHECK_FALSE(pollster_share(dup).has_value());
}

TEST_CASE("poll loader rejects bad rows and counts them") {
  testutil::ScratchDir dir("polls");
  auto path = write_temp(dir, "p.csv",
                         "pollster,poll_type,state,party,low,high,unit\n"
                         "P1,opinion,S,A,40,42,percent\n"
                         "P1,opinion,S,B,44,42,percent\n"   // inverted
                         "P1,opinion,S,C,-3,2,percent\n"    // negative
                         "P1,opinion,S,D,98,102,percent\n"  // above 100
                         "P1,exitt,S,E,1,2,percent\n"       // bad type
                         "P1,opinion,S,F,x,2,percent\n"     // non-numeric
                         "P2,exit,S,A,100,110,seats\n");
  PollLoadStats stats;
  auto records = load_poll_records(path, &stats);
  CHECK(records.size() == 2);
  CHECK(stats.loaded == 2);
  CHECK(stats.rejected == 5);
}

TEST_CASE("a malformed poll header is fatal") {
  testutil::ScratchDir dir("polls");
  auto path = write_temp(dir, "bad.csv", "pollster,state,party,low,high\nP,S,A,1,2\n");
  CHECK_THROWS_AS(load_poll_records(path), DataError);
}

TEST_CASE("consensus averages pollsters with zero-fill and renormalizes") {
  std::map<std::string, double> p1 = {{"A", 60.0}, {"B", 40.0}};
  std::map<std::string, double> p2 = {{"A", 50.0}, {"C", 50.0}};  // omits B
  auto consensus = consensus_share({p1, p2});
  // columns: A (60+50)/2 = 55, B (40+0)/2 = 20, C (0+50)/2 = 25; sums to 100.
  CHECK(consensus.at("A") == Catch::Approx(55.0));
  CHECK(consensus.at("B") == Catch::Approx(20.0));
  CHECK(consensus.at("C") == Catch::Approx(25.0));
}

TEST_CASE("median combiner is available as the alternative") {
  std::map<std::string, double> p1 = {{"A", 10.0}, {"B", 90.0}};
  std::map<std::string, double> p2 = {{"A", 20.0}, {"B", 80.0}};
  std::map<std::string, double> p3 = {{"A", 60.0}, {"B", 40.0}};
  auto med = consensus_share({p1, p2, p3}, ConsensusCombiner::Median);
  CHECK(med.at("A") == Catch::Approx(20.0));
  CHECK(med.at("B") == Catch::Approx(80.0));
}

TEST_CASE("bundled poll fixture reproduces the published consensus columns") {
  PollLoadStats stats;
  auto records = load_poll_records(testutil::data_dir() / "polls_2022.csv", &stats);
  CHECK(stats.rejected == 0);
  auto grouped = group_poll_records(records);

  auto consensus_for = [&](const std::string& state, PollType type) {
    std::vector<std::map<std::string, double>> shares;
    for (const auto& [pollster, recs] : grouped.at({state, type})) {
      auto s = pollster_share(recs);
      REQUIRE(s.has_value());
      shares.push_back(*s);
    }
    return consensus_share(shares);
  };
  auto rounded = [](const std::map<std::string, double>& shares) {
    std::map<std::string, long long> out;
    for (const auto& [party, percent] : shares) out[party] = percent_rounded(percent / 100.0);
    return out;
  };

  auto punjab_opinion = rounded(consensus_for("Punjab", PollType::Opinion));
  CHECK(punjab_opinion.at("AAP") == 45);
  CHECK(punjab_opinion.at("BJP") == 2);
  CHECK(punjab_opinion.at("INC") == 38);
  CHECK(punjab_opinion.at("SAD") == 15);

  auto punjab_exit = rounded(consensus_for("Punjab", PollType::Exit));
  CHECK(punjab_exit.at("AAP") == 57);
  CHECK(punjab_exit.at("BJP") == 3);
  CHECK(punjab_exit.at("INC") == 24);
  CHECK(punjab_exit.at("SAD") == 16);

  auto up_opinion = rounded(consensus_for("Uttar Pradesh", PollType::Opinion));
  CHECK(up_opinion.at("BJP") == 59);
  CHECK(up_opinion.at("SP") == 34);
  CHECK(up_opinion.at("BSP") == 3);
  CHECK(up_opinion.at("INC") == 2);
  CHECK(up_opinion.at("AAP") == 1);
  CHECK(up_opinion.at("AIMIM") == 1);

  // The exit pollsters publish 403-seat projections; conversion and
  // averaging must land on the published percents.
  auto up_exit = rounded(consensus_for("Uttar Pradesh", PollType::Exit));
  CHECK(up_exit.at("BJP") == 61);
  CHECK(up_exit.at("SP") == 34);
  CHECK(up_exit.at("BSP") == 3);
  CHECK(up_exit.at("INC") == 1);
  CHECK(up_exit.at("AAP") == 0);
  CHECK(up_exit.at("AIMIM") == 0);
}

TEST_CASE("dispersion reports the documented pollster disagreements") {
  PollLoadStats stats;
  auto records = load_poll_records(testutil::data_dir() / "pollster_spread.csv", &stats);
  CHECK(stats.rejected == 0);
  auto grouped = group_poll_records(records);

  auto shares_for = [&](const std::string& state) {
    std::vector<std::pair<std::string, std::map<std::string, double>>> out;
    for (const auto& [pollster, recs] : grouped.at({state, PollType::Opinion})) {
      auto s = pollster_share(recs);
      REQUIRE(s.has_value());
      out.emplace_back(pollster, *s);
    }
    return out;
  };

  auto up = dispersion(shares_for("Uttar Pradesh"));
  auto sp = std::find_if(up.begin(), up.end(),
                         [](const DispersionRow& r) { return r.party == "SP"; });
  REQUIRE(sp != up.end());
  CHECK(sp->max == Catch::Approx(53.0));
  CHECK(sp->min == Catch::Approx(16.0));
  CHECK(sp->spread == Catch::Approx(37.0));
  CHECK(sp->max_pollster == "DB Live");
  CHECK(sp->min_pollster == "Republic TV");

  auto punjab = dispersion(shares_for("Punjab"));
  auto aap = std::find_if(punjab.begin(), punjab.end(),
                          [](const DispersionRow& r) { return r.party == "AAP"; });
  REQUIRE(aap != punjab.end());
  CHECK(aap->max == Catch::Approx(85.0));
  CHECK(aap->min == Catch::Approx(24.0));
  CHECK(aap->spread == Catch::Approx(61.0));
  CHECK(aap->max_pollster == "News24");
  CHECK(aap->min_pollster == "DB Live");
}
