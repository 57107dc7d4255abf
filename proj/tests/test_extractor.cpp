#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "pollmster/extract.hpp"

using namespace pollmster;

namespace {

struct GoldenCase {
  std::string name;
  std::string raw;
  Stage expected_stage = Stage::Failed;
  std::vector<RawMention> expected_mentions;
  std::size_t min_warnings = 0;
};

std::vector<GoldenCase> load_goldens() {
  auto dir = testutil::data_dir() / "fixtures" / "extractor";
  std::vector<GoldenCase> cases;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto path = entry.path();
    if (path.extension() != ".txt") continue;
    GoldenCase c;
    c.name = path.stem().string();
    c.raw = read_file(path);
    auto expected_path = path;
    expected_path.replace_extension(".expected.json");
    nlohmann::json j = nlohmann::json::parse(read_file(expected_path));
    auto stage = stage_from_name(j.at("stage").get<std::string>());
    REQUIRE(stage.has_value());
    c.expected_stage = *stage;
    for (const auto& m : j.at("mentions")) {
      RawMention mention;
      mention.party_raw = m.at("party_raw").get<std::string>();
      mention.state_raw = m.at("state_raw").get<std::string>();
      mention.sentiment = m.at("sentiment").get<double>();
      c.expected_mentions.push_back(std::move(mention));
    }
    c.min_warnings = j.value("min_warnings", 0);
    cases.push_back(std::move(c));
  }
  std::sort(cases.begin(), cases.end(),
            [](const GoldenCase& a, const GoldenCase& b) { return a.name < b.name; });
  return cases;
}

}  // namespace

TEST_CASE("golden corpus covers every stage and failure") {
  auto cases = load_goldens();
  REQUIRE(cases.size() >= 30);
  std::set<Stage> seen;
  for (const auto& c : cases) seen.insert(c.expected_stage);
  CHECK(seen.count(Stage::DirectJson) == 1);
  CHECK(seen.count(Stage::RegexJson) == 1);
  CHECK(seen.count(Stage::TokenScavenge) == 1);
  CHECK(seen.count(Stage::Failed) == 1);
}

TEST_CASE("every golden fixture matches its sidecar exactly") {
  for (const auto& c : load_goldens()) {
    INFO("fixture: " << c.name);
    ExtractionResult res = extract_mentions(c.raw);
    CHECK(res.stage == c.expected_stage);
    REQUIRE(res.mentions.size() == c.expected_mentions.size());
    for (std::size_t i = 0; i < res.mentions.size(); ++i) {
      INFO("mention " << i);
      CHECK(res.mentions[i].party_raw == c.expected_mentions[i].party_raw);
      CHECK(res.mentions[i].state_raw == c.expected_mentions[i].state_raw);
      CHECK(res.mentions[i].sentiment ==
            Catch::Approx(c.expected_mentions[i].sentiment).margin(1e-12));
    }
    CHECK(res.warnings.size() >= c.min_warnings);
  }
}

TEST_CASE("well-formed output always resolves at direct_json") {
  // The instruction format: a json array of objects with the three keys.
  auto cases = load_goldens();
  for (const auto& c : cases) {
    if (c.expected_stage != Stage::DirectJson) continue;
    INFO("fixture: " << c.name);
    CHECK(extract_mentions(c.raw).stage == Stage::DirectJson);
  }
}

TEST_CASE("serialized mentions round-trip through stage one") {
  std::vector<RawMention> mentions = {
      {"Aam Aadmi Party (AAP)", "Punjab", 0.75},
      {"Bhartiya Janta Party (BJP)", "Uttar Pradesh (UP)", -0.3},
      {"Congress (INC)", "Punjab", 0.0},
      {"SAD", "punjab", -1.0},
  };
  std::string serialized = mentions_to_json(mentions);
  ExtractionResult res = extract_mentions(serialized);
  CHECK(res.stage == Stage::DirectJson);
  REQUIRE(res.mentions.size() == mentions.size());
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    CHECK(res.mentions[i].party_raw == mentions[i].party_raw);
    CHECK(res.mentions[i].state_raw == mentions[i].state_raw);
    CHECK(res.mentions[i].sentiment == mentions[i].sentiment);
  }
  CHECK(res.warnings.empty());
}

TEST_CASE("round-trip holds for randomized mention lists") {
  std::mt19937_64 rng(20220310);
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_int_distribution<int> pick(0, 4);
  const std::vector<std::string> parties = {"AAP", "BJP", "Congress (INC)", "SAD, the party",
                                            "आम आदमी पार्टी"};
  const std::vector<std::string> states = {"Punjab", "UP", "Uttar Pradesh (UP)", "u.p.",
                                           "state \"quoted\""};
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<RawMention> mentions;
    int n = count(rng);
    for (int i = 0; i < n; ++i)
      mentions.push_back({parties[pick(rng)], states[pick(rng)], score(rng)});
    ExtractionResult res = extract_mentions(mentions_to_json(mentions));
    REQUIRE(res.stage == Stage::DirectJson);
    REQUIRE(res.mentions.size() == mentions.size());
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      CHECK(res.mentions[i].party_raw == mentions[i].party_raw);
      CHECK(res.mentions[i].state_raw == mentions[i].state_raw);
      CHECK(res.mentions[i].sentiment == mentions[i].sentiment);
    }
  }
}

TEST_CASE("extraction stages are ordered direct, regex, scavenge") {
  // Same payload dressed three ways lands in three different stages.
  std::string object = R"({"party": "BJP", "state": "UP", "sentiment_score": 0.5})";
  CHECK(extract_mentions(object).stage == Stage::DirectJson);
  CHECK(extract_mentions("Sure! Here it is: " + object).stage == Stage::RegexJson);
  CHECK(extract_mentions("party: BJP state: UP sentiment_score: 0.5").stage ==
        Stage::TokenScavenge);
}

TEST_CASE("out-of-range sentiment clamps to the nearer bound") {
  auto high = extract_mentions(R"({"party":"X","state":"S","sentiment_score":2.5})");
  REQUIRE(high.mentions.size() == 1);
  CHECK(high.mentions[0].sentiment == 1.0);
  CHECK_FALSE(high.warnings.empty());

  auto low = extract_mentions(R"({"party":"X","state":"S","sentiment_score":-1.01})");
  REQUIRE(low.mentions.size() == 1);
  CHECK(low.mentions[0].sentiment == -1.0);

  SentimentBounds wide{-5.0, 5.0};
  auto ok = extract_mentions(R"({"party":"X","state":"S","sentiment_score":2.5})", wide);
  REQUIRE(ok.mentions.size() == 1);
  CHECK(ok.mentions[0].sentiment == 2.5);
  CHECK(ok.warnings.empty());
}

TEST_CASE("non-numeric sentiment rejects the mention with a warning") {
  auto res = extract_mentions(R"([{"party":"X","state":"S","sentiment_score":"positive"}])");
  CHECK(res.stage == Stage::Failed);
  CHECK(res.mentions.empty());
  CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("numeric strings are accepted as sentiment") {
  auto res = extract_mentions(R"({"party":"X","state":"S","sentiment_score":"-0.25"})");
  REQUIRE(res.mentions.size() == 1);
  CHECK(res.mentions[0].sentiment == -0.25);
  CHECK(res.stage == Stage::DirectJson);
}

TEST_CASE("key aliases normalize underscores, spaces, and case") {
  for (const char* raw : {
           R"({"party name":"X","state name":"S","sentiment score":0.5})",
           R"({"Party_Name":"X","State_Name":"S","Sentiment_Score":0.5})",
           R"({"PARTY":"X","STATE":"S","SCORE":0.5})",
       }) {
    INFO(raw);
    auto res = extract_mentions(raw);
    REQUIRE(res.mentions.size() == 1);
    CHECK(res.stage == Stage::DirectJson);
    CHECK(res.mentions[0].party_raw == "X");
  }
}

TEST_CASE("stage two picks the longest balanced span first") {
  // The long array parses and yields mentions; the short decoy object that
  // appears earlier must lose to it.
  std::string text =
      R"(noise {"party":"DECOY","state":"S","sentiment_score":"bad"} more )"
      R"([{"party":"A","state":"S","sentiment_score":0.1},{"party":"B","state":"S","sentiment_score":0.2}])";
  auto res = extract_mentions(text);
  CHECK(res.stage == Stage::RegexJson);
  REQUIRE(res.mentions.size() == 2);
  CHECK(res.mentions[0].party_raw == "A");
}

TEST_CASE("stage two is string-literal aware") {
  std::string text = R"(prefix {"party":"has } brace","state":"S","sentiment_score":0.5} suffix)";
  auto res = extract_mentions(text);
  CHECK(res.stage == Stage::RegexJson);
  REQUIRE(res.mentions.size() == 1);
  CHECK(res.mentions[0].party_raw == "has } brace");
}

TEST_CASE("scavenging pairs keys greedily into mentions") {
  auto res = extract_mentions(
      "party: AAP state: Punjab sentiment: 0.7 party: BJP state: Punjab sentiment: -0.2");
  CHECK(res.stage == Stage::TokenScavenge);
  REQUIRE(res.mentions.size() == 2);
  CHECK(res.mentions[0].party_raw == "AAP");
  CHECK(res.mentions[0].sentiment == 0.7);
  CHECK(res.mentions[1].party_raw == "BJP");
  CHECK(res.mentions[1].sentiment == -0.2);
}

TEST_CASE("a repeated key before completion starts a new mention") {
  auto res = extract_mentions("party: AAP party: BJP state: UP score: 0.1");
  CHECK(res.stage == Stage::TokenScavenge);
  REQUIRE(res.mentions.size() == 1);
  CHECK(res.mentions[0].party_raw == "BJP");
  CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("scavenged keys need a separator to count") {
  // "party" in prose has no ':' or '=' after it, so only the real key fires.
  auto res = extract_mentions("The party is strong. party = BJP, state = UP, score = 0.3");
  CHECK(res.stage == Stage::TokenScavenge);
  REQUIRE(res.mentions.size() == 1);
  CHECK(res.mentions[0].party_raw == "BJP");
  CHECK(res.mentions[0].state_raw == "UP");
}

TEST_CASE("empty and refusal outputs fail cleanly") {
  CHECK(extract_mentions("").stage == Stage::Failed);
  CHECK(extract_mentions("   \n\t ").stage == Stage::Failed);
  CHECK(extract_mentions("I cannot analyze this tweet.").stage == Stage::Failed);
  CHECK(extract_mentions("[]").stage == Stage::Failed);
  CHECK(extract_mentions("{}").stage == Stage::Failed);
}

TEST_CASE("extraction never throws on random byte strings") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> len(0, 300);
  std::uniform_int_distribution<int> byte(0, 255);
  // Bias some iterations toward structural characters to stress the parsers.
  const std::string structural = R"({}[]":,'= party state score sentiment0.5-)";
  std::uniform_int_distribution<std::size_t> spick(0, structural.size() - 1);
  for (int iter = 0; iter < 10000; ++iter) {
    std::string s;
    int n = len(rng);
    bool biased = iter % 2 == 0;
    for (int i = 0; i < n; ++i)
      s.push_back(biased ? structural[spick(rng)] : static_cast<char>(byte(rng)));
    ExtractionResult res;
    REQUIRE_NOTHROW(res = extract_mentions(s));
    for (const auto& m : res.mentions) {
      CHECK(m.sentiment >= -1.0);
      CHECK(m.sentiment <= 1.0);
      CHECK_FALSE(m.party_raw.empty());
    }
  }
}
