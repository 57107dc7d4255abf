#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pollmster/util.hpp"

namespace pollmster {

// A chat template loaded from an on-disk asset. The asset carries the full
// instruction text with a single {tweet} placeholder; rendering splices the
// tweet into that slot and nothing else, so template bytes stay authoritative.
struct PromptTemplate {
  std::string family;  // e.g. "llama2_chat", "zephyr_chat"
  std::string text;
  std::size_t placeholder_pos = std::string::npos;
  std::vector<std::string> allowed_parties;
  std::vector<std::string> allowed_states;
  double sentiment_min = -1.0;
  double sentiment_max = 1.0;

  std::uint64_t checksum() const { return fnv1a64(text); }
};

inline constexpr std::string_view kTweetPlaceholder = "{tweet}";

inline PromptTemplate load_template(const std::filesystem::path& asset, const std::string& family,
                                    std::vector<std::string> parties,
                                    std::vector<std::string> states, double smin, double smax) {
  PromptTemplate t;
  t.family = family;
  t.text = read_file(asset);
  t.allowed_parties = std::move(parties);
  t.allowed_states = std::move(states);
  t.sentiment_min = smin;
  t.sentiment_max = smax;

  std::size_t first = t.text.find(kTweetPlaceholder);
  if (first == std::string::npos)
    throw ConfigError("template '" + family + "' has no {tweet} placeholder: " + asset.string());
  if (t.text.find(kTweetPlaceholder, first + 1) != std::string::npos)
    throw ConfigError("template '" + family + "' has more than one {tweet} placeholder: " +
                      asset.string());
  t.placeholder_pos = first;

  if (t.allowed_parties.empty())
    throw ConfigError("template '" + family + "' declares no parties");
  if (t.allowed_states.empty()) throw ConfigError("template '" + family + "' declares no states");
  if (!(t.sentiment_min < t.sentiment_max))
    throw ConfigError("template '" + family + "' has an empty sentiment range");
  return t;
}

// Manifest: {"templates": [{"family": ..., "asset": ..., "parties": [...],
// "states": [...], "sentiment_range": [lo, hi]}, ...]}. Asset paths resolve
// against the manifest's own directory.
inline std::vector<PromptTemplate> load_template_manifest(const std::filesystem::path& manifest) {
  nlohmann::json j = nlohmann::json::parse(read_file(manifest), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("templates") ||
      !j["templates"].is_array())
    throw ConfigError("template manifest needs a 'templates' array: " + manifest.string());
  std::vector<PromptTemplate> out;
  for (const auto& e : j["templates"]) {
    if (!e.is_object() || !e.contains("family") || !e.contains("asset"))
      throw ConfigError("manifest entries need 'family' and 'asset': " + manifest.string());
    std::filesystem::path asset = e["asset"].get<std::string>();
    if (asset.is_relative()) asset = manifest.parent_path() / asset;
    std::vector<std::string> parties, states;
    for (const auto& p : e.value("parties", nlohmann::json::array()))
      parties.push_back(p.get<std::string>());
    for (const auto& s : e.value("states", nlohmann::json::array()))
      states.push_back(s.get<std::string>());
    double smin = -1.0, smax = 1.0;
    if (e.contains("sentiment_range")) {
      const auto& r = e["sentiment_range"];
      if (!r.is_array() || r.size() != 2)
        throw ConfigError("sentiment_range must be [lo, hi]: " + manifest.string());
      smin = r[0].get<double>();
      smax = r[1].get<double>();
    }
    out.push_back(
        load_template(asset, e["family"].get<std::string>(), std::move(parties), std::move(states),
                      smin, smax));
  }
  if (out.empty()) throw ConfigError("template manifest is empty: " + manifest.string());
  return out;
}

// Single splice at the recorded placeholder position. The substituted tweet is
// never rescanned, so tweets containing "{tweet}" cannot recurse.
inline std::string render_prompt(const PromptTemplate& t, std::string_view tweet_text) {
  if (tweet_text.empty()) throw std::invalid_argument("render_prompt: empty tweet text");
  std::string out;
  out.reserve(t.text.size() + tweet_text.size());
  out.append(t.text, 0, t.placeholder_pos);
  out.append(tweet_text);
  out.append(t.text, t.placeholder_pos + kTweetPlaceholder.size(), std::string::npos);
  return out;
}

}  // namespace pollmster
