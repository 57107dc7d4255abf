#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pollmster/canonical.hpp"
#include "pollmster/corpus.hpp"
#include "pollmster/gateway.hpp"
#include "pollmster/polls.hpp"
#include "pollmster/util.hpp"
#include "pollmster/voteshare.hpp"

namespace pollmster {

// Behavior switches the pipeline exposes; defaults match the documented
// reference behavior.
struct Knobs {
  bool nm_normalizer = true;
  bool neutral_in_tv = true;
  std::string invalid_method_policy = "exclude";  // or "uniform"
  std::string rounding = "half_away_from_zero";
  bool include_other = false;
  std::string consensus_combiner = "mean";  // or "median"
};

struct PipelineConfig {
  std::filesystem::path config_path;
  std::filesystem::path base_dir;

  std::vector<std::filesystem::path> corpus_paths;
  CorpusFormat corpus_format = CorpusFormat::Jsonl;
  std::optional<std::filesystem::path> query_sets_path;

  std::filesystem::path template_manifest;
  std::vector<std::string> families;

  BackendConfig backend;
  std::optional<std::filesystem::path> mock_completions;

  std::filesystem::path alias_table_path;
  double coverage_target = 0.999;
  PartyUniverse universe;

  std::optional<std::filesystem::path> polls_path;
  std::optional<std::filesystem::path> actuals_path;
  std::optional<std::filesystem::path> reference_shares_path;

  std::filesystem::path output_dir = "out";
  Knobs knobs;

  VoteShareOptions vote_options() const {
    VoteShareOptions o;
    o.cross_method_normalizer = knobs.nm_normalizer;
    o.neutral_counts_in_total = knobs.neutral_in_tv;
    o.invalid_method_policy = knobs.invalid_method_policy == "uniform"
                                  ? VoteShareOptions::InvalidMethodPolicy::Uniform
                                  : VoteShareOptions::InvalidMethodPolicy::Exclude;
    return o;
  }

  CanonicalizeOptions canonical_options() const { return CanonicalizeOptions{knobs.include_other}; }

  ConsensusCombiner consensus_combiner() const {
    return knobs.consensus_combiner == "median" ? ConsensusCombiner::Median
                                                : ConsensusCombiner::Mean;
  }

  // Stable serialization of everything that affects results; hashed to name
  // the run directory so distinct configs never collide.
  std::string canonical_json() const;
  std::uint64_t config_hash() const { return fnv1a64(canonical_json()); }

  static PipelineConfig load(const std::filesystem::path& path);
};

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& base,
                                          const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const std::filesystem::path& where) {
  if (!j.contains(key))
    throw ConfigError(where.string() + ": missing required config key '" + std::string(key) + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where.string() + ": config key '" + std::string(key) + "' has wrong type");
  }
}

}  // namespace detail

inline std::string PipelineConfig::canonical_json() const {
  // nlohmann::json objects iterate in key order, which makes dump() stable.
  nlohmann::json j;
  nlohmann::json corpus = nlohmann::json::array();
  for (const auto& p : corpus_paths) corpus.push_back(p.string());
  j["corpus_paths"] = corpus;
  j["corpus_format"] = corpus_format == CorpusFormat::Jsonl ? "jsonl" : "csv";
  j["query_sets"] = query_sets_path ? query_sets_path->string() : "";
  j["template_manifest"] = template_manifest.string();
  j["families"] = families;
  j["endpoint_url"] = backend.endpoint_url;
  j["model_name"] = backend.model_name;
  j["temperature"] = backend.temperature;
  j["max_tokens"] = backend.max_tokens;
  j["max_in_flight"] = backend.max_in_flight;
  j["max_attempts"] = backend.retry.max_attempts;
  j["base_backoff_ms"] = backend.retry.base_backoff.count();
  j["mock_completions"] = mock_completions ? mock_completions->string() : "";
  j["alias_table"] = alias_table_path.string();
  j["coverage_target"] = coverage_target;
  nlohmann::json uni;
  for (const auto& [state, parties] : universe) uni[state] = parties;
  j["universe"] = uni;
  j["polls"] = polls_path ? polls_path->string() : "";
  j["actuals"] = actuals_path ? actuals_path->string() : "";
  j["reference_shares"] = reference_shares_path ? reference_shares_path->string() : "";
  j["knobs"] = {{"nm_normalizer", knobs.nm_normalizer},
                {"neutral_in_tv", knobs.neutral_in_tv},
                {"invalid_method_policy", knobs.invalid_method_policy},
                {"rounding", knobs.rounding},
                {"include_other", knobs.include_other},
                {"consensus_combiner", knobs.consensus_combiner}};
  return j.dump();
}

inline PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    // an unreadable config path is the operator's mistake, not bad input data
    throw ConfigError(e.what());
  }
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("config is not a json object: " + path.string());

  PipelineConfig c;
  c.config_path = path;
  c.base_dir = path.parent_path();

  auto corpus = detail::require<std::vector<std::string>>(j, "corpus_paths", path);
  for (const auto& p : corpus) c.corpus_paths.push_back(detail::resolve_path(c.base_dir, p));
  if (c.corpus_paths.empty()) throw ConfigError(path.string() + ": corpus_paths is empty");

  std::string format = j.value("corpus_format", "jsonl");
  if (format == "jsonl") c.corpus_format = CorpusFormat::Jsonl;
  else if (format == "csv") c.corpus_format = CorpusFormat::Csv;
  else throw ConfigError(path.string() + ": corpus_format must be 'jsonl' or 'csv'");

  if (j.contains("query_sets"))
    c.query_sets_path = detail::resolve_path(c.base_dir, j["query_sets"].get<std::string>());

  c.template_manifest = detail::resolve_path(
      c.base_dir, detail::require<std::string>(j, "template_manifest", path));
  c.families = j.value("families", std::vector<std::string>{});
  if (c.families.empty()) throw ConfigError(path.string() + ": families is empty");

  if (j.contains("backend")) {
    const auto& b = j["backend"];
    if (!b.is_object()) throw ConfigError(path.string() + ": backend must be an object");
    c.backend.endpoint_url = b.value("endpoint_url", c.backend.endpoint_url);
    c.backend.model_name = b.value("model_name", c.backend.model_name);
    c.backend.api_key = b.value("api_key", c.backend.api_key);
    c.backend.temperature = b.value("temperature", c.backend.temperature);
    c.backend.max_tokens = b.value("max_tokens", c.backend.max_tokens);
    c.backend.max_in_flight = b.value("max_in_flight", c.backend.max_in_flight);
    c.backend.retry.max_attempts = b.value("max_attempts", c.backend.retry.max_attempts);
    c.backend.retry.base_backoff =
        std::chrono::milliseconds(b.value("base_backoff_ms", c.backend.retry.base_backoff.count()));
    c.backend.request_timeout = std::chrono::milliseconds(
        b.value("request_timeout_ms", c.backend.request_timeout.count()));
  }
  c.backend.apply_env_overrides();
  c.backend.validate();

  if (j.contains("mock_completions"))
    c.mock_completions =
        detail::resolve_path(c.base_dir, j["mock_completions"].get<std::string>());

  c.alias_table_path =
      detail::resolve_path(c.base_dir, detail::require<std::string>(j, "alias_table", path));
  c.coverage_target = j.value("coverage_target", 0.999);
  if (c.coverage_target < 0.0 || c.coverage_target > 1.0)
    throw ConfigError(path.string() + ": coverage_target must be in [0, 1]");

  if (j.contains("universe")) {
    if (!j["universe"].is_object())
      throw ConfigError(path.string() + ": universe must map state -> [parties]");
    for (auto it = j["universe"].begin(); it != j["universe"].end(); ++it) {
      std::vector<std::string> parties = it.value().get<std::vector<std::string>>();
      if (parties.empty())
        throw ConfigError(path.string() + ": universe for '" + it.key() + "' is empty");
      c.universe[it.key()] = std::move(parties);
    }
  }

  if (j.contains("polls"))
    c.polls_path = detail::resolve_path(c.base_dir, j["polls"].get<std::string>());
  if (j.contains("actuals"))
    c.actuals_path = detail::resolve_path(c.base_dir, j["actuals"].get<std::string>());
  if (j.contains("reference_shares"))
    c.reference_shares_path =
        detail::resolve_path(c.base_dir, j["reference_shares"].get<std::string>());

  c.output_dir = detail::resolve_path(c.base_dir, j.value("output_dir", std::string("out")));

  if (j.contains("knobs")) {
    const auto& k = j["knobs"];
    if (!k.is_object()) throw ConfigError(path.string() + ": knobs must be an object");
    c.knobs.nm_normalizer = k.value("nm_normalizer", c.knobs.nm_normalizer);
    c.knobs.neutral_in_tv = k.value("neutral_in_tv", c.knobs.neutral_in_tv);
    c.knobs.invalid_method_policy =
        k.value("invalid_method_policy", c.knobs.invalid_method_policy);
    c.knobs.rounding = k.value("rounding", c.knobs.rounding);
    c.knobs.include_other = k.value("include_other", c.knobs.include_other);
    c.knobs.consensus_combiner = k.value("consensus_combiner", c.knobs.consensus_combiner);
  }
  if (c.knobs.invalid_method_policy != "exclude" && c.knobs.invalid_method_policy != "uniform")
    throw ConfigError(path.string() + ": invalid_method_policy must be 'exclude' or 'uniform'");
  if (c.knobs.rounding != "half_away_from_zero")
    throw ConfigError(path.string() + ": rounding must be 'half_away_from_zero'");
  if (c.knobs.consensus_combiner != "mean" && c.knobs.consensus_combiner != "median")
    throw ConfigError(path.string() + ": consensus_combiner must be 'mean' or 'median'");

  for (const auto& p : c.corpus_paths)
    if (!std::filesystem::exists(p))
      throw ConfigError(path.string() + ": corpus path does not exist: " + p.string());
  if (!std::filesystem::exists(c.template_manifest))
    throw ConfigError(path.string() +
                      ": template manifest does not exist: " + c.template_manifest.string());
  if (!std::filesystem::exists(c.alias_table_path))
    throw ConfigError(path.string() +
                      ": alias table does not exist: " + c.alias_table_path.string());
  for (const auto& opt : {c.query_sets_path, c.mock_completions, c.polls_path, c.actuals_path,
                          c.reference_shares_path})
    if (opt && !std::filesystem::exists(*opt))
      throw ConfigError(path.string() + ": configured file does not exist: " + opt->string());

  return c;
}

}  // namespace pollmster
