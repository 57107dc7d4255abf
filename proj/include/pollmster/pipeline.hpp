#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pollmster/canonical.hpp"
#include "pollmster/config.hpp"
#include "pollmster/corpus.hpp"
#include "pollmster/csv.hpp"
#include "pollmster/evaluate.hpp"
#include "pollmster/extract.hpp"
#include "pollmster/gateway.hpp"
#include "pollmster/gateway_http.hpp"
#include "pollmster/polls.hpp"
#include "pollmster/prompt.hpp"
#include "pollmster/util.hpp"
#include "pollmster/voteshare.hpp"

namespace pollmster {

inline constexpr const char* kToolVersion = "1.0.0";

// Output layout. Result files live under a directory stamped with the config
// hash, so different configurations never overwrite each other. Checkpoints
// sit beside the run directories: they track request spend per prompt family
// and must survive config tweaks that do not change what was asked.
struct RunLayout {
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint_dir;

  std::filesystem::path checkpoint_for(const std::string& family) const {
    return checkpoint_dir / (family + ".jsonl");
  }
  std::filesystem::path file(const std::string& name) const { return run_dir / name; }
};

inline RunLayout make_layout(const PipelineConfig& config) {
  RunLayout layout;
  std::string tag = hex64(config.config_hash()).substr(0, 12);
  layout.run_dir = config.output_dir / ("run-" + tag);
  layout.checkpoint_dir = config.output_dir / "checkpoints";
  return layout;
}

inline void ensure_run_dir(const RunLayout& layout) {
  std::filesystem::create_directories(layout.run_dir);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

inline void write_manifest(const PipelineConfig& config, const RunLayout& layout,
                           const std::string& command) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = hex64(config.config_hash());
  j["config_path"] = config.config_path.string();
  j["families"] = config.families;
  j["generated_at"] = format_utc(static_cast<std::int64_t>(std::time(nullptr)));
  j["knobs"] = {{"nm_normalizer", config.knobs.nm_normalizer},
                {"neutral_in_tv", config.knobs.neutral_in_tv},
                {"invalid_method_policy", config.knobs.invalid_method_policy},
                {"rounding", config.knobs.rounding},
                {"include_other", config.knobs.include_other},
                {"consensus_combiner", config.knobs.consensus_combiner},
                {"coverage_target", config.coverage_target}};
  write_file(layout.file("run_manifest.json"), j.dump(2) + "\n");
}

// ---- ingest ----------------------------------------------------------------

struct IngestOutcome {
  std::vector<TweetRecord> records;  // deduplicated, query-filtered, input order
  std::vector<std::vector<std::string>> matched_terms;  // parallel to records
  LoadStats load_stats;
  std::size_t raw_count = 0;
  std::size_t duplicates_removed = 0;
  std::size_t matched_count = 0;
};

inline IngestOutcome run_ingest(const PipelineConfig& config) {
  IngestOutcome out;
  std::vector<TweetRecord> all;
  for (const auto& path : config.corpus_paths) {
    auto part = load_corpus(path, config.corpus_format, &out.load_stats);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  out.raw_count = all.size();
  auto deduped = dedupe(all, &out.duplicates_removed);
  if (config.query_sets_path) {
    auto sets = load_query_sets(*config.query_sets_path);
    auto matches = filter_by_queries(deduped, sets);
    for (auto& m : matches) {
      out.records.push_back(std::move(m.record));
      out.matched_terms.push_back(std::move(m.matched_terms));
    }
  } else {
    out.records = std::move(deduped);
    out.matched_terms.assign(out.records.size(), {});
  }
  out.matched_count = out.records.size();
  return out;
}

inline void write_ingest_reports(const RunLayout& layout, const IngestOutcome& outcome) {
  nlohmann::json j;
  j["raw_records"] = outcome.raw_count;
  j["skipped_records"] = outcome.load_stats.skipped;
  j["skip_reasons"] = outcome.load_stats.skip_reasons;
  j["duplicates_removed"] = outcome.duplicates_removed;
  j["after_dedupe"] = outcome.raw_count - outcome.duplicates_removed;
  j["kept_after_query_filter"] = outcome.matched_count;
  write_file(layout.file("ingest_stats.json"), j.dump(2) + "\n");

  std::ofstream csv(layout.file("corpus_kept.csv"), std::ios::binary);
  CsvWriter w(csv);
  w.row({"id", "created_at_utc", "username", "matched_terms"});
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    const auto& r = outcome.records[i];
    std::string terms;
    for (const auto& t : outcome.matched_terms[i]) {
      if (!terms.empty()) terms.push_back('|');
      terms += t;
    }
    w.row({r.id, format_utc(r.created_at_utc), r.username, terms});
  }
}

// ---- annotate ---------------------------------------------------------------

inline const PromptTemplate& template_for_family(const std::vector<PromptTemplate>& templates,
                                                 const std::string& family) {
  for (const auto& t : templates)
    if (t.family == family) return t;
  throw ConfigError("template manifest has no entry for family '" + family +
                    "' (check config key 'families')");
}

inline std::unique_ptr<CompletionBackend> make_backend(const PipelineConfig& config,
                                                       bool use_mock) {
  if (use_mock) {
    if (!config.mock_completions)
      throw ConfigError("config key 'mock_completions' is required when using the mock backend");
    auto mock = std::make_unique<MockBackend>();
    mock->load_file(*config.mock_completions);
    return mock;
  }
  return std::make_unique<HttpBackend>(config.backend);
}

struct AnnotateOutcome {
  std::vector<RawAnnotation> annotations;  // parallel to ingest records
  AnnotateStats stats;
};

inline AnnotateOutcome run_annotate(const PipelineConfig& config,
                                    const std::vector<TweetRecord>& records,
                                    const std::string& family, CompletionBackend& backend,
                                    const RunLayout& layout) {
  const auto templates = load_template_manifest(config.template_manifest);
  const PromptTemplate& tpl = template_for_family(templates, family);
  AnnotateOutcome out;
  std::filesystem::create_directories(layout.checkpoint_dir);
  out.annotations = annotate_corpus(records, tpl, backend, config.backend,
                                    layout.checkpoint_for(family), &out.stats);
  // Individual failures are recorded and the run continues, but a batch where
  // not one request came back is an unreachable or misconfigured backend, not
  // per-tweet trouble.
  if (out.stats.sent > 0 && out.stats.fresh_ok == 0)
    throw BackendError("all " + std::to_string(out.stats.sent) + " requests for family '" +
                       family + "' failed (first error: " + out.stats.first_fresh_error +
                       "); fix the backend, then delete " +
                       layout.checkpoint_for(family).string() +
                       " so the failed requests are re-sent");
  return out;
}

inline void write_annotate_report(const RunLayout& layout, const std::string& family,
                                  const AnnotateStats& stats) {
  nlohmann::json j;
  j["family"] = family;
  j["total"] = stats.total;
  j["resumed_from_checkpoint"] = stats.resumed;
  j["sent"] = stats.sent;
  j["ok"] = stats.ok;
  j["failed"] = stats.failed;
  write_file(layout.file("annotate_stats_" + family + ".json"), j.dump(2) + "\n");
}

// ---- extract ----------------------------------------------------------------

struct ExtractOutcome {
  std::vector<CanonicalMention> mentions;  // resolved, corpus order
  std::map<std::string, std::size_t> stage_histogram;
  std::size_t mentions_total = 0;
  std::size_t party_unresolved = 0;
  std::size_t state_unresolved = 0;
  std::size_t mapped_other = 0;
  std::size_t warning_count = 0;
  double party_coverage = 1.0;
  double state_coverage = 1.0;
  bool coverage_warning = false;
  std::vector<FrequencyRow> party_frequency;
  std::vector<FrequencyRow> state_frequency;
};

inline ExtractOutcome run_extract(const PipelineConfig& config,
                                  const std::vector<TweetRecord>& records,
                                  const std::vector<RawAnnotation>& annotations,
                                  const PromptTemplate& tpl) {
  if (records.size() != annotations.size())
    throw DataError("annotation list does not line up with the corpus");
  ExtractOutcome out;
  for (const char* name : {"direct_json", "regex_json", "token_scavenge", "failed"})
    out.stage_histogram[name] = 0;

  AliasTables tables = load_alias_tables(config.alias_table_path);
  SentimentBounds bounds{tpl.sentiment_min, tpl.sentiment_max};
  CanonicalizeOptions copts = config.canonical_options();

  std::vector<std::string> party_raws, state_raws;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string& raw_output = annotations[i].ok ? annotations[i].raw_output : std::string();
    ExtractionResult res = extract_mentions(raw_output, bounds);
    ++out.stage_histogram[stage_name(res.stage)];
    out.warning_count += res.warnings.size();
    for (const auto& m : res.mentions) {
      ++out.mentions_total;
      party_raws.push_back(m.party_raw);
      state_raws.push_back(m.state_raw);
      auto resolved = canonicalize_mention(m.party_raw, m.state_raw, m.sentiment, records[i].id,
                                           tables, config.universe, copts);
      if (resolved.party_unresolved) ++out.party_unresolved;
      if (resolved.state_unresolved) ++out.state_unresolved;
      if (resolved.mapped_to_other) ++out.mapped_other;
      if (resolved.mention) out.mentions.push_back(std::move(*resolved.mention));
    }
  }
  out.party_coverage = alias_coverage(tables.party, party_raws);
  out.state_coverage = alias_coverage(tables.state, state_raws);
  out.coverage_warning = out.party_coverage < config.coverage_target ||
                         out.state_coverage < config.coverage_target;
  out.party_frequency = frequency_report(party_raws, config.coverage_target);
  out.state_frequency = frequency_report(state_raws, config.coverage_target);
  return out;
}

inline void write_extract_reports(const RunLayout& layout, const std::string& family,
                                  const PipelineConfig& config, const ExtractOutcome& outcome) {
  {
    std::ofstream csv(layout.file("mentions_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"tweet_id", "state", "party", "sentiment"});
    for (const auto& m : outcome.mentions)
      w.row({m.tweet_id, m.state, m.party, format_fraction(m.sentiment)});
  }
  {
    std::ofstream csv(layout.file("stage_histogram_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"stage", "tweets"});
    for (const auto& [stage, count] : outcome.stage_histogram)
      w.row({stage, std::to_string(count)});
  }
  {
    nlohmann::json j;
    j["family"] = family;
    j["mentions_total"] = outcome.mentions_total;
    j["mentions_resolved"] = outcome.mentions.size();
    j["party_unresolved"] = outcome.party_unresolved;
    j["state_unresolved"] = outcome.state_unresolved;
    j["mapped_to_other"] = outcome.mapped_other;
    j["extraction_warnings"] = outcome.warning_count;
    j["party_coverage"] = outcome.party_coverage;
    j["state_coverage"] = outcome.state_coverage;
    j["coverage_target"] = config.coverage_target;
    j["coverage_warning"] = outcome.coverage_warning;
    write_file(layout.file("coverage_" + family + ".json"), j.dump(2) + "\n");
  }
  auto write_freq = [&](const std::string& name, const std::vector<FrequencyRow>& rows) {
    std::ofstream csv(layout.file(name), std::ios::binary);
    CsvWriter w(csv);
    w.row({"raw", "count", "cumulative", "within_target"});
    for (const auto& r : rows)
      w.row({r.raw, std::to_string(r.count), format_fraction(r.cumulative),
             r.within_target ? "true" : "false"});
  };
  write_freq("freq_party_" + family + ".csv", outcome.party_frequency);
  write_freq("freq_state_" + family + ".csv", outcome.state_frequency);
}

// ---- aggregate --------------------------------------------------------------

struct AggregateOutcome {
  StateAggregates aggregates;
  std::map<std::string, std::vector<MethodShares>> method_shares;  // state -> five methods
  std::map<std::string, EnsembleShares> ensemble;                  // state -> combined
  std::vector<ShareTable> ensemble_tables;                         // fractions, one per state
};

inline AggregateOutcome run_aggregate(const PipelineConfig& config, const std::string& family,
                                      const std::vector<CanonicalMention>& mentions) {
  AggregateOutcome out;
  VoteShareOptions opts = config.vote_options();
  out.aggregates = aggregate_mentions(mentions, opts);
  for (const auto& [state, aggs] : out.aggregates) {
    for (Method m : kAllMethods) out.method_shares[state].push_back(method_share(aggs, m, opts));
    EnsembleShares es = ensemble_share(aggs, opts);
    if (es.valid) {
      ShareTable table;
      table.source = "POLLMSTER-" + family;
      table.state = state;
      table.shares = es.shares;
      out.ensemble_tables.push_back(std::move(table));
    }
    out.ensemble[state] = std::move(es);
  }
  return out;
}

inline void write_aggregate_reports(const RunLayout& layout, const std::string& family,
                                    const AggregateOutcome& outcome) {
  {
    std::ofstream csv(layout.file("aggregates_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"state", "party", "positive_magnitude", "negative_magnitude", "positive_volume",
           "negative_volume", "total_volume"});
    for (const auto& [state, parties] : outcome.aggregates)
      for (const auto& [party, a] : parties)
        w.row({state, party, format_fraction(a.positive_magnitude),
               format_fraction(a.negative_magnitude), std::to_string(a.positive_volume),
               std::to_string(a.negative_volume), std::to_string(a.total_volume)});
  }
  {
    std::ofstream csv(layout.file("shares_methods_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"state", "method", "party", "share_percent", "valid", "normalized"});
    for (const auto& [state, methods] : outcome.method_shares)
      for (const auto& ms : methods) {
        if (ms.shares.empty())
          w.row({state, method_name(ms.method), "", "", ms.valid ? "true" : "false",
                 ms.normalized ? "true" : "false"});
        for (const auto& [party, share] : ms.shares)
          w.row({state, method_name(ms.method), party, format_fraction(share * 100.0),
                 ms.valid ? "true" : "false", ms.normalized ? "true" : "false"});
      }
  }
  {
    std::ofstream csv(layout.file("shares_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source", "state", "party", "share_percent"});
    for (const auto& t : outcome.ensemble_tables)
      for (const auto& [party, share] : t.shares)
        w.row({t.source, t.state, party, format_fraction(share * 100.0)});
  }
  {
    std::ofstream csv(layout.file("shares_percent_" + family + ".csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source", "state", "party", "share_percent"});
    for (const auto& t : outcome.ensemble_tables)
      for (const auto& [party, percent] : to_whole_percent(t.shares))
        w.row({t.source, t.state, party, std::to_string(percent)});
  }
  {
    nlohmann::json j;
    for (const auto& [state, es] : outcome.ensemble) {
      nlohmann::json e;
      e["predictable"] = es.valid;
      e["renormalized"] = es.renormalized;
      nlohmann::json methods = nlohmann::json::array();
      for (Method m : es.methods_used) methods.push_back(method_name(m));
      e["methods_used"] = methods;
      nlohmann::json shares;
      for (const auto& [party, share] : es.shares) shares[party] = share;
      e["shares"] = shares;
      j[state] = std::move(e);
    }
    write_file(layout.file("ensemble_" + family + ".json"), j.dump(2) + "\n");
  }
}

// ---- polls ------------------------------------------------------------------

struct PollGroupOutcome {
  std::string state;
  PollType type = PollType::Opinion;
  std::vector<std::pair<std::string, std::map<std::string, double>>> pollster_shares;
  std::vector<std::string> rejected_pollsters;  // "<name>: <reason>"
  std::map<std::string, double> consensus;      // percents summing to 100
  std::vector<DispersionRow> dispersion_rows;
};

struct PollsOutcome {
  PollLoadStats load_stats;
  std::vector<PollGroupOutcome> groups;          // ordered by (state, type)
  std::vector<ShareTable> consensus_tables;      // sources OPINION / EXIT
};

inline std::string consensus_source_name(PollType t) {
  return t == PollType::Opinion ? "OPINION" : "EXIT";
}

inline PollsOutcome run_polls(const PipelineConfig& config) {
  if (!config.polls_path)
    throw ConfigError("config key 'polls' is required for the polls command");
  PollsOutcome out;
  auto records = load_poll_records(*config.polls_path, &out.load_stats);
  auto grouped = group_poll_records(records);
  for (const auto& [key, by_pollster] : grouped) {
    PollGroupOutcome group;
    group.state = key.first;
    group.type = key.second;
    std::vector<std::map<std::string, double>> accepted;
    for (const auto& [pollster, recs] : by_pollster) {
      std::string reason;
      auto shares = pollster_share(recs, &reason);
      if (!shares) {
        group.rejected_pollsters.push_back(pollster + ": " + reason);
        continue;
      }
      accepted.push_back(*shares);
      group.pollster_shares.emplace_back(pollster, std::move(*shares));
    }
    if (!accepted.empty()) {
      group.consensus = consensus_share(accepted, config.consensus_combiner());
      ShareTable table;
      table.source = consensus_source_name(group.type);
      table.state = group.state;
      for (const auto& [party, percent] : group.consensus)
        table.shares[party] = percent / 100.0;
      out.consensus_tables.push_back(std::move(table));
    }
    group.dispersion_rows = dispersion(group.pollster_shares);
    out.groups.push_back(std::move(group));
  }
  return out;
}

inline void write_polls_reports(const RunLayout& layout, const PollsOutcome& outcome) {
  {
    std::ofstream csv(layout.file("pollster_shares.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"state", "poll_type", "pollster", "party", "share_percent"});
    for (const auto& g : outcome.groups)
      for (const auto& [pollster, shares] : g.pollster_shares)
        for (const auto& [party, percent] : shares)
          w.row({g.state, poll_type_name(g.type), pollster, party, format_fraction(percent)});
  }
  {
    std::ofstream csv(layout.file("consensus.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source", "state", "party", "share_percent"});
    for (const auto& t : outcome.consensus_tables)
      for (const auto& [party, share] : t.shares)
        w.row({t.source, t.state, party, format_fraction(share * 100.0)});
  }
  {
    std::ofstream csv(layout.file("dispersion.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"state", "poll_type", "party", "min", "min_pollster", "max", "max_pollster",
           "spread"});
    for (const auto& g : outcome.groups)
      for (const auto& d : g.dispersion_rows)
        w.row({g.state, poll_type_name(g.type), d.party, format_fraction(d.min), d.min_pollster,
               format_fraction(d.max), d.max_pollster, format_fraction(d.spread)});
  }
  {
    nlohmann::json j;
    j["loaded"] = outcome.load_stats.loaded;
    j["rejected"] = outcome.load_stats.rejected;
    j["reject_reasons"] = outcome.load_stats.reasons;
    nlohmann::json rejected_groups = nlohmann::json::array();
    for (const auto& g : outcome.groups)
      for (const auto& r : g.rejected_pollsters)
        rejected_groups.push_back(std::string(poll_type_name(g.type)) + "/" + g.state + "/" + r);
    j["rejected_pollsters"] = rejected_groups;
    write_file(layout.file("polls_stats.json"), j.dump(2) + "\n");
  }
}

// ---- compare ----------------------------------------------------------------

struct CompareOutcome {
  std::vector<DeviationReport> per_source;   // each prediction source vs actual, pooled
  std::vector<DeviationReport> pairwise;     // model-vs-model pooled reports
  std::map<std::string, std::map<std::string, std::vector<std::string>>> winners_by_source;
  std::vector<ShareTable> tables;            // everything that was compared
  std::vector<ShareTable> actuals;
};

// Predictions come from wherever they exist: the reference fixture file, the
// aggregate stage outputs of this run, and the poll consensus. Whatever is
// found is scored against the actual results.
inline CompareOutcome run_compare(const PipelineConfig& config, const RunLayout& layout) {
  if (!config.actuals_path)
    throw ConfigError("config key 'actuals' is required for the compare command");
  CompareOutcome out;
  out.actuals = load_share_tables_csv(*config.actuals_path);
  if (out.actuals.empty()) throw DataError("no actual results in " + config.actuals_path->string());

  std::vector<ShareTable> predictions;
  // A source name may be served by several origins (the reference file also
  // carries OPINION/EXIT rows). First origin wins per (source, state), so the
  // reference tables keep their published whole-percent form and the live
  // consensus only fills sources the reference does not cover.
  std::set<std::pair<std::string, std::string>> provided;
  auto add_prediction = [&](ShareTable&& t) {
    if (provided.insert({t.source, t.state}).second) predictions.push_back(std::move(t));
  };
  if (config.reference_shares_path) {
    for (auto& t : load_share_tables_csv(*config.reference_shares_path))
      if (t.source != "ACTUAL") add_prediction(std::move(t));
  }
  for (const auto& family : config.families) {
    auto path = layout.file("shares_percent_" + family + ".csv");
    if (std::filesystem::exists(path))
      for (auto& t : load_share_tables_csv(path)) add_prediction(std::move(t));
  }
  if (config.polls_path) {
    auto polls = run_polls(config);
    for (auto& t : polls.consensus_tables) add_prediction(std::move(t));
  }
  if (predictions.empty())
    throw ConfigError(
        "nothing to compare: provide 'reference_shares', run the pipeline, or configure 'polls'");

  std::map<std::string, std::vector<ShareTable>> by_source;
  for (auto& t : predictions) by_source[t.source].push_back(t);

  std::map<std::string, const ShareTable*> actual_by_state;
  for (const auto& t : out.actuals) actual_by_state[t.state] = &t;

  for (auto& [source, tables] : by_source) {
    std::vector<ShareTable> actual_matched;
    for (const auto& t : tables) {
      auto it = actual_by_state.find(t.state);
      if (it != actual_by_state.end()) actual_matched.push_back(*it->second);
    }
    if (actual_matched.empty()) continue;
    out.per_source.push_back(compare_table_sets(tables, actual_matched));
    for (const auto& t : tables) out.winners_by_source[source][t.state] = winners(t);
    for (const auto& t : tables) out.tables.push_back(t);
  }
  for (const auto& t : out.actuals) out.winners_by_source["ACTUAL"][t.state] = winners(t);

  // Model-style sources (LLM-derived tables) get pairwise agreement reports.
  std::vector<std::string> model_sources;
  for (const auto& [source, tables] : by_source)
    if (source.rfind("POLLMSTER-", 0) == 0 || source == "LLAMA2" || source == "ZEPHYR")
      model_sources.push_back(source);
  std::sort(model_sources.begin(), model_sources.end());
  for (std::size_t i = 0; i < model_sources.size(); ++i)
    for (std::size_t k = i + 1; k < model_sources.size(); ++k)
      out.pairwise.push_back(
          compare_table_sets(by_source[model_sources[i]], by_source[model_sources[k]]));
  return out;
}

inline void write_compare_reports(const RunLayout& layout, const CompareOutcome& outcome) {
  {
    std::ofstream csv(layout.file("deviations.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source_a", "source_b", "state", "party", "deviation_pp"});
    auto dump_report = [&](const DeviationReport& r) {
      for (const auto& row : r.rows)
        w.row({r.source_a, r.source_b, row.state, row.party, format_fraction(row.deviation_pp)});
    };
    for (const auto& r : outcome.per_source) dump_report(r);
    for (const auto& r : outcome.pairwise) dump_report(r);
  }
  {
    std::ofstream csv(layout.file("deviation_summary.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source_a", "source_b", "rows", "mean_pp", "max_pp", "max_state", "max_party",
           "whole_percent"});
    auto dump_summary = [&](const DeviationReport& r) {
      w.row({r.source_a, r.source_b, std::to_string(r.rows.size()), format_fraction(r.mean_pp),
             format_fraction(r.max_pp), r.max_state, r.max_party,
             r.whole_percent ? "true" : "false"});
    };
    for (const auto& r : outcome.per_source) dump_summary(r);
    for (const auto& r : outcome.pairwise) dump_summary(r);
  }
  {
    std::ofstream csv(layout.file("winners.csv"), std::ios::binary);
    CsvWriter w(csv);
    w.row({"source", "state", "winners"});
    for (const auto& [source, states] : outcome.winners_by_source)
      for (const auto& [state, names] : states) {
        std::string joined;
        for (const auto& n : names) {
          if (!joined.empty()) joined.push_back('|');
          joined += n;
        }
        w.row({source, state, joined});
      }
  }
  {
    std::ostringstream text;
    text << "deviation vs actual results (percentage points)\n";
    for (const auto& r : outcome.per_source)
      text << "  " << r.source_a << ": mean " << format_fraction(r.mean_pp) << ", max "
           << format_fraction(r.max_pp) << " at (" << r.max_state << ", " << r.max_party
           << ")\n";
    if (!outcome.pairwise.empty()) {
      text << "model agreement\n";
      for (const auto& r : outcome.pairwise)
        text << "  " << r.source_a << " vs " << r.source_b << ": mean "
             << format_fraction(r.mean_pp) << ", max " << format_fraction(r.max_pp) << " at ("
             << r.max_state << ", " << r.max_party << ")\n";
    }
    text << "winner calls\n";
    for (const auto& [source, states] : outcome.winners_by_source)
      for (const auto& [state, names] : states) {
        text << "  " << state << " / " << source << ": ";
        for (std::size_t i = 0; i < names.size(); ++i) {
          if (i) text << ", ";
          text << names[i];
        }
        text << "\n";
      }
    write_file(layout.file("summary.txt"), text.str());
  }
}

// Rebuilds the annotation list for the current corpus from the append-only
// checkpoint. Standalone extract/aggregate run off this instead of re-hitting
// the backend.
inline std::vector<RawAnnotation> annotations_from_checkpoint(
    const std::vector<TweetRecord>& records, const std::string& family, const RunLayout& layout) {
  auto path = layout.checkpoint_for(family);
  auto done = load_checkpoint(path);
  std::vector<RawAnnotation> out;
  out.reserve(records.size());
  std::size_t missing = 0;
  for (const auto& rec : records) {
    auto it = done.find(rec.id);
    if (it == done.end()) {
      ++missing;
      continue;
    }
    out.push_back(it->second);
  }
  if (missing)
    throw DataError("checkpoint " + path.string() + " is missing " + std::to_string(missing) +
                    " of " + std::to_string(records.size()) +
                    " annotations; run the annotate command first");
  return out;
}

// ---- full pipeline ----------------------------------------------------------

inline std::vector<std::string> families_to_run(const PipelineConfig& config,
                                                const std::string& family_flag) {
  if (family_flag.empty()) return config.families;
  for (const auto& f : config.families)
    if (f == family_flag) return {family_flag};
  throw ConfigError("family '" + family_flag + "' is not listed in config key 'families'");
}

inline void run_all(const PipelineConfig& config, const RunLayout& layout, bool use_mock,
                    const std::string& family_flag = std::string()) {
  ensure_run_dir(layout);
  IngestOutcome ingest = run_ingest(config);
  write_ingest_reports(layout, ingest);

  const auto templates = load_template_manifest(config.template_manifest);
  for (const auto& family : families_to_run(config, family_flag)) {
    auto backend = make_backend(config, use_mock);
    AnnotateOutcome annotated = run_annotate(config, ingest.records, family, *backend, layout);
    write_annotate_report(layout, family, annotated.stats);

    const PromptTemplate& tpl = template_for_family(templates, family);
    ExtractOutcome extracted = run_extract(config, ingest.records, annotated.annotations, tpl);
    write_extract_reports(layout, family, config, extracted);

    AggregateOutcome aggregated = run_aggregate(config, family, extracted.mentions);
    write_aggregate_reports(layout, family, aggregated);
  }

  if (config.polls_path) {
    PollsOutcome polls = run_polls(config);
    write_polls_reports(layout, polls);
  }
  if (config.actuals_path) {
    CompareOutcome compared = run_compare(config, layout);
    write_compare_reports(layout, compared);
  }
  write_manifest(config, layout, "run-all");
}

// Single-stage drivers backing the CLI subcommands. Each one is idempotent
// given unchanged inputs and rewrites only its own report files.
inline void cmd_ingest(const PipelineConfig& config, const RunLayout& layout) {
  ensure_run_dir(layout);
  write_ingest_reports(layout, run_ingest(config));
  write_manifest(config, layout, "ingest");
}

inline void cmd_annotate(const PipelineConfig& config, const RunLayout& layout, bool use_mock,
                         const std::string& family_flag) {
  ensure_run_dir(layout);
  IngestOutcome ingest = run_ingest(config);
  for (const auto& family : families_to_run(config, family_flag)) {
    auto backend = make_backend(config, use_mock);
    AnnotateOutcome annotated = run_annotate(config, ingest.records, family, *backend, layout);
    write_annotate_report(layout, family, annotated.stats);
  }
  write_manifest(config, layout, "annotate");
}

inline void cmd_extract(const PipelineConfig& config, const RunLayout& layout,
                        const std::string& family_flag) {
  ensure_run_dir(layout);
  IngestOutcome ingest = run_ingest(config);
  const auto templates = load_template_manifest(config.template_manifest);
  for (const auto& family : families_to_run(config, family_flag)) {
    auto annotations = annotations_from_checkpoint(ingest.records, family, layout);
    ExtractOutcome extracted = run_extract(config, ingest.records, annotations,
                                           template_for_family(templates, family));
    write_extract_reports(layout, family, config, extracted);
  }
  write_manifest(config, layout, "extract");
}

inline void cmd_aggregate(const PipelineConfig& config, const RunLayout& layout,
                          const std::string& family_flag) {
  ensure_run_dir(layout);
  IngestOutcome ingest = run_ingest(config);
  const auto templates = load_template_manifest(config.template_manifest);
  for (const auto& family : families_to_run(config, family_flag)) {
    auto annotations = annotations_from_checkpoint(ingest.records, family, layout);
    ExtractOutcome extracted = run_extract(config, ingest.records, annotations,
                                           template_for_family(templates, family));
    write_extract_reports(layout, family, config, extracted);
    AggregateOutcome aggregated = run_aggregate(config, family, extracted.mentions);
    write_aggregate_reports(layout, family, aggregated);
  }
  write_manifest(config, layout, "aggregate");
}

inline void cmd_polls(const PipelineConfig& config, const RunLayout& layout) {
  ensure_run_dir(layout);
  write_polls_reports(layout, run_polls(config));
  write_manifest(config, layout, "polls");
}

inline void cmd_compare(const PipelineConfig& config, const RunLayout& layout) {
  ensure_run_dir(layout);
  write_compare_reports(layout, run_compare(config, layout));
  write_manifest(config, layout, "compare");
}

}  // namespace pollmster
