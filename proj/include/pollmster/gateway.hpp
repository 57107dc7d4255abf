#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pollmster/corpus.hpp"
#include "pollmster/prompt.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{200};
};

struct BackendConfig {
  std::string endpoint_url = "http://127.0.0.1:8080/v1/completions";
  std::string model_name = "local-model";
  std::string api_key;  // empty: no Authorization header
  double temperature = 0.0;
  int max_tokens = 256;
  std::chrono::milliseconds request_timeout{30000};
  int max_in_flight = 4;
  RetryPolicy retry;

  void validate() const {
    if (endpoint_url.empty()) throw ConfigError("backend endpoint_url is empty");
    if (max_in_flight < 1) throw ConfigError("backend max_in_flight must be >= 1");
    if (retry.max_attempts < 1) throw ConfigError("backend max_attempts must be >= 1");
    if (temperature < 0.0) throw ConfigError("backend temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("backend max_tokens must be >= 1");
  }

  // POLLMSTER_ENDPOINT and POLLMSTER_API_KEY take precedence over file config
  // so credentials stay out of checked-in configs.
  void apply_env_overrides() {
    if (const char* ep = std::getenv("POLLMSTER_ENDPOINT"); ep && *ep) endpoint_url = ep;
    if (const char* key = std::getenv("POLLMSTER_API_KEY"); key && *key) api_key = key;
  }
};

struct CompletionRequest {
  std::string tweet_id;
  std::string prompt;
};

// One network (or scripted) try. `transient` distinguishes retryable failures
// (timeouts, connection errors, 5xx) from permanent ones (4xx, bad payload).
struct AttemptOutcome {
  bool ok = false;
  bool transient = false;
  std::string text;
  std::string error;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual AttemptOutcome attempt(const CompletionRequest& request) = 0;
};

struct CompletionOutcome {
  bool ok = false;
  std::string text;
  std::string error;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
};

// Retry loop with exponential backoff: attempt k (1-based) sleeps
// base * 2^(k-1) before the next try. Permanent failures stop immediately.
inline CompletionOutcome complete_with_retry(CompletionBackend& backend,
                                             const BackendConfig& config,
                                             const CompletionRequest& request) {
  CompletionOutcome out;
  auto start = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
    out.attempts = attempt;
    AttemptOutcome res = backend.attempt(request);
    if (res.ok) {
      out.ok = true;
      out.text = std::move(res.text);
      out.error.clear();
      break;
    }
    out.error = res.error;
    if (!res.transient) break;
    if (attempt < config.retry.max_attempts) {
      auto delay = config.retry.base_backoff * (1LL << (attempt - 1));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return out;
}

struct RawAnnotation {
  std::string tweet_id;
  std::string prompt_family;
  std::string raw_output;
  std::string error;
  int attempts = 0;
  std::int64_t latency_ms = 0;
  bool ok = false;
};

inline nlohmann::json annotation_to_json(const RawAnnotation& a) {
  nlohmann::json j;
  j["tweet_id"] = a.tweet_id;
  j["prompt_family"] = a.prompt_family;
  j["ok"] = a.ok;
  j["raw_output"] = a.raw_output;
  j["error"] = a.error;
  j["attempts"] = a.attempts;
  j["latency_ms"] = a.latency_ms;
  return j;
}

inline std::optional<RawAnnotation> annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tweet_id")) return std::nullopt;
  RawAnnotation a;
  a.tweet_id = j.value("tweet_id", std::string());
  a.prompt_family = j.value("prompt_family", std::string());
  a.ok = j.value("ok", false);
  a.raw_output = j.value("raw_output", std::string());
  a.error = j.value("error", std::string());
  a.attempts = j.value("attempts", 0);
  a.latency_ms = j.value("latency_ms", std::int64_t{0});
  return a;
}

// Append-only JSONL checkpoint. Finished requests (including permanently
// failed ones) are recorded as they complete; a rerun skips every recorded
// tweet_id, so an interrupted batch resumes instead of re-spending requests.
inline std::map<std::string, RawAnnotation> load_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, RawAnnotation> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(trimmed, nullptr, false);
    if (j.is_discarded()) continue;  // torn final line from a crash
    if (auto a = annotation_from_json(j)) out[a->tweet_id] = std::move(*a);
  }
  return out;
}

struct AnnotateStats {
  std::size_t total = 0;
  std::size_t resumed = 0;
  std::size_t sent = 0;
  std::size_t ok = 0;      // over the merged output, resumed rows included
  std::size_t failed = 0;
  std::size_t fresh_ok = 0;  // successes among this run's own requests
  std::string first_fresh_error;
};

// Annotates every record, preserving input order in the result. Requests run
// on a bounded worker pool (max_in_flight threads pulling from a shared
// index), each completion is checkpointed before the batch moves on.
inline std::vector<RawAnnotation> annotate_corpus(const std::vector<TweetRecord>& records,
                                                  const PromptTemplate& prompt_template,
                                                  CompletionBackend& backend,
                                                  const BackendConfig& config,
                                                  const std::filesystem::path& checkpoint_path,
                                                  AnnotateStats* stats = nullptr) {
  config.validate();
  AnnotateStats local;
  AnnotateStats& st = stats ? *stats : local;
  st.total = records.size();

  auto done = load_checkpoint(checkpoint_path);

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!done.count(records[i].id)) pending.push_back(i);
  st.resumed = records.size() - pending.size();

  std::vector<RawAnnotation> fresh(pending.size());
  if (!pending.empty()) {
    if (!checkpoint_path.parent_path().empty())
      std::filesystem::create_directories(checkpoint_path.parent_path());
    std::ofstream ckpt(checkpoint_path, std::ios::app);
    if (!ckpt) throw DataError("cannot open checkpoint for append: " + checkpoint_path.string());
    std::mutex ckpt_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
      while (true) {
        std::size_t slot = next.fetch_add(1);
        if (slot >= pending.size()) return;
        const TweetRecord& rec = records[pending[slot]];
        RawAnnotation a;
        a.tweet_id = rec.id;
        a.prompt_family = prompt_template.family;
        try {
          CompletionRequest req{rec.id, render_prompt(prompt_template, rec.text)};
          CompletionOutcome res = complete_with_retry(backend, config, req);
          a.ok = res.ok;
          a.raw_output = res.text;
          a.error = res.error;
          a.attempts = res.attempts;
          a.latency_ms = res.latency.count();
        } catch (const std::exception& e) {
          a.ok = false;
          a.error = e.what();
        }
        {
          std::lock_guard<std::mutex> lock(ckpt_mutex);
          ckpt << annotation_to_json(a).dump() << '\n';
          ckpt.flush();
        }
        fresh[slot] = std::move(a);
      }
    };

    std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), pending.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    st.sent = pending.size();
  }

  for (const auto& a : fresh) {
    if (a.ok) ++st.fresh_ok;
    else if (st.first_fresh_error.empty()) st.first_fresh_error = a.error;
  }
  for (std::size_t i = 0; i < pending.size(); ++i) done[fresh[i].tweet_id] = std::move(fresh[i]);

  std::vector<RawAnnotation> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    auto it = done.find(rec.id);
    if (it == done.end()) throw BackendError("annotation missing for tweet " + rec.id);
    out.push_back(it->second);
    it->second.ok ? ++st.ok : ++st.failed;
  }
  return out;
}

// Scripted backend for tests and offline runs. Entries come from a JSONL file
// of {"tweet_id", "text", "fail_first": n} rows; the first n attempts for
// that id fail transiently before the scripted text is served. Tracks peak
// concurrent attempts so tests can assert the in-flight bound.
class MockBackend : public CompletionBackend {
 public:
  struct Entry {
    std::string text;
    int fail_first = 0;
  };

  MockBackend() = default;

  void load_file(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t nl = content.find('\n', pos);
      std::string_view line(content.data() + pos,
                            (nl == std::string::npos ? content.size() : nl) - pos);
      pos = (nl == std::string::npos) ? content.size() + 1 : nl + 1;
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(trimmed, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("tweet_id"))
        throw DataError("bad mock completion line in " + path.string());
      Entry e;
      e.text = j.value("text", std::string());
      e.fail_first = j.value("fail_first", 0);
      entries_[j["tweet_id"].get<std::string>()] = std::move(e);
    }
  }

  void add(const std::string& tweet_id, const std::string& text, int fail_first = 0) {
    entries_[tweet_id] = Entry{text, fail_first};
  }

  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  AttemptOutcome attempt(const CompletionRequest& request) override {
    int now = 1 + in_flight_.fetch_add(1);
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }
    invocations_.fetch_add(1);
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    AttemptOutcome out;
    auto it = entries_.find(request.tweet_id);
    if (it == entries_.end()) {
      out.error = "no scripted completion for tweet " + request.tweet_id;
      out.transient = false;
    } else {
      int attempt_no;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        attempt_no = ++attempt_counts_[request.tweet_id];
      }
      if (attempt_no <= it->second.fail_first) {
        out.error = "scripted transient failure " + std::to_string(attempt_no) + " for tweet " +
                    request.tweet_id;
        out.transient = true;
      } else {
        out.ok = true;
        out.text = it->second.text;
      }
    }
    in_flight_.fetch_sub(1);
    return out;
  }

  long invocations() const { return invocations_.load(); }
  int peak_in_flight() const { return peak_in_flight_.load(); }
  int attempts_for(const std::string& tweet_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = attempt_counts_.find(tweet_id);
    return it == attempt_counts_.end() ? 0 : it->second;
  }

 private:
  std::unordered_map<std::string, Entry> entries_;
  std::unordered_map<std::string, int> attempt_counts_;
  mutable std::mutex mutex_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
  std::atomic<long> invocations_{0};
  std::chrono::milliseconds latency_{0};
};

}  // namespace pollmster
