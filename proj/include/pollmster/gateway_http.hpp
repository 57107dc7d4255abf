#pragma once

#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pollmster/gateway.hpp"
#include "pollmster/util.hpp"

namespace pollmster {

// Completions-style HTTP backend: POST {model, prompt, temperature,
// max_tokens} and read choices[0].text back. A client is built per attempt,
// which keeps attempt() safe to call from several workers at once.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(const BackendConfig& config) : config_(config) {
    config_.validate();
    split_endpoint(config_.endpoint_url, base_, path_);
  }

  AttemptOutcome attempt(const CompletionRequest& request) override {
    AttemptOutcome out;
    httplib::Client client(base_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
    time_t whole = std::max<time_t>(1, secs.count());
    client.set_connection_timeout(whole, 0);
    client.set_read_timeout(whole, 0);
    client.set_write_timeout(whole, 0);

    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["prompt"] = request.prompt;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      out.transient = true;
      out.error = "connection failure: " + httplib::to_string(res.error());
      return out;
    }
    if (res->status >= 500 || res->status == 429) {
      out.transient = true;
      out.error = "server error: http " + std::to_string(res->status);
      return out;
    }
    if (res->status != 200) {
      out.transient = false;
      out.error = "request rejected: http " + std::to_string(res->status) +
                  (res->body.empty() ? "" : " " + res->body.substr(0, 200));
      return out;
    }
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty() || !j["choices"][0].is_object() ||
        !j["choices"][0].contains("text") || !j["choices"][0]["text"].is_string()) {
      out.transient = false;
      out.error = "unexpected response shape (want choices[0].text)";
      return out;
    }
    out.ok = true;
    out.text = j["choices"][0]["text"].get<std::string>();
    return out;
  }

 private:
  static void split_endpoint(const std::string& url, std::string& base, std::string& path) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos)
      throw ConfigError("endpoint_url must include a scheme: " + url);
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
      base = url;
      path = "/";
    } else {
      base = url.substr(0, slash);
      path = url.substr(slash);
    }
  }

  BackendConfig config_;
  std::string base_;
  std::string path_;
};

}  // namespace pollmster
