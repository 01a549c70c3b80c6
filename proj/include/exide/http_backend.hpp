#pragma once

// OpenAI-compatible chat-completion backend over HTTP(S).

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#ifdef EXIDE_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "exide/error.hpp"
#include "exide/llm.hpp"

namespace exide {

struct HttpOptions {
  /// Base URL such as "https://api.openai.com/v1", or the full
  /// ".../chat/completions" URL.
  std::string endpoint;
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::ptrdiff_t max_in_flight = 4;
  std::chrono::seconds timeout{120};
};

/// LLM_API_KEY unless a key file is given; the file's content is trimmed.
inline std::string resolve_api_key(const std::optional<std::filesystem::path>& key_file) {
  if (key_file) return std::string(text::trim(read_file(*key_file)));
  if (const char* env = std::getenv("LLM_API_KEY")) return env;
  return {};
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions options)
      : options_(std::move(options)), slots_(std::max<std::ptrdiff_t>(1, options_.max_in_flight)) {
    if (options_.max_attempts < 1) options_.max_attempts = 1;
    std::string url = options_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::Config, "endpoint needs a scheme: " + options_.endpoint);
    const auto path_begin = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "" : url.substr(path_begin);
    if (!path_.ends_with("/chat/completions")) path_ += "/chat/completions";
#ifndef EXIDE_WITH_OPENSSL
    if (origin_.starts_with("https://")) throw Error(Errc::Config, "built without TLS support: " + origin_);
#endif
  }

  Exchange complete(const CompletionRequest& request) override {
    nlohmann::json body = {
        {"model", request.model}, {"messages", request_messages(request)}, {"temperature", request.temperature}};
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    const std::string payload = body.dump();

    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const auto started = std::chrono::steady_clock::now();
    auto backoff = options_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      const bool last = attempt >= options_.max_attempts;
      httplib::Client client(origin_);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      httplib::Headers headers;
      if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
      auto res = client.Post(path_, headers, payload, "application/json");

      if (!res) {
        if (last) throw Error(Errc::Network, origin_ + ": " + httplib::to_string(res.error()));
      } else if (res->status == 429) {
        if (last) throw Error(Errc::RateLimited, origin_ + " after " + std::to_string(attempt) + " attempts");
      } else if (res->status >= 500) {
        if (last) throw Error(Errc::HttpStatus, std::to_string(res->status) + " " + res->body);
      } else if (res->status != 200) {
        throw Error(Errc::HttpStatus, std::to_string(res->status) + " " + res->body);
      } else {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return {request_digest(request), prompt_text(request), first_choice(res->body), request.model,
                rfc3339_now(), elapsed.count()};
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

 private:
  static std::string first_choice(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::HttpStatus, std::string("200 with an unexpected body: ") + e.what());
    }
  }

  HttpOptions options_;
  std::counting_semaphore<1024> slots_;
  std::string origin_;
  std::string path_;
};

}  // namespace exide
