#pragma once

// Chat-completion backends behind one interface. Every round trip produces
// an Exchange keyed by a digest of the canonical request, which lets a
// recorded transcript stand in for a live model.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/prompt.hpp"

namespace exide {

struct CompletionRequest {
  PromptBundle prompt;
  std::string model;
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

struct Exchange {
  std::string request_digest;
  std::string prompt_text;
  std::string response_text;
  std::string model;
  std::string timestamp;  // RFC 3339, UTC
  std::int64_t latency_ms = 0;

  bool operator==(const Exchange&) const = default;
};

namespace detail {

// CRLF/CR become LF, trailing whitespace on each line and blank lines at
// either end are removed.
inline std::string normalize_message(std::string_view s) {
  std::string unix;
  unix.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      unix.push_back('\n');
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      unix.push_back(s[i]);
    }
  }
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= unix.size()) {
    std::size_t end = unix.find('\n', pos);
    if (end == std::string::npos) end = unix.size();
    std::string line = unix.substr(pos, end - pos);
    while (!line.empty() && text::is_ascii_space(line.back())) line.pop_back();
    lines.push_back(std::move(line));
    pos = end + 1;
  }
  std::size_t first = 0, last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

}  // namespace detail

/// Chat messages as sent to an OpenAI-compatible endpoint.
inline nlohmann::json request_messages(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (request.prompt.system) messages.push_back({{"role", "system"}, {"content", *request.prompt.system}});
  messages.push_back({{"role", "user"}, {"content", request.prompt.user}});
  return messages;
}

/// Key-sorted, compact, whitespace-normalized serialization; the digest
/// input. Independent of platform and of how the prompt was line-wrapped.
inline std::string canonical_request(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (request.prompt.system) {
    messages.push_back({{"role", "system"}, {"content", detail::normalize_message(*request.prompt.system)}});
  }
  messages.push_back({{"role", "user"}, {"content", detail::normalize_message(request.prompt.user)}});
  const nlohmann::json j = {
      {"max_tokens", request.max_tokens ? nlohmann::json(*request.max_tokens) : nlohmann::json(nullptr)},
      {"messages", messages},
      {"model", request.model},
      {"temperature", request.temperature},
  };
  return j.dump();
}

inline std::string request_digest(const CompletionRequest& request) {
  return detail::sha256_hex(canonical_request(request));
}

inline std::string prompt_text(const CompletionRequest& request) {
  if (request.prompt.system) return *request.prompt.system + "\n\n" + request.prompt.user;
  return request.prompt.user;
}

inline std::string rfc3339_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

inline nlohmann::json exchange_to_json(const Exchange& e) {
  return {{"request_digest", e.request_digest}, {"prompt_text", e.prompt_text}, {"response_text", e.response_text},
          {"model", e.model},                   {"timestamp", e.timestamp},     {"latency_ms", e.latency_ms}};
}

inline Exchange exchange_from_json(const nlohmann::json& j, const std::string& path) {
  Exchange e;
  e.request_digest = detail::require_string(j, path, "request_digest");
  e.prompt_text = detail::require_string(j, path, "prompt_text");
  e.response_text = detail::require_string(j, path, "response_text");
  e.model = detail::require_string(j, path, "model");
  e.timestamp = detail::require_string(j, path, "timestamp");
  const auto& latency = detail::require(j, path, "latency_ms");
  if (!latency.is_number_integer() || latency.get<std::int64_t>() < 0) {
    detail::schema_error(path + "/latency_ms", "expected a non-negative integer");
  }
  e.latency_ms = latency.get<std::int64_t>();
  return e;
}

/// One JSON object per line; blank lines are skipped.
inline std::vector<Exchange> load_transcript(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<Exchange> out;
  std::size_t pos = 0, lineno = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    ++lineno;
    const std::string_view line = text::trim(std::string_view(content).substr(pos, end - pos));
    if (!line.empty()) {
      const std::string where = path.string() + ":" + std::to_string(lineno);
      out.push_back(exchange_from_json(parse_json(line, where), where));
    }
    pos = end + 1;
  }
  return out;
}

inline void append_transcript(std::ostream& out, const Exchange& e) { out << exchange_to_json(e).dump() << '\n'; }

/// Safe for concurrent complete() calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Exchange complete(const CompletionRequest& request) = 0;
};

/// Looks responses up by request digest, or asks a responder callback.
class ScriptedBackend : public Backend {
 public:
  using Responder = std::function<std::optional<std::string>(const CompletionRequest&)>;

  explicit ScriptedBackend(std::map<std::string, std::string> responses) : responses_(std::move(responses)) {}
  explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

  Exchange complete(const CompletionRequest& request) override {
    const std::string digest = request_digest(request);
    std::optional<std::string> response;
    if (responder_) {
      response = responder_(request);
    } else if (auto it = responses_.find(digest); it != responses_.end()) {
      response = it->second;
    }
    if (!response) throw Error(Errc::MissingTranscript, digest);
    return {digest, prompt_text(request), *response, request.model, rfc3339_now(), 0};
  }

 private:
  std::map<std::string, std::string> responses_;
  Responder responder_;
};

/// Serves stored exchanges verbatim. When a digest repeats, the last entry
/// wins.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::vector<Exchange>& exchanges) {
    for (const Exchange& e : exchanges) index_[e.request_digest] = e;
  }
  explicit ReplayBackend(const std::filesystem::path& transcript) : ReplayBackend(load_transcript(transcript)) {}

  Exchange complete(const CompletionRequest& request) override {
    const std::string digest = request_digest(request);
    auto it = index_.find(digest);
    if (it == index_.end()) throw Error(Errc::MissingTranscript, digest);
    return it->second;
  }

  std::size_t size() const noexcept { return index_.size(); }

 private:
  std::map<std::string, Exchange> index_;
};

/// Appends every exchange produced by `inner` to a JSONL transcript.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(Backend& inner, const std::filesystem::path& transcript)
      : inner_(inner), out_(transcript, std::ios::binary | std::ios::app), path_(transcript) {
    if (!out_) throw Error(Errc::Io, "cannot append to transcript " + transcript.string());
  }

  Exchange complete(const CompletionRequest& request) override {
    Exchange e = inner_.complete(request);
    std::lock_guard lock(mutex_);
    append_transcript(out_, e);
    out_.flush();
    if (!out_) throw Error(Errc::Io, "cannot append to transcript " + path_.string());
    return e;
  }

 private:
  Backend& inner_;
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Completes `request` against `backend` and appends the exchange to the
/// transcript. The transcript is opened before the backend is called.
inline Exchange record(const CompletionRequest& request, Backend& backend, const std::filesystem::path& transcript) {
  RecordingBackend recorder(backend, transcript);
  return recorder.complete(request);
}

}  // namespace exide
