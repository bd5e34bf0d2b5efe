#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivevqa/error.hpp"
#include "drivevqa/prompt_builder.hpp"

namespace drivevqa {

inline constexpr const char* kApiKeyEnv = "DRIVEVQA_API_KEY";
inline constexpr const char* kBaseUrlEnv = "DRIVEVQA_BASE_URL";

struct EndpointConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string api_key;  // never serialized
  std::string model_name = "Qwen2.5-VL-32B-Instruct";
  double timeout_s = 120.0;
  int max_retries = 3;
  std::size_t max_concurrency = 4;
  double requests_per_minute = 60.0;  // <= 0 disables limiting
  std::size_t max_payload_bytes = 64u << 20;
  double backoff_initial_s = 1.0;
  double backoff_max_s = 30.0;

  bool operator==(const EndpointConfig&) const = default;
};

void validate(const EndpointConfig& cfg);
// Applies the key and base-URL environment overrides.
EndpointConfig with_env_overrides(EndpointConfig cfg);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;

  bool operator==(const Usage&) const = default;
};

struct ModelSample {
  std::string question_id;
  std::size_t sample_index = 0;
  std::string text;
  double latency_ms = 0.0;
  std::string finish_reason;
  std::optional<Usage> usage;
  int retries = 0;

  bool operator==(const ModelSample&) const = default;
};

std::string sample_to_json_line(const ModelSample& s);
ModelSample sample_from_json_line(std::string_view line);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelSample complete(const PromptBundle& bundle, std::size_t sample_index) = 0;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  int status = 0;  // 0 = connection failure or timeout
  std::string body;
  std::string error;
};

// Minimal POST seam so retry behaviour can be tested without a server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body, const std::string& api_key,
                            double timeout_s) = 0;
};

std::unique_ptr<Transport> make_http_transport();

using Sleeper = std::function<void(double seconds)>;

// Chat-completions request; images become base64 data URLs in the content
// parts of the final user message.
std::string build_request_body(const PromptBundle& bundle, const EndpointConfig& cfg, std::size_t sample_index);

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(EndpointConfig cfg, std::unique_ptr<Transport> transport = nullptr, Sleeper sleep = nullptr);

  // Retries connection failures, 429 and 5xx with exponential backoff;
  // 413 and oversized bodies are OversizedPayload, other 4xx BadRequest.
  ModelSample complete(const PromptBundle& bundle, std::size_t sample_index) override;

 private:
  EndpointConfig cfg_;
  std::unique_ptr<Transport> transport_;
  Sleeper sleep_;
};

// ---------------------------------------------------------------------------
// Mock

// Scripted answers keyed by (question id, sample index); a question mapped to
// a single string answers every index with it. Unscripted requests get a
// deterministic answer derived from a hash of the key.
class MockBackend : public Backend {
 public:
  using Script = std::map<std::pair<std::string, std::size_t>, std::string>;

  MockBackend() = default;
  explicit MockBackend(Script script, std::map<std::string, std::string> per_question = {});
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& file);

  ModelSample complete(const PromptBundle& bundle, std::size_t sample_index) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  Script script_;
  std::map<std::string, std::string> per_question_;
  std::atomic<std::size_t> calls_{0};
};

std::string mock_fallback_text(const std::string& question_id, std::size_t sample_index, Category category);

// ---------------------------------------------------------------------------
// Rate limiting and dispatch

struct Clock {
  std::function<double()> now;  // seconds
  Sleeper sleep;

  static Clock steady();
};

// Sliding one-minute window: never more than `rpm` acquisitions in any 60 s.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute, Clock clock = Clock::steady());
  void acquire();

 private:
  double rpm_;
  Clock clock_;
  std::mutex mu_;
  std::deque<double> stamps_;
};

// Append-only JSONL of samples. Loading tolerates a truncated final line.
class SampleStore {
 public:
  explicit SampleStore(std::filesystem::path file);

  bool has(const std::string& question_id, std::size_t sample_index) const;
  void append(const ModelSample& s);
  std::vector<ModelSample> for_question(const std::string& question_id) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::pair<std::string, std::size_t>, ModelSample> samples_;
};

struct DispatchFailure {
  std::string question_id;
  std::size_t sample_index = 0;
  Errc code = Errc::EndpointUnavailable;
  std::string message;
};

struct DispatchReport {
  std::size_t requested = 0;
  std::size_t skipped = 0;  // already in the store
  std::size_t max_in_flight = 0;
  std::vector<DispatchFailure> failures;
};

// Runs every (bundle, sample index) not yet stored on a pool of
// `max_concurrency` workers.
DispatchReport dispatch(std::span<const PromptBundle> bundles, Backend& backend, SampleStore& store,
                        std::size_t max_concurrency, RateLimiter* limiter = nullptr);

}  // namespace drivevqa
