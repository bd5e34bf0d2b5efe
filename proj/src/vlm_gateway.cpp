#include "drivevqa/vlm_gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "drivevqa/digest.hpp"

namespace drivevqa {

using nlohmann::json;

void validate(const EndpointConfig& cfg) {
  if (cfg.max_concurrency < 1) throw Error(Errc::InvalidArgument, "endpoint: max_concurrency must be >= 1");
  if (!(cfg.timeout_s > 0.0)) throw Error(Errc::InvalidArgument, "endpoint: timeout_s must be positive");
  if (cfg.max_retries < 0) throw Error(Errc::InvalidArgument, "endpoint: max_retries must be >= 0");
}

EndpointConfig with_env_overrides(EndpointConfig cfg) {
  if (const char* key = std::getenv(kApiKeyEnv); key != nullptr && *key != '\0') cfg.api_key = key;
  if (const char* url = std::getenv(kBaseUrlEnv); url != nullptr && *url != '\0') cfg.base_url = url;
  return cfg;
}

std::string sample_to_json_line(const ModelSample& s) {
  json j{{"question_id", s.question_id}, {"sample_index", s.sample_index}, {"text", s.text},
         {"latency_ms", s.latency_ms},   {"finish_reason", s.finish_reason}, {"retries", s.retries}};
  if (s.usage) j["usage"] = {{"prompt_tokens", s.usage->prompt_tokens}, {"completion_tokens", s.usage->completion_tokens}};
  return j.dump();
}

ModelSample sample_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    ModelSample s;
    s.question_id = j.at("question_id").get<std::string>();
    s.sample_index = j.at("sample_index").get<std::size_t>();
    s.text = j.at("text").get<std::string>();
    s.latency_ms = j.value("latency_ms", 0.0);
    s.finish_reason = j.value("finish_reason", "");
    s.retries = j.value("retries", 0);
    if (j.contains("usage") && j["usage"].is_object()) {
      s.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::Io, fmt::format("bad sample record: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string read_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::MissingImage, fmt::format("cannot read image {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string build_request_body(const PromptBundle& bundle, const EndpointConfig& cfg, std::size_t sample_index) {
  json messages = json::array();
  std::size_t last_user = bundle.segments.size();
  for (std::size_t i = 0; i < bundle.segments.size(); ++i) {
    if (bundle.segments[i].role == Role::User) last_user = i;
  }
  for (std::size_t i = 0; i < bundle.segments.size(); ++i) {
    const Segment& s = bundle.segments[i];
    if (i != last_user) {
      messages.push_back({{"role", to_string(s.role)}, {"content", s.text}});
      continue;
    }
    json parts = json::array();
    for (const ImageRef& img : bundle.images) {
      const std::string bytes = read_bytes(img.path);
      parts.push_back({{"type", "text"}, {"text", img.label}});
      parts.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:image/png;base64," +
                         base64_encode({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()})}}}});
    }
    parts.push_back({{"type", "text"}, {"text", s.text}});
    messages.push_back({{"role", "user"}, {"content", parts}});
  }
  const json body{
      {"model", cfg.model_name},
      {"messages", messages},
      {"temperature", bundle.sampling.temperature},
      {"top_p", bundle.sampling.top_p},
      {"max_tokens", bundle.sampling.max_tokens},
      {"n", 1},
      {"seed", sample_index},
  };
  return body.dump();
}

HttpBackend::HttpBackend(EndpointConfig cfg, std::unique_ptr<Transport> transport, Sleeper sleep)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  validate(cfg_);
  if (!transport_) transport_ = make_http_transport();
  if (!sleep_) sleep_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
}

ModelSample HttpBackend::complete(const PromptBundle& bundle, std::size_t sample_index) {
  const std::string body = build_request_body(bundle, cfg_, sample_index);
  if (body.size() > cfg_.max_payload_bytes) {
    throw Error(Errc::OversizedPayload, fmt::format("question {}: request is {} bytes, cap is {}", bundle.question_id,
                                                    body.size(), cfg_.max_payload_bytes));
  }
  std::string url = cfg_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  double backoff = cfg_.backoff_initial_s;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleep_(backoff);
      backoff = std::min(backoff * 2.0, cfg_.backoff_max_s);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const HttpResponse r = transport_->post(url, body, cfg_.api_key, cfg_.timeout_s);
    const double latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (r.status == 0 || r.status == 429 || r.status >= 500) {
      last_error = r.status == 0 ? r.error : fmt::format("HTTP {}", r.status);
      spdlog::warn("question {} sample {}: attempt {} failed ({})", bundle.question_id, sample_index, attempt + 1,
                   last_error);
      continue;
    }
    if (r.status == 413) throw Error(Errc::OversizedPayload, fmt::format("endpoint rejected payload: {}", r.body));
    if (r.status >= 400) throw Error(Errc::BadRequest, fmt::format("HTTP {}: {}", r.status, r.body));

    ModelSample s;
    s.question_id = bundle.question_id;
    s.sample_index = sample_index;
    s.latency_ms = latency;
    s.retries = attempt;
    try {
      const json j = json::parse(r.body);
      const json& choice = j.at("choices").at(0);
      const json& content = choice.at("message").at("content");
      if (content.is_string()) {
        s.text = content.get<std::string>();
      } else if (content.is_array()) {
        for (const json& p : content) {
          if (p.value("type", "") == "text") s.text += p.value("text", "");
        }
      }
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        s.finish_reason = choice["finish_reason"].get<std::string>();
      }
      if (j.contains("usage") && j["usage"].is_object()) {
        s.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
      }
    } catch (const json::exception& e) {
      throw Error(Errc::BadRequest, fmt::format("unexpected response body: {}", e.what()));
    }
    return s;
  }
  throw Error(Errc::EndpointUnavailable, fmt::format("question {} sample {}: gave up after {} attempts ({})",
                                                     bundle.question_id, sample_index, cfg_.max_retries + 1,
                                                     last_error));
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(Script script, std::map<std::string, std::string> per_question)
    : script_(std::move(script)), per_question_(std::move(per_question)) {}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read mock responses {}", file.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, fmt::format("mock responses: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "mock responses must be an object keyed by question id");
  Script script;
  std::map<std::string, std::string> per_question;
  for (const auto& [qid, v] : doc.items()) {
    if (v.is_string()) {
      per_question[qid] = v.get<std::string>();
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw Error(Errc::InvalidArgument, fmt::format("mock responses: {}[{}]", qid, i));
        script[{qid, i}] = v[i].get<std::string>();
      }
    } else {
      throw Error(Errc::InvalidArgument, fmt::format("mock responses: bad entry for {}", qid));
    }
  }
  return std::make_unique<MockBackend>(std::move(script), std::move(per_question));
}

std::string mock_fallback_text(const std::string& question_id, std::size_t sample_index, Category category) {
  const std::string h = sha256_hex(fmt::format("{}#{}", question_id, sample_index));
  const unsigned pick = static_cast<unsigned>(std::stoul(h.substr(0, 8), nullptr, 16));
  const std::string head =
      "Observations: The anchors list the objects around the ego vehicle. The question refers to them directly.\n"
      "Reasoning: The answer follows from the anchor categories and distances. No other objects exist.\n";
  if (is_mcq(category)) return head + fmt::format("Answer: {}.", "ABCD"[pick % 4]);
  static constexpr std::array<std::string_view, 4> kFree = {
      "keep the current lane and maintain speed",
      "slow down and yield to the pedestrian",
      "the car ahead is stopped",
      "the vehicle will continue straight",
  };
  return head + fmt::format("Answer: {}.", kFree[pick % kFree.size()]);
}

ModelSample MockBackend::complete(const PromptBundle& bundle, std::size_t sample_index) {
  ++calls_;
  ModelSample s;
  s.question_id = bundle.question_id;
  s.sample_index = sample_index;
  s.finish_reason = "stop";
  if (auto it = script_.find({bundle.question_id, sample_index}); it != script_.end()) {
    s.text = it->second;
  } else if (auto q = per_question_.find(bundle.question_id); q != per_question_.end()) {
    s.text = q->second;
  } else {
    s.text = mock_fallback_text(bundle.question_id, sample_index, bundle.category);
  }
  return s;
}

// ---------------------------------------------------------------------------

Clock Clock::steady() {
  return {[] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
          },
          [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); }};
}

RateLimiter::RateLimiter(double requests_per_minute, Clock clock)
    : rpm_(requests_per_minute), clock_(std::move(clock)) {}

void RateLimiter::acquire() {
  if (!(rpm_ > 0.0)) return;
  const auto cap = static_cast<std::size_t>(std::max(1.0, std::floor(rpm_)));
  std::unique_lock lock(mu_);
  while (true) {
    const double now = clock_.now();
    while (!stamps_.empty() && stamps_.front() <= now - 60.0) stamps_.pop_front();
    if (stamps_.size() < cap) {
      stamps_.push_back(now);
      return;
    }
    const double wait = stamps_.front() + 60.0 - now;
    // Holding the lock while sleeping keeps waiters in arrival order.
    clock_.sleep(std::max(wait, 1e-3));
  }
}

SampleStore::SampleStore(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  bool needs_newline = false;
  if (std::ifstream in{file_, std::ios::binary}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        ModelSample s = sample_from_json_line(line);
        samples_[{s.question_id, s.sample_index}] = std::move(s);
      } catch (const Error&) {
        spdlog::warn("{}:{}: skipping unreadable sample record", file_.string(), lineno);
      }
      needs_newline = in.eof();
    }
  }
  out_.open(file_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(Errc::Io, fmt::format("cannot open {}", file_.string()));
  // A crash mid-write can leave a partial last line; start fresh after it.
  if (needs_newline) out_ << '\n';
}

bool SampleStore::has(const std::string& question_id, std::size_t sample_index) const {
  std::lock_guard lock(mu_);
  return samples_.count({question_id, sample_index}) != 0;
}

void SampleStore::append(const ModelSample& s) {
  std::lock_guard lock(mu_);
  out_ << sample_to_json_line(s) << '\n';
  out_.flush();
  samples_[{s.question_id, s.sample_index}] = s;
}

std::vector<ModelSample> SampleStore::for_question(const std::string& question_id) const {
  std::lock_guard lock(mu_);
  std::vector<ModelSample> out;
  for (auto it = samples_.lower_bound({question_id, 0}); it != samples_.end() && it->first.first == question_id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::size_t SampleStore::size() const {
  std::lock_guard lock(mu_);
  return samples_.size();
}

DispatchReport dispatch(std::span<const PromptBundle> bundles, Backend& backend, SampleStore& store,
                        std::size_t max_concurrency, RateLimiter* limiter) {
  if (max_concurrency < 1) throw Error(Errc::InvalidArgument, "max_concurrency must be >= 1");
  std::vector<std::pair<const PromptBundle*, std::size_t>> jobs;
  DispatchReport report;
  for (const PromptBundle& b : bundles) {
    for (std::size_t i = 0; i < b.sampling.n_samples; ++i) {
      if (store.has(b.question_id, i)) {
        ++report.skipped;
      } else {
        jobs.emplace_back(&b, i);
      }
    }
  }
  report.requested = jobs.size();
  if (jobs.empty()) return report;

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> in_flight{0};
  std::atomic<std::size_t> peak{0};
  std::mutex fail_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const auto& [bundle, idx] = jobs[k];
      if (limiter != nullptr) limiter->acquire();
      const std::size_t now = ++in_flight;
      std::size_t seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      try {
        store.append(backend.complete(*bundle, idx));
      } catch (const Error& e) {
        std::lock_guard lock(fail_mu);
        report.failures.push_back({bundle->question_id, idx, e.code(), e.what()});
      } catch (const std::exception& e) {
        std::lock_guard lock(fail_mu);
        report.failures.push_back({bundle->question_id, idx, Errc::EndpointUnavailable, e.what()});
      }
      --in_flight;
    }
  };
  const std::size_t n_workers = std::min(max_concurrency, jobs.size());
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  report.max_in_flight = peak.load();
  std::sort(report.failures.begin(), report.failures.end(), [](const DispatchFailure& a, const DispatchFailure& b) {
    return std::tie(a.question_id, a.sample_index) < std::tie(b.question_id, b.sample_index);
  });
  return report;
}

}  // namespace drivevqa
