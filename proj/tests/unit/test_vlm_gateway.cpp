#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "drivevqa/error.hpp"
#include "drivevqa/vlm_gateway.hpp"
#include "test_support.hpp"

using namespace drivevqa;
using namespace testsupport;
using nlohmann::json;

namespace {

class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> replies) : replies_(std::move(replies)) {}
  HttpResponse post(const std::string& url, const std::string& body, const std::string& key, double) override {
    urls.push_back(url);
    bodies.push_back(body);
    keys.push_back(key);
    if (replies_.empty()) return {0, "", "no more replies"};
    HttpResponse r = replies_.front();
    replies_.pop_front();
    return r;
  }
  std::vector<std::string> urls, bodies, keys;

 private:
  std::deque<HttpResponse> replies_;
};

std::string ok_body(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}},
              {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}}
      .dump();
}

PromptBundle small_bundle(std::string id = "q1", std::size_t n = 3) {
  PromptBundle b;
  b.question_id = std::move(id);
  b.category = Category::PerceptionMcq;
  b.segments = {{Role::System, SegmentKind::System, "sys"}, {Role::User, SegmentKind::Question, "Which? A. x B. y"}};
  b.sampling.n_samples = n;
  return b;
}

struct Harness {
  ScriptedTransport* transport = nullptr;
  std::vector<double> sleeps;
  std::unique_ptr<HttpBackend> backend;

  explicit Harness(std::deque<HttpResponse> replies, EndpointConfig cfg = {}) {
    auto t = std::make_unique<ScriptedTransport>(std::move(replies));
    transport = t.get();
    cfg.api_key = "secret";
    backend = std::make_unique<HttpBackend>(cfg, std::move(t), [this](double s) { sleeps.push_back(s); });
  }
};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::Io;
}

}  // namespace

TEST_SUITE("vlm_gateway") {

TEST_CASE("request body carries messages, images and the sample seed") {
  PromptBundle b = small_bundle();
  b.images.push_back({"CAM_FRONT", kFixtures / "dataset/samples/CAM_FRONT/scene-anchor-s5__CAM_FRONT.png"});
  const json j = json::parse(build_request_body(b, EndpointConfig{}, 4));
  CHECK(j["model"] == "Qwen2.5-VL-32B-Instruct");
  CHECK(j["seed"] == 4);
  REQUIRE(j["messages"].size() == 2);
  CHECK(j["messages"][0]["role"] == "system");
  const json& parts = j["messages"][1]["content"];
  REQUIRE(parts.size() == 3);
  CHECK(parts[0]["text"] == "CAM_FRONT");
  CHECK(parts[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,iVBOR", 0) == 0);
  CHECK(parts[2]["text"] == "Which? A. x B. y");
}

TEST_CASE("successful completion is parsed") {
  Harness h({{200, ok_body("Answer: A"), ""}});
  const ModelSample s = h.backend->complete(small_bundle(), 2);
  CHECK(s.text == "Answer: A");
  CHECK(s.sample_index == 2);
  CHECK(s.finish_reason == "stop");
  REQUIRE(s.usage.has_value());
  CHECK(s.usage->prompt_tokens == 11);
  CHECK(h.transport->urls[0] == "http://localhost:8000/v1/chat/completions");
  CHECK(h.transport->keys[0] == "secret");
}

TEST_CASE("transient failures retry with capped exponential backoff") {
  EndpointConfig cfg;
  cfg.max_retries = 4;
  cfg.backoff_initial_s = 1.0;
  cfg.backoff_max_s = 3.0;
  Harness h({{503, "", ""}, {0, "", "timeout"}, {429, "", ""}, {502, "", ""}, {200, ok_body("ok"), ""}}, cfg);
  const ModelSample s = h.backend->complete(small_bundle(), 0);
  CHECK(s.text == "ok");
  CHECK(s.retries == 4);
  CHECK(h.sleeps == std::vector<double>{1.0, 2.0, 3.0, 3.0});
}

TEST_CASE("exhausted retries surface EndpointUnavailable") {
  EndpointConfig cfg;
  cfg.max_retries = 2;
  Harness h({{500, "", ""}, {500, "", ""}, {500, "", ""}}, cfg);
  CHECK(code_of([&] { h.backend->complete(small_bundle(), 0); }) == Errc::EndpointUnavailable);
  CHECK(h.transport->bodies.size() == 3);
}

TEST_CASE("client errors do not retry") {
  Harness bad({{400, "nope", ""}});
  CHECK(code_of([&] { bad.backend->complete(small_bundle(), 0); }) == Errc::BadRequest);
  CHECK(bad.transport->bodies.size() == 1);
  Harness big({{413, "too large", ""}});
  CHECK(code_of([&] { big.backend->complete(small_bundle(), 0); }) == Errc::OversizedPayload);
}

TEST_CASE("payload cap is enforced before sending") {
  EndpointConfig cfg;
  cfg.max_payload_bytes = 10;
  Harness h({}, cfg);
  CHECK(code_of([&] { h.backend->complete(small_bundle(), 0); }) == Errc::OversizedPayload);
  CHECK(h.transport->bodies.empty());
}

TEST_CASE("unexpected response shapes are bad requests") {
  Harness h({{200, "{\"choices\": []}", ""}});
  CHECK(code_of([&] { h.backend->complete(small_bundle(), 0); }) == Errc::BadRequest);
}

TEST_CASE("environment overrides key and base URL") {
  ::setenv(kApiKeyEnv, "k-123", 1);
  ::setenv(kBaseUrlEnv, "http://example.invalid/v1", 1);
  const EndpointConfig c = with_env_overrides({});
  CHECK(c.api_key == "k-123");
  CHECK(c.base_url == "http://example.invalid/v1");
  ::unsetenv(kApiKeyEnv);
  ::unsetenv(kBaseUrlEnv);
  CHECK(with_env_overrides({}).api_key.empty());
}

TEST_CASE("endpoint validation") {
  EndpointConfig c;
  c.max_concurrency = 0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("mock backend is scripted then deterministic") {
  MockBackend m({{{"q1", 0}, "Answer: B"}}, {{"q2", "Answer: C"}});
  CHECK(m.complete(small_bundle("q1"), 0).text == "Answer: B");
  CHECK(m.complete(small_bundle("q2"), 3).text == "Answer: C");
  const std::string f = m.complete(small_bundle("q3"), 1).text;
  CHECK(f == MockBackend().complete(small_bundle("q3"), 1).text);
  CHECK(f == mock_fallback_text("q3", 1, Category::PerceptionMcq));
  CHECK(m.calls() == 3);
}

TEST_CASE("mock script file accepts strings and lists") {
  TempDir dir("mock");
  spit(dir.path() / "m.json", R"({"a": "Answer: A", "b": ["Answer: B", "Answer: C"]})");
  const auto m = MockBackend::from_file(dir.path() / "m.json");
  CHECK(m->complete(small_bundle("a"), 4).text == "Answer: A");
  CHECK(m->complete(small_bundle("b"), 1).text == "Answer: C");
  spit(dir.path() / "bad.json", R"({"a": 3})");
  CHECK_THROWS_AS(MockBackend::from_file(dir.path() / "bad.json"), Error);
}

TEST_CASE("rate limiter keeps any 60 s window under the limit") {
  double now = 0.0;
  std::vector<double> stamps;
  Clock clock{[&] { return now; }, [&](double s) { now += s; }};
  RateLimiter lim(3.0, clock);
  for (int i = 0; i < 7; ++i) {
    lim.acquire();
    stamps.push_back(now);
    now += 1.0;
  }
  for (std::size_t i = 3; i < stamps.size(); ++i) CHECK(stamps[i] - stamps[i - 3] >= 60.0 - 1e-9);
  CHECK(stamps[2] < 60.0);
}

TEST_CASE("sample store persists and tolerates a torn last line") {
  TempDir dir("store");
  const fs::path f = dir.path() / "samples.jsonl";
  {
    SampleStore s(f);
    s.append({"q1", 0, "Answer: A", 1.0, "stop", Usage{1, 2}, 0});
    s.append({"q1", 1, "Answer: B", 1.0, "stop", std::nullopt, 1});
    s.append({"q2", 0, "Answer: C", 1.0, "stop", std::nullopt, 0});
  }
  {
    std::ofstream out(f, std::ios::app);
    out << R"({"question_id": "q2", "sample_ind)";
  }
  SampleStore back(f);
  CHECK(back.size() == 3);
  CHECK(back.has("q1", 1));
  CHECK_FALSE(back.has("q2", 1));
  const auto q1 = back.for_question("q1");
  REQUIRE(q1.size() == 2);
  CHECK(q1[0].usage->completion_tokens == 2);
  CHECK(q1[1].text == "Answer: B");
}

TEST_CASE("sample JSON lines round-trip") {
  const ModelSample s{"q9", 3, "line\nbreak \"quoted\"", 12.5, "length", Usage{5, 6}, 2};
  CHECK(sample_from_json_line(sample_to_json_line(s)) == s);
}

namespace {

class SlowBackend : public Backend {
 public:
  ModelSample complete(const PromptBundle& b, std::size_t i) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    if (b.question_id == "bad") throw Error(Errc::EndpointUnavailable, "down");
    return {b.question_id, i, "Answer: A", 0, "stop", std::nullopt, 0};
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

}  // namespace

TEST_CASE("dispatch bounds concurrency, records failures, and resumes") {
  TempDir dir("dispatch");
  std::vector<PromptBundle> bundles{small_bundle("a", 4), small_bundle("b", 4), small_bundle("bad", 2)};
  SlowBackend backend;
  {
    SampleStore store(dir.path() / "s.jsonl");
    const DispatchReport r = dispatch(bundles, backend, store, 3);
    CHECK(r.requested == 10);
    CHECK(r.skipped == 0);
    CHECK(r.failures.size() == 2);
    CHECK(r.max_in_flight <= 3);
    CHECK(backend.peak.load() <= 3);
    CHECK(store.size() == 8);
  }
  SampleStore again(dir.path() / "s.jsonl");
  const DispatchReport r2 = dispatch(bundles, backend, again, 3);
  CHECK(r2.skipped == 8);
  CHECK(r2.requested == 2);  // only the failed pair is retried
}

}
