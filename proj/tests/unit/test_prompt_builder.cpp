#include <doctest.h>

#include <nlohmann/json.hpp>

#include "drivevqa/error.hpp"
#include "drivevqa/prompt_builder.hpp"
#include "test_support.hpp"

using namespace drivevqa;
using namespace testsupport;

namespace {

QuestionRecord question(std::string text, std::string tag = "") {
  QuestionRecord q;
  q.id = "q";
  q.text = std::move(text);
  q.category = std::move(tag);
  q.object_refs = parse_object_refs(q.text);
  return q;
}

std::vector<SegmentKind> kinds(const PromptBundle& b) {
  std::vector<SegmentKind> k;
  for (const auto& s : b.segments) k.push_back(s.kind);
  return k;
}

PromptImages fixture_images() {
  const fs::path d = kFixtures / "dataset" / "samples";
  PromptImages im;
  im.history.push_back({"history-1:CAM_FRONT", d / "CAM_FRONT" / "scene-anchor-s4__CAM_FRONT.png"});
  for (Camera c : kCameraOrder) {
    const std::string n(camera_name(c));
    im.current.push_back({n, d / n / ("scene-anchor-s5__" + n + ".png")});
  }
  return im;
}

}  // namespace

TEST_SUITE("prompt_builder") {

TEST_CASE("explicit tags win") {
  CHECK(route_category(question("anything", "planning_obj")) == Category::PlanningObj);
  CHECK(route_category(question("anything", "Perception-MCQ")) == Category::PerceptionMcq);
}

TEST_CASE("family tags are refined") {
  CHECK(route_category(question("What is <c1,CAM_FRONT,1,2> doing?", "perception")) == Category::PerceptionObj);
  CHECK(route_category(question("What is important here?", "perception")) == Category::PerceptionScene);
  CHECK(route_category(question("Status? A. Going ahead. B. Stopped.", "perception")) == Category::PerceptionMcq);
  CHECK(route_category(question("What should the ego car do?", "planning")) == Category::PlanningScene);
  CHECK(route_category(question("Act on <c1,CAM_BACK,1,2>?", "planning")) == Category::PlanningObj);
  CHECK(route_category(question("x", "robustness")) == Category::CorruptionMcq);
}

TEST_CASE("keyword fallback") {
  CHECK(route_category(question("What will the car do next?")) == Category::Prediction);
  CHECK(route_category(question("What should the ego vehicle do?")) == Category::PlanningScene);
  CHECK(route_category(question("What are the important objects?")) == Category::PerceptionScene);
  CHECK(route_category(question("Which is it? A. Clear. B. Foggy. C. Snow.")) == Category::PerceptionMcq);
  CHECK(route_category(question("Is the image corrupted? A. Yes. B. No.")) == Category::CorruptionMcq);
  try {
    route_category(question("Hello."));
    FAIL("expected UnroutableQuestion");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnroutableQuestion);
  }
}

TEST_CASE("routing is total over the fixture questions") {
  const auto qs = load_questions(kFixtures / "questions.json");
  const std::vector<Category> want{Category::PerceptionMcq, Category::PerceptionObj, Category::PerceptionScene,
                                   Category::Prediction,    Category::PlanningObj,   Category::PlanningScene,
                                   Category::CorruptionMcq, Category::PerceptionMcq, Category::Prediction,
                                   Category::PerceptionObj, Category::PlanningObj,   Category::PerceptionScene};
  REQUIRE(qs.size() == want.size());
  for (std::size_t i = 0; i < qs.size(); ++i) CHECK(route_category(qs[i]) == want[i]);
}

TEST_CASE("category names round-trip") {
  for (Category c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
  CHECK_FALSE(parse_category("weather").has_value());
  CHECK(is_mcq(Category::CorruptionMcq));
  CHECK_FALSE(is_mcq(Category::Prediction));
  CHECK(has_mcq_options("A. yes B. no"));
  CHECK_FALSE(has_mcq_options("A car is here."));
}

TEST_CASE("flags") {
  const FeatureFlags all = parse_flags("all");
  CHECK(all.boxes3d);
  CHECK(all.dgo_visual);
  CHECK(parse_flags("none") == FeatureFlags{});
  const FeatureFlags f = parse_flags("boxes3d,vp_text");
  CHECK(f.boxes3d);
  CHECK(f.vp_text);
  CHECK_FALSE(f.zoom);
  CHECK(parse_flags(render_flags(f)) == f);
  CHECK_THROWS_AS(parse_flags("boxes3d,lasers"), Error);
}

TEST_CASE("config serialization round-trips") {
  RunConfig c;
  c.phase = Phase::Phase1;
  c.history_frames = 3;
  c.shots = 2;
  c.flags = parse_flags("zoom,dgo_visual");
  c.temperature = 0.2;
  c.dgo_mode = OrientationMode::Overlay;
  const std::string text = serialize_config(c);
  CHECK(parse_config(text) == c);
  CHECK(serialize_config(parse_config(text)) == text);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_config(R"({"shotz": 3})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"sampling": {"temp": 1}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"phase": 3})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"n_samples": -1})"), Error);
  CHECK_THROWS_AS(parse_config("[1]"), Error);
  CHECK(parse_config(R"({"phase": 1})").phase == Phase::Phase1);
}

TEST_CASE("exemplar pool is complete and well-formed") {
  const PromptAssets a = load_assets(kAssets);
  for (Category c : kAllCategories) {
    CHECK(select_exemplars(c, a.exemplars, 10).size() == 10);
    CHECK(a.instructions.count(c) == 1);
  }
  CHECK_FALSE(a.version().empty());
}

TEST_CASE("exemplars without the three sections are rejected") {
  CHECK_THROWS_AS(parse_exemplars(R"([{"category": "prediction", "question": "q", "answer": "Answer: x"}])"), Error);
  CHECK_THROWS_AS(parse_exemplars(
                      R"([{"category": "prediction", "question": "q", "answer": "Answer: x Reasoning: y Observations: z"}])"),
                  Error);
  CHECK(parse_exemplars(
            R"([{"category": "prediction", "question": "q", "answer": "Observations: a Reasoning: b Answer: c"}])")
            .size() == 1);
}

TEST_CASE("selection keeps pool order") {
  const std::vector<Exemplar> pool{{Category::Prediction, "1", "a"}, {Category::PlanningObj, "2", "b"},
                                   {Category::Prediction, "3", "c"}};
  const auto got = select_exemplars(Category::Prediction, pool, 5);
  REQUIRE(got.size() == 2);
  CHECK(got[0].question == "1");
  CHECK(got[1].question == "3");
}

TEST_CASE("phase 2 segment order") {
  const PromptAssets a = load_assets(kAssets);
  RunConfig cfg;
  cfg.flags = parse_flags("all");
  const auto q = question("What will the car do?");
  const auto shots = select_exemplars(Category::Prediction, a.exemplars, 2);
  const PromptBundle b = assemble_prompt(q, Category::Prediction, "CTX", "EGO", fixture_images(), shots, cfg, a);
  const std::vector<SegmentKind> want{SegmentKind::System,   SegmentKind::Domain,   SegmentKind::Instruction,
                                      SegmentKind::VpText,   SegmentKind::DgoText,  SegmentKind::Exemplar,
                                      SegmentKind::Exemplar, SegmentKind::Context,  SegmentKind::Ego,
                                      SegmentKind::Question};
  CHECK(kinds(b) == want);
  CHECK(b.segments.back().text == q.text);
  CHECK(b.segments[3].text.find(a.vp_task.at(Family::Prediction)) != std::string::npos);
  CHECK(b.segments[5].text.rfind("Example question:\n", 0) == 0);
  REQUIRE(b.images.size() == 7);
  CHECK(b.images[0].label == "history-1:CAM_FRONT");
  CHECK(b.images[1].label == "CAM_FRONT");
}

TEST_CASE("phase 1 drops context and ego and uses the generic preamble") {
  const PromptAssets a = load_assets(kAssets);
  RunConfig cfg;
  cfg.phase = Phase::Phase1;
  const PromptBundle b =
      assemble_prompt(question("What will the car do?"), Category::Prediction, "CTX", "EGO", {}, {}, cfg, a);
  CHECK(kinds(b) == std::vector<SegmentKind>{SegmentKind::System, SegmentKind::Domain, SegmentKind::Instruction,
                                             SegmentKind::Question});
  CHECK(b.segments[0].text == a.phase1_system_prompt);
  CHECK(b.segments[2].text == a.phase1_cot);
}

TEST_CASE("token budget drops exemplars from the end, then fails") {
  const PromptAssets a = load_assets(kAssets);
  RunConfig cfg;
  const auto q = question("What will the car do?");
  const auto shots = select_exemplars(Category::Prediction, a.exemplars, 10);
  const PromptBundle full = assemble_prompt(q, Category::Prediction, "", "", {}, shots, cfg, a);
  CHECK(full.dropped_exemplars == 0);
  const std::size_t need = estimate_tokens(full.segments, cfg.chars_per_token);

  cfg.max_prompt_tokens = need - 1;
  const PromptBundle trimmed = assemble_prompt(q, Category::Prediction, "", "", {}, shots, cfg, a);
  CHECK(trimmed.dropped_exemplars == 1);
  int ex = 0;
  for (const auto& s : trimmed.segments) ex += s.kind == SegmentKind::Exemplar;
  CHECK(ex == 9);
  CHECK(trimmed.segments[3].text == full.segments[3].text);  // first exemplar kept

  cfg.max_prompt_tokens = 10;
  try {
    assemble_prompt(q, Category::Prediction, "", "", {}, shots, cfg, a);
    FAIL("expected TokenBudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TokenBudgetExceeded);
  }
}

TEST_CASE("missing attachments fail assembly") {
  const PromptAssets a = load_assets(kAssets);
  PromptImages im;
  im.current.push_back({"CAM_FRONT", "/nonexistent/front.png"});
  try {
    assemble_prompt(question("What will the car do?"), Category::Prediction, "", "", im, {}, RunConfig{}, a);
    FAIL("expected MissingImage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingImage);
  }
}

TEST_CASE("serialized bundles are stable and path-independent") {
  const PromptAssets a = load_assets(kAssets);
  const auto q = question("What will the car do?");
  const PromptBundle b = assemble_prompt(q, Category::Prediction, "C", "E", fixture_images(), {}, RunConfig{}, a);
  const PathPrefixes p{{"dataset", kFixtures / "dataset"}};
  const std::string s1 = serialize_bundle(b, p);
  CHECK(s1 == serialize_bundle(b, p));
  const auto j = nlohmann::json::parse(s1);
  CHECK(j["images"][0]["path"] == "dataset:samples/CAM_FRONT/scene-anchor-s4__CAM_FRONT.png");
  CHECK(display_path("/elsewhere/x.png", p) == "/elsewhere/x.png");
}

TEST_CASE("estimate is ceil(chars / 4)") {
  const std::vector<Segment> s{{Role::User, SegmentKind::Question, "12345"}};
  CHECK(estimate_tokens(s, 4.0) == 2);
}

}
