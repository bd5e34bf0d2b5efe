#include <doctest.h>

#include <limits>

#include "drivevqa/anchor_context.hpp"
#include "drivevqa/pipeline.hpp"
#include "test_support.hpp"

using namespace drivevqa;
using namespace testsupport;

namespace {

AnchorEntry anchor(Camera cam, double u, double v, double dist, std::string token) {
  AnchorEntry a;
  a.camera = cam;
  a.u = u;
  a.v = v;
  a.category = "vehicle.car";
  a.attribute = "vehicle.moving";
  a.distance_m = dist;
  a.annotation_token = std::move(token);
  return a;
}

}  // namespace

TEST_SUITE("anchor_context") {

TEST_CASE("fixture scene renders the golden context byte for byte") {
  const ContextOutput out = cmd_context(kFixtures / "dataset", "scene-anchor", 5, "<c1,CAM_FRONT_LEFT,738.3,541.7>",
                                        false);
  const std::string golden = slurp(kGolden / "anchor_context.txt");
  const std::string ego = "Ego-vehicle speed: 8 m/s, accelerating; Ego heading: north-east (turning right).\n";
  CHECK(out.text == golden + ego);
  CHECK(out.notices.empty());
}

TEST_CASE("candidate line format") {
  CHECK(render_candidate_line(anchor(Camera::Front, 1139.0, 529.94, 28.2, "t")) ==
        "<CAM_FRONT,1139.0,529.9> vehicle.car [vehicle.moving] (~28.2 m)");
}

TEST_CASE("anchors are grouped by camera and sorted by distance") {
  const Dataset ds(kFixtures / "dataset");
  const auto anchors = build_anchors(*ds.scene("scene-anchor"), 5);
  REQUIRE(anchors.size() == 12);
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    const auto ci = camera_index(anchors[i].camera), cp = camera_index(anchors[i - 1].camera);
    const auto oi = std::find(kCameraOrder.begin(), kCameraOrder.end(), anchors[i].camera);
    const auto op = std::find(kCameraOrder.begin(), kCameraOrder.end(), anchors[i - 1].camera);
    CHECK(op <= oi);
    if (ci == cp) CHECK(anchors[i - 1].distance_m <= anchors[i].distance_m);
  }
  for (const auto& a : anchors) {
    CHECK(a.u >= 0.0);
    CHECK(a.u < kImageWidth);
    CHECK(a.distance_m >= 0.0);
    CHECK(a.box.has_value());
  }
}

TEST_CASE("empty keyframe gives an empty candidate list") {
  const Dataset ds(kFixtures / "dataset");
  CHECK(build_anchors(*ds.scene("scene-street"), 3).empty());
}

TEST_CASE("matching picks the nearest anchor on the same camera within tolerance") {
  const std::vector<AnchorEntry> anchors{anchor(Camera::Front, 100, 100, 5, "b"), anchor(Camera::Front, 130, 100, 9, "a"),
                                         anchor(Camera::Back, 101, 100, 1, "c")};
  const AnchorMatch m = match_anchor({"c1", Camera::Front, 104, 100}, anchors, 50);
  REQUIRE(m.matched);
  CHECK(m.anchor->annotation_token == "b");
  CHECK(m.pixel_error == doctest::Approx(4.0));

  const AnchorMatch far = match_anchor({"c1", Camera::Front, 300, 100}, anchors, 50);
  CHECK_FALSE(far.matched);
  CHECK(far.pixel_error == doctest::Approx(170.0));

  const AnchorMatch none = match_anchor({"c1", Camera::FrontLeft, 100, 100}, anchors, 50);
  CHECK_FALSE(none.matched);
  CHECK(none.pixel_error == std::numeric_limits<double>::infinity());
}

TEST_CASE("equidistant anchors tie-break on the smaller token") {
  const std::vector<AnchorEntry> anchors{anchor(Camera::Front, 90, 100, 5, "z"), anchor(Camera::Front, 110, 100, 5, "m")};
  CHECK(match_anchor({"c1", Camera::Front, 100, 100}, anchors, 50).anchor->annotation_token == "m");
}

TEST_CASE("match at exactly the tolerance counts") {
  const std::vector<AnchorEntry> anchors{anchor(Camera::Front, 150, 100, 5, "a")};
  CHECK(match_anchor({"c1", Camera::Front, 100, 100}, anchors, 50).matched);
}

TEST_CASE("unmatched references are listed as such") {
  const std::vector<AnchorEntry> anchors;
  const auto matches = match_anchors(parse_object_refs("<c1,CAM_FRONT,900.0,500.0>"), anchors);
  const std::string text = render_context_block(matches, anchors);
  CHECK(text ==
        "=== Anchor Info for Question Objects ===\nCAM_FRONT (900.0,500.0) -> [unmatched reference]\n\n"
        "=== Full Anchor Context ===\nSCENE CONTEXT:\nOBJECT CANDIDATES:\n");
}

TEST_CASE("rendering keeps the order anchors are given in") {
  // The hand-written reference listing groups FRONT, BACK_LEFT, BACK, FRONT_LEFT.
  const std::vector<AnchorEntry> anchors{
      anchor(Camera::Front, 1139.0, 529.9, 28.2, "a"), anchor(Camera::BackLeft, 400.0, 520.0, 20.0, "b"),
      anchor(Camera::Back, 783.2, 512.7, 27.9, "c"), anchor(Camera::FrontLeft, 744.6, 537.8, 7.3, "d")};
  const std::string text = render_context_block({}, anchors);
  const auto at = [&](const char* s) { return text.find(s); };
  REQUIRE(at("<CAM_FRONT,") != std::string::npos);
  CHECK(at("<CAM_FRONT,") < at("<CAM_BACK_LEFT,"));
  CHECK(at("<CAM_BACK_LEFT,") < at("<CAM_BACK,"));
  CHECK(at("<CAM_BACK,") < at("<CAM_FRONT_LEFT,"));
}

TEST_CASE("context without poses omits the ego line or fails on request") {
  const ContextOutput out = cmd_context(kFixtures / "dataset", "scene-street", 0, "", false);
  CHECK(out.text.find("Ego-vehicle") == std::string::npos);
  REQUIRE(out.notices.size() == 1);
  try {
    cmd_context(kFixtures / "dataset", "scene-street", 0, "", true);
    FAIL("expected InsufficientHistory");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientHistory);
  }
}

}
