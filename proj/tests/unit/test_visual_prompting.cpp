#include <doctest.h>

#include <cmath>
#include <numbers>

#include "drivevqa/error.hpp"
#include "drivevqa/visual_prompting.hpp"
#include "test_support.hpp"

using namespace drivevqa;
using namespace testsupport;

namespace {

CameraCalib front_calib() {
  CameraCalib c;
  c.intrinsics << 1266.4, 0, 816.3, 0, 1266.4, 491.5, 0, 0, 1;
  // camera (x right, y down, z forward) -> ego (x forward, y left, z up)
  Mat3 r;
  r << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  const Eigen::Quaterniond q(r);
  c.rotation = {q.w(), q.x(), q.y(), q.z()};
  c.translation = Vec3(1.7, 0, 1.5);
  return c;
}

// Unbinned per-pixel magnitude, straight from the Sobel definition.
double oracle_mass(const Image& img) {
  const auto g = to_grayscale(img);
  const int w = img.width(), h = img.height();
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return g[static_cast<std::size_t>(y) * w + x];
  };
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2 * at(x - 1, y) -
                        at(x - 1, y + 1);
      const double gy = at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2 * at(x, y - 1) -
                        at(x + 1, y - 1);
      total += std::hypot(gx, gy);
    }
  }
  return total;
}

}  // namespace

TEST_SUITE("visual_prompting") {

TEST_CASE("box in front of the camera draws edges; input untouched") {
  Box3D b;
  b.center = Vec3(15, 0, 0.8);
  b.size = Vec3(1.9, 4.6, 1.6);
  const auto corners = project_box(b, EgoPose{}, front_calib());
  for (const auto& c : corners) CHECK(c.in_front);
  const auto edges = visible_box_edges(corners, kImageWidth, kImageHeight);
  CHECK(edges.size() == 12);
  const Image src = uniform_image();
  const Image out = draw_box3d(src, corners);
  CHECK(src == uniform_image());
  CHECK_FALSE(out == src);
}

TEST_CASE("box straddling the camera plane keeps only fully-in-front edges") {
  Box3D b;
  b.center = Vec3(1.7, 0, 1.5);  // centred on the camera
  b.size = Vec3(2, 6, 2);
  const auto corners = project_box(b, EgoPose{}, front_calib());
  int in_front = 0;
  for (const auto& c : corners) in_front += c.in_front;
  CHECK(in_front == 4);
  const auto edges = visible_box_edges(corners, kImageWidth, kImageHeight);
  CHECK(edges.size() <= 4);
}

TEST_CASE("box behind the camera is NoVisibleCorner") {
  Box3D b;
  b.center = Vec3(-20, 0, 1);
  const auto corners = project_box(b, EgoPose{}, front_calib());
  try {
    draw_box3d(uniform_image(), corners);
    FAIL("expected NoVisibleCorner");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoVisibleCorner);
  }
}

TEST_CASE("zoom crop covers 1/scale of the frame and clamps at borders") {
  AnchorEntry a;
  a.u = 5;
  a.v = 890;
  const ZoomResult z = zoom_crop(uniform_image(), a, 4.0);
  CHECK(z.crop.width() == 400);
  CHECK(z.crop.height() == 225);
  CHECK(z.window.x == 0);
  CHECK(z.window.y == 900 - 225);
  a.u = 800;
  a.v = 450;
  const ZoomResult c = zoom_crop(uniform_image(), a, 4.0);
  CHECK(c.window.x == 600);
  CHECK(c.window.y == 338);
  CHECK_THROWS_AS(zoom_crop(uniform_image(), a, 0.0), Error);
}

TEST_CASE("vanishing point on a synthetic perspective image") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const VanishingPoint vp = estimate_vp(perspective_image(800, 450, seed));
    CHECK(std::hypot(vp.u - 800, vp.v - 450) < 10.0);
    CHECK(vp.confidence >= 0.3);
  }
}

TEST_CASE("vanishing point follows an off-centre target") {
  const VanishingPoint vp = estimate_vp(perspective_image(700, 420, 5));
  CHECK(std::hypot(vp.u - 700, vp.v - 420) < 10.0);
}

TEST_CASE("uniform image has no vanishing point and no overlay") {
  const Image img = uniform_image();
  const VanishingPoint vp = estimate_vp(img);
  CHECK(vp.confidence < 0.3);
  CHECK_FALSE(gated_vp_overlay(img, vp).has_value());
}

TEST_CASE("overlay near the edge clips without crashing") {
  const Image out = overlay_vp(uniform_image(), {1599.0, 0.0, 1.0});
  CHECK(out.at(1599, 0) == kYellow);
  CHECK(out.at(0, 0) == kYellow);  // horizon row
}

TEST_CASE("orientation histogram mass matches the per-pixel oracle") {
  int n = 0;
  for (int period : {3, 5, 8, 13, 21}) {
    for (const Image& img : {stripes(true, period, 20, 220), stripes(false, period, 40, 90), checker(period, 0, 255),
                             checker(period + 1, 100, 140)}) {
      const OrientationHistogram h = dgo_histogram(img);
      const double oracle = oracle_mass(img);
      CHECK(std::abs(h.total_mass - oracle) <= 1e-3 * oracle);
      double sum = 0.0;
      for (double b : h.bins) sum += b;
      CHECK(sum == doctest::Approx(h.total_mass));
      ++n;
    }
  }
  CHECK(n == 20);
}

TEST_CASE("dominant orientation of stripes") {
  const OrientationHistogram v = dgo_histogram(stripes(true, 6, 0, 255));
  CHECK(v.dominant_theta <= v.bin_width);
  const OrientationHistogram h = dgo_histogram(stripes(false, 6, 0, 255));
  CHECK(std::abs(h.dominant_theta - std::numbers::pi / 2) <= h.bin_width);
}

TEST_CASE("argmax is unchanged by intensity scaling") {
  const Image a = stripes(true, 7, 30, 100);
  const Image b = stripes(true, 7, 60, 200);
  CHECK(dgo_histogram(a).dominant_theta == dgo_histogram(b).dominant_theta);
  const OrientationHistogram ha = dgo_histogram(a), hb = dgo_histogram(b);
  CHECK(hb.total_mass == doctest::Approx(2.0 * ha.total_mass));
}

TEST_CASE("uniform image is degenerate for orientation") {
  try {
    dgo_histogram(uniform_image(64, 48));
    FAIL("expected DegenerateImage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateImage);
  }
}

TEST_CASE("orientation map modes") {
  const Image img = checker(9, 0, 255);
  const OrientationHistogram h = dgo_histogram(img);
  const Image panel = render_orientation_map(img, h, OrientationMode::Panel);
  CHECK(panel.width() == 2 * img.width());
  CHECK(panel.height() == img.height());
  CHECK(render_orientation_map(img, h, OrientationMode::Overlay).width() == img.width());
  CHECK(render_orientation_map(img, h, OrientationMode::MapOnly).width() == img.width());
  CHECK(parse_orientation_mode("overlay") == OrientationMode::Overlay);
  CHECK_FALSE(parse_orientation_mode("side").has_value());
}

}
