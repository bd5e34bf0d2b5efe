#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include <Eigen/Dense>

#include "drivevqa/image.hpp"
#include "drivevqa/pipeline.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace drivevqa;

inline const fs::path kFixtures = DRIVEVQA_FIXTURE_DIR;
inline const fs::path kGolden = DRIVEVQA_GOLDEN_DIR;
inline const fs::path kAssets = DRIVEVQA_ASSETS_DIR;

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("drivevqa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Fixture dataset + scripted mock, writing under `out`.
inline PipelineConfig fixture_config(const fs::path& out) {
  PipelineConfig c;
  c.paths.dataset_root = kFixtures / "dataset";
  c.paths.assets = kAssets;
  c.paths.questions = kFixtures / "questions.json";
  c.paths.gold = kFixtures / "gold.json";
  c.paths.mock_responses = kFixtures / "mock_responses.json";
  c.paths.out = out;
  c.mock = true;
  return c;
}

// ---------------------------------------------------------------------------
// Synthetic images

// Road-like one-point perspective: bright rays leaving (vu, vv) in all
// directions except near-horizontal, on a two-tone background.
inline Image perspective_image(double vu, double vv, unsigned seed = 1, int width = 1600, int height = 900) {
  Image img(width, height, {60, 60, 60});
  for (int y = static_cast<int>(vv); y < height; ++y) {
    for (int x = 0; x < width; ++x) img.set(x, y, {105, 105, 105});
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-4.0, 4.0);
  for (double a = 20.0; a < 360.0; a += 22.0) {
    const double deg = a + jitter(rng);
    const double m = std::fmod(deg, 180.0);
    if (m < 12.0 || m > 168.0) continue;  // keep clear of the horizon
    const double t = deg * std::numbers::pi / 180.0;
    draw_line(img, {vu + 30 * std::cos(t), vv + 30 * std::sin(t), vu + 3000 * std::cos(t), vv + 3000 * std::sin(t)},
              {235, 235, 235}, 4);
  }
  return img;
}

inline Image uniform_image(int width = 1600, int height = 900, std::uint8_t level = 128) {
  return Image(width, height, {level, level, level});
}

// Stripes of the given period; vertical stripes vary along x.
inline Image stripes(bool vertical, int period, std::uint8_t lo, std::uint8_t hi, int width = 160, int height = 120) {
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int k = vertical ? x : y;
      const std::uint8_t v = (k / period) % 2 ? hi : lo;
      img.set(x, y, {v, v, v});
    }
  }
  return img;
}

inline Image checker(int period, std::uint8_t lo, std::uint8_t hi, int width = 160, int height = 120) {
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint8_t v = ((x / period) + (y / period)) % 2 ? hi : lo;
      img.set(x, y, {v, v, v});
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Geometry oracle: homogeneous transforms built from the scalar quaternion
// formula, inverted numerically.

inline Eigen::Matrix3d oracle_rotation(const Quaternion& q0) {
  const double n = std::sqrt(q0.w * q0.w + q0.x * q0.x + q0.y * q0.y + q0.z * q0.z);
  const double w = q0.w / n, x = q0.x / n, y = q0.y / n, z = q0.z / n;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),  //
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),   //
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline Eigen::Matrix4d oracle_transform(const Quaternion& q, const Vec3& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = oracle_rotation(q);
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Vec3 oracle_global_to_camera(const Vec3& p, const EgoPose& ego, const CameraCalib& cam) {
  const Eigen::Matrix4d m =
      oracle_transform(cam.rotation, cam.translation).inverse() * oracle_transform(ego.rotation, ego.translation).inverse();
  return (m * p.homogeneous()).head<3>();
}

inline Eigen::Vector2d oracle_project(const Vec3& pc, const Mat3& k) {
  const double x = pc.x() / pc.z(), y = pc.y() / pc.z();
  return {k(0, 0) * x + k(0, 1) * y + k(0, 2), k(1, 1) * y + k(1, 2)};
}

inline Quaternion random_quaternion(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quaternion q{n(rng), n(rng), n(rng), n(rng)};
  return q.normalized();
}

}  // namespace testsupport
