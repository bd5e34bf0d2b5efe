#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace drivevqa {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kImageWidth = 1600;
inline constexpr int kImageHeight = 900;

// Unit quaternion, scalar first (nuScenes stores rotations as [w, x, y, z]).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double radians);
  static Quaternion from_yaw(double radians) { return from_axis_angle(Vec3::UnitZ(), radians); }

  bool operator==(const Quaternion&) const = default;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);

Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

// The six surround views, in the order the prompts list them.
enum class Camera : std::uint8_t { Front, FrontRight, FrontLeft, Back, BackRight, BackLeft };

inline constexpr std::array<Camera, 6> kCameraOrder = {
    Camera::Front, Camera::FrontRight, Camera::FrontLeft,
    Camera::Back,  Camera::BackRight,  Camera::BackLeft};

std::string_view camera_name(Camera camera);
std::optional<Camera> parse_camera(std::string_view name);
inline std::size_t camera_index(Camera camera) { return static_cast<std::size_t>(camera); }

struct EgoPose {
  std::int64_t timestamp_us = 0;
  Vec3 translation = Vec3::Zero();  // global frame, meters
  Quaternion rotation;              // ego -> global

  bool operator==(const EgoPose&) const = default;
};

struct CameraCalib {
  Camera camera = Camera::Front;
  Vec3 translation = Vec3::Zero();  // camera origin in the ego frame
  Quaternion rotation;              // camera -> ego
  Mat3 intrinsics = Mat3::Identity();

  bool operator==(const CameraCalib&) const = default;
};

// Global point into the camera frame (x right, y down, z forward).
Vec3 global_to_camera(const Vec3& p, const EgoPose& ego, const CameraCalib& cam);
Vec3 camera_to_global(const Vec3& p_cam, const EgoPose& ego, const CameraCalib& cam);

struct ProjectedPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  bool in_front = false;
  bool in_image = false;
};

ProjectedPoint project(const Vec3& p_cam, const Mat3& intrinsics,
                       int width = kImageWidth, int height = kImageHeight);

struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // (w, l, h)
  Quaternion rotation;

  bool operator==(const Box3D&) const = default;
};

// Corner order follows the nuScenes devkit: 0-3 face the box's +x (length)
// direction, 4-7 the -x direction; i and i+4 share an edge.
std::array<Vec3, 8> box_corners(const Box3D& box);

double ego_distance(const Box3D& box, const EgoPose& ego);

}  // namespace drivevqa
