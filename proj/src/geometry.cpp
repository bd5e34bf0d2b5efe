#include "drivevqa/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace drivevqa {

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0) return identity();
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double radians) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(radians / 2.0);
  return {std::cos(radians / 2.0), a.x() * s, a.y() * s, a.z() * s};
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  // v' = v + 2w (u x v) + 2 u x (u x v), u = vector part
  const Vec3 u(q.x, q.y, q.z);
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w * t + u.cross(t);
}

std::string_view camera_name(Camera camera) {
  switch (camera) {
    case Camera::Front: return "CAM_FRONT";
    case Camera::FrontRight: return "CAM_FRONT_RIGHT";
    case Camera::FrontLeft: return "CAM_FRONT_LEFT";
    case Camera::Back: return "CAM_BACK";
    case Camera::BackRight: return "CAM_BACK_RIGHT";
    case Camera::BackLeft: return "CAM_BACK_LEFT";
  }
  return "CAM_UNKNOWN";
}

std::optional<Camera> parse_camera(std::string_view name) {
  for (Camera c : kCameraOrder) {
    if (camera_name(c) == name) return c;
  }
  return std::nullopt;
}

Vec3 global_to_camera(const Vec3& p, const EgoPose& ego, const CameraCalib& cam) {
  const Vec3 p_ego = quat_rotate(ego.rotation.conjugate(), p - ego.translation);
  return quat_rotate(cam.rotation.conjugate(), p_ego - cam.translation);
}

Vec3 camera_to_global(const Vec3& p_cam, const EgoPose& ego, const CameraCalib& cam) {
  const Vec3 p_ego = quat_rotate(cam.rotation, p_cam) + cam.translation;
  return quat_rotate(ego.rotation, p_ego) + ego.translation;
}

ProjectedPoint project(const Vec3& p_cam, const Mat3& intrinsics, int width, int height) {
  ProjectedPoint out;
  out.depth = p_cam.z();
  if (p_cam.z() <= 0.0) return out;
  out.in_front = true;
  const double z = p_cam.z();
  out.u = intrinsics(0, 0) * p_cam.x() / z + intrinsics(0, 1) * p_cam.y() / z + intrinsics(0, 2);
  out.v = intrinsics(1, 1) * p_cam.y() / z + intrinsics(1, 2);
  out.in_image = out.u >= 0.0 && out.u < width && out.v >= 0.0 && out.v < height;
  return out;
}

std::array<Vec3, 8> box_corners(const Box3D& box) {
  static constexpr std::array<double, 8> kX = {1, 1, 1, 1, -1, -1, -1, -1};
  static constexpr std::array<double, 8> kY = {1, -1, -1, 1, 1, -1, -1, 1};
  static constexpr std::array<double, 8> kZ = {1, 1, -1, -1, 1, 1, -1, -1};
  const double half_w = box.size.x() / 2.0;
  const double half_l = box.size.y() / 2.0;
  const double half_h = box.size.z() / 2.0;
  std::array<Vec3, 8> corners;
  for (std::size_t i = 0; i < 8; ++i) {
    const Vec3 local(kX[i] * half_l, kY[i] * half_w, kZ[i] * half_h);
    corners[i] = quat_rotate(box.rotation, local) + box.center;
  }
  return corners;
}

double ego_distance(const Box3D& box, const EgoPose& ego) {
  return (box.center - ego.translation).norm();
}

}  // namespace drivevqa
