#include "drivevqa/ego_kinematics.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_pi(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double seconds_between(const EgoPose& a, const EgoPose& b) {
  return static_cast<double>(b.timestamp_us - a.timestamp_us) * 1e-6;
}

}  // namespace

std::string_view to_string(AccelLabel label) {
  switch (label) {
    case AccelLabel::Accelerating: return "accelerating";
    case AccelLabel::Decelerating: return "decelerating";
    case AccelLabel::Constant: return "constant";
  }
  return "constant";
}

std::string_view to_string(TurnLabel label) {
  switch (label) {
    case TurnLabel::TurningLeft: return "turning-left";
    case TurnLabel::TurningRight: return "turning-right";
    case TurnLabel::Straight: return "straight";
  }
  return "straight";
}

double yaw_from_quaternion(const Quaternion& q) {
  return std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
}

double heading_from_yaw(double yaw_rad) {
  double h = std::fmod(90.0 - yaw_rad * kRadToDeg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

std::string_view compass_label(double heading_deg) {
  static constexpr std::array<std::string_view, 8> kNames = {
      "north", "north-east", "east", "south-east", "south", "south-west", "west", "north-west"};
  double h = std::fmod(heading_deg, 360.0);
  if (h < 0.0) h += 360.0;
  const auto sector = static_cast<std::size_t>(std::floor((h + 22.5) / 45.0)) % 8;
  return kNames[sector];
}

EgoState estimate_state(std::span<const EgoPose> poses, const KinematicsThresholds& thresholds) {
  if (poses.size() < 2) {
    throw Error(Errc::InsufficientHistory,
                fmt::format("ego state needs at least 2 poses, got {}", poses.size()));
  }
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].timestamp_us <= poses[i - 1].timestamp_us) {
      throw Error(Errc::ZeroDt, fmt::format("pose {} timestamp {} does not advance past {}", i,
                                            poses[i].timestamp_us, poses[i - 1].timestamp_us));
    }
  }

  const std::size_t n = poses.size();
  const EgoPose& last = poses[n - 1];
  const EgoPose& prev = poses[n - 2];
  const double dt = seconds_between(prev, last);

  EgoState s;
  s.speed = (last.translation - prev.translation).norm() / dt;

  if (n >= 3) {
    const EgoPose& prev2 = poses[n - 3];
    const double dt_prev = seconds_between(prev2, prev);
    const double v_prev = (prev.translation - prev2.translation).norm() / dt_prev;
    // The two mean speeds belong to the interval midpoints.
    s.accel = (s.speed - v_prev) / (0.5 * (dt + dt_prev));
  }
  if (std::abs(s.accel) < thresholds.accel_mps2) {
    s.accel_label = AccelLabel::Constant;
  } else {
    s.accel_label = s.accel > 0.0 ? AccelLabel::Accelerating : AccelLabel::Decelerating;
  }

  const double yaw = yaw_from_quaternion(last.rotation);
  s.heading_deg = heading_from_yaw(yaw);
  s.heading_label = std::string(compass_label(s.heading_deg));
  s.yaw_rate_dps = wrap_pi(yaw - yaw_from_quaternion(prev.rotation)) * kRadToDeg / dt;
  if (std::abs(s.yaw_rate_dps) < thresholds.yaw_rate_dps) {
    s.turn_label = TurnLabel::Straight;
  } else {
    s.turn_label = s.yaw_rate_dps > 0.0 ? TurnLabel::TurningLeft : TurnLabel::TurningRight;
  }
  return s;
}

std::string serialize_ego_state(const EgoState& state) {
  std::string turn(to_string(state.turn_label));
  for (char& c : turn) {
    if (c == '-') c = ' ';
  }
  return fmt::format("Ego-vehicle speed: {} m/s, {}; Ego heading: {} ({}).", std::lround(state.speed),
                     to_string(state.accel_label), state.heading_label, turn);
}

std::vector<EgoPose> pose_history(const SceneBundle& scene, std::size_t frame, std::size_t history) {
  if (frame >= scene.keyframes.size()) {
    throw Error(Errc::InvalidArgument,
                fmt::format("frame {} outside scene {}", frame, scene.scene_token));
  }
  const std::size_t first = frame >= history ? frame - history : 0;
  std::vector<EgoPose> poses;
  for (std::size_t i = first; i <= frame; ++i) poses.push_back(scene.keyframes[i].ego_pose);
  return poses;
}

}  // namespace drivevqa
