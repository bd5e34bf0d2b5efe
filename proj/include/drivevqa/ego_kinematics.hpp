#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivevqa/dataset.hpp"
#include "drivevqa/geometry.hpp"

namespace drivevqa {

// Label cutoffs; exposed in the run configuration.
struct KinematicsThresholds {
  double accel_mps2 = 0.5;     // |accel| below this is "constant"
  double yaw_rate_dps = 2.0;   // |yaw rate| below this is "straight"
  bool operator==(const KinematicsThresholds&) const = default;
};

enum class AccelLabel { Accelerating, Decelerating, Constant };
enum class TurnLabel { TurningLeft, TurningRight, Straight };

std::string_view to_string(AccelLabel label);
std::string_view to_string(TurnLabel label);

struct EgoState {
  double speed = 0.0;          // m/s
  double accel = 0.0;          // m/s^2
  AccelLabel accel_label = AccelLabel::Constant;
  double heading_deg = 0.0;    // clockwise from map north, [0, 360)
  std::string heading_label = "north";
  double yaw_rate_dps = 0.0;   // counter-clockwise positive
  TurnLabel turn_label = TurnLabel::Straight;
};

// Yaw of the vehicle x-axis in the global frame, radians, counter-clockwise
// from global +x (east).
double yaw_from_quaternion(const Quaternion& q);

// Compass heading (clockwise from north) for a counter-clockwise yaw.
double heading_from_yaw(double yaw_rad);

// One of eight 45 degree sectors centred on the compass points.
std::string_view compass_label(double heading_deg);

EgoState estimate_state(std::span<const EgoPose> poses, const KinematicsThresholds& thresholds = {});

// "Ego-vehicle speed: 8 m/s, accelerating; Ego heading: north-east (turning right)."
std::string serialize_ego_state(const EgoState& state);

// Poses of keyframes [frame - history, frame], clipped at the scene start.
std::vector<EgoPose> pose_history(const SceneBundle& scene, std::size_t frame, std::size_t history);

}  // namespace drivevqa
