#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drivevqa/dataset.hpp"

namespace drivevqa {

inline constexpr double kDefaultMatchTolerancePx = 50.0;

struct PixelRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

// One visible annotated object as seen from one camera.
struct AnchorEntry {
  Camera camera = Camera::Front;
  double u = 0.0;  // projected box center
  double v = 0.0;
  std::string category;
  std::string attribute = "unknown";
  double distance_m = 0.0;
  std::string annotation_token;
  // Bounding rectangle of the in-front projected corners, clipped to the image.
  std::optional<PixelRect> box;
};

struct AnchorMatch {
  ObjectRef ref;
  std::optional<AnchorEntry> anchor;
  double pixel_error = 0.0;  // +inf when the camera has no anchors
  bool matched = false;
};

// Anchors whose projected center lands inside a camera image, grouped in the
// fixed camera order and sorted by distance (then token) within a camera.
std::vector<AnchorEntry> build_anchors(const SceneBundle& scene, std::size_t frame);

AnchorMatch match_anchor(const ObjectRef& ref, std::span<const AnchorEntry> anchors,
                         double tolerance_px = kDefaultMatchTolerancePx);

std::vector<AnchorMatch> match_anchors(std::span<const ObjectRef> refs,
                                       std::span<const AnchorEntry> anchors,
                                       double tolerance_px = kDefaultMatchTolerancePx);

// "<CAM_FRONT,1139.0,529.9> vehicle.car [vehicle.stopped] (~28.2 m)"
std::string render_candidate_line(const AnchorEntry& anchor);

// Question-object section followed by the full candidate list.
std::string render_context_block(std::span<const AnchorMatch> matches,
                                 std::span<const AnchorEntry> anchors);

}  // namespace drivevqa
