#include "drivevqa/anchor_context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

std::vector<AnchorEntry> build_anchors(const SceneBundle& scene, std::size_t frame) {
  if (frame >= scene.keyframes.size()) {
    throw Error(Errc::InvalidArgument, fmt::format("frame {} outside scene {}", frame, scene.scene_token));
  }
  const Keyframe& kf = scene.keyframes[frame];
  std::vector<AnchorEntry> anchors;
  for (Camera cam : kCameraOrder) {
    const CameraCalib& calib = kf.view(cam).calib;
    const std::size_t first = anchors.size();
    for (const Annotation& ann : kf.annotations) {
      const ProjectedPoint c = project(global_to_camera(ann.box.center, kf.ego_pose, calib), calib.intrinsics);
      if (!c.in_front || !c.in_image) continue;

      AnchorEntry a;
      a.camera = cam;
      a.u = c.u;
      a.v = c.v;
      a.category = ann.category;
      a.attribute = ann.attribute.value_or("unknown");
      a.distance_m = ego_distance(ann.box, kf.ego_pose);
      a.annotation_token = ann.token;

      PixelRect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      bool any = false;
      for (const Vec3& corner : box_corners(ann.box)) {
        const ProjectedPoint p = project(global_to_camera(corner, kf.ego_pose, calib), calib.intrinsics);
        if (!p.in_front) continue;
        any = true;
        r.x0 = std::min(r.x0, p.u);
        r.y0 = std::min(r.y0, p.v);
        r.x1 = std::max(r.x1, p.u);
        r.y1 = std::max(r.y1, p.v);
      }
      if (any) {
        r.x0 = std::clamp(r.x0, 0.0, kImageWidth - 1.0);
        r.x1 = std::clamp(r.x1, 0.0, kImageWidth - 1.0);
        r.y0 = std::clamp(r.y0, 0.0, kImageHeight - 1.0);
        r.y1 = std::clamp(r.y1, 0.0, kImageHeight - 1.0);
        a.box = r;
      }
      anchors.push_back(std::move(a));
    }
    std::stable_sort(anchors.begin() + static_cast<std::ptrdiff_t>(first), anchors.end(),
                     [](const AnchorEntry& a, const AnchorEntry& b) {
                       if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
                       return a.annotation_token < b.annotation_token;
                     });
  }
  return anchors;
}

AnchorMatch match_anchor(const ObjectRef& ref, std::span<const AnchorEntry> anchors, double tolerance_px) {
  if (!(tolerance_px > 0.0)) {
    throw Error(Errc::InvalidArgument, fmt::format("tolerance_px must be positive, got {}", tolerance_px));
  }
  AnchorMatch m;
  m.ref = ref;
  m.pixel_error = std::numeric_limits<double>::infinity();
  const AnchorEntry* best = nullptr;
  for (const AnchorEntry& a : anchors) {
    if (a.camera != ref.camera) continue;
    const double err = std::hypot(a.u - ref.x, a.v - ref.y);
    if (best == nullptr || err < m.pixel_error ||
        (err == m.pixel_error && a.annotation_token < best->annotation_token)) {
      best = &a;
      m.pixel_error = err;
    }
  }
  if (best != nullptr) {
    m.anchor = *best;
    m.matched = m.pixel_error <= tolerance_px;
  }
  return m;
}

std::vector<AnchorMatch> match_anchors(std::span<const ObjectRef> refs, std::span<const AnchorEntry> anchors,
                                       double tolerance_px) {
  std::vector<AnchorMatch> out;
  out.reserve(refs.size());
  for (const ObjectRef& r : refs) out.push_back(match_anchor(r, anchors, tolerance_px));
  return out;
}

std::string render_candidate_line(const AnchorEntry& a) {
  return fmt::format("<{},{:.1f},{:.1f}> {} [{}] (~{:.1f} m)", camera_name(a.camera), a.u, a.v, a.category,
                     a.attribute, a.distance_m);
}

std::string render_context_block(std::span<const AnchorMatch> matches, std::span<const AnchorEntry> anchors) {
  std::string out = "=== Anchor Info for Question Objects ===\n";
  for (const AnchorMatch& m : matches) {
    if (m.matched && m.anchor) {
      out += fmt::format("{} ({:.1f},{:.1f}) -> {} [{}] ~{:.1f}m\n", camera_name(m.ref.camera), m.ref.x, m.ref.y,
                         m.anchor->category, m.anchor->attribute, m.anchor->distance_m);
    } else {
      out += fmt::format("{} ({:.1f},{:.1f}) -> [unmatched reference]\n", camera_name(m.ref.camera), m.ref.x,
                         m.ref.y);
    }
  }
  out += "\n=== Full Anchor Context ===\nSCENE CONTEXT:\nOBJECT CANDIDATES:\n";
  for (const AnchorEntry& a : anchors) {
    out += render_candidate_line(a);
    out += '\n';
  }
  return out;
}

}  // namespace drivevqa
