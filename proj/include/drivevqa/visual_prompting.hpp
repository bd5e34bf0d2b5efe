#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "drivevqa/anchor_context.hpp"
#include "drivevqa/geometry.hpp"
#include "drivevqa/image.hpp"

namespace drivevqa {

// ---------------------------------------------------------------------------
// 3D wireframes

struct BoxStyle {
  Rgb color = kGreen;
  int thickness = 2;
};

// Index pairs of the 12 box edges for the box_corners() ordering.
inline constexpr std::array<std::array<int, 2>, 12> kBoxEdges = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0},  // +x face
    {4, 5}, {5, 6}, {6, 7}, {7, 4},  // -x face
    {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

std::array<ProjectedPoint, 8> project_box(const Box3D& box, const EgoPose& ego, const CameraCalib& cam);

// Edges with both endpoints in front of the camera, clipped to the image;
// edges that clip away entirely are dropped.
std::vector<Segment2> visible_box_edges(std::span<const ProjectedPoint, 8> corners, int width, int height);

// Throws NoVisibleCorner when every corner is behind the camera.
Image draw_box3d(const Image& image, std::span<const ProjectedPoint, 8> corners, const BoxStyle& style = {});

// ---------------------------------------------------------------------------
// Anchor-centred zoom

inline constexpr double kDefaultZoomScale = 4.0;
inline constexpr double kDefaultAnchorBoxPx = 120.0;

struct PixelWindow {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct ZoomResult {
  Image annotated;  // full frame with the anchor's 2D box drawn
  Image crop;       // taken from `annotated`
  PixelWindow window;
  PixelRect box;
};

ZoomResult zoom_crop(const Image& image, const AnchorEntry& anchor, double scale = kDefaultZoomScale,
                     double fallback_box_px = kDefaultAnchorBoxPx);

// ---------------------------------------------------------------------------
// Vanishing point

inline constexpr double kVpConfidenceGate = 0.3;

struct VanishingPoint {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;
};

struct LineSegment {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double length() const;
};

struct VpParams {
  int grid_cols = 40;
  int grid_rows = 23;
  double min_gradient = 60.0;          // Sobel magnitude
  double angle_tolerance_deg = 22.5;   // region growing
  int min_region_pixels = 20;
  double min_segment_length = 30.0;
  double min_elongation = 4.0;         // length / width
  double horizontal_reject_deg = 8.0;  // near-horizontal segments never vote
  double radial_radius_frac = 0.25;    // of the image diagonal, around the center
  double min_pair_angle_deg = 5.0;
  double inlier_distance_px = 15.0;
  int min_inliers = 3;
};

std::vector<LineSegment> detect_line_segments(const Image& image, const VpParams& params = {});

VanishingPoint estimate_vp(const Image& image, const VpParams& params = {});

// Yellow cross labelled "VP" plus a one-pixel horizon row through v.
Image overlay_vp(const Image& image, const VanishingPoint& vp);

// Applies the confidence gate: nullopt below `gate`.
std::optional<Image> gated_vp_overlay(const Image& image, const VanishingPoint& vp,
                                      double gate = kVpConfidenceGate);

// ---------------------------------------------------------------------------
// Dominant gradient orientation

inline constexpr int kDefaultOrientationBins = 36;

struct OrientationHistogram {
  std::vector<double> bins;  // gradient-magnitude mass per theta bin over [0, pi)
  double bin_width = 0.0;
  double dominant_theta = 0.0;
  double total_mass = 0.0;
};

// Sobel gradients with replicated borders; one entry per pixel.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> dx;
  std::vector<double> dy;
};

GradientField sobel(const Image& image);

OrientationHistogram dgo_histogram(const Image& image, int n_bins = kDefaultOrientationBins);

enum class OrientationMode { Panel, Overlay, MapOnly };

std::optional<OrientationMode> parse_orientation_mode(std::string_view name);
std::string_view to_string(OrientationMode mode);

// HSV-coded orientation map: hue = theta over the full wheel (axial), full
// saturation, value = normalized magnitude; a yellow line through the center
// marks the dominant orientation.
Image render_orientation_map(const Image& image, const OrientationHistogram& hist, OrientationMode mode);

}  // namespace drivevqa
