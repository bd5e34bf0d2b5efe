#include "drivevqa/visual_prompting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

}  // namespace

// ---------------------------------------------------------------------------
// 3D wireframes

std::array<ProjectedPoint, 8> project_box(const Box3D& box, const EgoPose& ego, const CameraCalib& cam) {
  std::array<ProjectedPoint, 8> out;
  const auto corners = box_corners(box);
  for (std::size_t i = 0; i < 8; ++i) out[i] = project(global_to_camera(corners[i], ego, cam), cam.intrinsics);
  return out;
}

std::vector<Segment2> visible_box_edges(std::span<const ProjectedPoint, 8> corners, int width, int height) {
  std::vector<Segment2> edges;
  for (const auto& [a, b] : kBoxEdges) {
    const ProjectedPoint& p = corners[static_cast<std::size_t>(a)];
    const ProjectedPoint& q = corners[static_cast<std::size_t>(b)];
    if (!p.in_front || !q.in_front) continue;
    if (auto s = clip_segment({p.u, p.v, q.u, q.v}, 0.0, 0.0, width - 1.0, height - 1.0)) edges.push_back(*s);
  }
  return edges;
}

Image draw_box3d(const Image& image, std::span<const ProjectedPoint, 8> corners, const BoxStyle& style) {
  if (std::none_of(corners.begin(), corners.end(), [](const ProjectedPoint& p) { return p.in_front; })) {
    throw Error(Errc::NoVisibleCorner, "all box corners are behind the camera");
  }
  Image out = image;
  for (const Segment2& s : visible_box_edges(corners, image.width(), image.height())) {
    draw_line(out, s, style.color, style.thickness);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Anchor-centred zoom

ZoomResult zoom_crop(const Image& image, const AnchorEntry& anchor, double scale, double fallback_box_px) {
  if (!(scale > 0.0)) throw Error(Errc::InvalidArgument, fmt::format("zoom scale must be positive, got {}", scale));
  const int w = image.width();
  const int h = image.height();
  if (!(anchor.u >= 0.0 && anchor.u < w && anchor.v >= 0.0 && anchor.v < h)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("anchor ({}, {}) outside the {}x{} image", anchor.u, anchor.v, w, h));
  }

  ZoomResult out;
  if (anchor.box) {
    out.box = *anchor.box;
  } else {
    const double half = fallback_box_px / 2.0;
    out.box = {std::max(0.0, anchor.u - half), std::max(0.0, anchor.v - half), std::min(w - 1.0, anchor.u + half),
               std::min(h - 1.0, anchor.v + half)};
  }
  out.annotated = image;
  draw_rect(out.annotated, static_cast<int>(std::lround(out.box.x0)), static_cast<int>(std::lround(out.box.y0)),
            static_cast<int>(std::lround(out.box.x1)), static_cast<int>(std::lround(out.box.y1)), kRed, 3);

  PixelWindow& win = out.window;
  win.width = std::clamp(static_cast<int>(std::lround(w / scale)), 1, w);
  win.height = std::clamp(static_cast<int>(std::lround(h / scale)), 1, h);
  // Shift, never shrink, to stay inside the frame.
  win.x = std::clamp(static_cast<int>(std::lround(anchor.u - win.width / 2.0)), 0, w - win.width);
  win.y = std::clamp(static_cast<int>(std::lround(anchor.v - win.height / 2.0)), 0, h - win.height);
  out.crop = crop(out.annotated, win.x, win.y, win.width, win.height);
  return out;
}

// ---------------------------------------------------------------------------
// Gradients

GradientField sobel(const Image& image) {
  const int w = image.width();
  const int h = image.height();
  const std::vector<double> gray = to_grayscale(image);
  GradientField g;
  g.width = w;
  g.height = h;
  g.dx.assign(gray.size(), 0.0);
  g.dy.assign(gray.size(), 0.0);
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return gray[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tl = at(x - 1, y - 1), tc = at(x, y - 1), tr = at(x + 1, y - 1);
      const double ml = at(x - 1, y), mr = at(x + 1, y);
      const double bl = at(x - 1, y + 1), bc = at(x, y + 1), br = at(x + 1, y + 1);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.dx[i] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      g.dy[i] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Line segments and vanishing point

double LineSegment::length() const { return std::hypot(x1 - x0, y1 - y0); }

namespace {

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace

std::vector<LineSegment> detect_line_segments(const Image& image, const VpParams& params) {
  const GradientField g = sobel(image);
  const int w = g.width;
  const int h = g.height;
  const std::size_t n = g.dx.size();

  std::vector<double> mag(n), ang(n);
  std::vector<std::uint32_t> seeds;
  for (std::size_t i = 0; i < n; ++i) {
    mag[i] = std::hypot(g.dx[i], g.dy[i]);
    ang[i] = std::atan2(g.dy[i], g.dx[i]);
    if (mag[i] >= params.min_gradient) seeds.push_back(static_cast<std::uint32_t>(i));
  }
  std::stable_sort(seeds.begin(), seeds.end(), [&](std::uint32_t a, std::uint32_t b) { return mag[a] > mag[b]; });

  const double tol = params.angle_tolerance_deg * kDegToRad;
  std::vector<std::uint8_t> used(n, 0);
  std::vector<std::uint32_t> region, stack;
  std::vector<LineSegment> segments;

  for (std::uint32_t seed : seeds) {
    if (used[seed]) continue;
    region.clear();
    stack.assign(1, seed);
    used[seed] = 1;
    double sum_cos = std::cos(ang[seed]), sum_sin = std::sin(ang[seed]);
    double region_angle = ang[seed];
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      region.push_back(p);
      const int px = static_cast<int>(p % static_cast<std::uint32_t>(w));
      const int py = static_cast<int>(p / static_cast<std::uint32_t>(w));
      for (int oy = -1; oy <= 1; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          const int qx = px + ox, qy = py + oy;
          if ((ox == 0 && oy == 0) || qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
          if (used[q] || mag[q] < params.min_gradient) continue;
          if (std::abs(wrap_angle(ang[q] - region_angle)) >= tol) continue;
          used[q] = 1;
          stack.push_back(static_cast<std::uint32_t>(q));
          sum_cos += std::cos(ang[q]);
          sum_sin += std::sin(ang[q]);
          region_angle = std::atan2(sum_sin, sum_cos);
        }
      }
    }
    if (static_cast<int>(region.size()) < params.min_region_pixels) continue;

    double sw = 0, sx = 0, sy = 0;
    for (std::uint32_t p : region) {
      const double x = p % static_cast<std::uint32_t>(w), y = p / static_cast<std::uint32_t>(w);
      sw += mag[p];
      sx += mag[p] * x;
      sy += mag[p] * y;
    }
    const double cx = sx / sw, cy = sy / sw;
    double cxx = 0, cyy = 0, cxy = 0;
    for (std::uint32_t p : region) {
      const double x = p % static_cast<std::uint32_t>(w) - cx, y = p / static_cast<std::uint32_t>(w) - cy;
      cxx += mag[p] * x * x;
      cyy += mag[p] * y * y;
      cxy += mag[p] * x * y;
    }
    const double phi = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    const double dxn = std::cos(phi), dyn = std::sin(phi);
    // The principal axis must follow the level line (perpendicular to the gradient).
    const double level = region_angle + kPi / 2.0;
    if (std::abs(std::sin(phi - level)) > std::sin(tol)) continue;

    double tmin = 1e300, tmax = -1e300, smin = 1e300, smax = -1e300;
    for (std::uint32_t p : region) {
      const double x = p % static_cast<std::uint32_t>(w) - cx, y = p / static_cast<std::uint32_t>(w) - cy;
      const double t = x * dxn + y * dyn;
      const double s = -x * dyn + y * dxn;
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    const double length = tmax - tmin;
    const double width = smax - smin + 1.0;
    if (length < params.min_segment_length || length < params.min_elongation * width) continue;
    segments.push_back({cx + tmin * dxn, cy + tmin * dyn, cx + tmax * dxn, cy + tmax * dyn});
  }
  return segments;
}

namespace {

struct Line2 {
  Eigen::Vector3d coeffs;  // a x + b y + c = 0 with a^2 + b^2 = 1
  Eigen::Vector2d dir;
  double length;
};

}  // namespace

VanishingPoint estimate_vp(const Image& image, const VpParams& params) {
  const int w = image.width();
  const int h = image.height();
  const Eigen::Vector2d center(w / 2.0, h / 2.0);
  const double radial_radius = params.radial_radius_frac * std::hypot(w, h);
  const double horizontal_reject = std::sin(params.horizontal_reject_deg * kDegToRad);

  std::vector<Line2> lines;
  double total = 0.0;
  for (const LineSegment& s : detect_line_segments(image, params)) {
    Line2 l;
    l.length = s.length();
    l.dir = Eigen::Vector2d(s.x1 - s.x0, s.y1 - s.y0) / l.length;
    if (std::abs(l.dir.y()) < horizontal_reject) continue;
    const Eigen::Vector3d hom = Eigen::Vector3d(s.x0, s.y0, 1.0).cross(Eigen::Vector3d(s.x1, s.y1, 1.0));
    l.coeffs = hom / hom.head<2>().norm();
    if (std::abs(l.coeffs.dot(Eigen::Vector3d(center.x(), center.y(), 1.0))) > radial_radius) continue;
    total += l.length;
    lines.push_back(l);
  }

  VanishingPoint vp{center.x(), center.y(), 0.0};
  if (lines.size() < 2) return vp;

  const int cols = params.grid_cols;
  const int rows = params.grid_rows;
  const double cell_w = static_cast<double>(w) / cols;
  const double cell_h = static_cast<double>(h) / rows;
  std::vector<double> weight(static_cast<std::size_t>(cols * rows), 0.0);
  std::vector<double> wx(weight.size(), 0.0), wy(weight.size(), 0.0);
  const double min_sin = std::sin(params.min_pair_angle_deg * kDegToRad);

  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double sin_angle = std::abs(lines[i].dir.x() * lines[j].dir.y() - lines[i].dir.y() * lines[j].dir.x());
      if (sin_angle < min_sin) continue;
      const Eigen::Vector3d x = lines[i].coeffs.cross(lines[j].coeffs);
      if (std::abs(x.z()) < 1e-12) continue;
      const double px = x.x() / x.z(), py = x.y() / x.z();
      if (!(px >= 0.0 && px < w && py >= 0.0 && py < h)) continue;
      const int cx = std::min(cols - 1, static_cast<int>(px / cell_w));
      const int cy = std::min(rows - 1, static_cast<int>(py / cell_h));
      const std::size_t c = static_cast<std::size_t>(cy * cols + cx);
      const double vote = lines[i].length * lines[j].length * sin_angle;
      weight[c] += vote;
      wx[c] += vote * px;
      wy[c] += vote * py;
    }
  }

  // Peak of the 3x3-smoothed accumulator, so a VP on a cell border is not split.
  double best = 0.0;
  int best_x = -1, best_y = -1;
  for (int cy = 0; cy < rows; ++cy) {
    for (int cx = 0; cx < cols; ++cx) {
      double sum = 0.0;
      for (int oy = -1; oy <= 1; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          const int nx = cx + ox, ny = cy + oy;
          if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
          sum += weight[static_cast<std::size_t>(ny * cols + nx)];
        }
      }
      if (sum > best) {
        best = sum;
        best_x = cx;
        best_y = cy;
      }
    }
  }
  if (best_x < 0) return vp;

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (int oy = -1; oy <= 1; ++oy) {
    for (int ox = -1; ox <= 1; ++ox) {
      const int nx = best_x + ox, ny = best_y + oy;
      if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
      const std::size_t c = static_cast<std::size_t>(ny * cols + nx);
      sw += weight[c];
      sx += wx[c];
      sy += wy[c];
    }
  }
  Eigen::Vector2d est(sx / sw, sy / sw);

  // Least-squares refinement over the lines supporting the peak.
  double inlier_mass = 0.0;
  int inliers = 0;
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    inlier_mass = 0.0;
    inliers = 0;
    for (const Line2& l : lines) {
      const double dist = std::abs(l.coeffs.dot(Eigen::Vector3d(est.x(), est.y(), 1.0)));
      if (dist > params.inlier_distance_px) continue;
      const Eigen::Vector2d n = l.coeffs.head<2>();
      a += l.length * n * n.transpose();
      b -= l.length * l.coeffs.z() * n;
      inlier_mass += l.length;
      ++inliers;
    }
    if (inliers < 2 || std::abs(a.determinant()) < 1e-9) break;
    const Eigen::Vector2d next = a.ldlt().solve(b);
    if (!(next.x() >= 0.0 && next.x() < w && next.y() >= 0.0 && next.y() < h)) break;
    const bool settled = (next - est).norm() < 0.01;
    est = next;
    if (settled) break;
  }

  vp.u = est.x();
  vp.v = est.y();
  vp.confidence = (inliers >= params.min_inliers && total > 0.0) ? std::clamp(inlier_mass / total, 0.0, 1.0) : 0.0;
  return vp;
}

Image overlay_vp(const Image& image, const VanishingPoint& vp) {
  Image out = image;
  const int row = static_cast<int>(std::lround(vp.v));
  if (row >= 0 && row < out.height()) {
    for (int x = 0; x < out.width(); ++x) out.set(x, row, kYellow);
  }
  constexpr double kArm = 25.0;
  draw_line(out, {vp.u - kArm, vp.v, vp.u + kArm, vp.v}, kYellow, 3);
  draw_line(out, {vp.u, vp.v - kArm, vp.u, vp.v + kArm}, kYellow, 3);
  draw_text(out, static_cast<int>(std::lround(vp.u + 10.0)), static_cast<int>(std::lround(vp.v - 36.0)), "VP",
            kYellow, 3);
  return out;
}

std::optional<Image> gated_vp_overlay(const Image& image, const VanishingPoint& vp, double gate) {
  if (vp.confidence < gate) return std::nullopt;
  return overlay_vp(image, vp);
}

// ---------------------------------------------------------------------------
// Dominant gradient orientation

namespace {

double axial_theta(double dx, double dy) {
  double theta = std::atan2(dy, dx);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta -= kPi;
  return theta;
}

Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
  const double c = val * sat;
  const double hp = std::fmod(hue_deg, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = val - c;
  auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

}  // namespace

OrientationHistogram dgo_histogram(const Image& image, int n_bins) {
  if (n_bins < 2) throw Error(Errc::InvalidArgument, fmt::format("n_bins must be >= 2, got {}", n_bins));
  const GradientField g = sobel(image);
  OrientationHistogram hist;
  hist.bins.assign(static_cast<std::size_t>(n_bins), 0.0);
  hist.bin_width = kPi / n_bins;
  for (std::size_t i = 0; i < g.dx.size(); ++i) {
    const double m = std::hypot(g.dx[i], g.dy[i]);
    if (m == 0.0) continue;
    const auto bin = std::min(static_cast<std::size_t>(axial_theta(g.dx[i], g.dy[i]) / hist.bin_width),
                              hist.bins.size() - 1);
    hist.bins[bin] += m;
  }
  for (double b : hist.bins) hist.total_mass += b;
  if (hist.total_mass == 0.0) throw Error(Errc::DegenerateImage, "image has no gradients");
  const auto peak = std::max_element(hist.bins.begin(), hist.bins.end()) - hist.bins.begin();
  hist.dominant_theta = (static_cast<double>(peak) + 0.5) * hist.bin_width;
  return hist;
}

std::optional<OrientationMode> parse_orientation_mode(std::string_view name) {
  if (name == "panel") return OrientationMode::Panel;
  if (name == "overlay") return OrientationMode::Overlay;
  if (name == "map_only" || name == "map") return OrientationMode::MapOnly;
  return std::nullopt;
}

std::string_view to_string(OrientationMode mode) {
  switch (mode) {
    case OrientationMode::Panel: return "panel";
    case OrientationMode::Overlay: return "overlay";
    case OrientationMode::MapOnly: return "map_only";
  }
  return "panel";
}

Image render_orientation_map(const Image& image, const OrientationHistogram& hist, OrientationMode mode) {
  if (!(hist.total_mass > 0.0)) throw Error(Errc::DegenerateImage, "orientation histogram has no mass");
  const int w = image.width();
  const int h = image.height();
  const GradientField g = sobel(image);

  std::vector<double> mag(g.dx.size());
  double max_mag = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(g.dx[i], g.dy[i]);
    max_mag = std::max(max_mag, mag[i]);
  }
  if (max_mag == 0.0) throw Error(Errc::DegenerateImage, "image has no gradients");

  Image map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double hue = axial_theta(g.dx[i], g.dy[i]) / kPi * 360.0;
      map.set(x, y, hsv_to_rgb(hue, 1.0, mag[i] / max_mag));
    }
  }

  Image out;
  switch (mode) {
    case OrientationMode::MapOnly:
      out = std::move(map);
      break;
    case OrientationMode::Overlay: {
      out = image;
      auto& dst = out.bytes();
      const auto& src = map.bytes();
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<std::uint8_t>((static_cast<int>(dst[i]) + static_cast<int>(src[i]) + 1) / 2);
      }
      break;
    }
    case OrientationMode::Panel:
      out = std::move(map);
      break;
  }

  // Dominant-orientation line through the center of the (map) frame.
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double reach = std::hypot(w, h);
  const double ux = std::cos(hist.dominant_theta), uy = std::sin(hist.dominant_theta);
  draw_line(out, {cx - reach * ux, cy - reach * uy, cx + reach * ux, cy + reach * uy}, kYellow, 3);

  if (mode == OrientationMode::Panel) {
    Image panel(2 * w, h);
    for (int y = 0; y < h; ++y) {
      const auto* left = &image.bytes()[static_cast<std::size_t>(y) * w * 3];
      const auto* right = &out.bytes()[static_cast<std::size_t>(y) * w * 3];
      auto* dst = &panel.bytes()[static_cast<std::size_t>(y) * 2 * w * 3];
      std::copy(left, left + static_cast<std::ptrdiff_t>(w) * 3, dst);
      std::copy(right, right + static_cast<std::ptrdiff_t>(w) * 3, dst + static_cast<std::ptrdiff_t>(w) * 3);
    }
    return panel;
  }
  return out;
}

}  // namespace drivevqa
