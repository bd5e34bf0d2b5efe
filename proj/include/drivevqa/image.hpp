#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drivevqa {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kYellow{255, 255, 0};
inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kRed{255, 0, 0};

// 8-bit interleaved RGB, row-major, value semantics.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ <= 0 || height_ <= 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &data_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &data_[index(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  // Bounds-checked write; silently ignores pixels outside the image.
  void put(int x, int y, Rgb c) {
    if (contains(x, y)) set(x, y, c);
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

Image read_png(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const Image& image);

// SHA-256 over the dimensions and pixel buffer (independent of file encoding).
std::string pixel_digest(const Image& image);

// Luma (BT.601) per pixel, row-major.
std::vector<double> to_grayscale(const Image& image);

struct Segment2 {
  double x0, y0, x1, y1;
};

// Liang-Barsky clip against [xmin, xmax] x [ymin, ymax].
std::optional<Segment2> clip_segment(Segment2 s, double xmin, double ymin, double xmax, double ymax);

// Draws the segment clipped to the image; returns false when nothing is inside.
bool draw_line(Image& image, Segment2 s, Rgb color, int thickness = 1);
void draw_rect(Image& image, int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);

// Block capitals and digits from a 5x7 bitmap font, scaled by `scale`.
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 2);

// Copy of the w x h window at (x, y); the window must lie inside the image.
Image crop(const Image& image, int x, int y, int w, int h);

}  // namespace drivevqa
