#include "drivevqa/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <png.h>

#include "drivevqa/digest.hpp"
#include "drivevqa/error.hpp"

namespace drivevqa {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(Errc::InvalidArgument, fmt::format("image size {}x{} is empty", width, height));
  }
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

Image read_png(const std::filesystem::path& file) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, file.c_str())) {
    throw Error(Errc::MissingImage, fmt::format("cannot read {}: {}", file.string(), img.message));
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(Errc::MissingImage, fmt::format("cannot decode {}: {}", file.string(), img.message));
  }
  return out;
}

void write_png(const std::filesystem::path& file, const Image& image) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, file.c_str(), 0, image.bytes().data(), 0, nullptr)) {
    throw Error(Errc::Io, fmt::format("cannot write {}: {}", file.string(), img.message));
  }
}

std::string pixel_digest(const Image& image) {
  std::vector<unsigned char> buf;
  const std::string header = fmt::format("{}x{}:", image.width(), image.height());
  buf.insert(buf.end(), header.begin(), header.end());
  buf.insert(buf.end(), image.bytes().begin(), image.bytes().end());
  return sha256_hex(buf);
}

std::vector<double> to_grayscale(const Image& image) {
  std::vector<double> gray(static_cast<std::size_t>(image.width()) * static_cast<std::size_t>(image.height()));
  const auto& px = image.bytes();
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return gray;
}

std::optional<Segment2> clip_segment(Segment2 s, double xmin, double ymin, double xmax, double ymax) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  double t0 = 0.0, t1 = 1.0;
  const std::array<double, 4> p = {-dx, dx, -dy, dy};
  const std::array<double, 4> q = {s.x0 - xmin, xmax - s.x0, s.y0 - ymin, ymax - s.y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return std::nullopt;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return std::nullopt;
      t1 = std::min(t1, r);
    }
  }
  return Segment2{s.x0 + t0 * dx, s.y0 + t0 * dy, s.x0 + t1 * dx, s.y0 + t1 * dy};
}

namespace {

void stamp(Image& image, int x, int y, Rgb color, int thickness) {
  const int lo = -(thickness - 1) / 2;
  const int hi = thickness / 2;
  for (int oy = lo; oy <= hi; ++oy) {
    for (int ox = lo; ox <= hi; ++ox) image.put(x + ox, y + oy, color);
  }
}

}  // namespace

bool draw_line(Image& image, Segment2 s, Rgb color, int thickness) {
  auto clipped = clip_segment(s, 0.0, 0.0, image.width() - 1.0, image.height() - 1.0);
  if (!clipped) return false;
  int x0 = static_cast<int>(std::lround(clipped->x0));
  int y0 = static_cast<int>(std::lround(clipped->y0));
  const int x1 = static_cast<int>(std::lround(clipped->x1));
  const int y1 = static_cast<int>(std::lround(clipped->y1));
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    stamp(image, x0, y0, color, thickness);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return true;
}

void draw_rect(Image& image, int x0, int y0, int x1, int y1, Rgb color, int thickness) {
  const double a = x0, b = y0, c = x1, d = y1;
  draw_line(image, {a, b, c, b}, color, thickness);
  draw_line(image, {c, b, c, d}, color, thickness);
  draw_line(image, {c, d, a, d}, color, thickness);
  draw_line(image, {a, d, a, b}, color, thickness);
}

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
const std::array<std::uint8_t, 7>* glyph(char c) {
  static const std::array<std::array<std::uint8_t, 7>, 36> kGlyphs = {{
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // A
      {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
      {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},  // D
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // G
      {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
      {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
      {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
      {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // N
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
      {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
      {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
      {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // W
      {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
      {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04},  // Y
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
  }};
  if (c >= '0' && c <= '9') return &kGlyphs[static_cast<std::size_t>(c - '0')];
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (c >= 'A' && c <= 'Z') return &kGlyphs[static_cast<std::size_t>(10 + c - 'A')];
  return nullptr;
}

}  // namespace

void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale) {
  int pen = x;
  for (char c : text) {
    if (const auto* g = glyph(c)) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (((*g)[static_cast<std::size_t>(row)] >> (4 - col)) & 1) {
            for (int dy = 0; dy < scale; ++dy) {
              for (int dx = 0; dx < scale; ++dx) image.put(pen + col * scale + dx, y + row * scale + dy, color);
            }
          }
        }
      }
    }
    pen += 6 * scale;
  }
}

Image crop(const Image& image, int x, int y, int w, int h) {
  if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > image.width() || y + h > image.height()) {
    throw Error(Errc::InvalidArgument,
                fmt::format("crop {}x{}+{}+{} outside {}x{} image", w, h, x, y, image.width(), image.height()));
  }
  Image out(w, h);
  for (int row = 0; row < h; ++row) {
    const auto* src = &image.bytes()[(static_cast<std::size_t>(y + row) * image.width() + x) * 3];
    auto* dst = &out.bytes()[static_cast<std::size_t>(row) * w * 3];
    std::copy(src, src + static_cast<std::ptrdiff_t>(w) * 3, dst);
  }
  return out;
}

}  // namespace drivevqa
