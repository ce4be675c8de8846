#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lomo {

struct Rgb {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

// Integer Rec.601 luma in [0, 255].
constexpr int luminance(Rgb c) {
  return (299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000;
}

// 8-bit RGB raster, row-major, top-left origin.
class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(int width, int height, Rgb fill = kWhite);

  int width() const { return width_; }
  int height() const { return height_; }
  long long area() const { return static_cast<long long>(width_) * height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const {
    const auto* p = &data_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = &data_[index(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Count of pixels whose luminance is below `threshold`.
long long count_ink(const Bitmap& image, int threshold = 250);

// Single-channel float image used by the convolution kernels.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Splits into R, G, B planes and back (rounding to nearest, clamped).
std::vector<Plane> split_channels(const Bitmap& image);
Bitmap merge_channels(const std::vector<Plane>& planes);

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text chunks stored alongside the pixels (PNG iTXt, UTF-8).
using ImageMetadata = std::map<std::string, std::string>;

std::vector<std::uint8_t> encode_png(const Bitmap& image,
                                     const ImageMetadata& metadata = {});
void write_png(const std::filesystem::path& path, const Bitmap& image,
               const ImageMetadata& metadata = {});

struct DecodedImage {
  Bitmap image;
  ImageMetadata metadata;
};

// Accepts any PNG color type / bit depth; the result is always 8-bit RGB
// (alpha composited over white).
DecodedImage read_png(const std::filesystem::path& path);
DecodedImage decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace lomo
