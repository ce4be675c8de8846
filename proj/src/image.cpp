#include "lomo/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lomo {

Bitmap::Bitmap(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ImageError("negative bitmap dimensions");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

long long count_ink(const Bitmap& image, int threshold) {
  long long n = 0;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (luminance(image.at(x, y)) < threshold) ++n;
  return n;
}

std::vector<Plane> split_channels(const Bitmap& image) {
  std::vector<Plane> planes(3, Plane(image.width(), image.height()));
  const auto& bytes = image.bytes();
  const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) planes[c].data[i] = bytes[i * 3 + c];
  return planes;
}

Bitmap merge_channels(const std::vector<Plane>& planes) {
  if (planes.size() != 3) throw ImageError("expected three channel planes");
  Bitmap out(planes[0].width, planes[0].height);
  auto& bytes = out.bytes();
  const std::size_t n = planes[0].data.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = std::nearbyint(planes[c].data[i]);
      bytes[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
    }
  return out;
}

namespace {

void on_png_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_noop(png_structp) {}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes->size()) png_error(png, "truncated PNG data");
  std::memcpy(data, cur->bytes->data() + cur->pos, len);
  cur->pos += len;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Bitmap& image,
                                     const ImageMetadata& metadata) {
  if (image.empty()) throw ImageError("cannot encode an empty bitmap");
  std::string err;
  std::vector<std::uint8_t> out;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) throw ImageError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("png_create_info_struct failed");
  }
  // Text storage must outlive png_set_text.
  std::vector<std::string> keys;
  std::vector<png_text> texts;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, append_bytes, flush_noop);
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  if (!metadata.empty()) {
    keys.reserve(metadata.size());
    texts.reserve(metadata.size());
    for (const auto& [k, v] : metadata) {
      keys.push_back(k.substr(0, 79));
      png_text t{};
      t.compression = PNG_ITXT_COMPRESSION_NONE;
      t.key = keys.back().data();
      t.text = const_cast<char*>(v.c_str());
      t.itxt_length = v.size();
      t.lang = nullptr;
      t.lang_key = nullptr;
      texts.push_back(t);
    }
    png_set_text(png, info, texts.data(), static_cast<int>(texts.size()));
  }
  png_write_info(png, info);
  const auto& bytes = image.bytes();
  for (int y = 0; y < image.height(); ++y) {
    auto* row = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * image.width() * 3);
    png_write_row(png, row);
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const Bitmap& image,
               const ImageMetadata& metadata) {
  const auto bytes = encode_png(image, metadata);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ImageError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ImageError("write failed: " + path.string());
}

DecodedImage decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw ImageError("not a PNG image");
  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) throw ImageError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("png_create_info_struct failed");
  }
  ReadCursor cursor{&bytes, 0};
  DecodedImage result;
  std::vector<std::uint8_t> rgba;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("PNG decode failed: " + err);
  }
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  if (static_cast<unsigned long long>(width) * height > (1ull << 30))
    png_error(png, "image too large");
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_gray_to_rgb(png);
  png_set_add_alpha(png, 0xff, PNG_FILLER_AFTER);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  rgba.resize(static_cast<std::size_t>(width) * height * 4);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = rgba.data() + static_cast<std::size_t>(y) * width * 4;
  png_read_image(png, rows.data());
  png_read_end(png, info);

  png_textp text = nullptr;
  int n_text = 0;
  if (png_get_text(png, info, &text, &n_text) > 0) {
    for (int i = 0; i < n_text; ++i) {
      const std::size_t len =
          text[i].compression >= PNG_ITXT_COMPRESSION_NONE ? text[i].itxt_length
                                                           : text[i].text_length;
      result.metadata[text[i].key] = std::string(text[i].text, len);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  result.image = Bitmap(static_cast<int>(width), static_cast<int>(height));
  auto& out = result.image.bytes();
  for (std::size_t i = 0, n = static_cast<std::size_t>(width) * height; i < n; ++i) {
    const unsigned a = rgba[i * 4 + 3];
    for (int c = 0; c < 3; ++c) {
      const unsigned v = rgba[i * 4 + c];
      out[i * 3 + c] = static_cast<std::uint8_t>((v * a + 255u * (255u - a) + 127u) / 255u);
    }
  }
  return result;
}

DecodedImage read_png(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot open image: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace lomo
