#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lomo/kernels.hpp"

namespace lomo::kernels {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

Rgb pixel_or_white(const Bitmap& in, int x, int y) {
  if (x < 0 || y < 0 || x >= in.width() || y >= in.height()) return kWhite;
  return in.at(x, y);
}

Rgb sample_bilinear(const Bitmap& in, double fx, double fy) {
  const double x0 = std::floor(fx);
  const double y0 = std::floor(fy);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const int ix = static_cast<int>(x0);
  const int iy = static_cast<int>(y0);
  const Rgb p00 = pixel_or_white(in, ix, iy);
  const Rgb p10 = pixel_or_white(in, ix + 1, iy);
  const Rgb p01 = pixel_or_white(in, ix, iy + 1);
  const Rgb p11 = pixel_or_white(in, ix + 1, iy + 1);
  const double w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay);
  const double w01 = (1 - ax) * ay, w11 = ax * ay;
  auto mix = [&](std::uint8_t Rgb::*c) {
    return to_byte(w00 * (p00.*c) + w10 * (p10.*c) + w01 * (p01.*c) + w11 * (p11.*c));
  };
  return {mix(&Rgb::r), mix(&Rgb::g), mix(&Rgb::b)};
}

void rotate_row(const Bitmap& in, double c, double s, Bitmap& out, int yo) {
  const double cx_in = in.width() / 2.0, cy_in = in.height() / 2.0;
  const double cx_out = out.width() / 2.0, cy_out = out.height() / 2.0;
  const double dy = yo + 0.5 - cy_out;
  for (int xo = 0; xo < out.width(); ++xo) {
    const double dx = xo + 0.5 - cx_out;
    const double sx = dx * c - dy * s + cx_in - 0.5;
    const double sy = dx * s + dy * c + cy_in - 0.5;
    out.set(xo, yo, sample_bilinear(in, sx, sy));
  }
}

void wave_row(const Bitmap& in, const std::vector<double>& shift, int pad, Bitmap& out,
              int yo) {
  for (int x = 0; x < out.width(); ++x) {
    const double sy = yo - pad - shift[x];
    const double y0 = std::floor(sy);
    const double a = sy - y0;
    const int iy = static_cast<int>(y0);
    const Rgb lo = pixel_or_white(in, x, iy);
    const Rgb hi = a > 0.0 ? pixel_or_white(in, x, iy + 1) : lo;
    out.set(x, yo,
            {to_byte((1 - a) * lo.r + a * hi.r), to_byte((1 - a) * lo.g + a * hi.g),
             to_byte((1 - a) * lo.b + a * hi.b)});
  }
}

}  // namespace

Bitmap rotate_bilinear(const Bitmap& in, double degrees, int out_w, int out_h, Exec exec) {
  Bitmap out(out_w, out_h);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  if (exec == Exec::serial) {
    for (int y = 0; y < out_h; ++y) rotate_row(in, c, s, out, y);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) rotate_row(in, c, s, out, y);
  return out;
}

Bitmap wave_vertical(const Bitmap& in, double amplitude, double wavelength, int pad,
                     Exec exec) {
  if (wavelength <= 0) throw std::invalid_argument("wavelength must be positive");
  Bitmap out(in.width(), in.height() + 2 * pad);
  std::vector<double> shift(static_cast<std::size_t>(in.width()));
  for (int x = 0; x < in.width(); ++x)
    shift[x] = amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength);
  if (exec == Exec::serial) {
    for (int y = 0; y < out.height(); ++y) wave_row(in, shift, pad, out, y);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out.height(); ++y) wave_row(in, shift, pad, out, y);
  return out;
}

namespace {

// Coverage weights of output cell `o` over source pixels for a 1-D area
// resample from n_in to n_out.
struct Span1D {
  int first;
  std::vector<double> weights;
};

std::vector<Span1D> area_spans(int n_in, int n_out) {
  std::vector<Span1D> spans(static_cast<std::size_t>(n_out));
  const double scale = static_cast<double>(n_in) / n_out;
  for (int o = 0; o < n_out; ++o) {
    const double lo = o * scale, hi = (o + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(n_in - 1, static_cast<int>(std::ceil(hi)) - 1);
    spans[o].first = first;
    for (int i = first; i <= last; ++i) {
      const double cover = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      spans[o].weights.push_back(cover / scale);
    }
  }
  return spans;
}

void downscale_row(const Bitmap& in, const std::vector<Span1D>& sx,
                   const std::vector<Span1D>& sy, Bitmap& out, int yo) {
  const auto& vy = sy[yo];
  for (int xo = 0; xo < out.width(); ++xo) {
    const auto& vx = sx[xo];
    double acc[3] = {0, 0, 0};
    for (std::size_t j = 0; j < vy.weights.size(); ++j)
      for (std::size_t i = 0; i < vx.weights.size(); ++i) {
        const double w = vy.weights[j] * vx.weights[i];
        const Rgb p = in.at(vx.first + static_cast<int>(i), vy.first + static_cast<int>(j));
        acc[0] += w * p.r;
        acc[1] += w * p.g;
        acc[2] += w * p.b;
      }
    out.set(xo, yo, {to_byte(acc[0]), to_byte(acc[1]), to_byte(acc[2])});
  }
}

}  // namespace

Bitmap downscale_area(const Bitmap& in, int out_w, int out_h, Exec exec) {
  if (out_w <= 0 || out_h <= 0 || out_w > in.width() || out_h > in.height())
    throw std::invalid_argument("downscale target must be within the source size");
  const auto sx = area_spans(in.width(), out_w);
  const auto sy = area_spans(in.height(), out_h);
  Bitmap out(out_w, out_h);
  if (exec == Exec::serial) {
    for (int y = 0; y < out_h; ++y) downscale_row(in, sx, sy, out, y);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) downscale_row(in, sx, sy, out, y);
  return out;
}

}  // namespace lomo::kernels
