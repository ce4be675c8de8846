#include <algorithm>
#include <stdexcept>

#include "lomo/kernels.hpp"

namespace lomo::kernels {

namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

void check_odd(std::size_t n) {
  if (n == 0 || n % 2 == 0) throw std::invalid_argument("kernel length must be odd");
}

void horizontal_row(const Plane& in, std::span<const float> k, Plane& out, int y) {
  const int r = static_cast<int>(k.size() / 2);
  for (int x = 0; x < in.width; ++x) {
    double acc = 0.0;
    for (int i = -r; i <= r; ++i) acc += k[i + r] * in.at(clamp_index(x + i, in.width), y);
    out.at(x, y) = static_cast<float>(acc);
  }
}

void vertical_row(const Plane& in, std::span<const float> k, Plane& out, int y) {
  const int r = static_cast<int>(k.size() / 2);
  for (int x = 0; x < in.width; ++x) {
    double acc = 0.0;
    for (int j = -r; j <= r; ++j) acc += k[j + r] * in.at(x, clamp_index(y + j, in.height));
    out.at(x, y) = static_cast<float>(acc);
  }
}

void dense_row(const Plane& in, const Plane& k, Plane& out, int y) {
  const int rx = k.width / 2;
  const int ry = k.height / 2;
  for (int x = 0; x < in.width; ++x) {
    double acc = 0.0;
    for (int j = -ry; j <= ry; ++j) {
      const int sy = clamp_index(y + j, in.height);
      for (int i = -rx; i <= rx; ++i) {
        const float w = k.at(i + rx, j + ry);
        if (w != 0.0f) acc += w * in.at(clamp_index(x + i, in.width), sy);
      }
    }
    out.at(x, y) = static_cast<float>(acc);
  }
}

}  // namespace

Plane convolve_separable(const Plane& in, std::span<const float> kx,
                         std::span<const float> ky, Exec exec) {
  check_odd(kx.size());
  check_odd(ky.size());
  Plane out(in.width, in.height);
  if (exec == Exec::serial) {
    const int rx = static_cast<int>(kx.size() / 2);
    const int ry = static_cast<int>(ky.size() / 2);
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        double acc = 0.0;
        for (int j = -ry; j <= ry; ++j)
          for (int i = -rx; i <= rx; ++i)
            acc += static_cast<double>(ky[j + ry]) * kx[i + rx] *
                   in.at(clamp_index(x + i, in.width), clamp_index(y + j, in.height));
        out.at(x, y) = static_cast<float>(acc);
      }
    return out;
  }
  Plane tmp(in.width, in.height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y) horizontal_row(in, kx, tmp, y);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y) vertical_row(tmp, ky, out, y);
  return out;
}

Plane convolve_dense(const Plane& in, const Plane& kernel, Exec exec) {
  check_odd(static_cast<std::size_t>(kernel.width));
  check_odd(static_cast<std::size_t>(kernel.height));
  Plane out(in.width, in.height);
  if (exec == Exec::serial) {
    for (int y = 0; y < in.height; ++y) dense_row(in, kernel, out, y);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.height; ++y) dense_row(in, kernel, out, y);
  return out;
}

}  // namespace lomo::kernels
