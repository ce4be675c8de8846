#pragma once

// Data-parallel pixel and moment kernels. Each has an OpenMP variant used by
// the library and a serial reference variant kept for tests and benchmarks.

#include <cstdint>
#include <span>

#include "lomo/image.hpp"
#include "lomo/moments.hpp"

namespace lomo::kernels {

enum class Exec { serial, parallel };

// Clamped-edge convolution with the separable kernel ky ⊗ kx (both odd
// length, centered). The serial variant evaluates the full 2-D sum directly;
// the parallel variant runs two 1-D passes.
Plane convolve_separable(const Plane& in, std::span<const float> kx,
                         std::span<const float> ky, Exec exec = Exec::parallel);

// Clamped-edge convolution with a dense odd-sized kernel.
Plane convolve_dense(const Plane& in, const Plane& kernel, Exec exec = Exec::parallel);

// Rotation by `degrees` counter-clockwise about the image center onto an
// out_w x out_h canvas, bilinear, white outside the source.
Bitmap rotate_bilinear(const Bitmap& in, double degrees, int out_w, int out_h,
                       Exec exec = Exec::parallel);

// Column-wise vertical displacement y + pad + amplitude*sin(2*pi*x/wavelength),
// linear resampling, white fill; output height is in.height() + 2*pad.
Bitmap wave_vertical(const Bitmap& in, double amplitude, double wavelength, int pad,
                     Exec exec = Exec::parallel);

// Area-averaging downscale to out_w x out_h (each <= the input size).
Bitmap downscale_area(const Bitmap& in, int out_w, int out_h, Exec exec = Exec::parallel);

// Moments of the rows of a row-major float32 matrix selected by `rows`
// (indices into [0, data.size() / dim)). The serial variant is a textbook
// two-pass mean/covariance; the parallel one merges per-thread block partials.
GaussianMoments accumulate_moments(std::span<const float> data, int dim,
                                   std::span<const std::uint32_t> rows,
                                   Exec exec = Exec::parallel);

}  // namespace lomo::kernels
