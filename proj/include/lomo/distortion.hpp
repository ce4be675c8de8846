#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lomo/carrier.hpp"

namespace lomo {

// Parameter ranges for the sampled degradations. Defaults keep rendered text
// legible; all are overridable from the pipeline config.
struct DistortionRanges {
  double large_angle_probability = 0.5;  // within the rotate family
  std::vector<double> large_angles{90.0, 180.0, 270.0};
  double small_angle_max = 5.0;  // uniform in [-max, +max] degrees
  double gaussian_sigma_min = 0.5;
  double gaussian_sigma_max = 2.0;
  std::vector<int> box_sizes{3, 5};
  double motion_length_min = 5.0;
  double motion_length_max = 15.0;
  double shadow_strength_min = 0.2;
  double shadow_strength_max = 0.5;
  int stain_count_min = 1;
  int stain_count_max = 3;
  double stain_alpha_min = 0.1;
  double stain_alpha_max = 0.3;
  double wave_amplitude_min = 2.0;
  double wave_amplitude_max = 6.0;
  double wavelength_min = 80.0;
  double wavelength_max = 200.0;

  void validate() const;
};

// Output canvas of a rotation: exact swaps for multiples of 90 degrees,
// otherwise the ceiling of the rotated bounding box.
std::pair<int, int> rotated_extent(int width, int height, double degrees);

// Counter-clockwise rotation about the center; |degrees| <= 360.
Bitmap rotate(const Bitmap& image, double degrees);

// Throws std::invalid_argument when the kind's parameter is outside `ranges`.
Bitmap blur(const Bitmap& image, const BlurParams& params, const DistortionRanges& ranges = {});

// Normalized discrete Gaussian taps, radius ceil(3*sigma).
std::vector<float> gaussian_taps(double sigma);
// Normalized line kernel of the given length and direction.
Plane motion_kernel(double length, double degrees);

// Strength and alpha are clamped into `ranges`. Never brightens a pixel.
Bitmap shadow_or_stain(const Bitmap& image, const ShadowOrStainParams& params,
                       const DistortionRanges& ranges = {});

// y' = y + A*sin(2*pi*x/wavelength); output height grows by 2*ceil(A).
Bitmap wave(const Bitmap& image, double amplitude, double wavelength);

// Family uniform over {clean, rotate, blur, shadow_or_stain, wave}, then
// parameters uniform within `ranges`, all from SplitMix64(seed).
DistortionChoice sample_distortion(std::uint64_t seed, const DistortionRanges& ranges = {});

Bitmap apply_choice(const Bitmap& image, const DistortionChoice& choice,
                    const DistortionRanges& ranges = {});

RenderedCarrier apply_distortion(RenderedCarrier carrier, std::uint64_t seed,
                                 const DistortionRanges& ranges = {});

}  // namespace lomo
