#include "lomo/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lomo/kernels.hpp"
#include "lomo/rng.hpp"

namespace lomo {

void DistortionRanges::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid distortion range: ") + what);
  };
  check(large_angle_probability >= 0 && large_angle_probability <= 1, "large_angle_probability");
  check(!large_angles.empty(), "large_angles");
  check(small_angle_max >= 0 && small_angle_max <= 360, "small_angle_max");
  check(gaussian_sigma_min > 0 && gaussian_sigma_min <= gaussian_sigma_max, "gaussian_sigma");
  check(!box_sizes.empty(), "box_sizes");
  for (int k : box_sizes) check(k >= 1 && k % 2 == 1, "box_sizes must be odd");
  check(motion_length_min >= 1 && motion_length_min <= motion_length_max, "motion_length");
  check(shadow_strength_min >= 0 && shadow_strength_min <= shadow_strength_max &&
            shadow_strength_max <= 1,
        "shadow_strength");
  check(stain_count_min >= 1 && stain_count_min <= stain_count_max, "stain_count");
  check(stain_alpha_min >= 0 && stain_alpha_min <= stain_alpha_max && stain_alpha_max <= 1,
        "stain_alpha");
  check(wave_amplitude_min >= 0 && wave_amplitude_min <= wave_amplitude_max, "wave_amplitude");
  check(wavelength_min > 0 && wavelength_min <= wavelength_max, "wavelength");
}

std::pair<int, int> rotated_extent(int width, int height, double degrees) {
  const double q = degrees / 90.0;
  if (q == std::floor(q)) {
    const long long turns = static_cast<long long>(q);
    return (turns % 2 == 0) ? std::pair{width, height} : std::pair{height, width};
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(rad)), s = std::abs(std::sin(rad));
  const int w = static_cast<int>(std::ceil(width * c + height * s - 1e-9));
  const int h = static_cast<int>(std::ceil(width * s + height * c - 1e-9));
  return {std::max(1, w), std::max(1, h)};
}

Bitmap rotate(const Bitmap& image, double degrees) {
  if (!(std::abs(degrees) <= 360.0)) throw std::invalid_argument("rotation angle outside [-360, 360]");
  const double q = degrees / 90.0;
  if (q == std::floor(q)) {
    const int turns = static_cast<int>(((static_cast<long long>(q) % 4) + 4) % 4);
    const int w = image.width(), h = image.height();
    if (turns == 0) return image;
    Bitmap out = turns == 2 ? Bitmap(w, h) : Bitmap(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Rgb p = image.at(x, y);
        switch (turns) {
          case 1: out.set(y, w - 1 - x, p); break;
          case 2: out.set(w - 1 - x, h - 1 - y, p); break;
          case 3: out.set(h - 1 - y, x, p); break;
        }
      }
    return out;
  }
  const auto [ow, oh] = rotated_extent(image.width(), image.height(), degrees);
  return kernels::rotate_bilinear(image, degrees, ow, oh);
}

std::vector<float> gaussian_taps(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += w[i + r];
  }
  std::vector<float> taps(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) taps[i] = static_cast<float>(w[i] / sum);
  return taps;
}

Plane motion_kernel(double length, double degrees) {
  const int r = static_cast<int>(std::ceil((length - 1.0) / 2.0));
  Plane k(2 * r + 1, 2 * r + 1, 0.0f);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double dx = std::cos(rad), dy = -std::sin(rad);
  const int samples = std::max(1, static_cast<int>(std::ceil((length - 1.0) * 4.0)) + 1);
  const double half = (length - 1.0) / 2.0;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : -half + (length - 1.0) * i / (samples - 1);
    const int x = std::clamp(static_cast<int>(std::lround(r + t * dx)), 0, 2 * r);
    const int y = std::clamp(static_cast<int>(std::lround(r + t * dy)), 0, 2 * r);
    k.at(x, y) += 1.0f;
  }
  float sum = 0.0f;
  for (float v : k.data) sum += v;
  for (float& v : k.data) v /= sum;
  return k;
}

Bitmap blur(const Bitmap& image, const BlurParams& params, const DistortionRanges& ranges) {
  auto planes = split_channels(image);
  switch (params.kind) {
    case BlurKind::gaussian: {
      if (params.sigma < ranges.gaussian_sigma_min || params.sigma > ranges.gaussian_sigma_max)
        throw std::invalid_argument("gaussian sigma out of range");
      const auto taps = gaussian_taps(params.sigma);
      for (auto& p : planes) p = kernels::convolve_separable(p, taps, taps);
      break;
    }
    case BlurKind::box: {
      if (std::find(ranges.box_sizes.begin(), ranges.box_sizes.end(), params.box_size) ==
          ranges.box_sizes.end())
        throw std::invalid_argument("box kernel size out of range");
      const std::vector<float> taps(static_cast<std::size_t>(params.box_size),
                                    1.0f / static_cast<float>(params.box_size));
      for (auto& p : planes) p = kernels::convolve_separable(p, taps, taps);
      break;
    }
    case BlurKind::motion: {
      if (params.motion_length < ranges.motion_length_min ||
          params.motion_length > ranges.motion_length_max)
        throw std::invalid_argument("motion blur length out of range");
      if (params.motion_degrees < 0 || params.motion_degrees >= 180)
        throw std::invalid_argument("motion blur angle out of range");
      const Plane k = motion_kernel(params.motion_length, params.motion_degrees);
      for (auto& p : planes) p = kernels::convolve_dense(p, k);
      break;
    }
  }
  return merge_channels(planes);
}

Bitmap shadow_or_stain(const Bitmap& image, const ShadowOrStainParams& params,
                       const DistortionRanges& ranges) {
  Bitmap out = image;
  const int w = image.width(), h = image.height();
  auto darken = [](std::uint8_t c, double factor) {
    return static_cast<std::uint8_t>(std::min<double>(c, std::floor(c * factor + 0.5)));
  };
  if (params.shadow) {
    const double s =
        std::clamp(params.strength, ranges.shadow_strength_min, ranges.shadow_strength_max);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d = 0.0;  // normalized distance from the shadowed edge
        switch (params.edge) {
          case Edge::left: d = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0; break;
          case Edge::right: d = w > 1 ? static_cast<double>(w - 1 - x) / (w - 1) : 0.0; break;
          case Edge::top: d = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0; break;
          case Edge::bottom: d = h > 1 ? static_cast<double>(h - 1 - y) / (h - 1) : 0.0; break;
        }
        const double f = 1.0 - s * (1.0 - d);
        const Rgb p = image.at(x, y);
        out.set(x, y, {darken(p.r, f), darken(p.g, f), darken(p.b, f)});
      }
    return out;
  }
  for (const auto& st : params.stains) {
    const double alpha = std::clamp(st.alpha, ranges.stain_alpha_min, ranges.stain_alpha_max);
    const double cx = st.cx * w, cy = st.cy * h;
    const double rx = std::max(0.5, st.rx * w), ry = std::max(0.5, st.ry * h);
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double ux = (x + 0.5 - cx) / rx, uy = (y + 0.5 - cy) / ry;
        const double r2 = ux * ux + uy * uy;
        if (r2 >= 1.0) continue;
        const double a = alpha * (1.0 - r2);
        const Rgb p = out.at(x, y);
        auto toward = [a](std::uint8_t c, std::uint8_t target) {
          if (c <= target) return c;
          return static_cast<std::uint8_t>(std::nearbyint(c - a * (c - target)));
        };
        out.set(x, y, {toward(p.r, st.color.r), toward(p.g, st.color.g), toward(p.b, st.color.b)});
      }
  }
  return out;
}

Bitmap wave(const Bitmap& image, double amplitude, double wavelength) {
  if (amplitude < 0) throw std::invalid_argument("wave amplitude must be >= 0");
  if (wavelength <= 0) throw std::invalid_argument("wavelength must be positive");
  const int pad = static_cast<int>(std::ceil(amplitude));
  return kernels::wave_vertical(image, amplitude, wavelength, pad);
}

DistortionChoice sample_distortion(std::uint64_t seed, const DistortionRanges& r) {
  SplitMix64 rng(seed);
  DistortionChoice choice;
  choice.seed = seed;
  switch (static_cast<DistortionFamily>(rng.below(kDistortionFamilyCount))) {
    case DistortionFamily::clean:
      choice.params = CleanParams{};
      break;
    case DistortionFamily::rotate: {
      RotateParams p;
      p.large_angle = rng.uniform() < r.large_angle_probability;
      p.degrees = p.large_angle ? r.large_angles[rng.below(r.large_angles.size())]
                                : rng.uniform(-r.small_angle_max, r.small_angle_max);
      choice.params = p;
      break;
    }
    case DistortionFamily::blur: {
      BlurParams p;
      p.kind = static_cast<BlurKind>(rng.below(3));
      switch (p.kind) {
        case BlurKind::gaussian:
          p.sigma = rng.uniform(r.gaussian_sigma_min, r.gaussian_sigma_max);
          break;
        case BlurKind::box:
          p.box_size = r.box_sizes[rng.below(r.box_sizes.size())];
          break;
        case BlurKind::motion:
          p.motion_length = rng.uniform(r.motion_length_min, r.motion_length_max);
          p.motion_degrees = rng.uniform(0.0, 180.0);
          break;
      }
      choice.params = p;
      break;
    }
    case DistortionFamily::shadow_or_stain: {
      ShadowOrStainParams p;
      p.shadow = rng.below(2) == 0;
      if (p.shadow) {
        p.edge = static_cast<Edge>(rng.below(4));
        p.strength = rng.uniform(r.shadow_strength_min, r.shadow_strength_max);
      } else {
        const auto n = static_cast<int>(
            r.stain_count_min +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(r.stain_count_max - r.stain_count_min + 1))));
        for (int i = 0; i < n; ++i) {
          Stain s;
          s.cx = rng.uniform(0.1, 0.9);
          s.cy = rng.uniform(0.1, 0.9);
          s.rx = rng.uniform(0.05, 0.2);
          s.ry = rng.uniform(0.2, 0.6);
          s.alpha = rng.uniform(r.stain_alpha_min, r.stain_alpha_max);
          p.stains.push_back(s);
        }
      }
      choice.params = p;
      break;
    }
    case DistortionFamily::wave: {
      WaveParams p;
      p.amplitude = rng.uniform(r.wave_amplitude_min, r.wave_amplitude_max);
      p.wavelength = rng.uniform(r.wavelength_min, r.wavelength_max);
      choice.params = p;
      break;
    }
  }
  return choice;
}

Bitmap apply_choice(const Bitmap& image, const DistortionChoice& choice,
                    const DistortionRanges& ranges) {
  struct Visitor {
    const Bitmap& img;
    const DistortionRanges& ranges;
    Bitmap operator()(const CleanParams&) const { return img; }
    Bitmap operator()(const RotateParams& p) const { return rotate(img, p.degrees); }
    Bitmap operator()(const BlurParams& p) const { return blur(img, p, ranges); }
    Bitmap operator()(const ShadowOrStainParams& p) const { return shadow_or_stain(img, p, ranges); }
    Bitmap operator()(const WaveParams& p) const { return wave(img, p.amplitude, p.wavelength); }
  };
  return std::visit(Visitor{image, ranges}, choice.params);
}

RenderedCarrier apply_distortion(RenderedCarrier carrier, std::uint64_t seed,
                                 const DistortionRanges& ranges) {
  DistortionChoice choice = sample_distortion(seed, ranges);
  carrier.image = apply_choice(carrier.image, choice, ranges);
  carrier.distortion = std::move(choice);
  return carrier;
}

}  // namespace lomo
