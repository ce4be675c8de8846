#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lomo/image.hpp"

namespace lomo {

enum class Route { text, latex, latex_fallback_text };

std::string_view to_string(Route route);

enum class DistortionFamily { clean, rotate, blur, shadow_or_stain, wave };

inline constexpr int kDistortionFamilyCount = 5;

std::string_view to_string(DistortionFamily family);

struct CleanParams {
  friend bool operator==(const CleanParams&, const CleanParams&) = default;
};

struct RotateParams {
  double degrees = 0.0;
  bool large_angle = false;
  friend bool operator==(const RotateParams&, const RotateParams&) = default;
};

enum class BlurKind { gaussian, box, motion };

struct BlurParams {
  BlurKind kind = BlurKind::gaussian;
  double sigma = 1.0;         // gaussian
  int box_size = 3;           // box
  double motion_length = 5;   // motion, pixels
  double motion_degrees = 0;  // motion, [0, 180)
  friend bool operator==(const BlurParams&, const BlurParams&) = default;
};

enum class Edge { left, right, top, bottom };

struct Stain {
  double cx = 0.5, cy = 0.5;  // center, fraction of width / height
  double rx = 0.1, ry = 0.1;  // radii, fraction of width / height
  double alpha = 0.2;
  Rgb color{110, 90, 60};
  friend bool operator==(const Stain&, const Stain&) = default;
};

struct ShadowOrStainParams {
  bool shadow = true;
  Edge edge = Edge::left;
  double strength = 0.3;
  std::vector<Stain> stains;
  friend bool operator==(const ShadowOrStainParams&, const ShadowOrStainParams&) = default;
};

struct WaveParams {
  double amplitude = 4.0;
  double wavelength = 100.0;
  friend bool operator==(const WaveParams&, const WaveParams&) = default;
};

using DistortionParams =
    std::variant<CleanParams, RotateParams, BlurParams, ShadowOrStainParams, WaveParams>;

// A sampled perceptual distortion. The family is the index of the active
// params alternative.
struct DistortionChoice {
  DistortionParams params;
  std::uint64_t seed = 0;

  DistortionFamily family() const { return static_cast<DistortionFamily>(params.index()); }
  friend bool operator==(const DistortionChoice&, const DistortionChoice&) = default;
};

nlohmann::ordered_json to_json(const DistortionChoice& choice);

// A rendered span (image I) or its distorted version (I').
struct RenderedCarrier {
  Bitmap image;
  Route route = Route::text;
  std::string source_span;
  std::optional<DistortionChoice> distortion;
  // Set by trim_margins when no pixel was darker than the ink threshold.
  bool blank = false;
  // Why the LaTeX route was abandoned, for latex_fallback_text.
  std::string fallback_reason;

  int width() const { return image.width(); }
  int height() const { return image.height(); }
};

// Provenance stored in PNG text chunks and manifest records.
ImageMetadata carrier_metadata(const RenderedCarrier& carrier);
nlohmann::ordered_json carrier_record(const RenderedCarrier& carrier,
                                      const std::string& image_path);

// PNG iTXt keys.
inline constexpr const char* kMetaSourceSpan = "lomo:source_span";
inline constexpr const char* kMetaRoute = "lomo:route";
inline constexpr const char* kMetaDistortion = "lomo:distortion";
inline constexpr const char* kMetaProtocol = "lomo:protocol";

}  // namespace lomo
