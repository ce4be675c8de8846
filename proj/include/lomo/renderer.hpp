#pragma once

#include <chrono>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "lomo/carrier.hpp"

namespace lomo {

struct RenderConfig {
  int font_size = 20;       // px
  int line_height = 22;     // px
  int math_font_size = 26;  // passed to the LaTeX wrapper
  int max_line_width = 800;
  Rgb background = kWhite;
  Rgb foreground = kBlack;
  long long pixel_cap = 2'560'000;
  int trim_padding = 10;
  // Shell command with {input_tex} and {output_png} placeholders; unset
  // disables the LaTeX route.
  std::optional<std::string> latex_command_template;
  double latex_timeout_seconds = 10.0;

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
};

// Luminance below this counts as ink for trimming.
inline constexpr int kInkThreshold = 250;

bool contains_math(std::string_view span);

// Greedy word-wrapped raster of `span`; never fails for non-empty input.
RenderedCarrier render_text(std::string_view span, const RenderConfig& config);

// Caps the number of concurrently running external renderer processes.
class ProcessGate {
 public:
  explicit ProcessGate(int max_processes) : sem_(std::max(1, max_processes)) {}

  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<4096> sem_;
};

enum class LatexFailureKind {
  unavailable,
  spawn_failed,
  nonzero_exit,
  timeout,
  missing_output,
  undecodable_output,
  io_error,
};

std::string_view to_string(LatexFailureKind kind);

struct LatexFailure {
  LatexFailureKind kind = LatexFailureKind::unavailable;
  std::string detail;
};

struct LatexResult {
  std::optional<RenderedCarrier> carrier;
  std::optional<LatexFailure> failure;

  bool ok() const { return carrier.has_value(); }
};

// The standalone document written to {input_tex} for `span`.
std::string latex_document(std::string_view span, const RenderConfig& config);

LatexResult render_latex(std::string_view span, const RenderConfig& config,
                         ProcessGate* gate = nullptr);

// Math spans go through LaTeX and fall back to the text rasterizer on any
// failure; everything else is rasterized directly. Total on non-empty spans.
RenderedCarrier render_routed(std::string_view span, const RenderConfig& config,
                              ProcessGate* gate = nullptr);

// Crops to the ink bounding box plus trim_padding (clamped), then
// downscales to fit pixel_cap. All-background images are returned uncropped
// with `blank` set.
RenderedCarrier trim_margins(RenderedCarrier carrier, const RenderConfig& config);

// Largest (w, h) with w*h <= cap keeping the aspect ratio of (width, height).
std::pair<int, int> fit_to_pixel_cap(int width, int height, long long cap);

}  // namespace lomo
