#include "lomo/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lomo/kernels.hpp"
#include "lomo/localizer.hpp"

namespace lomo {

void RenderConfig::validate() const {
  if (font_size <= 0) throw std::invalid_argument("font_size must be positive");
  if (line_height < font_size) throw std::invalid_argument("line_height must be >= font_size");
  if (math_font_size <= 0) throw std::invalid_argument("math_font_size must be positive");
  if (max_line_width <= 0) throw std::invalid_argument("max_line_width must be positive");
  if (pixel_cap <= 0) throw std::invalid_argument("pixel_cap must be positive");
  if (trim_padding < 0) throw std::invalid_argument("trim_padding must be >= 0");
  if (latex_timeout_seconds <= 0) throw std::invalid_argument("latex_timeout must be positive");
}

bool contains_math(std::string_view span) { return !find_formula_regions(span).empty(); }

RenderedCarrier render_routed(std::string_view span, const RenderConfig& config,
                              ProcessGate* gate) {
  if (!contains_math(span)) return render_text(span, config);
  LatexResult latex = render_latex(span, config, gate);
  if (latex.ok()) return std::move(*latex.carrier);
  RenderedCarrier carrier = render_text(span, config);
  carrier.route = Route::latex_fallback_text;
  carrier.fallback_reason = std::string(to_string(latex.failure->kind));
  return carrier;
}

std::pair<int, int> fit_to_pixel_cap(int width, int height, long long cap) {
  if (static_cast<long long>(width) * height <= cap) return {width, height};
  const double s = std::sqrt(static_cast<double>(cap) / (static_cast<double>(width) * height));
  int w = std::max(1, static_cast<int>(std::floor(width * s)));
  int h = std::max(1, static_cast<int>(std::floor(height * s)));
  while (static_cast<long long>(w) * h > cap) {
    if (w * static_cast<long long>(height) >= h * static_cast<long long>(width) && w > 1)
      --w;
    else if (h > 1)
      --h;
    else
      break;
  }
  return {w, h};
}

RenderedCarrier trim_margins(RenderedCarrier carrier, const RenderConfig& config) {
  const Bitmap& img = carrier.image;
  int x0 = img.width(), y0 = img.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (luminance(img.at(x, y)) < kInkThreshold) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) {
    carrier.blank = true;
  } else {
    const int pad = config.trim_padding;
    const int left = std::max(0, x0 - pad), top = std::max(0, y0 - pad);
    const int right = std::min(img.width() - 1, x1 + pad);
    const int bottom = std::min(img.height() - 1, y1 + pad);
    if (left > 0 || top > 0 || right < img.width() - 1 || bottom < img.height() - 1) {
      Bitmap cropped(right - left + 1, bottom - top + 1);
      for (int y = top; y <= bottom; ++y)
        for (int x = left; x <= right; ++x) cropped.set(x - left, y - top, img.at(x, y));
      carrier.image = std::move(cropped);
    }
  }
  const auto [w, h] = fit_to_pixel_cap(carrier.image.width(), carrier.image.height(),
                                       config.pixel_cap);
  if (w != carrier.image.width() || h != carrier.image.height())
    carrier.image = kernels::downscale_area(carrier.image, w, h);
  return carrier;
}

}  // namespace lomo
