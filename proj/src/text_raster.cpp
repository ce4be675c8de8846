#include <algorithm>
#include <cmath>
#include <string>

#include "lomo/glyph_atlas.hpp"
#include "lomo/renderer.hpp"

namespace lomo {

namespace {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

bool is_break_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\r' || c == U'\f' || c == U'\v'; }

// Glyph geometry at the configured size.
struct ScaledGlyph {
  const glyphs::GlyphEntry* entry;
  int advance;
};

class Typeface {
 public:
  explicit Typeface(int font_size)
      : scale_(static_cast<double>(font_size) / glyphs::kAtlas.base_size) {}

  double scale() const { return scale_; }

  ScaledGlyph glyph(char32_t cp) const {
    const glyphs::GlyphEntry* e = nullptr;
    if (cp >= 0x20 && cp != 0x7F) e = glyphs::find(cp);
    if (!e) e = &glyphs::replacement();
    return {e, std::max(1, static_cast<int>(std::lround(e->advance * scale_)))};
  }

  int space_advance() const { return glyph(U' ').advance; }

  int width(std::u32string_view word) const {
    int w = 0;
    for (char32_t c : word) w += glyph(c).advance;
    return w;
  }

 private:
  double scale_;
};

struct Line {
  std::u32string text;
  int width = 0;
};

std::vector<Line> wrap(const std::u32string& text, const Typeface& face, int max_width) {
  std::vector<Line> lines;
  const int space = face.space_advance();
  std::size_t para_start = 0;
  while (para_start <= text.size()) {
    std::size_t para_end = text.find(U'\n', para_start);
    if (para_end == std::u32string::npos) para_end = text.size();
    Line cur;
    bool any_word = false;
    std::size_t i = para_start;
    while (i < para_end) {
      while (i < para_end && is_break_space(text[i])) ++i;
      if (i >= para_end) break;
      std::size_t j = i;
      while (j < para_end && !is_break_space(text[j])) ++j;
      std::u32string word = text.substr(i, j - i);
      i = j;
      any_word = true;
      int ww = face.width(word);
      if (!cur.text.empty() && cur.width + space + ww <= max_width) {
        cur.text += U' ';
        cur.text += word;
        cur.width += space + ww;
        continue;
      }
      if (!cur.text.empty()) {
        lines.push_back(std::move(cur));
        cur = Line{};
      }
      // Hard-break words wider than a line.
      while (ww > max_width && word.size() > 1) {
        std::size_t fit = 0;
        int w = 0;
        while (fit < word.size()) {
          const int a = face.glyph(word[fit]).advance;
          if (fit > 0 && w + a > max_width) break;
          w += a;
          ++fit;
        }
        lines.push_back({word.substr(0, fit), w});
        word.erase(0, fit);
        ww = face.width(word);
      }
      cur.text = word;
      cur.width = ww;
    }
    if (!cur.text.empty() || !any_word) lines.push_back(std::move(cur));
    if (para_end == text.size()) break;
    para_start = para_end + 1;
  }
  return lines;
}

std::uint8_t coverage_at(const glyphs::GlyphEntry& g, int x, int y) {
  if (x < 0 || y < 0 || x >= g.width || y >= g.height) return 0;
  return glyphs::kAtlas.coverage[g.offset + static_cast<std::size_t>(y) * g.width + x];
}

void blit(Plane& cov, const glyphs::GlyphEntry& g, double scale, int pen_x, int baseline) {
  if (g.width == 0 || g.height == 0) return;
  const int left = pen_x + static_cast<int>(std::lround(g.left * scale));
  const int top = baseline + static_cast<int>(std::lround(g.top * scale));
  const int w = static_cast<int>(std::ceil(g.width * scale));
  const int h = static_cast<int>(std::ceil(g.height * scale));
  for (int dy = 0; dy < h; ++dy) {
    const int y = top + dy;
    if (y < 0 || y >= cov.height) continue;
    for (int dx = 0; dx < w; ++dx) {
      const int x = left + dx;
      if (x < 0 || x >= cov.width) continue;
      double a;
      if (scale == 1.0) {
        a = coverage_at(g, dx, dy);
      } else {
        const double sx = (dx + 0.5) / scale - 0.5;
        const double sy = (dy + 0.5) / scale - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0, fy = sy - y0;
        a = (1 - fx) * (1 - fy) * coverage_at(g, x0, y0) + fx * (1 - fy) * coverage_at(g, x0 + 1, y0) +
            (1 - fx) * fy * coverage_at(g, x0, y0 + 1) + fx * fy * coverage_at(g, x0 + 1, y0 + 1);
      }
      float& dst = cov.at(x, y);
      dst = std::max(dst, static_cast<float>(a / 255.0));
    }
  }
}

}  // namespace

RenderedCarrier render_text(std::string_view span, const RenderConfig& config) {
  config.validate();
  const Typeface face(config.font_size);
  const auto lines = wrap(decode_utf8(span), face, config.max_line_width);

  int text_width = 1;
  for (const auto& l : lines) text_width = std::max(text_width, l.width);
  const int margin = config.trim_padding;
  const int n_lines = std::max<int>(1, static_cast<int>(lines.size()));
  Plane cov(text_width + 2 * margin, n_lines * config.line_height + 2 * margin, 0.0f);

  const int asc = glyphs::kAtlas.ascent;
  const int desc = glyphs::kAtlas.descent;
  const int baseline_in_line = (config.line_height * asc + (asc + desc) / 2) / (asc + desc);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    int pen = margin;
    const int baseline = margin + static_cast<int>(i) * config.line_height + baseline_in_line;
    for (char32_t c : lines[i].text) {
      const auto g = face.glyph(c);
      blit(cov, *g.entry, face.scale(), pen, baseline);
      pen += g.advance;
    }
  }

  RenderedCarrier carrier;
  carrier.image = Bitmap(cov.width, cov.height, config.background);
  const Rgb bg = config.background, fg = config.foreground;
  for (int y = 0; y < cov.height; ++y)
    for (int x = 0; x < cov.width; ++x) {
      const float a = cov.at(x, y);
      if (a <= 0.0f) continue;
      auto mix = [a](std::uint8_t b, std::uint8_t f) {
        return static_cast<std::uint8_t>(std::lround(b + (static_cast<double>(f) - b) * a));
      };
      carrier.image.set(x, y, {mix(bg.r, fg.r), mix(bg.g, fg.g), mix(bg.b, fg.b)});
    }
  carrier.route = Route::text;
  carrier.source_span = std::string(span);
  return carrier;
}

}  // namespace lomo
