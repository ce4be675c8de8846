#pragma once

#include <cstddef>
#include <cstdint>

namespace lomo::glyphs {

// One rasterized glyph. Offsets are relative to the pen position on the
// baseline; `top` is negative for ink above the baseline.
struct GlyphEntry {
  std::uint32_t codepoint;
  int advance;
  int left;
  int top;
  int width;
  int height;
  std::size_t offset;  // into AtlasView::coverage
};

struct AtlasView {
  int base_size;
  int ascent;
  int descent;
  const GlyphEntry* entries;  // sorted by codepoint
  std::size_t count;
  const unsigned char* coverage;
};

extern const AtlasView kAtlas;

// Binary search; nullptr when the code point has no glyph.
const GlyphEntry* find(std::uint32_t codepoint);

// U+FFFD, always present.
const GlyphEntry& replacement();

}  // namespace lomo::glyphs
