#include <algorithm>
#include <stdexcept>

#include "lomo/glyph_atlas.hpp"

namespace lomo::glyphs {

const GlyphEntry* find(std::uint32_t codepoint) {
  const GlyphEntry* begin = kAtlas.entries;
  const GlyphEntry* end = kAtlas.entries + kAtlas.count;
  const auto* it = std::lower_bound(begin, end, codepoint, [](const GlyphEntry& e, std::uint32_t cp) {
    return e.codepoint < cp;
  });
  return (it != end && it->codepoint == codepoint) ? it : nullptr;
}

const GlyphEntry& replacement() {
  static const GlyphEntry* entry = [] {
    const GlyphEntry* e = find(0xFFFD);
    if (!e) throw std::logic_error("glyph atlas lacks U+FFFD");
    return e;
  }();
  return *entry;
}

}  // namespace lomo::glyphs
