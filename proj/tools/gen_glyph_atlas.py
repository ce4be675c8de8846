#!/usr/bin/env python3
"""Regenerates src/glyph_atlas_data.cpp from DejaVu Sans Mono.

The C++ rasterizer has no FreeType dependency; it blits the 8-bit coverage
masks produced here. Run from the repository root:

    python3 tools/gen_glyph_atlas.py > src/glyph_atlas_data.cpp
"""

import os
import sys

import matplotlib
import matplotlib.ft2font as ft2font
from PIL import Image, ImageDraw, ImageFont

BASE_SIZE = 20

RANGES = [
    (0x20, 0x7E),    # ASCII
    (0xA0, 0xFF),    # Latin-1 supplement
    (0x100, 0x17F),  # Latin extended-A
    (0x391, 0x3C9),  # Greek
    (0x2010, 0x2027),  # dashes, quotes, bullets, ellipsis
    (0x2190, 0x21FF),  # arrows
    (0x2200, 0x22FF),  # mathematical operators
    (0xFFFD, 0xFFFD),
]


def main():
    ttf = os.path.join(os.path.dirname(matplotlib.__file__),
                       "mpl-data/fonts/ttf/DejaVuSansMono.ttf")
    cover = ft2font.FT2Font(ttf)
    font = ImageFont.truetype(ttf, BASE_SIZE)
    ascent, descent = font.getmetrics()

    glyphs = []
    for lo, hi in RANGES:
        for cp in range(lo, hi + 1):
            if cp != 0x20 and cover.get_char_index(cp) == 0:
                continue
            ch = chr(cp)
            advance = int(round(font.getlength(ch)))
            left, top, right, bottom = font.getbbox(ch, anchor="ls")
            w, h = max(0, right - left), max(0, bottom - top)
            data = b""
            if w > 0 and h > 0:
                img = Image.new("L", (w, h), 0)
                ImageDraw.Draw(img).text((-left, -top), ch, fill=255,
                                         font=font, anchor="ls")
                data = img.tobytes()
            glyphs.append((cp, advance, left, top, w, h, data))

    out = sys.stdout
    out.write("// Generated by tools/gen_glyph_atlas.py. Do not edit.\n")
    out.write("//\n// Glyph coverage masks rasterized from DejaVu Sans Mono "
              "(Bitstream Vera derived\n// license, see "
              "https://dejavu-fonts.github.io/License.html).\n\n")
    out.write('#include "lomo/glyph_atlas.hpp"\n\n')
    out.write("namespace lomo::glyphs {\n\n")
    out.write("namespace {\n\n")
    out.write("constexpr unsigned char kCoverage[] = {\n")
    offsets = []
    pos = 0
    for g in glyphs:
        offsets.append(pos)
        data = g[6]
        for i in range(0, len(data), 24):
            out.write("    " + ",".join(str(b) for b in data[i:i + 24]) +
                      ",\n")
        pos += len(data)
    out.write("    0};\n\n")
    out.write("constexpr GlyphEntry kEntries[] = {\n")
    for g, off in zip(glyphs, offsets):
        cp, adv, left, top, w, h, _ = g
        out.write(f"    {{0x{cp:04X}, {adv}, {left}, {top}, {w}, {h}, "
                  f"{off}}},\n")
    out.write("};\n\n}  // namespace\n\n")
    out.write(f"const AtlasView kAtlas{{{BASE_SIZE}, {ascent}, {descent}, "
              "kEntries, sizeof(kEntries) / sizeof(kEntries[0]), "
              "kCoverage};\n\n")
    out.write("}  // namespace lomo::glyphs\n")


if __name__ == "__main__":
    main()
