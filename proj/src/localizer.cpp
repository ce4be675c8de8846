#include "lomo/localizer.hpp"

#include <algorithm>
#include <stdexcept>

namespace lomo {

namespace {

constexpr int kMaxBraceDepth = 8;

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// End (exclusive) of the balanced {...} group starting at `pos`, or npos.
std::size_t match_brace_group(std::string_view s, std::size_t pos) {
  int depth = 0;
  for (std::size_t i = pos; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      ++i;
    } else if (c == '{') {
      if (++depth > kMaxBraceDepth) return std::string_view::npos;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

bool currency_only(std::string_view content) {
  return std::all_of(content.begin(), content.end(), [](char c) {
    return is_digit(c) || c == '.' || c == ',' || c == ' ' || c == '-' || c == '+' ||
           c == '%' || c == '\'';
  });
}

// Closing '$' for an inline math opener at `open`, or npos.
std::size_t find_inline_close(std::string_view s, std::size_t open) {
  if (open + 1 >= s.size() || is_space(s[open + 1]) || s[open + 1] == '$')
    return std::string_view::npos;
  for (std::size_t j = open + 1; j < s.size(); ++j) {
    const char c = s[j];
    if (c == '\\') {
      ++j;
      continue;
    }
    if (c == '\n' && j + 1 < s.size() && s[j + 1] == '\n') break;
    if (c != '$') continue;
    if (is_space(s[j - 1])) continue;
    if (j + 1 < s.size() && is_digit(s[j + 1])) continue;
    return j;
  }
  return std::string_view::npos;
}

}  // namespace

std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::vector<ByteRange> find_formula_regions(std::string_view s) {
  std::vector<ByteRange> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == '(' || n == '[') {
        const std::string_view close = n == '(' ? "\\)" : "\\]";
        const auto j = s.find(close, i + 2);
        if (j != std::string_view::npos) {
          out.push_back({i, j + 2});
          i = j + 2;
          continue;
        }
        i += 2;
        continue;
      }
      if (is_ascii_letter(n)) {
        std::size_t k = i + 1;
        while (k < s.size() && is_ascii_letter(s[k])) ++k;
        while (k < s.size() && s[k] == '{') {
          const auto e = match_brace_group(s, k);
          if (e == std::string_view::npos) break;
          k = e;
        }
        out.push_back({i, k});
        i = k;
        continue;
      }
      i += 2;  // escaped character such as \$ or \\ .
      continue;
    }
    if (c == '$') {
      if (i + 1 < s.size() && s[i + 1] == '$') {
        const auto j = s.find("$$", i + 2);
        if (j != std::string_view::npos && j > i + 2) {
          out.push_back({i, j + 2});
          i = j + 2;
          continue;
        }
        i += 2;
        continue;
      }
      const auto j = find_inline_close(s, i);
      if (j != std::string_view::npos && !currency_only(s.substr(i + 1, j - i - 1))) {
        out.push_back({i, j + 1});
        i = j + 1;
        continue;
      }
    }
    ++i;
  }
  return out;
}

std::string ChunkSequence::joined() const {
  std::string out;
  for (const auto& b : blocks) out += b.content;
  return out;
}

ChunkSequence chunk_formula_aware(std::string_view text) {
  ChunkSequence seq;
  auto push = [&](BlockKind kind, std::string_view content) {
    if (content.empty()) return;
    const std::size_t len = count_code_points(content);
    seq.blocks.push_back({kind, std::string(content), len});
    seq.total_length += len;
  };
  std::size_t cursor = 0;
  for (const auto& r : find_formula_regions(text)) {
    push(BlockKind::text, text.substr(cursor, r.begin - cursor));
    push(BlockKind::formula, text.substr(r.begin, r.end - r.begin));
    cursor = r.end;
  }
  push(BlockKind::text, text.substr(cursor));
  return seq;
}

std::size_t count_sentences(std::string_view text) {
  std::string masked(text);
  for (const auto& r : find_formula_regions(text))
    std::fill(masked.begin() + static_cast<std::ptrdiff_t>(r.begin),
              masked.begin() + static_cast<std::ptrdiff_t>(r.end), 'x');
  auto terminator = [](char c) { return c == '.' || c == '?' || c == '!'; };
  std::size_t count = 0;
  for (std::size_t i = 0; i < masked.size();) {
    if (!terminator(masked[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < masked.size() && terminator(masked[j])) ++j;
    if (j == masked.size() || is_space(masked[j])) ++count;
    i = j;
  }
  if (count == 0 && std::any_of(masked.begin(), masked.end(), [](char c) { return !is_space(c); }))
    return 1;
  return count;
}

std::string_view to_string(PositionMode mode) {
  switch (mode) {
    case PositionMode::prefix: return "prefix";
    case PositionMode::middle: return "middle";
    case PositionMode::suffix: return "suffix";
    case PositionMode::multi_span: return "multi_span";
  }
  return "middle";
}

std::optional<PositionMode> position_mode_from_string(std::string_view s) {
  if (s == "prefix") return PositionMode::prefix;
  if (s == "middle") return PositionMode::middle;
  if (s == "suffix") return PositionMode::suffix;
  if (s == "multi_span" || s == "multi-span") return PositionMode::multi_span;
  return std::nullopt;
}

namespace {

const std::string kEmpty;

// Builds segments from block-index cut points 0 = c0 <= c1 <= ... <= n.
SpanSplit assemble(const ChunkSequence& chunks, PositionMode mode,
                   const std::vector<std::size_t>& cuts, const std::vector<bool>& rendered) {
  SpanSplit split;
  split.mode = mode;
  std::size_t offset = 0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    Segment seg;
    seg.rendered = rendered[s];
    split.boundaries.push_back(offset);
    for (std::size_t b = cuts[s]; b < cuts[s + 1]; ++b) {
      seg.text += chunks.blocks[b].content;
      seg.blocks.push_back(chunks.blocks[b]);
      offset += chunks.blocks[b].length;
    }
    split.segments.push_back(std::move(seg));
  }
  split.boundaries.push_back(offset);
  return split;
}

}  // namespace

const std::string& SpanSplit::pre() const {
  return segments.size() == 3 ? segments[0].text : kEmpty;
}
const std::string& SpanSplit::mid() const {
  if (segments.size() == 3) return segments[1].text;
  throw std::logic_error("mid() is only defined for single-span splits");
}
const std::string& SpanSplit::suf() const {
  return segments.size() == 3 ? segments[2].text : kEmpty;
}

std::vector<const Segment*> SpanSplit::rendered() const {
  std::vector<const Segment*> out;
  for (const auto& s : segments)
    if (s.rendered) out.push_back(&s);
  return out;
}

std::string SpanSplit::joined() const {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

SpanSplit extract_span(const ChunkSequence& chunks, PositionMode mode) {
  const std::size_t n = chunks.blocks.size();
  const std::size_t total = chunks.total_length;
  if (n == 0) return assemble(chunks, mode, {0, 0, 0, 0}, {false, true, false});

  // cum[k] = code points before block k.
  std::vector<std::size_t> cum(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + chunks.blocks[k].length;
  // Earliest block boundary at or after num/den of the total length.
  auto snap = [&](std::size_t num, std::size_t den) {
    for (std::size_t k = 0; k <= n; ++k)
      if (cum[k] * den >= total * num) return k;
    return n;
  };

  const std::vector<bool> single{false, true, false};
  if (n == 1) return assemble(chunks, mode, {0, 0, 1, 1}, single);

  switch (mode) {
    case PositionMode::prefix:
      return assemble(chunks, mode, {0, 0, snap(1, 3), n}, single);
    case PositionMode::suffix: {
      std::size_t start = snap(2, 3);
      if (start == n) start = n - 1;
      return assemble(chunks, mode, {0, start, n, n}, single);
    }
    case PositionMode::middle: {
      std::size_t b1 = snap(1, 3);
      std::size_t b2 = snap(2, 3);
      if (b1 == b2) {
        if (b2 < n)
          ++b2;
        else
          --b1;
      }
      return assemble(chunks, mode, {0, b1, b2, n}, single);
    }
    case PositionMode::multi_span: {
      std::size_t g[4] = {snap(1, 5), snap(2, 5), snap(3, 5), snap(4, 5)};
      g[1] = std::max(g[1], g[0] + 1);
      g[2] = std::max(g[2], g[1]);
      g[3] = std::max(g[3], g[2] + 1);
      if (g[3] > n) {
        g[3] = n;
        g[2] = std::min(g[2], g[3] - 1);
        g[1] = std::min(g[1], g[2]);
        g[0] = std::min(g[0], g[1] - 1);
      }
      return assemble(chunks, mode, {0, g[0], g[1], g[2], g[3], n},
                      {false, true, false, true, false});
    }
  }
  throw std::logic_error("unknown position mode");
}

SpanSplit localize(std::string_view text, PositionMode mode) {
  if (count_sentences(text) <= kShortSentenceLimit) {
    ChunkSequence whole;
    if (!text.empty()) {
      const std::size_t len = count_code_points(text);
      whole.blocks.push_back({BlockKind::text, std::string(text), len});
      whole.total_length = len;
    }
    SpanSplit split = assemble(whole, mode, {0, 0, whole.blocks.size(), whole.blocks.size()},
                               {false, true, false});
    // The whole input is one rendered unit; keep its real block structure.
    split.segments[1].blocks = chunk_formula_aware(text).blocks;
    return split;
  }
  return extract_span(chunk_formula_aware(text), mode);
}

}  // namespace lomo
