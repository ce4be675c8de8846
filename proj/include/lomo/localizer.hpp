#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lomo {

enum class BlockKind { text, formula };

// `length` counts Unicode code points (UTF-8 decoded), not bytes.
struct Block {
  BlockKind kind = BlockKind::text;
  std::string content;
  std::size_t length = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

struct ChunkSequence {
  std::vector<Block> blocks;
  std::size_t total_length = 0;

  std::string joined() const;
};

enum class PositionMode { prefix, middle, suffix, multi_span };

std::string_view to_string(PositionMode mode);
std::optional<PositionMode> position_mode_from_string(std::string_view s);

// A contiguous run of blocks; `rendered` segments become images.
struct Segment {
  std::string text;
  bool rendered = false;
  std::vector<Block> blocks;
};

// Result of span localization. Single-span modes always produce three
// segments (pre, mid, suf; pre and suf may be empty). multi_span produces
// text-image-text-image-text, or a single rendered segment when the input
// has fewer than two blocks.
struct SpanSplit {
  PositionMode mode = PositionMode::middle;
  std::vector<Segment> segments;
  // Segment start offsets in code points, one per segment, plus the total.
  std::vector<std::size_t> boundaries;

  const std::string& pre() const;
  const std::string& mid() const;
  const std::string& suf() const;
  std::vector<const Segment*> rendered() const;
  std::string joined() const;
};

std::size_t count_code_points(std::string_view s);

// Byte ranges [begin, end) of formula regions: $$..$$, $..$, \(..\), \[..\]
// and backslash-letter commands with up to 8 levels of trailing {..} groups.
// A single-dollar pair only counts when the opener is followed by
// non-space, the closer is preceded by non-space and not followed by a
// digit, and the content is not just digits and currency punctuation.
struct ByteRange {
  std::size_t begin;
  std::size_t end;
};
std::vector<ByteRange> find_formula_regions(std::string_view text);

ChunkSequence chunk_formula_aware(std::string_view text);

// Runs of '.', '?', '!' outside formulas that are followed by whitespace or
// end of input. Non-blank text without any such run counts as one sentence.
std::size_t count_sentences(std::string_view text);

SpanSplit extract_span(const ChunkSequence& chunks, PositionMode mode);

// Inputs of at most kShortSentenceLimit sentences are rendered whole.
inline constexpr std::size_t kShortSentenceLimit = 3;

SpanSplit localize(std::string_view text, PositionMode mode);

}  // namespace lomo
