#include "lomo/hsd.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace lomo {

static_assert(std::endian::native == std::endian::little, "HSD1 I/O assumes a little-endian host");

void HiddenStateDump::validate() const {
  for (const auto& s : samples) {
    const std::size_t expected = std::size_t{n_layers} * s.n_tokens() * hidden_dim;
    if (s.states.size() != expected)
      throw HsdError("sample " + s.id + ": state count does not match layers x tokens x dim");
  }
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw HsdError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) throw HsdError("truncated HSD1 file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_hsd(const HiddenStateDump& dump) {
  dump.validate();
  std::vector<std::uint8_t> out(std::begin(kHsdMagic), std::end(kHsdMagic));
  put_u32(out, dump.n_layers);
  put_u32(out, dump.hidden_dim);
  put_u32(out, checked_u32(dump.samples.size(), "sample count"));
  for (const auto& s : dump.samples) {
    put_u32(out, checked_u32(s.id.size(), "id length"));
    out.insert(out.end(), s.id.begin(), s.id.end());
    put_u32(out, checked_u32(s.n_tokens(), "token count"));
    for (auto r : s.roles) out.push_back(static_cast<std::uint8_t>(r));
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.states.data());
    out.insert(out.end(), p, p + s.states.size() * sizeof(float));
  }
  return out;
}

HiddenStateDump decode_hsd(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kHsdMagic) ||
      std::memcmp(bytes.data(), kHsdMagic, sizeof(kHsdMagic)) != 0)
    throw HsdError("not an HSD1 file");
  Cursor cur(bytes.subspan(sizeof(kHsdMagic)));
  HiddenStateDump dump;
  dump.n_layers = cur.u32();
  dump.hidden_dim = cur.u32();
  const std::uint32_t n_samples = cur.u32();
  // Each sample needs at least its two length fields.
  if (std::size_t{n_samples} * 8 > cur.remaining()) throw HsdError("truncated HSD1 file");
  dump.samples.reserve(n_samples);
  const std::size_t floats_per_token = std::size_t{dump.n_layers} * dump.hidden_dim;
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    DumpSample s;
    const auto id = cur.take(cur.u32());
    s.id.assign(id.begin(), id.end());
    const std::uint32_t n_tokens = cur.u32();
    const auto mask = cur.take(n_tokens);
    s.roles.reserve(n_tokens);
    for (auto b : mask) {
      if (b > 1) throw HsdError("sample " + s.id + ": role mask byte must be 0 or 1");
      s.roles.push_back(static_cast<TokenRole>(b));
    }
    const std::size_t n_floats = floats_per_token * n_tokens;
    if (floats_per_token != 0 && n_floats / floats_per_token != n_tokens)
      throw HsdError("HSD1 sample size overflows");
    if (n_floats > cur.remaining() / sizeof(float)) throw HsdError("truncated HSD1 file");
    const auto raw = cur.take(n_floats * sizeof(float));
    s.states.resize(n_floats);
    std::memcpy(s.states.data(), raw.data(), raw.size());
    dump.samples.push_back(std::move(s));
  }
  if (cur.remaining() != 0) throw HsdError("trailing bytes after the last HSD1 sample");
  return dump;
}

void write_hsd(const std::filesystem::path& path, const HiddenStateDump& dump) {
  const auto bytes = encode_hsd(dump);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw HsdError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw HsdError("write failed: " + path.string());
}

HiddenStateDump read_hsd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HsdError("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_hsd(bytes);
}

}  // namespace lomo
