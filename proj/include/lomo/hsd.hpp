#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lomo {

enum class TokenRole : std::uint8_t { textual = 0, visual = 1 };

struct DumpSample {
  std::string id;
  std::vector<TokenRole> roles;  // one per token
  // n_layers blocks of n_tokens x hidden_dim, row-major, layer-major.
  std::vector<float> states;

  std::size_t n_tokens() const { return roles.size(); }
  std::span<const float> layer(std::size_t l, std::size_t hidden_dim) const {
    const std::size_t block = n_tokens() * hidden_dim;
    return std::span<const float>(states).subspan(l * block, block);
  }
};

// Per-layer, per-token hidden vectors with role masks.
struct HiddenStateDump {
  std::uint32_t n_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<DumpSample> samples;

  // Throws HsdError when a sample's sizes disagree with the header.
  void validate() const;
};

class HsdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kHsdMagic[8] = {'L', 'O', 'M', 'O', 'H', 'S', 'D', '1'};

// Binary layout, little-endian: magic, u32 n_layers, u32 hidden_dim,
// u32 n_samples, then per sample u32 id_len, id bytes, u32 n_tokens,
// n_tokens role bytes (0 textual, 1 visual), n_layers blocks of
// n_tokens x hidden_dim float32.
std::vector<std::uint8_t> encode_hsd(const HiddenStateDump& dump);
HiddenStateDump decode_hsd(std::span<const std::uint8_t> bytes);

void write_hsd(const std::filesystem::path& path, const HiddenStateDump& dump);
HiddenStateDump read_hsd(const std::filesystem::path& path);

}  // namespace lomo
