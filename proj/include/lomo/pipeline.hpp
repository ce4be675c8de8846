#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lomo/corpus.hpp"
#include "lomo/distortion.hpp"
#include "lomo/localizer.hpp"
#include "lomo/renderer.hpp"

namespace lomo {

// image-bearing : text-only
struct ModalityRatio {
  std::uint64_t image_bearing = 1;
  std::uint64_t text_only = 1;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  double rewrite_ratio = 0.5;
  PositionMode position_mode = PositionMode::middle;
  bool distortion_enabled = true;
  int workers = 1;
  std::optional<ModalityRatio> target_image_text_ratio;
  bool lenient = false;
  // Instances read ahead per parallel step; bounds memory.
  std::size_t batch_size = 256;
  RenderConfig render;
  DistortionRanges distortion;

  void validate() const;
};

// Applies the keys present in `j` on top of `base`. Unknown keys throw.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& cfg);

// Stable 64-bit mix of the global seed and an instance id.
std::uint64_t derive_instance_seed(std::uint64_t global_seed, std::string_view instance_id);

// Seed of the distortion applied to rendered span `span_index`.
std::uint64_t derive_span_seed(std::uint64_t instance_seed, int span_index);

struct TransformedInstance {
  // Image parts hold image_file_name(id, k) until materialized.
  Instance instance;
  // One per image part, in order.
  std::vector<RenderedCarrier> carriers;
};

// Localize, render (routed), trim, and distort every selected span of a
// text-only instance. The answer is copied unchanged.
TransformedInstance transform_instance(const Instance& instance, const PipelineConfig& cfg,
                                       ProcessGate* gate = nullptr);

// Writes the carriers as PNGs under `image_dir` and points the image parts
// at them (absolute paths). Returns the per-span manifest entries.
std::vector<nlohmann::ordered_json> materialize(TransformedInstance& t,
                                                const std::filesystem::path& image_dir,
                                                const std::filesystem::path& manifest_root);

// Mergeable run statistics (identity element = default value).
struct RunStats {
  std::uint64_t instances = 0;
  std::uint64_t rendered_spans = 0;
  std::map<std::string, std::uint64_t> routes;
  std::map<std::string, std::uint64_t> distortion_families;
  double elapsed_seconds = 0.0;
  int workers = 1;

  void merge(const RunStats& other);
  double instances_per_second() const;
  nlohmann::ordered_json to_json() const;
  static RunStats from_json(const nlohmann::json& j);
};

struct CurateResult {
  CurationManifest manifest;
  RunStats stats;
};

// Rewrites floor(rewrite_ratio * text_only) text-only instances (those with
// the smallest derived seeds) and passes everything else through. Writes
// `output`, its image directory, manifest and stats sidecars.
CurateResult curate(const std::filesystem::path& input, const std::filesystem::path& output,
                    const PipelineConfig& cfg);

class RatioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded downsampling of the over-represented class to exactly `target`.
// Throws RatioError when that needs upsampling or a class is empty.
CurationManifest match_modality_ratio(const std::filesystem::path& input,
                                      const std::filesystem::path& output,
                                      ModalityRatio target, std::uint64_t seed,
                                      bool lenient = false);

}  // namespace lomo
