#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>

#include "lomo/corpus.hpp"
#include "lomo/renderer.hpp"

namespace lomo {

// Value of the lomo:protocol PNG key on rendered-question images.
inline constexpr const char* kRenderedEvalProtocol = "rendered_eval";

// The whole question as one trimmed, capped text-route image. No distortion.
// Throws std::invalid_argument on an empty question.
RenderedCarrier render_question(std::string_view question, const RenderConfig& config);

struct EvalRenderOptions {
  int workers = 1;
  bool lenient = false;
  std::size_t batch_size = 256;
};

// Replaces each instance's text parts by one rendered image placed before
// the original images. Instances without text parts, which includes already
// transformed ones, pass through unchanged.
CurationManifest transform_benchmark(const std::filesystem::path& input,
                                     const std::filesystem::path& output,
                                     const RenderConfig& config, EvalRenderOptions options = {});

}  // namespace lomo
