#include "lomo/evalprep.hpp"

#include <algorithm>
#include <stdexcept>

#include "batch.hpp"

namespace lomo {

namespace fs = std::filesystem;

RenderedCarrier render_question(std::string_view question, const RenderConfig& config) {
  if (question.empty()) throw std::invalid_argument("empty question");
  return trim_margins(render_text(question, config), config);
}

namespace {

struct EvalResult {
  Instance instance;
  RecordAction action = RecordAction::passthrough;
  std::vector<nlohmann::ordered_json> spans;
};

}  // namespace

CurationManifest transform_benchmark(const fs::path& input, const fs::path& output,
                                     const RenderConfig& config, EvalRenderOptions options) {
  config.validate();
  if (options.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (options.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  LoadOptions load;
  load.lenient = options.lenient;
  InstanceReader reader(input, load);
  const fs::path input_root = reader.root();
  const fs::path image_dir = image_dir_for(output);
  fs::create_directories(image_dir);
  CorpusWriter writer(output);

  CurationManifest m;
  m.operation = "eval_render";
  m.source_path = input.string();
  m.extra = {{"protocol", kRenderedEvalProtocol},
             {"font_size", config.font_size},
             {"line_height", config.line_height}};

  detail::run_batched<EvalResult>(
      reader, options.workers, options.batch_size,
      [&](const Instance& inst, std::size_t) {
        EvalResult r;
        r.instance.id = inst.id;
        r.instance.answer = inst.answer;
        const std::string question = inst.question_text();
        const bool has_text = std::any_of(inst.parts.begin(), inst.parts.end(),
                                          [](const ContentPart& p) { return p.kind == PartKind::text; });
        if (has_text && !question.empty()) {
          const RenderedCarrier carrier = render_question(question, config);
          ImageMetadata meta = carrier_metadata(carrier);
          meta[kMetaProtocol] = kRenderedEvalProtocol;
          const fs::path file = fs::absolute(image_dir / image_file_name(inst.id, 0));
          write_png(file, carrier.image, meta);
          r.instance.parts.push_back(ContentPart::image(file.string()));
          r.spans.push_back(carrier_record(carrier, fs::relative(file, writer.root()).generic_string()));
          r.action = RecordAction::rewritten;
        }
        for (const auto& p : inst.parts) {
          if (p.kind != PartKind::image) continue;
          ContentPart q = p;
          if (!is_inline_image(q.value) && !fs::path(q.value).is_absolute())
            q.value = (input_root / q.value).lexically_normal().string();
          r.instance.parts.push_back(std::move(q));
        }
        return r;
      },
      [&](const Instance& original, EvalResult& r) {
        InstanceRecord rec = emit_interleaved(r.instance, writer, r.action);
        rec.spans = std::move(r.spans);
        ++m.counts.total;
        if (r.action == RecordAction::rewritten)
          ++m.counts.rewritten;
        else if (original.is_text_only())
          ++m.counts.text_only_kept;
        else
          ++m.counts.image_bearing_original;
        m.per_instance_records.push_back(std::move(rec));
      });
  writer.close();
  m.malformed_lines = reader.issues();
  write_manifest(manifest_path_for(output), m);
  return m;
}

}  // namespace lomo
