#include "lomo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "batch.hpp"
#include "lomo/kernels.hpp"
#include "lomo/rng.hpp"

namespace lomo {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void PipelineConfig::validate() const {
  if (!(rewrite_ratio >= 0.0 && rewrite_ratio <= 1.0))
    throw std::invalid_argument("rewrite_ratio must be in [0, 1]");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (target_image_text_ratio &&
      (target_image_text_ratio->image_bearing == 0 || target_image_text_ratio->text_only == 0))
    throw std::invalid_argument("target ratio terms must be positive");
  render.validate();
  distortion.validate();
}

namespace {

template <class T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!obj.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument("unknown config key: " + std::string(where) + "." + key);
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig cfg) {
  check_keys(j,
             {"seed", "rewrite_ratio", "position_mode", "distortion_enabled", "workers",
              "target_image_text_ratio", "lenient", "batch_size", "render", "distortion"},
             "config");
  take(j, "seed", cfg.seed);
  take(j, "rewrite_ratio", cfg.rewrite_ratio);
  if (j.contains("position_mode")) {
    const auto name = j.at("position_mode").get<std::string>();
    const auto mode = position_mode_from_string(name);
    if (!mode) throw std::invalid_argument("unknown position_mode: " + name);
    cfg.position_mode = *mode;
  }
  take(j, "distortion_enabled", cfg.distortion_enabled);
  take(j, "workers", cfg.workers);
  take(j, "lenient", cfg.lenient);
  take(j, "batch_size", cfg.batch_size);
  if (j.contains("target_image_text_ratio")) {
    const auto& r = j.at("target_image_text_ratio");
    if (r.is_null()) {
      cfg.target_image_text_ratio.reset();
    } else {
      if (!r.is_array() || r.size() != 2)
        throw std::invalid_argument("target_image_text_ratio must be [image, text]");
      cfg.target_image_text_ratio = ModalityRatio{r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>()};
    }
  }
  if (j.contains("render")) {
    const auto& r = j.at("render");
    check_keys(r,
               {"font_size", "line_height", "math_font_size", "max_line_width", "pixel_cap",
                "trim_padding", "latex_command", "latex_timeout"},
               "render");
    take(r, "font_size", cfg.render.font_size);
    take(r, "line_height", cfg.render.line_height);
    take(r, "math_font_size", cfg.render.math_font_size);
    take(r, "max_line_width", cfg.render.max_line_width);
    take(r, "pixel_cap", cfg.render.pixel_cap);
    take(r, "trim_padding", cfg.render.trim_padding);
    take(r, "latex_timeout", cfg.render.latex_timeout_seconds);
    if (r.contains("latex_command")) {
      if (r.at("latex_command").is_null())
        cfg.render.latex_command_template.reset();
      else
        cfg.render.latex_command_template = r.at("latex_command").get<std::string>();
    }
  }
  if (j.contains("distortion")) {
    const auto& d = j.at("distortion");
    auto& g = cfg.distortion;
    check_keys(d,
               {"large_angle_probability", "large_angles", "small_angle_max", "gaussian_sigma_min",
                "gaussian_sigma_max", "box_sizes", "motion_length_min", "motion_length_max",
                "shadow_strength_min", "shadow_strength_max", "stain_count_min", "stain_count_max",
                "stain_alpha_min", "stain_alpha_max", "wave_amplitude_min", "wave_amplitude_max",
                "wavelength_min", "wavelength_max"},
               "distortion");
    take(d, "large_angle_probability", g.large_angle_probability);
    take(d, "large_angles", g.large_angles);
    take(d, "small_angle_max", g.small_angle_max);
    take(d, "gaussian_sigma_min", g.gaussian_sigma_min);
    take(d, "gaussian_sigma_max", g.gaussian_sigma_max);
    take(d, "box_sizes", g.box_sizes);
    take(d, "motion_length_min", g.motion_length_min);
    take(d, "motion_length_max", g.motion_length_max);
    take(d, "shadow_strength_min", g.shadow_strength_min);
    take(d, "shadow_strength_max", g.shadow_strength_max);
    take(d, "stain_count_min", g.stain_count_min);
    take(d, "stain_count_max", g.stain_count_max);
    take(d, "stain_alpha_min", g.stain_alpha_min);
    take(d, "stain_alpha_max", g.stain_alpha_max);
    take(d, "wave_amplitude_min", g.wave_amplitude_min);
    take(d, "wave_amplitude_max", g.wave_amplitude_max);
    take(d, "wavelength_min", g.wavelength_min);
    take(d, "wavelength_max", g.wavelength_max);
  }
  return cfg;
}

ordered_json pipeline_config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["rewrite_ratio"] = cfg.rewrite_ratio;
  j["position_mode"] = to_string(cfg.position_mode);
  j["distortion_enabled"] = cfg.distortion_enabled;
  j["workers"] = cfg.workers;
  if (cfg.target_image_text_ratio)
    j["target_image_text_ratio"] = {cfg.target_image_text_ratio->image_bearing,
                                    cfg.target_image_text_ratio->text_only};
  else
    j["target_image_text_ratio"] = nullptr;
  j["lenient"] = cfg.lenient;
  j["batch_size"] = cfg.batch_size;
  const auto& r = cfg.render;
  j["render"] = {{"font_size", r.font_size},
                 {"line_height", r.line_height},
                 {"math_font_size", r.math_font_size},
                 {"max_line_width", r.max_line_width},
                 {"pixel_cap", r.pixel_cap},
                 {"trim_padding", r.trim_padding},
                 {"latex_command", r.latex_command_template ? ordered_json(*r.latex_command_template)
                                                            : ordered_json(nullptr)},
                 {"latex_timeout", r.latex_timeout_seconds}};
  const auto& g = cfg.distortion;
  j["distortion"] = {{"large_angle_probability", g.large_angle_probability},
                     {"large_angles", g.large_angles},
                     {"small_angle_max", g.small_angle_max},
                     {"gaussian_sigma_min", g.gaussian_sigma_min},
                     {"gaussian_sigma_max", g.gaussian_sigma_max},
                     {"box_sizes", g.box_sizes},
                     {"motion_length_min", g.motion_length_min},
                     {"motion_length_max", g.motion_length_max},
                     {"shadow_strength_min", g.shadow_strength_min},
                     {"shadow_strength_max", g.shadow_strength_max},
                     {"stain_count_min", g.stain_count_min},
                     {"stain_count_max", g.stain_count_max},
                     {"stain_alpha_min", g.stain_alpha_min},
                     {"stain_alpha_max", g.stain_alpha_max},
                     {"wave_amplitude_min", g.wave_amplitude_min},
                     {"wave_amplitude_max", g.wave_amplitude_max},
                     {"wavelength_min", g.wavelength_min},
                     {"wavelength_max", g.wavelength_max}};
  return j;
}

std::uint64_t derive_instance_seed(std::uint64_t global_seed, std::string_view instance_id) {
  const std::uint64_t a = SplitMix64::mix(global_seed + 0x9E3779B97F4A7C15ull);
  return SplitMix64::mix(a ^ fnv1a64(instance_id));
}

std::uint64_t derive_span_seed(std::uint64_t instance_seed, int span_index) {
  SplitMix64 rng(instance_seed ^ 0xD1B54A32D192ED03ull);
  std::uint64_t s = rng.next();
  for (int i = 0; i < span_index; ++i) s = rng.next();
  return s;
}

namespace {

RenderedCarrier cap_pixels(RenderedCarrier carrier, long long cap) {
  const auto [w, h] = fit_to_pixel_cap(carrier.width(), carrier.height(), cap);
  if (w != carrier.width() || h != carrier.height())
    carrier.image = kernels::downscale_area(carrier.image, w, h);
  return carrier;
}

}  // namespace

TransformedInstance transform_instance(const Instance& instance, const PipelineConfig& cfg,
                                       ProcessGate* gate) {
  if (!instance.is_text_only())
    throw std::invalid_argument("transform_instance expects a text-only instance: " + instance.id);
  const std::string question = instance.question_text();
  const SpanSplit split = localize(question, cfg.position_mode);
  const std::uint64_t seed = derive_instance_seed(cfg.seed, instance.id);

  TransformedInstance out;
  out.instance.id = instance.id;
  out.instance.answer = instance.answer;
  int span_index = 0;
  for (const auto& seg : split.segments) {
    if (!seg.rendered) {
      if (!seg.text.empty()) out.instance.parts.push_back(ContentPart::text(seg.text));
      continue;
    }
    RenderedCarrier carrier = trim_margins(render_routed(seg.text, cfg.render, gate), cfg.render);
    if (cfg.distortion_enabled) {
      carrier = apply_distortion(std::move(carrier), derive_span_seed(seed, span_index),
                                 cfg.distortion);
      carrier = cap_pixels(std::move(carrier), cfg.render.pixel_cap);
    }
    out.instance.parts.push_back(ContentPart::image(image_file_name(instance.id, span_index)));
    out.carriers.push_back(std::move(carrier));
    ++span_index;
  }
  return out;
}

std::vector<ordered_json> materialize(TransformedInstance& t, const fs::path& image_dir,
                                      const fs::path& manifest_root) {
  std::vector<ordered_json> spans;
  std::size_t k = 0;
  for (auto& part : t.instance.parts) {
    if (part.kind != PartKind::image) continue;
    const RenderedCarrier& carrier = t.carriers.at(k++);
    const fs::path file = fs::absolute(image_dir / part.value);
    write_png(file, carrier.image, carrier_metadata(carrier));
    part.value = file.string();
    spans.push_back(carrier_record(carrier, fs::relative(file, manifest_root).generic_string()));
  }
  return spans;
}

void RunStats::merge(const RunStats& other) {
  instances += other.instances;
  rendered_spans += other.rendered_spans;
  for (const auto& [k, v] : other.routes) routes[k] += v;
  for (const auto& [k, v] : other.distortion_families) distortion_families[k] += v;
  elapsed_seconds += other.elapsed_seconds;
}

double RunStats::instances_per_second() const {
  return elapsed_seconds > 0 ? static_cast<double>(instances) / elapsed_seconds : 0.0;
}

ordered_json RunStats::to_json() const {
  ordered_json j;
  j["instances"] = instances;
  j["rendered_spans"] = rendered_spans;
  j["elapsed_seconds"] = elapsed_seconds;
  j["instances_per_second"] = instances_per_second();
  j["workers"] = workers;
  j["route_histogram"] = routes;
  j["distortion_histogram"] = distortion_families;
  return j;
}

RunStats RunStats::from_json(const json& j) {
  RunStats s;
  s.instances = j.value("instances", std::uint64_t{0});
  s.rendered_spans = j.value("rendered_spans", std::uint64_t{0});
  s.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  s.workers = j.value("workers", 1);
  if (j.contains("route_histogram"))
    s.routes = j["route_histogram"].get<std::map<std::string, std::uint64_t>>();
  if (j.contains("distortion_histogram"))
    s.distortion_families = j["distortion_histogram"].get<std::map<std::string, std::uint64_t>>();
  return s;
}

namespace {

// Marks the output as unfinished until the run completes.
class IncompleteMarker {
 public:
  explicit IncompleteMarker(const fs::path& output) : path_(output.string() + ".incomplete") {
    if (output.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(output.parent_path(), ec);
    }
    std::ofstream(path_) << "incomplete\n";
  }
  void done() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
};

// Absolute paths for original image parts so they can be re-relativized
// against the output root.
Instance rebase_images(Instance inst, const fs::path& input_root) {
  for (auto& p : inst.parts)
    if (p.kind == PartKind::image && !is_inline_image(p.value) && !fs::path(p.value).is_absolute())
      p.value = (input_root / p.value).lexically_normal().string();
  return inst;
}

struct Keyed {
  std::uint64_t key;
  std::size_t index;
  bool operator<(const Keyed& o) const { return key != o.key ? key < o.key : index < o.index; }
};

// Marks in `selected` the `k` members of `pool` with the smallest keys.
void select_smallest(std::vector<Keyed>& pool, std::size_t k, std::vector<bool>& selected) {
  if (k == 0) return;
  if (k < pool.size()) std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
  for (std::size_t i = 0; i < std::min(k, pool.size()); ++i) selected[pool[i].index] = true;
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

struct WorkResult {
  Instance instance;
  RecordAction action = RecordAction::passthrough;
  std::vector<ordered_json> spans;
  RunStats stats;
};

}  // namespace

CurateResult curate(const fs::path& input, const fs::path& output, const PipelineConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  IncompleteMarker marker(output);
  LoadOptions load;
  load.lenient = cfg.lenient;

  // Pass 1: count and key the text-only instances.
  std::vector<Keyed> text_only;
  std::size_t total = 0;
  std::vector<LoadIssue> issues;
  {
    InstanceReader reader(input, load);
    while (auto inst = reader.next()) {
      if (inst->is_text_only()) text_only.push_back({derive_instance_seed(cfg.seed, inst->id), total});
      ++total;
    }
    issues = reader.issues();
  }
  const auto n_rewrite = static_cast<std::size_t>(
      std::floor(cfg.rewrite_ratio * static_cast<double>(text_only.size()) + 1e-9));
  std::vector<bool> selected(total, false);
  select_smallest(text_only, n_rewrite, selected);

  const fs::path image_dir = image_dir_for(output);
  fs::create_directories(image_dir);
  CorpusWriter writer(output);
  ProcessGate gate(cfg.workers);

  CurateResult result;
  auto& m = result.manifest;
  m.operation = "curate";
  m.source_path = input.string();
  m.seed = cfg.seed;
  m.rewrite_ratio = cfg.rewrite_ratio;
  m.position_mode = std::string(to_string(cfg.position_mode));
  m.malformed_lines = issues;
  result.stats.workers = cfg.workers;

  InstanceReader reader(input, load);
  const fs::path input_root = reader.root();
  detail::run_batched<WorkResult>(
      reader, cfg.workers, cfg.batch_size,
      [&](const Instance& inst, std::size_t index) {
        WorkResult r;
        r.stats.instances = 1;
        if (!selected.at(index)) {
          r.instance = rebase_images(inst, input_root);
          return r;
        }
        TransformedInstance t = transform_instance(inst, cfg, &gate);
        r.spans = materialize(t, image_dir, writer.root());
        for (const auto& c : t.carriers) {
          ++r.stats.rendered_spans;
          ++r.stats.routes[std::string(to_string(c.route))];
          ++r.stats.distortion_families[c.distortion ? std::string(to_string(c.distortion->family()))
                                                     : std::string("disabled")];
        }
        r.instance = std::move(t.instance);
        r.action = RecordAction::rewritten;
        return r;
      },
      [&](const Instance& original, WorkResult& r) {
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
        result.stats.merge(r.stats);
      });
  writer.close();

  write_manifest(manifest_path_for(output), m);
  result.stats.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json_file(stats_path_for(output), result.stats.to_json());
  marker.done();
  return result;
}

CurationManifest match_modality_ratio(const fs::path& input, const fs::path& output,
                                      ModalityRatio target, std::uint64_t seed, bool lenient) {
  if (target.image_bearing == 0 || target.text_only == 0)
    throw RatioError("target ratio terms must be positive");
  const std::uint64_t g = std::gcd(target.image_bearing, target.text_only);
  const std::uint64_t a = target.image_bearing / g, b = target.text_only / g;

  LoadOptions load;
  load.lenient = lenient;
  std::vector<Keyed> images, texts;
  std::size_t total = 0;
  std::vector<LoadIssue> issues;
  {
    InstanceReader reader(input, load);
    while (auto inst = reader.next()) {
      (inst->is_text_only() ? texts : images).push_back({derive_instance_seed(seed, inst->id), total});
      ++total;
    }
    issues = reader.issues();
  }
  const std::uint64_t n_img = images.size(), n_txt = texts.size();
  if (n_img == 0 || n_txt == 0)
    throw RatioError("both image-bearing and text-only instances are required");

  std::vector<bool> keep(total, false);
  std::uint64_t keep_img = n_img, keep_txt = n_txt;
  if (n_img * b > n_txt * a) {
    if ((n_txt * a) % b != 0)
      throw RatioError("target ratio not reachable without upsampling");
    keep_img = n_txt * a / b;
  } else if (n_img * b < n_txt * a) {
    if ((n_img * b) % a != 0)
      throw RatioError("target ratio not reachable without upsampling");
    keep_txt = n_img * b / a;
  }
  select_smallest(images, keep_img, keep);
  select_smallest(texts, keep_txt, keep);

  IncompleteMarker marker(output);
  CorpusWriter writer(output);
  CurationManifest m;
  m.operation = "ratio_match";
  m.source_path = input.string();
  m.seed = seed;
  m.malformed_lines = issues;
  m.extra = {{"target_image_text_ratio", {a, b}},
             {"input_image_bearing", n_img},
             {"input_text_only", n_txt},
             {"dropped", (n_img - keep_img) + (n_txt - keep_txt)}};

  InstanceReader reader(input, load);
  std::size_t index = 0;
  while (auto inst = reader.next()) {
    if (keep.at(index++)) {
      InstanceRecord rec =
          emit_interleaved(rebase_images(*inst, reader.root()), writer, RecordAction::passthrough);
      ++m.counts.total;
      ++(inst->is_text_only() ? m.counts.text_only_kept : m.counts.image_bearing_original);
      m.per_instance_records.push_back(std::move(rec));
    }
  }
  writer.close();
  write_manifest(manifest_path_for(output), m);
  marker.done();
  return m;
}

}  // namespace lomo
