// lomo: command-line front end for curation, rendered evaluation, modality
// ratio matching, hidden-state metrics and manifest statistics.
//
// Exit status: 0 success, 1 runtime error, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lomo/evalprep.hpp"
#include "lomo/hsd.hpp"
#include "lomo/metrics.hpp"
#include "lomo/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

int env_workers() {
  const auto v = env("LOMO_WORKERS");
  if (!v) return 0;
  try {
    std::size_t used = 0;
    const int n = std::stoi(*v, &used);
    if (used == v->size() && n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw UsageError("LOMO_WORKERS must be a positive integer, got '" + *v + "'");
}

void emit(const ordered_json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << j.dump(2) << '\n';
}

std::vector<double> parse_probabilities(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a probability list: '" + s + "'");
    }
  }
  return out;
}

lomo::ModalityRatio parse_ratio(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    std::size_t ua = 0, ub = 0;
    const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
    const auto x = std::stoull(a, &ua), y = std::stoull(b, &ub);
    if (ua != a.size() || ub != b.size() || x == 0 || y == 0) throw std::invalid_argument(s);
    return {x, y};
  } catch (const std::exception&) {
    throw UsageError("ratio must look like IMAGE:TEXT with positive integers, got '" + s + "'");
  }
}

struct CurateArgs {
  std::string in, out, config, position_mode, latex_cmd;
  std::optional<std::uint64_t> seed;
  std::optional<double> rewrite_ratio;
  std::optional<int> workers;
  std::optional<double> latex_timeout;
  bool no_distortion = false;
  bool lenient = false;
};

// Defaults, then the config file, then environment, then flags.
lomo::PipelineConfig layered_config(const CurateArgs& a) {
  lomo::PipelineConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw std::runtime_error("cannot open config: " + a.config);
    cfg = lomo::pipeline_config_from_json(json::parse(in), cfg);
  }
  if (auto cmd = env("LOMO_LATEX_CMD")) cfg.render.latex_command_template = *cmd;
  if (int w = env_workers()) cfg.workers = w;
  if (a.seed) cfg.seed = *a.seed;
  if (a.rewrite_ratio) cfg.rewrite_ratio = *a.rewrite_ratio;
  if (!a.position_mode.empty()) cfg.position_mode = *lomo::position_mode_from_string(a.position_mode);
  if (a.workers) cfg.workers = *a.workers;
  if (a.no_distortion) cfg.distortion_enabled = false;
  if (a.lenient) cfg.lenient = true;
  if (!a.latex_cmd.empty()) cfg.render.latex_command_template = a.latex_cmd;
  if (a.latex_timeout) cfg.render.latex_timeout_seconds = *a.latex_timeout;
  return cfg;
}

int run_curate(const CurateArgs& a) {
  const lomo::PipelineConfig cfg = layered_config(a);
  const auto result = lomo::curate(a.in, a.out, cfg);
  ordered_json j;
  j["output"] = a.out;
  j["manifest"] = lomo::manifest_path_for(a.out).string();
  j["stats"] = lomo::stats_path_for(a.out).string();
  j["counts"] = {{"total", result.manifest.counts.total},
                 {"rewritten", result.manifest.counts.rewritten},
                 {"text_only_kept", result.manifest.counts.text_only_kept},
                 {"image_bearing_original", result.manifest.counts.image_bearing_original}};
  j["rewrite_ratio"] = cfg.rewrite_ratio;
  j["instances_per_second"] = result.stats.instances_per_second();
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct StatsSummary {
  lomo::ManifestCounts counts;
  std::map<std::string, std::uint64_t> routes, families;
  std::optional<double> throughput;
  std::optional<int> workers;
  std::string operation;
};

StatsSummary summarize(const fs::path& manifest_path) {
  const auto m = lomo::read_manifest(manifest_path);
  StatsSummary s;
  s.counts = m.counts;
  s.operation = m.operation;
  for (const auto& rec : m.per_instance_records)
    for (const auto& span : rec.spans) {
      ++s.routes[span.value("route", std::string("unknown"))];
      const auto& d = span.contains("distortion") ? span["distortion"] : ordered_json();
      ++s.families[d.is_object() ? d.value("family", std::string("unknown")) : std::string("none")];
    }
  // "<stem>.manifest.json" sits next to "<stem>.stats.json".
  std::string name = manifest_path.filename().string();
  const std::string suffix = ".manifest.json";
  if (name.size() > suffix.size() && name.ends_with(suffix)) {
    const fs::path stats = manifest_path.parent_path() /
                           (name.substr(0, name.size() - suffix.size()) + ".stats.json");
    if (fs::exists(stats)) {
      std::ifstream in(stats);
      const auto st = lomo::RunStats::from_json(json::parse(in));
      s.throughput = st.instances_per_second();
      s.workers = st.workers;
    }
  }
  return s;
}

int run_stats(const std::string& manifest, const std::string& format) {
  const StatsSummary s = summarize(manifest);
  const bool ok = s.counts.identity_holds();
  if (format == "json") {
    ordered_json j;
    j["operation"] = s.operation;
    j["counts"] = {{"total", s.counts.total},
                   {"rewritten", s.counts.rewritten},
                   {"text_only_kept", s.counts.text_only_kept},
                   {"image_bearing_original", s.counts.image_bearing_original}};
    j["count_identity"] = ok ? "OK" : "VIOLATED";
    j["route_histogram"] = s.routes;
    j["distortion_histogram"] = s.families;
    j["instances_per_second"] = s.throughput ? ordered_json(*s.throughput) : ordered_json(nullptr);
    j["workers"] = s.workers ? ordered_json(*s.workers) : ordered_json(nullptr);
    std::cout << j.dump(2) << '\n';
  } else {
    auto row = [](const std::string& k, const std::string& v) {
      std::cout << "  " << std::left << std::setw(26) << k << v << '\n';
    };
    std::cout << "operation: " << s.operation << "\ncounts\n";
    row("total", std::to_string(s.counts.total));
    row("rewritten", std::to_string(s.counts.rewritten));
    row("text_only_kept", std::to_string(s.counts.text_only_kept));
    row("image_bearing_original", std::to_string(s.counts.image_bearing_original));
    std::cout << "count identity: " << (ok ? "OK" : "VIOLATED") << "\nroutes\n";
    for (const auto& [k, v] : s.routes) row(k, std::to_string(v));
    std::cout << "distortion families\n";
    for (const auto& [k, v] : s.families) row(k, std::to_string(v));
    std::cout << "throughput\n";
    if (s.throughput) {
      std::ostringstream rate;
      rate << std::fixed << std::setprecision(2) << *s.throughput;
      row("instances_per_second", rate.str());
      row("workers", std::to_string(*s.workers));
    } else {
      row("instances_per_second", "n/a");
    }
  }
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoMo corpus curation and modality-gap metrics"};
  app.require_subcommand(1);

  CurateArgs curate;
  auto* cur = app.add_subcommand("curate", "Rewrite text-only instances into text/image/text form");
  cur->add_option("--in", curate.in, "Input JSONL corpus")->required();
  cur->add_option("--out", curate.out, "Output JSONL corpus")->required();
  cur->add_option("--config", curate.config, "JSON config file (flags override it)");
  cur->add_option("--seed", curate.seed, "Global seed");
  cur->add_option("--rewrite-ratio", curate.rewrite_ratio, "Fraction of text-only instances to rewrite")
      ->check(CLI::Range(0.0, 1.0));
  cur->add_option("--position-mode", curate.position_mode, "prefix|middle|suffix|multi_span")
      ->check(CLI::IsMember({"prefix", "middle", "suffix", "multi_span", "multi-span"}));
  cur->add_option("--workers", curate.workers, "Worker threads")->check(CLI::PositiveNumber);
  cur->add_flag("--no-distortion", curate.no_distortion, "Skip perceptual distortion");
  cur->add_flag("--lenient", curate.lenient, "Skip malformed lines instead of failing");
  cur->add_option("--latex-cmd", curate.latex_cmd,
                  "LaTeX command template with {input_tex} and {output_png}");
  cur->add_option("--latex-timeout", curate.latex_timeout, "Seconds per LaTeX render")
      ->check(CLI::PositiveNumber);

  std::string ev_in, ev_out;
  int font_size = 20, line_height = 22;
  std::optional<long long> ev_cap;
  std::optional<int> ev_workers;
  bool ev_lenient = false;
  auto* ev = app.add_subcommand("eval-render", "Render each benchmark question as one image");
  ev->add_option("--in", ev_in, "Input JSONL benchmark")->required();
  ev->add_option("--out", ev_out, "Output JSONL benchmark")->required();
  ev->add_option("--font-size", font_size, "Font size in pixels")->check(CLI::PositiveNumber);
  ev->add_option("--line-height", line_height, "Line height in pixels")->check(CLI::PositiveNumber);
  ev->add_option("--pixel-cap", ev_cap, "Maximum pixels per image")->check(CLI::PositiveNumber);
  ev->add_option("--workers", ev_workers, "Worker threads")->check(CLI::PositiveNumber);
  ev->add_flag("--lenient", ev_lenient, "Skip malformed lines instead of failing");

  std::string rm_in, rm_out, rm_target;
  std::uint64_t rm_seed = 0;
  bool rm_lenient = false;
  auto* rm = app.add_subcommand("ratio-match", "Downsample to an image-bearing:text-only ratio");
  rm->add_option("--in", rm_in, "Input JSONL corpus")->required();
  rm->add_option("--out", rm_out, "Output JSONL corpus")->required();
  rm->add_option("--target", rm_target, "IMAGE:TEXT, e.g. 1:1")->required();
  rm->add_option("--seed", rm_seed, "Global seed");
  rm->add_flag("--lenient", rm_lenient, "Skip malformed lines instead of failing");

  auto* met = app.add_subcommand("metrics", "Hidden-state and loss diagnostics");
  met->require_subcommand(1);
  std::string hsd_path, metrics_out;
  std::size_t layer = 1, bins = 4;
  auto* mir = met->add_subcommand("mir", "Layer-wise mean Frechet distance");
  mir->add_option("--hsd", hsd_path, "HSD1 dump")->required();
  mir->add_option("--out", metrics_out, "Write the JSON report here instead of stdout");
  auto* pcd = met->add_subcommand("pcd", "Per-sample cross-modal cosine distance");
  pcd->add_option("--hsd", hsd_path, "HSD1 dump")->required();
  pcd->add_option("--layer", layer, "0-based layer block");
  pcd->add_option("--bins", bins, "Equal-count histogram bins")->check(CLI::PositiveNumber);
  pcd->add_option("--out", metrics_out, "Write the JSON report here instead of stdout");
  std::string px, ptx;
  std::size_t answer = 0;
  auto* dec = met->add_subcommand("decomp", "Loss split and cross-entropy/KL identity check");
  dec->add_option("--px", px, "Comma-separated p(.|x)")->required();
  dec->add_option("--ptx", ptx, "Comma-separated p(.|T(x))")->required();
  dec->add_option("--answer", answer, "Answer index")->required();
  dec->add_option("--out", metrics_out, "Write the JSON report here instead of stdout");

  std::string st_manifest, st_format = "text";
  auto* st = app.add_subcommand("stats", "Summarize a manifest");
  st->add_option("--manifest", st_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  st->add_option("--format", st_format, "text|json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cur) return run_curate(curate);
    if (*ev) {
      lomo::RenderConfig rc;
      rc.font_size = font_size;
      rc.line_height = line_height;
      if (ev_cap) rc.pixel_cap = *ev_cap;
      lomo::EvalRenderOptions opt;
      opt.lenient = ev_lenient;
      if (int w = env_workers()) opt.workers = w;
      if (ev_workers) opt.workers = *ev_workers;
      const auto m = lomo::transform_benchmark(ev_in, ev_out, rc, opt);
      std::cout << ordered_json{{"output", ev_out},
                                {"manifest", lomo::manifest_path_for(ev_out).string()},
                                {"rendered", m.counts.rewritten},
                                {"total", m.counts.total}}
                       .dump(2)
                << '\n';
      return 0;
    }
    if (*rm) {
      const auto m = lomo::match_modality_ratio(rm_in, rm_out, parse_ratio(rm_target), rm_seed, rm_lenient);
      std::cout << ordered_json{{"output", rm_out},
                                {"manifest", lomo::manifest_path_for(rm_out).string()},
                                {"kept", m.counts.total},
                                {"details", m.extra}}
                       .dump(2)
                << '\n';
      return 0;
    }
    if (*mir) {
      emit(lomo::to_json(lomo::mir(lomo::read_hsd(hsd_path))), metrics_out);
      return 0;
    }
    if (*pcd) {
      const auto r = lomo::pairwise_cross_modal_distance(lomo::read_hsd(hsd_path), layer);
      emit(lomo::to_json(r, lomo::equal_count_histogram(r.distances, bins)), metrics_out);
      return 0;
    }
    if (*dec) {
      const lomo::AnswerDistribution a(parse_probabilities(px)), b(parse_probabilities(ptx));
      emit(lomo::to_json(lomo::decomposition_check(a, b, answer)), metrics_out);
      return 0;
    }
    if (*st) return run_stats(st_manifest, st_format);
  } catch (const UsageError& e) {
    std::cerr << "lomo: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "lomo: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
