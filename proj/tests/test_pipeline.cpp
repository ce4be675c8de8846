#include <gtest/gtest.h>

#include <set>
#include <unordered_set>

#include "lomo/pipeline.hpp"
#include "lomo/rng.hpp"
#include "support.hpp"

using namespace lomo;
using lomo::testing::ScratchDir;
using lomo::testing::read_file;

namespace fs = std::filesystem;

namespace {

std::string dir_fingerprint(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    out += fs::relative(f, dir).string() + ":" + std::to_string(fnv1a64(bytes)) + "\n";
  }
  return out;
}

PipelineConfig quick_config() {
  PipelineConfig cfg;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST(Rng, SplitMixReferenceSequence) {
  SplitMix64 rng(1234567);
  EXPECT_EQ(rng.next(), 6457827717110365317ull);
  EXPECT_EQ(rng.next(), 3203168211198807973ull);
  EXPECT_EQ(rng.next(), 9817491932198370423ull);
  EXPECT_EQ(rng.next(), 4593380528125082431ull);
  EXPECT_EQ(rng.next(), 16408922859458223821ull);
}

TEST(Rng, FnvReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(DeriveInstanceSeed, GoldenValues) {
  EXPECT_EQ(derive_instance_seed(0, ""), 12591593934349417548ull);
  EXPECT_EQ(derive_instance_seed(42, "q-000017"), 6764464634623294530ull);
}

TEST(DeriveInstanceSeed, NoCollisionsOverAMillionIds) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2'000'000);
  for (int i = 0; i < 1'000'000; ++i) seen.insert(derive_instance_seed(7, "id-" + std::to_string(i)));
  EXPECT_EQ(seen.size(), 1'000'000u);
  EXPECT_NE(derive_instance_seed(7, "abc"), derive_instance_seed(7, "abd"));
  EXPECT_NE(derive_instance_seed(7, "abc"), derive_instance_seed(8, "abc"));
}

TEST(DeriveSpanSeed, DistinctPerSpan) {
  const auto s = derive_instance_seed(1, "x");
  EXPECT_NE(derive_span_seed(s, 0), derive_span_seed(s, 1));
  EXPECT_EQ(derive_span_seed(s, 1), derive_span_seed(s, 1));
}

TEST(PipelineConfig, ValidationAndJson) {
  PipelineConfig cfg;
  cfg.rewrite_ratio = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cfg = {};
  cfg.seed = 9;
  cfg.position_mode = PositionMode::suffix;
  cfg.target_image_text_ratio = ModalityRatio{1, 2};
  cfg.render.latex_command_template = "pdflatex {input_tex}";
  cfg.distortion.box_sizes = {3};
  const auto j = pipeline_config_to_json(cfg);
  const auto back = pipeline_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(pipeline_config_to_json(back).dump(), j.dump());

  EXPECT_THROW(pipeline_config_from_json(nlohmann::json{{"sed", 1}}), std::invalid_argument);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json{{"render", {{"font", 1}}}}),
               std::invalid_argument);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json{{"position_mode", "centre"}}),
               std::invalid_argument);
  const auto layered = pipeline_config_from_json(nlohmann::json{{"rewrite_ratio", 0.25}}, back);
  EXPECT_EQ(layered.rewrite_ratio, 0.25);
  EXPECT_EQ(layered.seed, 9u);
}

TEST(TransformInstance, ShortInstanceBecomesOneImage) {
  const Instance in{"s", {ContentPart::text("What is $x+2$? Answer briefly.")}, "4"};
  const auto t = transform_instance(in, quick_config());
  ASSERT_EQ(t.instance.parts.size(), 1u);
  EXPECT_EQ(t.instance.parts[0].kind, PartKind::image);
  EXPECT_EQ(t.instance.answer, "4");
  ASSERT_EQ(t.carriers.size(), 1u);
  EXPECT_EQ(t.carriers[0].source_span, in.parts[0].value);
  EXPECT_EQ(t.carriers[0].route, Route::latex_fallback_text);
}

TEST(TransformInstance, LongInstanceMiddleIsTextImageText) {
  const std::string x = "One. Two. Three $a+b$ four. Five. Six $c$ end.";
  const Instance in{"l", {ContentPart::text(x)}, "ans"};
  const auto t = transform_instance(in, quick_config());
  ASSERT_EQ(t.instance.parts.size(), 3u);
  EXPECT_EQ(t.instance.parts[0], ContentPart::text("One. Two. Three "));
  EXPECT_EQ(t.instance.parts[1].kind, PartKind::image);
  EXPECT_EQ(t.instance.parts[2], ContentPart::text("$c$ end."));
  EXPECT_EQ(t.instance.parts[0].value + t.carriers[0].source_span + t.instance.parts[2].value, x);
  EXPECT_EQ(t.instance.answer, "ans");
}

TEST(TransformInstance, MultiSpanLayout) {
  const std::string x = "A. $a$ b. $b$ c. $c$ d. $d$ e. $e$ f.";
  PipelineConfig cfg = quick_config();
  cfg.position_mode = PositionMode::multi_span;
  const auto t = transform_instance(Instance{"m", {ContentPart::text(x)}, "a"}, cfg);
  ASSERT_EQ(t.carriers.size(), 2u);
  std::vector<PartKind> kinds;
  std::string rebuilt;
  std::size_t k = 0;
  for (const auto& p : t.instance.parts) {
    kinds.push_back(p.kind);
    rebuilt += p.kind == PartKind::text ? p.value : t.carriers[k++].source_span;
  }
  EXPECT_EQ(kinds, (std::vector<PartKind>{PartKind::text, PartKind::image, PartKind::text,
                                          PartKind::image, PartKind::text}));
  EXPECT_EQ(rebuilt, x);
}

TEST(TransformInstance, ReconstructionAcrossModesAndQuestions) {
  for (auto mode : {PositionMode::prefix, PositionMode::middle, PositionMode::suffix}) {
    PipelineConfig cfg = quick_config();
    cfg.position_mode = mode;
    for (int i = 0; i < 20; ++i) {
      const std::string x = lomo::testing::long_question(i);
      const auto t = transform_instance(Instance{"q" + std::to_string(i), {ContentPart::text(x)}, "a"}, cfg);
      std::string rebuilt;
      std::size_t k = 0;
      for (const auto& p : t.instance.parts)
        rebuilt += p.kind == PartKind::text ? p.value : t.carriers[k++].source_span;
      EXPECT_EQ(rebuilt, x);
      EXPECT_EQ(t.carriers.size(), 1u);
      for (const auto& c : t.carriers) EXPECT_LE(static_cast<long long>(c.width()) * c.height(), cfg.render.pixel_cap);
    }
  }
}

TEST(TransformInstance, DistortionToggleAndDeterminism) {
  const Instance in{"d", {ContentPart::text("Render me. Please.")}, "a"};
  PipelineConfig cfg = quick_config();
  cfg.distortion_enabled = false;
  const auto a = transform_instance(in, cfg);
  const auto b = transform_instance(in, cfg);
  EXPECT_FALSE(a.carriers[0].distortion.has_value());
  EXPECT_EQ(encode_png(a.carriers[0].image), encode_png(b.carriers[0].image));
  cfg.distortion_enabled = true;
  const auto c = transform_instance(in, cfg);
  const auto d = transform_instance(in, cfg);
  ASSERT_TRUE(c.carriers[0].distortion.has_value());
  EXPECT_EQ(*c.carriers[0].distortion, *d.carriers[0].distortion);
  EXPECT_EQ(encode_png(c.carriers[0].image), encode_png(d.carriers[0].image));
}

TEST(TransformInstance, RejectsImageBearing) {
  ScratchDir dir;
  EXPECT_THROW(transform_instance(Instance{"i", {ContentPart::image("x.png")}, "a"}, quick_config()),
               std::invalid_argument);
}

TEST(Curate, HundredAndHundredAtHalf) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 100, 100);
  const auto res = curate(in, dir / "out" / "o.jsonl", quick_config());
  const auto& c = res.manifest.counts;
  EXPECT_EQ(c.total, 200u);
  EXPECT_EQ(c.rewritten, 50u);
  EXPECT_EQ(c.text_only_kept, 50u);
  EXPECT_EQ(c.image_bearing_original, 100u);
  EXPECT_TRUE(c.identity_holds());

  const auto out = load_instances(dir / "out" / "o.jsonl");
  const auto src = load_instances(in);
  ASSERT_EQ(out.size(), src.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].id, src[i].id);
    EXPECT_EQ(out[i].answer, src[i].answer);
  }
  EXPECT_TRUE(fs::exists(manifest_path_for(dir / "out" / "o.jsonl")));
  EXPECT_TRUE(fs::exists(stats_path_for(dir / "out" / "o.jsonl")));
  EXPECT_FALSE(fs::exists(dir / "out" / "o.jsonl.incomplete"));

  // Every rewritten record points at PNGs carrying provenance.
  std::size_t pngs = 0;
  for (const auto& rec : res.manifest.per_instance_records) {
    if (rec.action != RecordAction::rewritten) continue;
    ASSERT_EQ(rec.image_paths.size(), rec.spans.size());
    for (const auto& p : rec.image_paths) {
      const auto decoded = read_png(dir / "out" / p);
      EXPECT_TRUE(decoded.metadata.count(kMetaSourceSpan));
      EXPECT_TRUE(decoded.metadata.count(kMetaRoute));
      ++pngs;
    }
  }
  EXPECT_GE(pngs, 50u);
  const auto round = read_manifest(manifest_path_for(dir / "out" / "o.jsonl"));
  EXPECT_EQ(round.counts.rewritten, 50u);
  EXPECT_EQ(round.seed, 42u);
}

TEST(Curate, RatioZeroIsIdentity) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 30, 10);
  PipelineConfig cfg = quick_config();
  cfg.rewrite_ratio = 0.0;
  curate(in, dir / "same_dir_out.jsonl", cfg);
  EXPECT_EQ(read_file(dir / "same_dir_out.jsonl"), read_file(in));
}

TEST(Curate, RatioOneRewritesEveryTextOnlyInstance) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 40, 10);
  PipelineConfig cfg = quick_config();
  cfg.rewrite_ratio = 1.0;
  const auto res = curate(in, dir / "o.jsonl", cfg);
  EXPECT_EQ(res.manifest.counts.rewritten, 40u);
  EXPECT_EQ(res.manifest.counts.text_only_kept, 0u);
  for (const auto& inst : load_instances(dir / "o.jsonl"))
    if (inst.id.starts_with("txt-")) EXPECT_FALSE(inst.is_text_only());
}

TEST(Curate, FloorOfRatioTimesTextOnly) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 7, 2);
  PipelineConfig cfg = quick_config();
  cfg.distortion_enabled = false;
  for (double r : {0.1, 0.3, 0.5, 0.99}) {
    cfg.rewrite_ratio = r;
    const auto res = curate(in, dir / "o.jsonl", cfg);
    EXPECT_EQ(res.manifest.counts.rewritten, static_cast<std::uint64_t>(std::floor(r * 7))) << r;
  }
}

TEST(Curate, ByteIdenticalAcrossWorkerCounts) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 60, 20);
  std::vector<std::string> prints;
  for (int workers : {1, 3, 8}) {
    PipelineConfig cfg = quick_config();
    cfg.workers = workers;
    cfg.batch_size = 7;
    const fs::path out = dir / ("w" + std::to_string(workers));
    curate(in, out / "o.jsonl", cfg);
    fs::remove(out / "o.stats.json");  // timings differ by design
    prints.push_back(dir_fingerprint(out));
  }
  EXPECT_EQ(prints[0], prints[1]);
  EXPECT_EQ(prints[0], prints[2]);
}

TEST(Curate, SelectionIgnoresBatchingAndIsSeeded) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 50, 0);
  PipelineConfig cfg = quick_config();
  cfg.distortion_enabled = false;
  auto rewritten_ids = [&](std::uint64_t seed, std::size_t batch) {
    cfg.seed = seed;
    cfg.batch_size = batch;
    std::set<std::string> ids;
    for (const auto& rec : curate(in, dir / "o.jsonl", cfg).manifest.per_instance_records)
      if (rec.action == RecordAction::rewritten) ids.insert(rec.id);
    return ids;
  };
  EXPECT_EQ(rewritten_ids(1, 1), rewritten_ids(1, 256));
  EXPECT_NE(rewritten_ids(1, 16), rewritten_ids(2, 16));
}

TEST(Curate, LenientSkipsMalformedLines) {
  ScratchDir dir;
  lomo::testing::write_file(dir / "in.jsonl",
                            R"({"id":"a","parts":[{"kind":"text","value":"x"}],"answer":"1"})"
                            "\nnot json\n"
                            R"({"id":"b","parts":[{"kind":"text","value":"y"}],"answer":"2"})"
                            "\n");
  PipelineConfig cfg = quick_config();
  EXPECT_THROW(curate(dir / "in.jsonl", dir / "o.jsonl", cfg), CorpusError);
  EXPECT_TRUE(fs::exists(dir / "o.jsonl.incomplete"));
  cfg.lenient = true;
  const auto res = curate(dir / "in.jsonl", dir / "o.jsonl", cfg);
  EXPECT_EQ(res.manifest.counts.total, 2u);
  ASSERT_EQ(res.manifest.malformed_lines.size(), 1u);
  EXPECT_EQ(res.manifest.malformed_lines[0].line, 2u);
  EXPECT_FALSE(fs::exists(dir / "o.jsonl.incomplete"));
}

TEST(Curate, UnwritableOutputFails) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 3, 1);
  lomo::testing::write_file(dir / "blocker", "file, not a directory");
  EXPECT_ANY_THROW(curate(in, dir / "blocker" / "o.jsonl", quick_config()));
}

TEST(RunStats, MergeIsAMonoid) {
  RunStats a, b, e;
  a.instances = 3;
  a.routes["text"] = 2;
  b.instances = 4;
  b.routes["text"] = 1;
  b.distortion_families["wave"] = 1;
  RunStats ab = a;
  ab.merge(b);
  RunStats ba = b;
  ba.merge(a);
  EXPECT_EQ(ab.to_json().dump(), ba.to_json().dump());
  RunStats ae = a;
  ae.merge(e);
  EXPECT_EQ(ae.to_json().dump(), a.to_json().dump());
  EXPECT_EQ(RunStats::from_json(nlohmann::json::parse(ab.to_json().dump())).to_json().dump(),
            ab.to_json().dump());
}

TEST(MatchModalityRatio, DownsamplesImageBearing) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 50, 150);
  const auto m = match_modality_ratio(in, dir / "r.jsonl", {1, 1}, 5);
  EXPECT_EQ(m.counts.image_bearing_original, 50u);
  EXPECT_EQ(m.counts.text_only_kept, 50u);
  EXPECT_EQ(m.extra["dropped"], 100);
  const auto out = load_instances(dir / "r.jsonl");
  ASSERT_EQ(out.size(), 100u);
  // Input order is preserved among kept instances.
  const auto src = load_instances(in);
  std::size_t j = 0;
  for (const auto& inst : out) {
    while (j < src.size() && src[j].id != inst.id) ++j;
    ASSERT_LT(j, src.size()) << inst.id;
    EXPECT_EQ(src[j], inst);
  }
}

TEST(MatchModalityRatio, AlreadyAtTargetIsFixedPoint) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 20, 20);
  match_modality_ratio(in, dir / "r.jsonl", {1, 1}, 5);
  EXPECT_EQ(read_file(dir / "r.jsonl"), read_file(in));
  const auto in2 = lomo::testing::write_mixed_corpus(dir.path(), "in2.jsonl", 10, 30);
  match_modality_ratio(in2, dir / "r2.jsonl", {6, 2}, 5);
  EXPECT_EQ(read_file(dir / "r2.jsonl"), read_file(in2));
}

TEST(MatchModalityRatio, UpsamplingIsRefused) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 50, 10);
  EXPECT_THROW(match_modality_ratio(in, dir / "r.jsonl", {3, 1}, 5), RatioError);
  const auto only_text = lomo::testing::write_mixed_corpus(dir.path(), "t.jsonl", 5, 0);
  EXPECT_THROW(match_modality_ratio(only_text, dir / "r.jsonl", {1, 1}, 5), RatioError);
}

TEST(MatchModalityRatio, DownsamplesTextOnly) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 90, 20);
  const auto m = match_modality_ratio(in, dir / "r.jsonl", {1, 2}, 5);
  EXPECT_EQ(m.counts.image_bearing_original, 20u);
  EXPECT_EQ(m.counts.text_only_kept, 40u);
  const auto again = match_modality_ratio(in, dir / "r2.jsonl", {1, 2}, 5);
  EXPECT_EQ(read_file(dir / "r.jsonl"), read_file(dir / "r2.jsonl"));
}
