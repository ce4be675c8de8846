#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>

#include "lomo/hsd.hpp"
#include "lomo/pipeline.hpp"
#include "support.hpp"

using namespace lomo;
using lomo::testing::ScratchDir;
using lomo::testing::read_file;
using lomo::testing::write_file;

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run lomo_run(const std::string& args, const ScratchDir& dir, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + " " + quote(LOMO_CLI_PATH) + " " + args + " 2>" + quote(err.string());
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err);
  return r;
}

void write_small_hsd(const fs::path& path) {
  HiddenStateDump d;
  d.n_layers = 2;
  d.hidden_dim = 2;
  for (int s = 0; s < 3; ++s) {
    DumpSample smp;
    smp.id = "s" + std::to_string(s);
    smp.roles = {TokenRole::textual, TokenRole::textual, TokenRole::visual, TokenRole::visual};
    for (int l = 0; l < 2; ++l)
      for (int t = 0; t < 4; ++t) {
        smp.states.push_back(static_cast<float>(t + s + 1));
        smp.states.push_back(static_cast<float>(l * (t % 2) + 1));
      }
    d.samples.push_back(std::move(smp));
  }
  write_hsd(path, d);
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  ScratchDir dir;
  EXPECT_EQ(lomo_run("curate --out x.jsonl", dir).code, 2);
  EXPECT_EQ(lomo_run("", dir).code, 2);
  EXPECT_EQ(lomo_run("frobnicate", dir).code, 2);
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 2, 0);
  EXPECT_EQ(lomo_run("curate --in " + in.string() + " --out o.jsonl --rewrite-ratio 1.5", dir).code, 2);
  EXPECT_EQ(lomo_run("curate --in " + in.string() + " --out o.jsonl --position-mode centre", dir).code, 2);
  EXPECT_EQ(lomo_run("ratio-match --in " + in.string() + " --out o.jsonl --target 1-1", dir).code, 2);
  EXPECT_EQ(lomo_run("metrics decomp --px 0.5,x --ptx 1 --answer 0", dir).code, 2);
  EXPECT_EQ(lomo_run("--help", dir).code, 0);
}

TEST(Cli, InvalidWorkerEnvIsUsageError) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 2, 0);
  const auto r = lomo_run("curate --in " + in.string() + " --out " + (dir / "o.jsonl").string(), dir,
                          "LOMO_WORKERS=zero");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("LOMO_WORKERS"), std::string::npos);
}

TEST(Cli, CurateWritesManifestAndStats) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 10, 4);
  const auto out = dir / "out" / "o.jsonl";
  const auto r = lomo_run("curate --in " + in.string() + " --out " + out.string() +
                              " --seed 3 --rewrite-ratio 0.5 --workers 2",
                          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_manifest(manifest_path_for(out));
  EXPECT_EQ(m.rewrite_ratio, 0.5);
  EXPECT_EQ(m.seed, 3u);
  EXPECT_EQ(m.counts.rewritten, 5u);
  EXPECT_TRUE(fs::exists(stats_path_for(out)));
}

TEST(Cli, ConfigFileThenEnvThenFlags) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 8, 0);
  write_file(dir / "cfg.json", R"({"seed": 11, "rewrite_ratio": 0.25, "workers": 1})");
  const auto out = dir / "o.jsonl";
  auto r = lomo_run("curate --in " + in.string() + " --out " + out.string() + " --config " +
                        (dir / "cfg.json").string() + " --no-distortion",
                    dir, "LOMO_WORKERS=3");
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = read_manifest(manifest_path_for(out));
  EXPECT_EQ(m.seed, 11u);
  EXPECT_EQ(m.counts.rewritten, 2u);
  auto stats = nlohmann::json::parse(read_file(stats_path_for(out)));
  EXPECT_EQ(stats["workers"], 3);

  r = lomo_run("curate --in " + in.string() + " --out " + out.string() + " --config " +
                   (dir / "cfg.json").string() + " --rewrite-ratio 1 --workers 2",
               dir, "LOMO_WORKERS=3");
  ASSERT_EQ(r.code, 0) << r.err;
  m = read_manifest(manifest_path_for(out));
  EXPECT_EQ(m.counts.rewritten, 8u);
  stats = nlohmann::json::parse(read_file(stats_path_for(out)));
  EXPECT_EQ(stats["workers"], 2);

  write_file(dir / "bad.json", R"({"seeed": 1})");
  r = lomo_run("curate --in " + in.string() + " --out " + out.string() + " --config " +
                   (dir / "bad.json").string(),
               dir);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, LatexCommandFromEnvironment) {
  ScratchDir dir;
  {
    CorpusWriter w(dir / "in.jsonl");
    w.write(Instance{"m", {ContentPart::text("Find $x^2$ now.")}, "a"});
  }
  const auto out = dir / "o.jsonl";
  auto r = lomo_run("curate --in " + (dir / "in.jsonl").string() + " --out " + out.string() +
                        " --rewrite-ratio 1 --no-distortion",
                    dir, "LOMO_LATEX_CMD=false");
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = read_manifest(manifest_path_for(out));
  EXPECT_EQ(m.per_instance_records[0].spans.at(0).at("route"), "latex_fallback_text");

  r = lomo_run("curate --in " + (dir / "in.jsonl").string() + " --out " + out.string() +
                   " --rewrite-ratio 1 --no-distortion --latex-cmd " +
                   quote(std::string(LOMO_FAKE_LATEX) + " {input_tex} {output_png}"),
               dir, "LOMO_LATEX_CMD=false");
  ASSERT_EQ(r.code, 0) << r.err;
  m = read_manifest(manifest_path_for(out));
  EXPECT_EQ(m.per_instance_records[0].spans.at(0).at("route"), "latex");
}

TEST(Cli, MissingInputIsRuntimeError) {
  ScratchDir dir;
  const auto r = lomo_run("curate --in " + (dir / "nope.jsonl").string() + " --out " +
                              (dir / "o.jsonl").string(),
                          dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("lomo: ", 0), 0u);
}

TEST(Cli, MetricsMirAndPcd) {
  ScratchDir dir;
  write_small_hsd(dir / "d.hsd");
  auto r = lomo_run("metrics mir --hsd " + (dir / "d.hsd").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["per_layer_fid"].size(), 2u);
  EXPECT_TRUE(j["mir"].is_number());

  r = lomo_run("metrics pcd --hsd " + (dir / "d.hsd").string() + " --layer 0 --bins 2 --out " +
                   (dir / "pcd.json").string(),
               dir);
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(read_file(dir / "pcd.json"));
  EXPECT_EQ(j["layer"], 0);
  EXPECT_EQ(j["samples"].size(), 3u);
  EXPECT_EQ(j["pcd_histogram"]["binning"], "equal_count");

  r = lomo_run("metrics pcd --hsd " + (dir / "d.hsd").string() + " --layer 5", dir);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, CorruptDumpIsRejected) {
  ScratchDir dir;
  write_small_hsd(dir / "d.hsd");
  std::string bytes = read_file(dir / "d.hsd");
  bytes[0] = 'X';
  write_file(dir / "bad.hsd", bytes);
  auto r = lomo_run("metrics mir --hsd " + (dir / "bad.hsd").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not an HSD1 file"), std::string::npos);
  write_file(dir / "short.hsd", read_file(dir / "d.hsd").substr(0, 30));
  r = lomo_run("metrics mir --hsd " + (dir / "short.hsd").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("truncated"), std::string::npos);
}

TEST(Cli, Decomposition) {
  ScratchDir dir;
  auto r = lomo_run("metrics decomp --px 0.7,0.2,0.1 --ptx 0.5,0.3,0.2 --answer 0", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["kl_residual"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(j["split_residual"].get<double>(), 0.0, 1e-12);
  r = lomo_run("metrics decomp --px 0.7,0.2 --ptx 0.5,0.3,0.2 --answer 0", dir);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, StatsTextAndJsonAgree) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 6, 2);
  const auto out = dir / "o.jsonl";
  ASSERT_EQ(lomo_run("curate --in " + in.string() + " --out " + out.string(), dir).code, 0);
  const auto manifest = manifest_path_for(out).string();
  const auto text = lomo_run("stats --manifest " + manifest, dir);
  ASSERT_EQ(text.code, 0) << text.err;
  EXPECT_NE(text.out.find("count identity: OK"), std::string::npos);
  EXPECT_NE(text.out.find("instances_per_second"), std::string::npos);

  const auto js = lomo_run("stats --manifest " + manifest + " --format json", dir);
  ASSERT_EQ(js.code, 0);
  const auto j = nlohmann::json::parse(js.out);
  EXPECT_EQ(j["count_identity"], "OK");
  for (const char* key : {"total", "rewritten", "text_only_kept", "image_bearing_original"}) {
    const std::string needle = std::string(key);
    const auto pos = text.out.find("  " + needle + " ");
    ASSERT_NE(pos, std::string::npos) << key;
    const auto line_end = text.out.find('\n', pos);
    const auto line = text.out.substr(pos, line_end - pos);
    EXPECT_EQ(std::stoull(line.substr(line.find_last_of(' ') + 1)), j["counts"][key].get<std::uint64_t>())
        << key;
  }
  std::uint64_t routes = 0;
  for (const auto& [k, v] : j["route_histogram"].items()) routes += v.get<std::uint64_t>();
  EXPECT_EQ(routes, 3u);
}

TEST(Cli, StatsFlagsViolatedIdentity) {
  ScratchDir dir;
  CurationManifest m;
  m.counts.total = 10;
  m.counts.rewritten = 3;
  m.counts.text_only_kept = 3;
  m.counts.image_bearing_original = 3;
  write_manifest(dir / "x.manifest.json", m);
  const auto r = lomo_run("stats --manifest " + (dir / "x.manifest.json").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("VIOLATED"), std::string::npos);
  EXPECT_EQ(lomo_run("stats --manifest " + (dir / "missing.json").string(), dir).code, 2);
}

TEST(Cli, EvalRenderAndRatioMatch) {
  ScratchDir dir;
  const auto in = lomo::testing::write_mixed_corpus(dir.path(), "in.jsonl", 12, 4);
  auto r = lomo_run("eval-render --in " + in.string() + " --out " + (dir / "e.jsonl").string() +
                        " --pixel-cap 50000",
                    dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["rendered"], 16);
  r = lomo_run("ratio-match --in " + in.string() + " --out " + (dir / "r.jsonl").string() + " --target 1:2",
               dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_instances(dir / "r.jsonl").size(), 12u);
  r = lomo_run("ratio-match --in " + in.string() + " --out " + (dir / "r.jsonl").string() + " --target 5:1",
               dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("upsampling"), std::string::npos);
}
