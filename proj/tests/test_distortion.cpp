#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "lomo/distortion.hpp"
#include "lomo/kernels.hpp"
#include "lomo/renderer.hpp"

using namespace lomo;

namespace {

Bitmap gradient_fixture(int w, int h) {
  Bitmap img(w, h, kWhite);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, Rgb{static_cast<std::uint8_t>((x * 37 + y * 11) % 256),
                        static_cast<std::uint8_t>((x * 5 + y * 53) % 256),
                        static_cast<std::uint8_t>((x * y) % 256)});
  return img;
}

Bitmap text_fixture() { return render_text("The quick brown fox. $a^2$", RenderConfig{}).image; }

}  // namespace

TEST(Rotate, NinetyIsExactPermutation) {
  const Bitmap in = gradient_fixture(7, 4);
  const Bitmap out = rotate(in, 90.0);
  ASSERT_EQ(out.width(), 4);
  ASSERT_EQ(out.height(), 7);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(out.at(y, 7 - 1 - x), in.at(x, y));
}

TEST(Rotate, QuarterTurnsCompose) {
  const Bitmap in = gradient_fixture(9, 5);
  EXPECT_EQ(rotate(rotate(in, 90.0), 90.0), rotate(in, 180.0));
  EXPECT_EQ(rotate(rotate(in, 180.0), 90.0), rotate(in, 270.0));
  EXPECT_EQ(rotate(rotate(in, 270.0), 90.0), in);
  EXPECT_EQ(rotate(in, 360.0), in);
  EXPECT_EQ(rotate(in, -90.0), rotate(in, 270.0));
}

TEST(Rotate, ZeroIsIdentity) {
  const Bitmap in = gradient_fixture(13, 8);
  EXPECT_EQ(encode_png(rotate(in, 0.0)), encode_png(in));
}

TEST(Rotate, SmallAngleExtentMatchesBoundingBox) {
  Bitmap line_art(300, 60, kWhite);
  for (int x = 10; x < 290; ++x) line_art.set(x, 30, kBlack);
  const Bitmap out = rotate(line_art, 3.5);
  // 300 cos + 60 sin = 303.10, 300 sin + 60 cos = 78.20
  EXPECT_EQ(out.width(), 304);
  EXPECT_EQ(out.height(), 79);
  const double rad = 3.5 * std::numbers::pi / 180.0;
  EXPECT_NEAR(out.width(), 300 * std::cos(rad) + 60 * std::sin(rad), 1.0);
  EXPECT_NEAR(out.height(), 300 * std::sin(rad) + 60 * std::cos(rad), 1.0);
}

TEST(Rotate, ExtentFormulaOverAngles) {
  for (double deg = -30.0; deg <= 30.0; deg += 0.75) {
    const auto [w, h] = rotated_extent(120, 45, deg);
    const double r = deg * std::numbers::pi / 180.0;
    const double ew = 120 * std::abs(std::cos(r)) + 45 * std::abs(std::sin(r));
    const double eh = 120 * std::abs(std::sin(r)) + 45 * std::abs(std::cos(r));
    EXPECT_GE(w, ew - 1e-6);
    EXPECT_LT(w, ew + 1.0);
    EXPECT_GE(h, eh - 1e-6);
    EXPECT_LT(h, eh + 1.0);
  }
}

TEST(Blur, UniformImageUnchanged) {
  const Bitmap gray(20, 15, Rgb{128, 128, 128});
  EXPECT_EQ(blur(gray, {BlurKind::gaussian, 2.0}), gray);
  EXPECT_EQ(blur(gray, {BlurKind::box, 1.0, 5}), gray);
  EXPECT_EQ(blur(gray, {BlurKind::motion, 1.0, 3, 15.0, 37.0}), gray);
}

TEST(Blur, BoxThreeMatchesHandConvolution) {
  const int v[5][5] = {{0, 10, 20, 30, 40},
                       {50, 60, 70, 80, 90},
                       {100, 110, 120, 130, 140},
                       {150, 160, 170, 180, 190},
                       {200, 210, 220, 230, 255}};
  Bitmap in(5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const auto c = static_cast<std::uint8_t>(v[y][x]);
      in.set(x, y, {c, c, c});
    }
  const Bitmap out = blur(in, {BlurKind::box, 1.0, 3});
  auto clamp = [](int i) { return std::clamp(i, 0, 4); };
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) sum += v[clamp(y + dy)][clamp(x + dx)];
      // sum / 9 is never exactly halfway between integers.
      const int expected = static_cast<int>(std::lround(sum / 9.0));
      EXPECT_EQ(out.at(x, y).r, expected) << x << "," << y;
    }
  // Top-left corner by hand: rows {0,0,50},{0,0,50},{10,10,60} summed = 180 -> 20.
  EXPECT_EQ(out.at(0, 0).r, 20);
}

TEST(Blur, GaussianTapsTable) {
  const auto taps = gaussian_taps(1.0);
  const std::array<double, 7> expected = {0.004433048175243745, 0.054005582622414484,
                                          0.2420362293761143,   0.3990502796524549,
                                          0.2420362293761143,   0.054005582622414484,
                                          0.004433048175243745};
  ASSERT_EQ(taps.size(), expected.size());
  for (std::size_t i = 0; i < taps.size(); ++i) EXPECT_NEAR(taps[i], expected[i], 1e-7);
}

TEST(Blur, GaussianImpulseRatio) {
  Plane impulse(21, 21, 0.0f);
  impulse.at(10, 10) = 1.0f;
  const auto taps = gaussian_taps(1.0);
  const Plane out = kernels::convolve_separable(impulse, taps, taps);
  const double ratio = out.at(10, 10) / out.at(11, 10);
  EXPECT_NEAR(ratio, std::exp(0.5), 1e-3);
  EXPECT_NEAR(out.at(10, 10) / out.at(11, 11), std::exp(1.0), 1e-3);
}

TEST(Blur, OutOfRangeParametersThrow) {
  const Bitmap img(10, 10, kWhite);
  EXPECT_THROW(blur(img, {BlurKind::gaussian, 0.1}), std::invalid_argument);
  EXPECT_THROW(blur(img, {BlurKind::gaussian, 2.5}), std::invalid_argument);
  EXPECT_THROW(blur(img, {BlurKind::box, 1.0, 4}), std::invalid_argument);
  EXPECT_THROW(blur(img, {BlurKind::motion, 1.0, 3, 4.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(blur(img, {BlurKind::motion, 1.0, 3, 6.0, 180.0}), std::invalid_argument);
}

TEST(Blur, PreservesDimensions) {
  const Bitmap img = text_fixture();
  for (const BlurParams& p : {BlurParams{BlurKind::gaussian, 1.3}, BlurParams{BlurKind::box, 1, 5},
                              BlurParams{BlurKind::motion, 1, 3, 9.0, 120.0}}) {
    const Bitmap out = blur(img, p);
    EXPECT_EQ(out.width(), img.width());
    EXPECT_EQ(out.height(), img.height());
  }
}

TEST(Blur, MotionKernelIsNormalized) {
  for (double deg : {0.0, 30.0, 90.0, 135.0}) {
    const Plane k = motion_kernel(9.0, deg);
    double sum = 0;
    for (float v : k.data) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_EQ(k.width % 2, 1);
    EXPECT_EQ(k.height % 2, 1);
  }
}

TEST(ShadowOrStain, LeftEdgeHalfStrength) {
  const Bitmap gray(50, 10, Rgb{200, 200, 200});
  ShadowOrStainParams p;
  p.shadow = true;
  p.edge = Edge::left;
  p.strength = 0.5;
  const Bitmap out = shadow_or_stain(gray, p);
  for (int y = 0; y < 10; ++y) {
    EXPECT_EQ(luminance(out.at(0, y)), luminance(gray.at(0, y)) / 2);
    EXPECT_EQ(out.at(49, y), gray.at(49, y));
  }
  for (int x = 1; x < 50; ++x) EXPECT_GE(luminance(out.at(x, 0)), luminance(out.at(x - 1, 0)));
}

TEST(ShadowOrStain, StrengthIsClampedToMinimum) {
  const Bitmap gray(40, 8, Rgb{200, 200, 200});
  for (Edge e : {Edge::left, Edge::right, Edge::top, Edge::bottom}) {
    ShadowOrStainParams p;
    p.edge = e;
    p.strength = 0.0;
    const Bitmap out = shadow_or_stain(gray, p);
    int max_drop = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 40; ++x)
        max_drop = std::max(max_drop, luminance(gray.at(x, y)) - luminance(out.at(x, y)));
    // Clamped up to 0.2: the darkest column drops by 20 % of 200.
    EXPECT_EQ(max_drop, 40);
  }
}

TEST(ShadowOrStain, AllBlackUnchanged) {
  const Bitmap black(30, 30, kBlack);
  ShadowOrStainParams shadow;
  EXPECT_EQ(shadow_or_stain(black, shadow), black);
  ShadowOrStainParams stain;
  stain.shadow = false;
  stain.stains = {Stain{0.5, 0.5, 0.4, 0.4, 0.3}};
  EXPECT_EQ(shadow_or_stain(black, stain), black);
}

TEST(ShadowOrStain, NeverBrightensOnSampledParameters) {
  const Bitmap img = gradient_fixture(64, 48);
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    const auto choice = sample_distortion(seed);
    if (choice.family() != DistortionFamily::shadow_or_stain) continue;
    const Bitmap out = apply_choice(img, choice);
    ASSERT_EQ(out.width(), img.width());
    ASSERT_EQ(out.height(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        ASSERT_LE(luminance(out.at(x, y)), luminance(img.at(x, y))) << seed;
    ++checked;
  }
}

TEST(Wave, ZeroAmplitudeIsIdentity) {
  const Bitmap img = gradient_fixture(33, 17);
  EXPECT_EQ(wave(img, 0.0, 100.0), img);
}

TEST(Wave, HorizontalLineFollowsSine) {
  Bitmap img(200, 40, kWhite);
  const int y0 = 20;
  for (int x = 0; x < 200; ++x) img.set(x, y0, kBlack);
  const Bitmap out = wave(img, 4.0, 100.0);
  ASSERT_EQ(out.height(), 40 + 8);
  ASSERT_EQ(out.width(), 200);
  for (int x = 0; x < 200; ++x) {
    int darkest = 0;
    for (int y = 1; y < out.height(); ++y)
      if (luminance(out.at(x, y)) < luminance(out.at(x, darkest))) darkest = y;
    const double expected = y0 + 4 + 4.0 * std::sin(2.0 * std::numbers::pi * x / 100.0);
    EXPECT_NEAR(darkest, expected, 1.0) << "column " << x;
  }
}

TEST(Wave, HeightGrowsByTwiceCeilAmplitude) {
  const Bitmap img(50, 30, kWhite);
  EXPECT_EQ(wave(img, 2.0, 80.0).height(), 34);
  EXPECT_EQ(wave(img, 5.5, 150.0).height(), 42);
  EXPECT_EQ(wave(img, 6.0, 200.0).height(), 42);
}

TEST(SampleDistortion, ParametersInsideRanges) {
  const DistortionRanges r;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    const auto c = sample_distortion(seed, r);
    EXPECT_EQ(c.seed, seed);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, RotateParams>) {
            if (p.large_angle)
              EXPECT_TRUE(p.degrees == 90 || p.degrees == 180 || p.degrees == 270);
            else
              EXPECT_LE(std::abs(p.degrees), r.small_angle_max);
          } else if constexpr (std::is_same_v<T, BlurParams>) {
            if (p.kind == BlurKind::gaussian) {
              EXPECT_GE(p.sigma, r.gaussian_sigma_min);
              EXPECT_LE(p.sigma, r.gaussian_sigma_max);
            } else if (p.kind == BlurKind::box) {
              EXPECT_TRUE(p.box_size == 3 || p.box_size == 5);
            } else {
              EXPECT_GE(p.motion_length, r.motion_length_min);
              EXPECT_LE(p.motion_length, r.motion_length_max);
              EXPECT_GE(p.motion_degrees, 0.0);
              EXPECT_LT(p.motion_degrees, 180.0);
            }
          } else if constexpr (std::is_same_v<T, ShadowOrStainParams>) {
            if (p.shadow) {
              EXPECT_GE(p.strength, r.shadow_strength_min);
              EXPECT_LE(p.strength, r.shadow_strength_max);
            } else {
              EXPECT_GE(static_cast<int>(p.stains.size()), r.stain_count_min);
              EXPECT_LE(static_cast<int>(p.stains.size()), r.stain_count_max);
              for (const auto& s : p.stains) {
                EXPECT_GE(s.alpha, r.stain_alpha_min);
                EXPECT_LE(s.alpha, r.stain_alpha_max);
              }
            }
          } else if constexpr (std::is_same_v<T, WaveParams>) {
            EXPECT_GE(p.amplitude, r.wave_amplitude_min);
            EXPECT_LE(p.amplitude, r.wave_amplitude_max);
            EXPECT_GE(p.wavelength, r.wavelength_min);
            EXPECT_LE(p.wavelength, r.wavelength_max);
          }
        },
        c.params);
  }
}

TEST(SampleDistortion, FamilyFrequenciesAreUniform) {
  std::array<int, kDistortionFamilyCount> counts{};
  const int n = 10'000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<int>(sample_distortion(i).family())];
  double chi2 = 0.0;
  for (int c : counts) {
    EXPECT_NEAR(c / static_cast<double>(n), 0.2, 0.02);
    chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
  }
  // 99th percentile of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi2, 13.277);
}

TEST(SampleDistortion, RotateSplitsLargeAndSmallAngles) {
  int large = 0, total = 0;
  for (std::uint64_t seed = 0; total < 4000; ++seed) {
    const auto c = sample_distortion(seed);
    if (c.family() != DistortionFamily::rotate) continue;
    ++total;
    large += std::get<RotateParams>(c.params).large_angle;
  }
  EXPECT_NEAR(large / static_cast<double>(total), 0.5, 0.03);
}

TEST(ApplyDistortion, SeedDeterminism) {
  RenderedCarrier c;
  c.image = text_fixture();
  for (std::uint64_t seed : {1ull, 2ull, 99ull, 123456789ull}) {
    const auto a = apply_distortion(c, seed);
    const auto b = apply_distortion(c, seed);
    EXPECT_EQ(encode_png(a.image), encode_png(b.image));
    ASSERT_TRUE(a.distortion.has_value());
    EXPECT_EQ(*a.distortion, *b.distortion);
    EXPECT_EQ(a.distortion->seed, seed);
  }
}

TEST(ApplyDistortion, CleanDrawKeepsBytes) {
  RenderedCarrier c;
  c.image = text_fixture();
  std::uint64_t seed = 0;
  while (sample_distortion(seed).family() != DistortionFamily::clean) ++seed;
  const auto out = apply_distortion(c, seed);
  EXPECT_EQ(encode_png(out.image), encode_png(c.image));
  EXPECT_EQ(out.distortion->family(), DistortionFamily::clean);
}

TEST(DistortionChoice, JsonNamesFamily) {
  std::uint64_t seed = 0;
  while (sample_distortion(seed).family() != DistortionFamily::wave) ++seed;
  const auto j = to_json(sample_distortion(seed));
  EXPECT_EQ(j["family"], "wave");
  EXPECT_EQ(j["seed"], seed);
}
