#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "filmrestore/synthdata.hpp"

using namespace filmrestore;
namespace fs = std::filesystem;

static FrameVolume constant_clip(int64_t n, int64_t h, int64_t w, double v) {
    FrameVolume c(n, h, w, 3);
    std::fill(c.data.v.begin(), c.data.v.end(), v);
    return c;
}

TEST_CASE("degrade_quality: near-identity settings stay close") {
    ToyClip toy = generate_toy_clip(1, 2, 32, 32);
    DegradeConfig cfg;
    cfg.rescale      = 1.0;
    cfg.jpeg_quality = 95;
    cfg.grain        = 0.0;
    FrameVolume out = degrade_quality(toy.clip, cfg, 0);
    CHECK(max_abs_diff(out.data, toy.clip.data) <= 0.05);
    CHECK(out.data.shape == toy.clip.data.shape);
}

TEST_CASE("degrade_quality: grain variance matches sigma^2") {
    FrameVolume gray = constant_clip(4, 96, 96, 0.5);  // > 1e5 pixels
    DegradeConfig cfg;
    cfg.jpeg_quality = 95;
    cfg.grain        = 0.08;
    FrameVolume out = degrade_quality(gray, cfg, 42);
    double mean = 0;
    for (double v : out.data.v) mean += v;
    mean /= out.data.numel();
    double var = 0;
    for (double v : out.data.v) var += (v - mean) * (v - mean);
    var /= out.data.numel();
    CHECK(var > 0.8 * 0.08 * 0.08);
    CHECK(var < 1.2 * 0.08 * 0.08);
}

TEST_CASE("degrade_quality: downscale spreads a one-pixel line") {
    FrameVolume line = constant_clip(1, 32, 32, 0.0);
    for (int64_t y = 0; y < 32; ++y)
        for (int64_t c = 0; c < 3; ++c) line.data.at4(0, y, 16, c) = 1.0;
    DegradeConfig cfg;
    cfg.rescale      = 0.5;
    cfg.jpeg_quality = 100;
    FrameVolume out = degrade_quality(line, cfg, 0);
    int wide_columns = 0;
    for (int64_t x = 0; x < 32; ++x)
        if (out.data.at4(0, 16, x, 0) > 0.05) ++wide_columns;
    CHECK(wide_columns >= 2);
}

TEST_CASE("degrade_quality: config validation") {
    FrameVolume c = constant_clip(1, 8, 8, 0.5);
    DegradeConfig bad;
    bad.rescale = 1.5;
    CHECK_THROWS_AS(degrade_quality(c, bad), ConfigError);
    bad.rescale = 0.0;
    CHECK_THROWS_AS(degrade_quality(c, bad), ConfigError);
    bad.rescale = 1.0;
    bad.grain   = -0.1;
    CHECK_THROWS_AS(degrade_quality(c, bad), ConfigError);
}

TEST_CASE("colorize_and_composite: identity, full opacity, convex blend") {
    ToyClip toy = generate_toy_clip(2, 2, 16, 16);
    FrameVolume same = colorize_and_composite(toy.clip, {});
    CHECK(max_abs_diff(same.data, toy.clip.data) == 0.0);

    DefectTemplate full;
    full.alpha = Tensor<double>::full({2, 16, 16}, 1.0);
    full.color = {1.0, 1.0, 1.0};
    FrameVolume white = colorize_and_composite(toy.clip, {full});
    for (double v : white.data.v) CHECK(v == 1.0);

    DefectTemplate one;
    one.alpha = Tensor<double>::zeros({1, 4, 4});
    one.alpha.at3(0, 1, 2) = 0.5;
    one.color = {1.0, 1.0, 1.0};
    FrameVolume base = constant_clip(1, 4, 4, 0.2);
    FrameVolume out  = colorize_and_composite(base, {one});
    CHECK(out.data.at4(0, 1, 2, 0) == doctest::Approx(0.6).epsilon(1e-12));
    // untouched pixels are bit-exact
    CHECK(out.data.at4(0, 0, 0, 0) == 0.2);

    // convexity: min(clip,color) <= out <= max(clip,color)
    ToyClip t2 = generate_toy_clip(3, 2, 16, 16);
    DefectTemplate d;
    Pcg32 rng(5);
    d.alpha = Tensor<double>::zeros({2, 16, 16});
    for (auto& a : d.alpha.v) a = rng.uniform();
    d.color = {0.9, 0.1, 0.5};
    FrameVolume blended = colorize_and_composite(t2.clip, {d});
    for (int64_t n = 0; n < 2; ++n)
        for (int64_t y = 0; y < 16; ++y)
            for (int64_t x = 0; x < 16; ++x)
                for (int64_t c = 0; c < 3; ++c) {
                    double lo = std::min(t2.clip.data.at4(n, y, x, c), d.color[static_cast<size_t>(c)]);
                    double hi = std::max(t2.clip.data.at4(n, y, x, c), d.color[static_cast<size_t>(c)]);
                    double v  = blended.data.at4(n, y, x, c);
                    CHECK(v >= lo - 1e-12);
                    CHECK(v <= hi + 1e-12);
                }
}

TEST_CASE("compute_defect_mask: boundary is a strict inequality") {
    Tensor<uint8_t> empty = compute_defect_mask({}, 2, 8, 8);
    for (auto m : empty.v) CHECK(m == 0);

    DefectTemplate t;
    t.alpha = Tensor<double>::full({2, 8, 8}, 1.0);
    Tensor<uint8_t> ones = compute_defect_mask({t}, 2, 8, 8, 0.02);
    for (auto m : ones.v) CHECK(m == 1);

    t.alpha = Tensor<double>::full({2, 8, 8}, 0.02);  // exactly threshold
    Tensor<uint8_t> zero = compute_defect_mask({t}, 2, 8, 8, 0.02);
    for (auto m : zero.v) CHECK(m == 0);

    CHECK_THROWS_AS(compute_defect_mask({}, 1, 4, 4, 0.0), ConfigError);
}

TEST_CASE("synthesize_sample: identity settings, determinism, mask union oracle") {
    ToyClip toy = generate_toy_clip(7, 6, 32, 32);
    SynthConfig cfg;
    cfg.defects_min = cfg.defects_max = 0;
    cfg.rescale_min = cfg.rescale_max = 1.0;
    cfg.jpeg_min = cfg.jpeg_max = 100;
    cfg.grain_min = cfg.grain_max = 0.0;
    DefectSample s = synthesize_sample(toy.clip, 3, cfg);
    CHECK(max_abs_diff(s.degraded.data, toy.clip.data) < 0.01);
    for (auto m : s.mask.v) CHECK(m == 0);

    SynthConfig full;  // defaults: defects + mild degradation
    DefectSample a = synthesize_sample(toy.clip, 99, full);
    DefectSample b = synthesize_sample(toy.clip, 99, full);
    CHECK(max_abs_diff(a.degraded.data, b.degraded.data) == 0.0);
    CHECK(a.caption == b.caption);
    for (size_t i = 0; i < a.mask.v.size(); ++i) CHECK(a.mask.v[i] == b.mask.v[i]);

    // mask support equals the brute-force union of thresholded template supports
    SynthDetail detail;
    DefectSample c = synthesize_sample(toy.clip, 7, full, &detail);
    REQUIRE(!detail.templates.empty());
    for (int64_t i = 0; i < c.mask.numel(); ++i) {
        double amax = 0;
        for (const auto& t : detail.templates) amax = std::max(amax, t.alpha[i]);
        CHECK(static_cast<int>(c.mask[i]) == (amax > full.mask_threshold ? 1 : 0));
    }

    // defects only touch masked pixels: unmasked degraded == pure quality degradation
    FrameVolume quality_only = degrade_quality(toy.clip, detail.degrade, 7);
    for (int64_t n = 0; n < c.mask.dim(0); ++n)
        for (int64_t y = 0; y < c.mask.dim(1); ++y)
            for (int64_t x = 0; x < c.mask.dim(2); ++x)
                if (!c.mask.at3(n, y, x))
                    for (int64_t ch = 0; ch < 3; ++ch)
                        CHECK(c.degraded.data.at4(n, y, x, ch) ==
                              quality_only.data.at4(n, y, x, ch));

    CHECK_THROWS_AS(synthesize_sample(generate_toy_clip(1, 2, 16, 16).clip, 0, full), InputError);
}

TEST_CASE("write_sample / read_sample round trip and corruption") {
    fs::path dir = fs::temp_directory_path() / "fr_sample_test";
    fs::remove_all(dir);
    ToyClip toy = generate_toy_clip(11, 5, 24, 24);
    DefectSample s = synthesize_sample(toy.clip, 4, SynthConfig{});
    write_sample(s, dir);

    DefectSample r = read_sample(dir);
    CHECK(r.caption == s.caption);
    CHECK(r.camera_angle == s.camera_angle);
    CHECK(r.seed == s.seed);
    CHECK(max_abs_diff(r.degraded.data, s.degraded.data) <= 1.0 / 255 + 1e-12);
    CHECK(max_abs_diff(r.clean.data, s.clean.data) <= 1.0 / 255 + 1e-12);
    REQUIRE(r.mask.shape == s.mask.shape);
    for (size_t i = 0; i < s.mask.v.size(); ++i) CHECK(r.mask.v[i] == s.mask.v[i]);

    fs::remove(dir / "mask" / "000002.pbm");
    CHECK_THROWS_AS(read_sample(dir), DatasetError);
    fs::remove(dir / "manifest.txt");
    CHECK_THROWS_AS(read_sample(dir), DatasetError);
    fs::remove_all(dir);
}

TEST_CASE("generate_toy_clip: bounded, deterministic, in-range") {
    ToyClip a = generate_toy_clip(21, 4, 32, 48);
    ToyClip b = generate_toy_clip(21, 4, 32, 48);
    CHECK(max_abs_diff(a.clip.data, b.clip.data) == 0.0);
    CHECK(a.clip.frames() == 4);
    CHECK(a.clip.width() == 48);
    a.clip.validate();  // throws unless all values in [0,1]
    CHECK(!a.description.empty());
}

TEST_CASE("defect templates: sparse support and kinds") {
    Pcg32 rng(17);
    for (int k = 0; k < 5; ++k) {
        DefectTemplate t = generate_defect_template(static_cast<DefectKind>(k), 6, 48, 48, rng);
        for (int64_t n = 0; n < 6; ++n) {
            int64_t nonzero = 0;
            for (int64_t y = 0; y < 48; ++y)
                for (int64_t x = 0; x < 48; ++x)
                    if (t.alpha.at3(n, y, x) > 0) ++nonzero;
            CHECK(nonzero < 48 * 48 * 40 / 100);  // < 40% per frame
        }
        for (double a : t.alpha.v) {
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
        }
    }
}
