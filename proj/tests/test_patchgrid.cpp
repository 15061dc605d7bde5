#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "filmrestore/patchgrid.hpp"
#include "filmrestore/rng.hpp"

using namespace filmrestore;

TEST_CASE("build_grid: single patch when patch == frame") {
    PatchGrid g = build_grid(4, 64, 64, 4, 64, 64, 0, 0, 0);
    CHECK(g.specs.size() == 1);
    CHECK(g.specs[0].y0 == 0);
    CHECK(g.specs[0].y1 == 64);
    CHECK(g.specs[0].x1 == 64);
}

TEST_CASE("build_grid: clamped flush starts") {
    // H=128, ph=64, oy=16 -> stride 48 -> starts 0, 48, then 96 clamped to 64
    PatchGrid g = build_grid(1, 128, 64, 1, 64, 64, 0, 16, 0);
    std::vector<int64_t> ys;
    for (const auto& s : g.specs) ys.push_back(s.y0);
    CHECK(ys == std::vector<int64_t>{0, 48, 64});

    // N=16, pt=8, ot=4 -> temporal starts {0,4,8}
    PatchGrid gt = build_grid(16, 8, 8, 8, 8, 8, 4, 0, 0);
    std::vector<int64_t> ts;
    for (const auto& s : gt.specs) ts.push_back(s.t0);
    CHECK(ts == std::vector<int64_t>{0, 4, 8});
}

TEST_CASE("build_grid: raster order is temporal-major") {
    PatchGrid g = build_grid(8, 8, 8, 4, 4, 4, 0, 0, 0);
    REQUIRE(g.specs.size() == 8);
    CHECK(g.specs[0].t0 == 0);
    CHECK(g.specs[0].y0 == 0);
    CHECK(g.specs[0].x0 == 0);
    CHECK(g.specs[1].x0 == 4);  // column fastest
    CHECK(g.specs[2].y0 == 4);  // then row
    CHECK(g.specs[4].t0 == 4);  // then temporal
}

TEST_CASE("build_grid: bad configs rejected") {
    CHECK_THROWS_AS(build_grid(4, 32, 32, 4, 64, 32, 0, 0, 0), ConfigError);
    CHECK_THROWS_AS(build_grid(4, 32, 32, 4, 32, 32, 4, 0, 0), ConfigError);  // overlap == patch
}

TEST_CASE("normalize_bbox examples") {
    PatchSpec full{0, 1, 0, 128, 0, 128};
    auto b = normalize_bbox(full, 128, 128);
    CHECK(b == std::array<double, 4>{0, 0, 1, 1});

    PatchSpec quarter{0, 1, 0, 64, 0, 64};
    auto q = normalize_bbox(quarter, 128, 128);
    CHECK(q == std::array<double, 4>{0, 0, 0.5, 0.5});

    PatchSpec s{0, 1, 0, 64, 48, 112};
    auto n = normalize_bbox(s, 128, 128);
    CHECK(n[0] == doctest::Approx(0.375));
    CHECK(n[2] == doctest::Approx(0.875));
}

TEST_CASE("extract_patch basics and value semantics") {
    Pcg32 rng(11);
    Tensor<double> vol = Tensor<double>::randn({3, 6, 6, 2}, rng);
    PatchSpec full{0, 3, 0, 6, 0, 6};
    Tensor<double> out = extract_patch(vol, full);
    CHECK(max_abs_diff(out, vol) == 0.0);
    out[0] += 1.0;  // mutating the result must not alter the source
    CHECK(vol.at4(0, 0, 0, 0) != out[0]);

    PatchSpec one{1, 2, 2, 3, 4, 5};
    Tensor<double> single = extract_patch(vol, one);
    CHECK(single.numel() == 2);
    CHECK(single[0] == vol.at4(1, 2, 4, 0));
}

TEST_CASE("latent scaling divides coordinates exactly") {
    PatchGrid g = build_grid(4, 128, 128, 4, 64, 64, 0, 16, 16);
    PatchGrid l = g.scaled(8);
    CHECK(g.specs[1].x0 == 48);
    CHECK(l.specs[1].x0 == 6);

    PatchGrid bad = build_grid(4, 100, 100, 4, 50, 50, 0, 10, 10);
    CHECK_THROWS_AS(bad.scaled(8), AlignmentError);
}

TEST_CASE("assemble: constant patches stay constant, round trip exact") {
    PatchGrid g = build_grid(6, 40, 48, 4, 16, 16, 2, 8, 4);
    std::vector<Tensor<double>> constant;
    for (size_t i = 0; i < g.specs.size(); ++i)
        constant.push_back(Tensor<double>::full({4, 16, 16, 3}, 0.7));
    Tensor<double> out = assemble_patches(constant, g);
    for (double v : out.v) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

    Pcg32 rng(12);
    Tensor<double> vol = Tensor<double>::randn({6, 40, 48, 3}, rng);
    std::vector<Tensor<double>> parts;
    for (const auto& s : g.specs) parts.push_back(extract_patch(vol, s));
    Tensor<double> back = assemble_patches(parts, g);
    CHECK(max_abs_diff(back, vol) < 1e-6);
}

TEST_CASE("assemble: feather ramp is monotone across the overlap band") {
    // two spatial patches [0,64) and [48,112) on a 112-wide axis, overlap 16
    PatchGrid g = build_grid(1, 8, 112, 1, 8, 64, 0, 0, 16);
    REQUIRE(g.specs.size() == 2);
    std::vector<Tensor<double>> parts{Tensor<double>::zeros({1, 8, 64, 1}),
                                      Tensor<double>::full({1, 8, 64, 1}, 1.0)};
    Tensor<double> out = assemble_patches(parts, g);
    // closed-form oracle: wA = min(1,(64-u)/16), wB = min(1,(u-47)/16), out = wB/(wA+wB)
    for (int64_t u = 48; u < 64; ++u) {
        double wA = std::min(1.0, (64.0 - u) / 16.0);
        double wB = std::min(1.0, (u - 47.0) / 16.0);
        CHECK(out.at4(0, 4, u, 0) == doctest::Approx(wB / (wA + wB)).epsilon(1e-12));
    }
    CHECK(out.at4(0, 0, 47, 0) == 0.0);
    CHECK(out.at4(0, 0, 64, 0) == 1.0);
    for (int64_t u = 48; u < 64; ++u) CHECK(out.at4(0, 0, u, 0) > out.at4(0, 0, u - 1, 0));
}

TEST_CASE("assemble: misshapen patch rejected") {
    PatchGrid g = build_grid(2, 16, 16, 2, 8, 8, 0, 0, 0);
    std::vector<Tensor<double>> parts;
    for (size_t i = 0; i < g.specs.size(); ++i) parts.push_back(Tensor<double>::zeros({2, 8, 8, 1}));
    parts[1] = Tensor<double>::zeros({2, 8, 7, 1});
    CHECK_THROWS_AS(assemble_patches(parts, g), AssemblyError);
    parts.pop_back();
    CHECK_THROWS_AS(assemble_patches(parts, g), AssemblyError);
}

TEST_CASE("property: coverage and round trip over random configurations") {
    Pcg32 rng(13);
    for (int it = 0; it < 40; ++it) {
        int64_t N  = 1 + rng.uniform_int(6);
        int64_t H  = 4 + rng.uniform_int(40);
        int64_t W  = 4 + rng.uniform_int(40);
        int64_t pt = 1 + rng.uniform_int(static_cast<int>(N));
        int64_t ph = 2 + rng.uniform_int(static_cast<int>(H - 1));
        int64_t pw = 2 + rng.uniform_int(static_cast<int>(W - 1));
        int64_t ot = rng.uniform_int(static_cast<int>(pt));
        int64_t oy = rng.uniform_int(static_cast<int>(ph));
        int64_t ox = rng.uniform_int(static_cast<int>(pw));
        PatchGrid g = build_grid(N, H, W, pt, ph, pw, ot, oy, ox);

        Tensor<int> covered({N, H, W, 1});
        for (const auto& s : g.specs)
            for (int64_t t = s.t0; t < s.t1; ++t)
                for (int64_t y = s.y0; y < s.y1; ++y)
                    for (int64_t x = s.x0; x < s.x1; ++x) covered.at4(t, y, x, 0) += 1;
        for (int v : covered.v) CHECK(v >= 1);

        Tensor<double> vol = Tensor<double>::randn({N, H, W, 2}, rng);
        std::vector<Tensor<double>> parts;
        for (const auto& s : g.specs) parts.push_back(extract_patch(vol, s));
        CHECK(max_abs_diff(assemble_patches(parts, g), vol) < 1e-6);
    }
}
