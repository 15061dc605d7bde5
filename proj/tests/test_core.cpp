#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "filmrestore/autodiff.hpp"
#include "filmrestore/image_io.hpp"
#include "filmrestore/nn.hpp"
#include "filmrestore/rng.hpp"
#include "filmrestore/tensor.hpp"
#include "test_helpers.hpp"

using namespace filmrestore;
using testutil::gradcheck_fn;

TEST_CASE("pcg32 determinism and distribution") {
    Pcg32 a(42, 54), b(42, 54);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u32() == b.next_u32());

    Pcg32 c(7);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sq / n == doctest::Approx(1.0 / 3).epsilon(0.01));

    Pcg32 d(9);
    double m = 0, v = 0;
    for (int i = 0; i < n; ++i) {
        double x = d.normal();
        m += x;
        v += x * x;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(m == doctest::Approx(0.0).epsilon(0.02));
    CHECK(v == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("matmul against naive loop") {
    Pcg32 rng(1);
    Tensor<double> a = Tensor<double>::randn({5, 7}, rng);
    Tensor<double> b = Tensor<double>::randn({7, 3}, rng);
    Tensor<double> c = matmul(a, b);
    for (int64_t i = 0; i < 5; ++i)
        for (int64_t j = 0; j < 3; ++j) {
            double s = 0;
            for (int64_t k = 0; k < 7; ++k) s += a.at2(i, k) * b.at2(k, j);
            CHECK(c.at2(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("autodiff gradcheck: elementwise chain") {
    Pcg32 rng(2);
    Tensor<double> x0 = Tensor<double>::randn({3, 4}, rng);
    double err = gradcheck_fn(
        [](Graph<double>& g, Var x) {
            Var y = g.silu(g.add_scalar(g.mul(x, x), 0.3));
            Var z = g.sigmoid(g.scale(y, 0.7));
            return g.mean_all(g.abs_(z));
        },
        x0);
    CHECK(err < 1e-5);
}

TEST_CASE("autodiff gradcheck: matmul, softmax, reductions") {
    Pcg32 rng(3);
    Tensor<double> x0 = Tensor<double>::randn({4, 6}, rng);
    Tensor<double> w  = Tensor<double>::randn({6, 5}, rng);
    double err = gradcheck_fn(
        [&](Graph<double>& g, Var x) {
            Var wv = g.leaf(w);
            Var y  = g.matmul(x, wv);
            Var s  = g.softmax_lastdim(y);
            return g.mean_all(g.mul(s, s));
        },
        x0);
    CHECK(err < 1e-5);
}

TEST_CASE("autodiff gradcheck: bmm and transpose") {
    Pcg32 rng(4);
    Tensor<double> x0 = Tensor<double>::randn({2, 3, 4}, rng);
    Tensor<double> k  = Tensor<double>::randn({2, 5, 4}, rng);
    double err = gradcheck_fn(
        [&](Graph<double>& g, Var x) {
            Var kv = g.leaf(k, true);
            Var s  = g.bmm(x, g.transpose_last(kv));
            return g.mean_all(g.mul(s, s));
        },
        x0);
    CHECK(err < 1e-5);
}

TEST_CASE("autodiff gradcheck: im2col / conv path") {
    Pcg32 rng(5);
    Tensor<double> x0 = Tensor<double>::randn({2, 5, 6, 3}, rng);
    Tensor<double> w  = Tensor<double>::randn({2 * 2 * 3, 4}, rng, 0.5);
    double err = gradcheck_fn(
        [&](Graph<double>& g, Var x) {
            Var cols = g.im2col(x, 2, 2, 2, 2, 1, 1);
            Var flat = g.reshape(cols, {g.val(cols).dim(0) * g.val(cols).dim(1), 12});
            Var y    = g.matmul(flat, g.leaf(w));
            return g.mean_all(g.mul(y, y));
        },
        x0);
    CHECK(err < 1e-5);
}

TEST_CASE("autodiff gradcheck: pads, pools, broadcast, concat/slice") {
    Pcg32 rng(6);
    Tensor<double> x0 = Tensor<double>::randn({2, 4, 4, 3}, rng);
    double err = gradcheck_fn(
        [](Graph<double>& g, Var x) {
            Var p  = g.reflect_pad2(x, 1, 2, 1, 0);
            Var u  = g.upsample_nearest2(p);
            Var a  = g.avgpool2(u);
            Var s1 = g.slice(a, 3, 0, 2);
            Var s2 = g.slice(a, 3, 1, 2);
            Var c  = g.concat({s1, s2}, 3);
            return g.mean_all(g.mul(c, c));
        },
        x0);
    CHECK(err < 1e-5);

    Tensor<double> y0 = Tensor<double>::randn({3, 5}, rng);
    Tensor<double> s  = Tensor<double>::randn({3}, rng);
    Tensor<double> b  = Tensor<double>::randn({5}, rng);
    double err2 = gradcheck_fn(
        [&](Graph<double>& g, Var x) {
            Var sv = g.leaf(s, true);
            Var bv = g.leaf(b, true);
            Var y  = g.mul_colbcast(g.add_colbcast(x, sv), sv);
            y      = g.add_rowbcast(g.mul_rowbcast(y, bv), bv);
            y      = g.sub_colbcast(y, g.rowmean(y));
            return g.mean_all(g.mul(y, y));
        },
        y0);
    CHECK(err2 < 1e-5);
}

TEST_CASE("layers: linear/conv/norm/attention gradcheck and shapes") {
    Pcg32 rng(7);
    ParamStore<double> ps;
    ps.set_group("t");
    Conv2d<double> conv(ps, "conv", 3, 5, 3, 2, 1, rng);
    GroupNorm<double> gn(ps, "gn", 5, 4);
    LayerNorm<double> lnorm(ps, "ln", 5);
    AttnBlock<double> attn(ps, "attn", 5, 5, rng);
    // randomise the zero-init projections so the gradcheck is non-vacuous
    for (auto& p : ps.params)
        for (auto& x : p.value.v)
            if (x == 0.0) x = rng.normal() * 0.05;

    Tensor<double> x0 = Tensor<double>::randn({2, 6, 6, 3}, rng);
    double err = gradcheck_fn(
        [&](Graph<double>& g, Var x) {
            Bind<double> p(g, ps, true);
            Var y = conv.forward(g, p, x);          // [2,3,3,5]
            y     = gn.forward(g, p, y);
            y     = lnorm.forward(g, p, y);
            Var t = g.reshape(y, {2, 9, 5});
            t     = attn.forward(g, p, t, t);
            return g.mean_all(g.mul(t, t));
        },
        x0, 1e-5);
    CHECK(err < 1e-4);

    // attention rows sum to one
    Graph<double> g;
    Bind<double> p(g, ps, false);
    Var q = g.leaf(Tensor<double>::randn({2, 4, 5}, rng));
    Var k = g.leaf(Tensor<double>::randn({2, 7, 5}, rng));
    Tensor<double> w = attention_weights(g, q, k);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t i = 0; i < 4; ++i) {
            double s = 0;
            for (int64_t j = 0; j < 7; ++j) s += w.at3(b, i, j);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
}

TEST_CASE("attention masking zeroes padded tokens") {
    Pcg32 rng(8);
    Graph<double> g;
    Var q = g.leaf(Tensor<double>::randn({1, 3, 4}, rng));
    Var k = g.leaf(Tensor<double>::randn({1, 5, 4}, rng));
    Tensor<double> mask({5});
    mask[3] = mask[4] = -1e30;  // last two tokens padded
    Tensor<double> w = attention_weights(g, q, k, &mask);
    for (int64_t i = 0; i < 3; ++i) {
        CHECK(w.at3(0, i, 3) == 0.0);
        CHECK(w.at3(0, i, 4) == 0.0);
        double s = 0;
        for (int64_t j = 0; j < 5; ++j) s += w.at3(0, i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("zero-init blocks are exact identities") {
    Pcg32 rng(9);
    ParamStore<double> ps;
    ps.set_group("t");
    AttnBlock<double> attn(ps, "attn", 6, 6, rng);
    MlpBlock<double> mlp(ps, "mlp", 6, 12, rng);
    Graph<double> g;
    Bind<double> p(g, ps, false);
    Tensor<double> x0 = Tensor<double>::randn({2, 5, 6}, rng);
    Var x             = g.leaf(x0);
    Var y             = attn.forward(g, p, x, x);
    Var z             = mlp.forward(g, p, y);
    CHECK(max_abs_diff(g.val(z), x0) == 0.0);
}

TEST_CASE("image io round trips") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "fr_imageio_test";
    fs::create_directories(dir);
    Pcg32 rng(10);

    Tensor<double> rgb({6, 5, 3});
    for (auto& x : rgb.v) x = rng.uniform();
    write_image_ppm((dir / "a.ppm").string(), rgb);
    Tensor<double> back = read_image_ppm((dir / "a.ppm").string());
    REQUIRE(back.shape == rgb.shape);
    CHECK(max_abs_diff(back, rgb) <= 1.0 / 255 + 1e-12);
    // quantisation is idempotent: second round trip is exact
    write_image_ppm((dir / "b.ppm").string(), back);
    CHECK(max_abs_diff(read_image_ppm((dir / "b.ppm").string()), back) == 0.0);

    Tensor<uint8_t> mask({6, 5});
    for (auto& m : mask.v) m = rng.uniform() < 0.3 ? 1 : 0;
    write_mask_pbm((dir / "m.pbm").string(), mask);
    Tensor<uint8_t> mback = read_mask_pbm((dir / "m.pbm").string());
    REQUIRE(mback.shape == mask.shape);
    for (size_t i = 0; i < mask.v.size(); ++i) CHECK(mback.v[i] == mask.v[i]);

    fs::remove_all(dir);
}

TEST_CASE("sinusoidal embedding basics") {
    auto e = sinusoidal_embedding<double>(0, 8);
    for (int i = 0; i < 4; ++i) CHECK(e[i] == 0.0);
    for (int i = 4; i < 8; ++i) CHECK(e[i] == 1.0);
    auto e1 = sinusoidal_embedding<double>(3, 8);
    auto e2 = sinusoidal_embedding<double>(4, 8);
    CHECK(max_abs_diff(e1, e2) > 0.0);
}
