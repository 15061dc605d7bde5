#pragma once

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "filmrestore/errors.hpp"
#include "filmrestore/frame_volume.hpp"
#include "filmrestore/nn.hpp"

namespace filmrestore {

// Sinusoidal embedding of a normalised bounding box: for each of the 4 coords
// u, [sin(2^k pi u), cos(2^k pi u)] for k = 0..L-1. Length 4*2*L.
template <class T>
Tensor<T> fourier_embed(const std::array<double, 4>& norm_bbox, int L = 8) {
    for (double u : norm_bbox)
        if (!(u >= 0.0 && u <= 1.0)) throw InputError("fourier_embed: coords must lie in [0,1]");
    Tensor<T> e({4 * 2 * static_cast<int64_t>(L)});
    int64_t i = 0;
    for (double u : norm_bbox)
        for (int k = 0; k < L; ++k) {
            double f = std::ldexp(3.14159265358979323846, k) * u;  // 2^k * pi * u
            e[i++]   = static_cast<T>(std::sin(f));
            e[i++]   = static_cast<T>(std::cos(f));
        }
    return e;
}

// Convolutional patch tokenizer over resized global frames; spatial patch
// tokens only (no CLS token). frames [n,S,S,3] -> [n, K, d], K = (S/patch)^2.
template <class T>
struct GlobalFrameEncoder {
    int64_t d = 64;
    int64_t input_size = 128;
    int patch = 16;
    Conv2d<T> patchify;
    LayerNorm<T> ln;
    MlpBlock<T> mlp;

    GlobalFrameEncoder() = default;
    GlobalFrameEncoder(ParamStore<T>& ps, int64_t d_, int64_t input_size_, int patch_, Pcg32& rng)
        : d(d_), input_size(input_size_), patch(patch_),
          patchify(ps, "framenc.patchify", 3, d_, patch_, patch_, 0, rng, Init::xavier),
          ln(ps, "framenc.ln", d_),
          mlp(ps, "framenc.mlp", d_, 2 * d_, rng) {}

    int64_t tokens_per_frame() const {
        int64_t s = input_size / patch;
        return s * s;
    }

    Var forward(Graph<T>& g, Bind<T>& p, Var frames) const {
        const Tensor<T>& f = g.val(frames);
        if (f.dim(1) != input_size || f.dim(2) != input_size)
            throw ConfigError("global frame encoder: input not resized to encoder size");
        Var tok = patchify.forward(g, p, frames);  // [n, S/p, S/p, d]
        tok     = g.reshape(tok, {f.dim(0), tokens_per_frame(), d});
        return mlp.forward(g, p, ln.forward(g, p, tok));
    }
};

// Hash-bucket caption tokenizer + small self-attention encoder. Padding
// positions carry a large negative additive mask.
template <class T>
struct TextEncoder {
    int64_t d = 64, vocab = 4096, max_len = 64;
    int embed = -1, posemb = -1;
    AttnBlock<T> selfattn;
    MlpBlock<T> mlp;
    LayerNorm<T> ln_out;

    TextEncoder() = default;
    TextEncoder(ParamStore<T>& ps, int64_t d_, int64_t vocab_, int64_t max_len_, Pcg32& rng)
        : d(d_), vocab(vocab_), max_len(max_len_),
          selfattn(ps, "textenc.attn", d_, d_, rng),
          mlp(ps, "textenc.mlp", d_, 2 * d_, rng),
          ln_out(ps, "textenc.ln_out", d_) {
        embed  = ps.add("textenc.embed", Tensor<T>::randn({vocab_, d_}, rng, T(0.02)));
        posemb = ps.add("textenc.posemb", Tensor<T>::randn({max_len_, d_}, rng, T(0.02)));
    }

    static uint64_t fnv1a(const std::string& w) {
        uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : w) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    // Whitespace tokens hashed into the bucket table; ids padded to max_len,
    // mask additive (-1e30 on padding).
    std::pair<std::vector<int64_t>, Tensor<T>> tokenize(const std::string& caption) const {
        std::vector<int64_t> ids;
        std::istringstream ss(caption);
        std::string word;
        while (ss >> word && static_cast<int64_t>(ids.size()) < max_len)
            ids.push_back(static_cast<int64_t>(fnv1a(word) % static_cast<uint64_t>(vocab)));
        int64_t n_real = static_cast<int64_t>(ids.size());
        if (n_real == 0) {
            ids.push_back(0);  // empty captions become a single null token
            n_real = 1;
        }
        Tensor<T> mask({max_len});
        for (int64_t i = n_real; i < max_len; ++i) mask[i] = T(-1e30);
        ids.resize(static_cast<size_t>(max_len), ids.back());
        return {ids, mask};
    }

    // -> [max_len, d]; mask_out receives the additive padding mask.
    Var forward(Graph<T>& g, Bind<T>& p, const std::string& caption, Tensor<T>* mask_out) const {
        auto [ids, mask] = tokenize(caption);
        Var tok = g.gather_rows(p(embed), ids);
        tok     = g.add(tok, p(posemb));
        Var t3  = g.reshape(tok, {1, max_len, d});
        t3      = selfattn.forward(g, p, t3, t3, &mask);
        t3      = mlp.forward(g, p, t3);
        t3      = ln_out.forward(g, p, t3);
        if (mask_out) *mask_out = mask;
        return g.reshape(t3, {max_len, d});
    }
};

// Concat-then-project position fusion. The bbox projection starts at zero and
// the re-projection at [I;0], so fusion is an exact token pass-through at init.
template <class T>
struct PositionFuser {
    int L     = 8;
    int64_t d = 64;
    Linear<T> bbox_proj, reproj;

    PositionFuser() = default;
    PositionFuser(ParamStore<T>& ps, int64_t d_, int L_, Pcg32& rng)
        : L(L_), d(d_),
          bbox_proj(ps, "posfuse.bbox", 4 * 2 * L_, d_, rng, Init::zero),
          reproj(ps, "posfuse.reproj", 2 * d_, d_, rng, Init::zero) {
        Tensor<T>& w = ps[reproj.w].value;  // [2d, d]: identity on the token half
        for (int64_t i = 0; i < d_; ++i) w.at2(i, i) = T(1);
    }

    // tokens [..., d] + bbox -> same shape, position fused into every token.
    Var fuse(Graph<T>& g, Bind<T>& p, Var tokens, const std::array<double, 4>& bbox) const {
        Shape s      = g.val(tokens).shape;
        int64_t rows = g.val(tokens).numel() / d;
        Var flat     = g.reshape(tokens, {rows, d});
        Var femb     = g.leaf(fourier_embed<T>(bbox, L).reshaped({1, 4 * 2 * static_cast<int64_t>(L)}));
        Var pe       = bbox_proj.forward(g, p, femb);              // [1, d]
        Var tiled    = g.matmul(g.leaf(Tensor<T>::full({rows, 1}, T(1))), pe);
        Var fused    = reproj.forward(g, p, g.concat({flat, tiled}, 1));
        return g.reshape(fused, s);
    }
};

// Residual cross-attention from mid features to a global context feature.
template <class T>
struct CrossAttendGlobal {
    AttnBlock<T> attn;

    CrossAttendGlobal() = default;
    CrossAttendGlobal(ParamStore<T>& ps, const std::string& name, int64_t dim, int64_t ctx_dim,
                      Pcg32& rng)
        : attn(ps, name, dim, ctx_dim, rng) {}

    // mid_tokens [B, M, dim], ctx [B, N, ctx_dim] (B must match).
    Var forward(Graph<T>& g, Bind<T>& p, Var mid_tokens, Var ctx, const Tensor<T>* mask = nullptr) const {
        if (g.val(mid_tokens).dim(0) != g.val(ctx).dim(0))
            throw ConfigError("cross_attend_global: batch mismatch");
        return attn.forward(g, p, mid_tokens, ctx, mask);
    }
};

// Spec-level op: cross-attend mid features [n,h,w,c] with a context feature.
// ctx is either per-frame [n, K, d] (global frame feature) or shared [M, d]
// (global prompt feature).
template <class T>
Var cross_attend_global(Graph<T>& g, Bind<T>& p, const CrossAttendGlobal<T>& blk, Var mid, Var ctx,
                        const Tensor<T>* mask = nullptr) {
    const Tensor<T>& m = g.val(mid);
    if (m.ndim() != 4) throw ConfigError("cross_attend_global: mid must be [n,h,w,c]");
    int64_t n = m.dim(0), h = m.dim(1), w = m.dim(2), c = m.dim(3);
    Var tokens = g.reshape(mid, {n, h * w, c});
    Var out;
    if (g.val(ctx).ndim() == 2) {  // shared prompt: one batch row, all tokens attend
        Var t1   = g.reshape(tokens, {1, n * h * w, c});
        Var ctx3 = g.reshape(ctx, {1, g.val(ctx).dim(0), g.val(ctx).dim(1)});
        out      = g.reshape(blk.forward(g, p, t1, ctx3, mask), {n, h * w, c});
    } else {
        out = blk.forward(g, p, tokens, ctx, mask);
    }
    return g.reshape(out, {n, h, w, c});
}

}  // namespace filmrestore
