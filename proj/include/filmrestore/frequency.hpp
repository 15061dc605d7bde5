#pragma once

#include "filmrestore/autodiff.hpp"
#include "filmrestore/dft.hpp"
#include "filmrestore/errors.hpp"
#include "filmrestore/nn.hpp"

namespace filmrestore {

// Frequency-domain feature grid: [n, h, w, 2c] packing the real and imaginary
// parts of the per-channel 3-D DFT as [real channels | imaginary channels].

template <class T>
Tensor<T> fft_pack_tensor(const Tensor<T>& x) {
    if (x.ndim() != 4) throw InputError("fft_pack: want [n,h,w,c]");
    if (!x.all_finite()) throw InputError("fft_pack: non-finite input");
    int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    std::vector<T> re(x.v), im(x.v.size(), T(0));
    dft3(re, im, n, h, w, c, /*inverse=*/false);
    Tensor<T> out({n, h, w, 2 * c});
    for (int64_t i = 0; i < n * h * w; ++i)
        for (int64_t k = 0; k < c; ++k) {
            out[i * 2 * c + k]     = re[static_cast<size_t>(i * c + k)];
            out[i * 2 * c + c + k] = im[static_cast<size_t>(i * c + k)];
        }
    return out;
}

// Inverse transform; the imaginary residue is discarded. If imag_tol >= 0 the
// residue is checked (round-trip self-test paths); modules that deliberately
// break conjugate symmetry pass a negative tolerance.
template <class T>
Tensor<T> ifft_unpack_tensor(const Tensor<T>& f, double imag_tol = -1.0) {
    if (f.ndim() != 4 || f.dim(3) % 2 != 0) throw InputError("ifft_unpack: want [n,h,w,2c]");
    int64_t n = f.dim(0), h = f.dim(1), w = f.dim(2), c = f.dim(3) / 2;
    std::vector<T> re(static_cast<size_t>(n * h * w * c)), im(static_cast<size_t>(n * h * w * c));
    for (int64_t i = 0; i < n * h * w; ++i)
        for (int64_t k = 0; k < c; ++k) {
            re[static_cast<size_t>(i * c + k)] = f[i * 2 * c + k];
            im[static_cast<size_t>(i * c + k)] = f[i * 2 * c + c + k];
        }
    dft3(re, im, n, h, w, c, /*inverse=*/true);
    if (imag_tol >= 0) {
        double m = 0;
        for (T x : im) m = std::max(m, std::abs(static_cast<double>(x)));
        if (m >= imag_tol)
            throw NumericalError("ifft_unpack: imaginary residue " + std::to_string(m) +
                                 " above tolerance");
    }
    Tensor<T> out({n, h, w, c});
    out.v.assign(re.begin(), re.end());
    return out;
}

// Frequency tokens: coefficient positions flattened, packed channels as width.
template <class T>
Tensor<T> freq_tokens(const Tensor<T>& packed) {
    return packed.reshaped({packed.dim(0) * packed.dim(1) * packed.dim(2), packed.dim(3)});
}

// ---- graph ops (the two transforms are unitary linear maps and adjoints of
// each other, so each op's backward is the other op applied to the gradient).

template <class T>
Var fft_pack(Graph<T>& g, Var x) {
    Tensor<T> out = fft_pack_tensor(g.val(x));
    return g.node(std::move(out), {x}, [x](Graph<T>& gg, Var self) {
        gg.grad(x) += ifft_unpack_tensor(gg.grad(self));
    });
}

template <class T>
Var ifft_unpack(Graph<T>& g, Var f) {
    Tensor<T> out = ifft_unpack_tensor(g.val(f));
    return g.node(std::move(out), {f}, [f](Graph<T>& gg, Var self) {
        gg.grad(f) += fft_pack_tensor(gg.grad(self));
    });
}

// Texture-reconstruction frequency module. Pipeline: pack the patch latent and
// the resized-global latent, refine each with its own per-coefficient MLP,
// pack the mid feature, cross-attend (queries = mid frequency tokens, keys and
// values = concatenated reference tokens), inverse-transform and add back to
// mid through a zero-initialised projection.
template <class T>
struct TextureModule {
    int64_t c_mid = 0, c_lat = 0;
    Linear<T> mlp_p1, mlp_p2, mlp_g1, mlp_g2;
    LayerNorm<T> ln_q;
    Linear<T> q, k, v, o;
    Linear<T> zero_proj;

    TextureModule() = default;
    TextureModule(ParamStore<T>& ps, const std::string& name, int64_t c_mid_, int64_t c_lat_,
                  Pcg32& rng)
        : c_mid(c_mid_), c_lat(c_lat_),
          mlp_p1(ps, name + ".mlp_p1", 2 * c_lat_, 4 * c_lat_, rng, Init::kaiming),
          mlp_p2(ps, name + ".mlp_p2", 4 * c_lat_, 2 * c_lat_, rng, Init::xavier),
          mlp_g1(ps, name + ".mlp_g1", 2 * c_lat_, 4 * c_lat_, rng, Init::kaiming),
          mlp_g2(ps, name + ".mlp_g2", 4 * c_lat_, 2 * c_lat_, rng, Init::xavier),
          ln_q(ps, name + ".ln_q", 2 * c_mid_),
          q(ps, name + ".q", 2 * c_mid_, 2 * c_mid_, rng, Init::xavier),
          k(ps, name + ".k", 2 * c_lat_, 2 * c_mid_, rng, Init::xavier),
          v(ps, name + ".v", 2 * c_lat_, 2 * c_mid_, rng, Init::xavier),
          o(ps, name + ".o", 2 * c_mid_, 2 * c_mid_, rng, Init::xavier),
          zero_proj(ps, name + ".zero_proj", c_mid_, c_mid_, rng, Init::zero) {}

    Var forward(Graph<T>& g, Bind<T>& p, Var mid, Var patch_latent, Var global_latent) const {
        const Tensor<T>& m  = g.val(mid);
        const Tensor<T>& pl = g.val(patch_latent);
        const Tensor<T>& gl = g.val(global_latent);
        if (m.ndim() != 4 || pl.ndim() != 4) throw ConfigError("texture module: want 4-D grids");
        if (m.dim(0) != pl.dim(0) || m.dim(1) != pl.dim(1) || m.dim(2) != pl.dim(2))
            throw ConfigError("texture module: mid and patch latent resolution mismatch");
        if (pl.shape != gl.shape)
            throw ConfigError("texture module: patch and global latent resolution mismatch");
        int64_t n = m.dim(0), h = m.dim(1), w = m.dim(2);
        int64_t tokens = n * h * w;

        Var fp = fft_pack(g, patch_latent);
        Var fg = fft_pack(g, global_latent);
        Var tp = g.reshape(fp, {tokens, 2 * c_lat});
        Var tg = g.reshape(fg, {tokens, 2 * c_lat});
        tp     = mlp_p2.forward(g, p, g.silu(mlp_p1.forward(g, p, tp)));
        tg     = mlp_g2.forward(g, p, g.silu(mlp_g1.forward(g, p, tg)));
        Var kv = g.reshape(g.concat({tp, tg}, 0), {1, 2 * tokens, 2 * c_lat});

        Var fm = fft_pack(g, mid);
        Var tm = g.reshape(fm, {1, tokens, 2 * c_mid});
        Var qv = q.forward(g, p, ln_q.forward(g, p, tm));
        Var at = scaled_dot_attention(g, qv, k.forward(g, p, kv), v.forward(g, p, kv));
        Var of = o.forward(g, p, at);  // [1, tokens, 2*c_mid]
        Var fo = g.reshape(of, {n, h, w, 2 * c_mid});
        Var sp = ifft_unpack(g, fo);  // conjugate symmetry intentionally broken upstream
        return g.add(mid, zero_proj.forward(g, p, sp));
    }
};

// Spec-level operation: forward through a texture module instance.
template <class T>
Var texture_module_forward(Graph<T>& g, Bind<T>& p, const TextureModule<T>& m, Var mid,
                           Var patch_latent, Var global_latent) {
    return m.forward(g, p, mid, patch_latent, global_latent);
}

}  // namespace filmrestore
