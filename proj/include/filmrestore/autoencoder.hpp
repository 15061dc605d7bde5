#pragma once

#include "filmrestore/frame_volume.hpp"
#include "filmrestore/latent.hpp"
#include "filmrestore/nn.hpp"

namespace filmrestore {

// Per-frame convolutional autoencoder, spatial stride 8, trained in-repo
// (stage 0). Latents are shifted/scaled by calibration buffers so diffusion
// sees roughly unit-scale features.
template <class T>
struct Autoencoder {
    int64_t width = 32, latent_channels = 4, stride = 8;
    Conv2d<T> e_in, e_d1, e_c1, e_d2, e_c2, e_d3, e_head;
    GroupNorm<T> e_gn;
    Conv2d<T> d_in, d_c0, d_u1, d_c1, d_u2, d_u3, d_head;
    GroupNorm<T> d_gn;
    int calib_shift = -1, calib_scale = -1;  // buffers [latent_channels]

    Autoencoder() = default;
    Autoencoder(ParamStore<T>& ps, int64_t w, int64_t c_lat, Pcg32& rng)
        : width(w), latent_channels(c_lat),
          e_in(ps, "e_in", 3, w, 3, 1, 1, rng),
          e_d1(ps, "e_d1", w, 2 * w, 3, 2, 1, rng),
          e_c1(ps, "e_c1", 2 * w, 2 * w, 3, 1, 1, rng),
          e_d2(ps, "e_d2", 2 * w, 4 * w, 3, 2, 1, rng),
          e_c2(ps, "e_c2", 4 * w, 4 * w, 3, 1, 1, rng),
          e_d3(ps, "e_d3", 4 * w, 4 * w, 3, 2, 1, rng),
          e_head(ps, "e_head", 4 * w, c_lat, 3, 1, 1, rng, Init::xavier),
          e_gn(ps, "e_gn", 4 * w, 8),
          d_in(ps, "d_in", c_lat, 4 * w, 3, 1, 1, rng),
          d_c0(ps, "d_c0", 4 * w, 4 * w, 3, 1, 1, rng),
          d_u1(ps, "d_u1", 4 * w, 2 * w, 3, 1, 1, rng),
          d_c1(ps, "d_c1", 2 * w, 2 * w, 3, 1, 1, rng),
          d_u2(ps, "d_u2", 2 * w, w, 3, 1, 1, rng),
          d_u3(ps, "d_u3", w, w, 3, 1, 1, rng),
          d_head(ps, "d_head", w, 3, 3, 1, 1, rng, Init::xavier),
          d_gn(ps, "d_gn", w, 8) {
        calib_shift = ps.add("latent_shift", Tensor<T>::zeros({c_lat}), /*buffer=*/true);
        calib_scale = ps.add("latent_scale", Tensor<T>::full({c_lat}, T(1)), /*buffer=*/true);
    }

    // x [n,H,W,3] in [0,1], H and W multiples of stride -> [n,H/8,W/8,c]
    Var encode(Graph<T>& g, Bind<T>& p, Var x) const {
        Var h = g.add_scalar(g.scale(x, 2.0), -1.0);  // to [-1,1]
        h     = g.silu(e_in.forward(g, p, h));
        h     = g.silu(e_d1.forward(g, p, h));
        h     = g.silu(e_c1.forward(g, p, h));
        h     = g.silu(e_d2.forward(g, p, h));
        h     = g.silu(e_c2.forward(g, p, h));
        h     = e_d3.forward(g, p, h);
        h     = e_head.forward(g, p, g.silu(e_gn.forward(g, p, h)));
        // calibration: (z - shift) / scale, buffers excluded from training
        Shape s = g.val(h).shape;
        Tensor<T> nshift = (*p.ps)[calib_shift].value;
        for (auto& v : nshift.v) v = -v;
        Tensor<T> iscale = (*p.ps)[calib_scale].value;
        for (auto& v : iscale.v) v = T(1) / v;
        Var flat = g.reshape(h, {g.val(h).numel() / latent_channels, latent_channels});
        flat     = g.mul_rowbcast(g.add_rowbcast(flat, g.leaf(nshift)), g.leaf(iscale));
        return g.reshape(flat, s);
    }

    // z [n,h,w,c] -> frames [n,8h,8w,3] in [0,1] (sigmoid output head)
    Var decode(Graph<T>& g, Bind<T>& p, Var z) const {
        Shape s  = g.val(z).shape;
        Var flat = g.reshape(z, {g.val(z).numel() / latent_channels, latent_channels});
        flat = g.add_rowbcast(g.mul_rowbcast(flat, g.leaf((*p.ps)[calib_scale].value)),
                              g.leaf((*p.ps)[calib_shift].value));
        Var h = g.reshape(flat, s);
        h     = g.silu(d_in.forward(g, p, h));
        h     = g.silu(d_c0.forward(g, p, h));
        h     = g.silu(d_u1.forward(g, p, g.upsample_nearest2(h)));
        h     = g.silu(d_c1.forward(g, p, h));
        h     = g.silu(d_u2.forward(g, p, g.upsample_nearest2(h)));
        h     = g.silu(d_u3.forward(g, p, g.upsample_nearest2(h)));
        h     = d_head.forward(g, p, g.silu(d_gn.forward(g, p, h)));
        return g.sigmoid(h);
    }
};

// No-grad convenience wrappers with reflect padding to the stride multiple.

template <class T>
LatentVolume<T> encode_latent(const Autoencoder<T>& ae, ParamStore<T>& ps, const FrameVolume& v) {
    if (!v.data.all_finite()) throw InputError("encode_latent: non-finite input");
    int64_t H = v.height(), W = v.width();
    int64_t ph = (ae.stride - H % ae.stride) % ae.stride;
    int64_t pw = (ae.stride - W % ae.stride) % ae.stride;
    Graph<T> g;
    Bind<T> p(g, ps, false);
    Var x = g.leaf(v.data.template cast<T>());
    if (v.channels() == 1) x = g.concat({x, x, x}, 3);
    if (ph || pw) x = g.reflect_pad2(x, 0, static_cast<int>(ph), 0, static_cast<int>(pw));
    Var z = ae.encode(g, p, x);
    LatentVolume<T> out;
    out.data   = g.val(z);
    out.stride = ae.stride;
    out.orig_h = H;
    out.orig_w = W;
    return out;
}

template <class T>
FrameVolume decode_latent(const Autoencoder<T>& ae, ParamStore<T>& ps, const LatentVolume<T>& z) {
    if (!z.data.all_finite()) throw InputError("decode_latent: non-finite input");
    Graph<T> g;
    Bind<T> p(g, ps, false);
    Var x = ae.decode(g, p, g.leaf(z.data));
    Tensor<double> frames = g.val(x).template cast<double>();
    int64_t H = z.orig_h > 0 ? z.orig_h : frames.dim(1);
    int64_t W = z.orig_w > 0 ? z.orig_w : frames.dim(2);
    Tensor<double> cropped({frames.dim(0), H, W, frames.dim(3)});
    for (int64_t n = 0; n < frames.dim(0); ++n)
        for (int64_t y = 0; y < H; ++y) {
            const double* src = &frames.at4(n, y, 0, 0);
            double* dst       = &cropped.at4(n, y, 0, 0);
            std::copy(src, src + W * frames.dim(3), dst);
        }
    FrameVolume out(std::move(cropped));
    out.clamp01();
    return out;
}

}  // namespace filmrestore
