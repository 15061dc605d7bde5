#pragma once

#include "filmrestore/nn.hpp"

namespace filmrestore {

template <class T>
struct TimeEmbed {
    int64_t dim = 0;
    Linear<T> l1, l2;

    TimeEmbed() = default;
    TimeEmbed(ParamStore<T>& ps, const std::string& name, int64_t d, Pcg32& rng)
        : dim(d),
          l1(ps, name + ".l1", d, d, rng, Init::kaiming),
          l2(ps, name + ".l2", d, d, rng, Init::xavier) {}

    Var forward(Graph<T>& g, Bind<T>& p, int t) const {
        Var e = g.leaf(sinusoidal_embedding<T>(t, dim).reshaped({1, dim}));
        return l2.forward(g, p, g.silu(l1.forward(g, p, e)));
    }
};

template <class T>
struct ResBlock {
    int64_t cin = 0, cout = 0;
    GroupNorm<T> gn1, gn2;
    Conv2d<T> c1, c2, skip;
    Linear<T> temb_proj;
    bool has_skip = false;

    ResBlock() = default;
    ResBlock(ParamStore<T>& ps, const std::string& name, int64_t cin_, int64_t cout_, int64_t tdim,
             Pcg32& rng)
        : cin(cin_), cout(cout_),
          gn1(ps, name + ".gn1", cin_, 8),
          gn2(ps, name + ".gn2", cout_, 8),
          c1(ps, name + ".c1", cin_, cout_, 3, 1, 1, rng),
          c2(ps, name + ".c2", cout_, cout_, 3, 1, 1, rng, Init::zero),
          temb_proj(ps, name + ".temb", tdim, cout_, rng, Init::xavier) {
        if (cin_ != cout_) {
            skip     = Conv2d<T>(ps, name + ".skip", cin_, cout_, 1, 1, 0, rng, Init::xavier);
            has_skip = true;
        }
    }

    Var forward(Graph<T>& g, Bind<T>& p, Var x, Var temb) const {
        Var h = c1.forward(g, p, g.silu(gn1.forward(g, p, x)));
        if (temb >= 0) {
            Var tb   = temb_proj.forward(g, p, g.silu(temb));  // [1, cout]
            Shape s  = g.val(h).shape;
            Var flat = g.reshape(h, {g.val(h).numel() / cout, cout});
            h        = g.reshape(g.add_rowbcast(flat, g.reshape(tb, {cout})), s);
        }
        h = c2.forward(g, p, g.silu(gn2.forward(g, p, h)));
        Var sk = has_skip ? skip.forward(g, p, x) : x;
        return g.add(sk, h);
    }
};

// Self-attention over the frame axis at every spatial site.
template <class T>
struct TemporalAttn {
    AttnBlock<T> attn;

    TemporalAttn() = default;
    TemporalAttn(ParamStore<T>& ps, const std::string& name, int64_t dim, Pcg32& rng)
        : attn(ps, name + ".temporal", dim, dim, rng) {}

    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        const Tensor<T>& xv = g.val(x);
        int64_t n = xv.dim(0), h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
        Var t = g.reshape(g.permute(x, {1, 2, 0, 3}), {h * w, n, c});
        t     = attn.forward(g, p, t, t);
        return g.permute(g.reshape(t, {h, w, n, c}), {2, 0, 1, 3});
    }
};

// Guidance residuals: one per UNet decoder level, in decoder consumption
// order {level-0 skip, level-1 skip, mid}.
template <class T>
struct GuidanceResiduals {
    std::vector<Var> levels;  // size 3
};

// Small denoising UNet: two resolutions plus a middle block, temporal
// attention at every level, sinusoidal timestep conditioning.
template <class T>
struct UNet {
    int64_t width = 64, in_channels = 4;
    int horizon = 1000;
    TimeEmbed<T> temb;
    Conv2d<T> conv_in;
    ResBlock<T> rb0;
    TemporalAttn<T> ta0;
    Conv2d<T> down;
    ResBlock<T> rb1;
    TemporalAttn<T> ta1;
    ResBlock<T> mid_rb;
    TemporalAttn<T> mid_ta;
    ResBlock<T> up1;
    TemporalAttn<T> uta1;
    Conv2d<T> up_conv;
    ResBlock<T> up0;
    TemporalAttn<T> uta0;
    GroupNorm<T> out_gn;
    Conv2d<T> out_conv;

    UNet() = default;
    UNet(ParamStore<T>& ps, int64_t w, int64_t c, int T_, Pcg32& rng)
        : width(w), in_channels(c), horizon(T_),
          temb(ps, "temb", w, rng),
          conv_in(ps, "conv_in", c, w, 3, 1, 1, rng),
          rb0(ps, "rb0", w, w, w, rng),
          ta0(ps, "ta0", w, rng),
          down(ps, "down", w, 2 * w, 3, 2, 1, rng),
          rb1(ps, "rb1", 2 * w, 2 * w, w, rng),
          ta1(ps, "ta1", 2 * w, rng),
          mid_rb(ps, "mid_rb", 2 * w, 2 * w, w, rng),
          mid_ta(ps, "mid_ta", 2 * w, rng),
          up1(ps, "up1", 4 * w, 2 * w, w, rng),
          uta1(ps, "uta1", 2 * w, rng),
          up_conv(ps, "up_conv", 2 * w, w, 3, 1, 1, rng),
          up0(ps, "up0", 2 * w, w, w, rng),
          uta0(ps, "uta0", w, rng),
          out_gn(ps, "out_gn", w, 8),
          out_conv(ps, "out_conv", w, c, 3, 1, 1, rng, Init::xavier) {}

    // z [n,h,w,c] -> predicted noise, same shape. Residuals (if any) are added
    // to the decoder inputs, ControlNet style.
    Var forward(Graph<T>& g, Bind<T>& p, Var z, int t,
                const GuidanceResiduals<T>* residuals = nullptr) const {
        if (t < 0 || t >= horizon) throw InputError("unet: timestep outside [0,T)");
        Var te = temb.forward(g, p, t);
        Var s0 = ta0.forward(g, p, rb0.forward(g, p, conv_in.forward(g, p, z), te));
        Var s1 = ta1.forward(g, p, rb1.forward(g, p, down.forward(g, p, s0), te));
        Var m  = mid_ta.forward(g, p, mid_rb.forward(g, p, s1, te));
        if (residuals) {
            if (residuals->levels.size() != 3) throw InputError("unet: want 3 residual levels");
            s0 = g.add(s0, residuals->levels[0]);
            s1 = g.add(s1, residuals->levels[1]);
            m  = g.add(m, residuals->levels[2]);
        }
        Var u = up1.forward(g, p, g.concat({m, s1}, 3), te);
        u     = uta1.forward(g, p, u);
        u     = up_conv.forward(g, p, g.upsample_nearest2(u));
        u     = up0.forward(g, p, g.concat({u, s0}, 3), te);
        u     = uta0.forward(g, p, u);
        return out_conv.forward(g, p, g.silu(out_gn.forward(g, p, u)));
    }
};

}  // namespace filmrestore
