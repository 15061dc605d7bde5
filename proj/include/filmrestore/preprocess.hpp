#pragma once

#include "filmrestore/nn.hpp"

namespace filmrestore {

// Multi-scale defect-irrelevant feature extractor ("Preprocess Module").
// Takes a degraded patch in pixel space, emits S RGB predictions at halving
// resolutions plus a latent-resolution feature grid for the guidance network.
template <class T>
struct PreprocessModule {
    int64_t width = 16, feat_channels = 8;
    int scales = 3;
    Conv2d<T> e0a, e0b, head0;
    Conv2d<T> d1, e1b, head1;
    Conv2d<T> d2, e2b, head2;
    Conv2d<T> d3, feat_head;

    PreprocessModule() = default;
    PreprocessModule(ParamStore<T>& ps, int64_t w, int64_t feat_c, Pcg32& rng)
        : width(w), feat_channels(feat_c),
          e0a(ps, "e0a", 3, w, 3, 1, 1, rng),
          e0b(ps, "e0b", w, w, 3, 1, 1, rng),
          head0(ps, "head0", w, 3, 3, 1, 1, rng, Init::xavier),
          d1(ps, "d1", w, 2 * w, 3, 2, 1, rng),
          e1b(ps, "e1b", 2 * w, 2 * w, 3, 1, 1, rng),
          head1(ps, "head1", 2 * w, 3, 3, 1, 1, rng, Init::xavier),
          d2(ps, "d2", 2 * w, 4 * w, 3, 2, 1, rng),
          e2b(ps, "e2b", 4 * w, 4 * w, 3, 1, 1, rng),
          head2(ps, "head2", 4 * w, 3, 3, 1, 1, rng, Init::xavier),
          d3(ps, "d3", 4 * w, 4 * w, 3, 2, 1, rng),
          feat_head(ps, "feat_head", 4 * w, feat_c, 1, 1, 0, rng, Init::xavier) {}

    struct Out {
        std::vector<Var> pyramid;  // S RGB predictions, dims H / 2^(j-1)
        Var features = -1;         // latent-resolution grid [n, H/8, W/8, feat_c]
    };

    Out forward(Graph<T>& g, Bind<T>& p, Var x) const {
        Out out;
        Var h0 = g.silu(e0b.forward(g, p, g.silu(e0a.forward(g, p, x))));
        out.pyramid.push_back(g.sigmoid(head0.forward(g, p, h0)));
        Var h1 = g.silu(e1b.forward(g, p, g.silu(d1.forward(g, p, h0))));
        out.pyramid.push_back(g.sigmoid(head1.forward(g, p, h1)));
        Var h2 = g.silu(e2b.forward(g, p, g.silu(d2.forward(g, p, h1))));
        out.pyramid.push_back(g.sigmoid(head2.forward(g, p, h2)));
        Var h3 = g.silu(d3.forward(g, p, h2));
        out.features = feat_head.forward(g, p, h3);
        return out;
    }
};

}  // namespace filmrestore
