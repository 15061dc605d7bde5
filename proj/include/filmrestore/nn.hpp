#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "filmrestore/autodiff.hpp"
#include "filmrestore/rng.hpp"

namespace filmrestore {

enum class Init { kaiming, xavier, zero, normal_small };

// Named parameters, partitioned into checkpoint groups. `trainable` is flipped
// per training stage; `buffer` marks non-learnable state (latent calibration).
template <class T>
struct ParamStore {
    struct Param {
        std::string name;
        std::string group;
        Tensor<T> value;
        Tensor<T> m, v;  // Adam moments, lazily sized by the optimizer
        bool trainable = true;
        bool buffer    = false;
    };

    std::vector<Param> params;
    std::string current_group = "default";

    void set_group(std::string g) { current_group = std::move(g); }

    int add(const std::string& name, Tensor<T> init, bool buffer = false) {
        Param p;
        p.name   = current_group + "." + name;
        p.group  = current_group;
        p.value  = std::move(init);
        p.buffer = buffer;
        params.push_back(std::move(p));
        return static_cast<int>(params.size() - 1);
    }

    Param& operator[](int id) { return params[static_cast<size_t>(id)]; }
    const Param& operator[](int id) const { return params[static_cast<size_t>(id)]; }

    void set_group_trainable(const std::string& group, bool trainable) {
        for (auto& p : params)
            if (p.group == group) p.trainable = trainable && !p.buffer;
    }

    void set_all_trainable(bool trainable) {
        for (auto& p : params) p.trainable = trainable && !p.buffer;
    }

    int find(const std::string& name) const {
        for (size_t i = 0; i < params.size(); ++i)
            if (params[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

// Binds parameters into one graph as leaves, on first use, at most once each.
template <class T>
struct Bind {
    Graph<T>* g               = nullptr;
    ParamStore<T>* ps         = nullptr;
    bool train_mode           = false;
    std::vector<Var> bound;

    Bind(Graph<T>& graph, ParamStore<T>& store, bool train)
        : g(&graph), ps(&store), train_mode(train), bound(store.params.size(), -1) {}

    Var operator()(int pid) {
        Var& v = bound[static_cast<size_t>(pid)];
        if (v < 0) v = g->leaf((*ps)[pid].value, train_mode && (*ps)[pid].trainable);
        return v;
    }
};

inline double init_std(Init kind, int64_t fan_in) {
    switch (kind) {
        case Init::kaiming: return std::sqrt(2.0 / static_cast<double>(fan_in));
        case Init::xavier: return std::sqrt(1.0 / static_cast<double>(fan_in));
        case Init::normal_small: return 0.02;
        case Init::zero: return 0.0;
    }
    return 0.0;
}

template <class T>
Tensor<T> init_weight(Shape shape, int64_t fan_in, Init kind, Pcg32& rng) {
    if (kind == Init::zero) return Tensor<T>::zeros(std::move(shape));
    return Tensor<T>::randn(std::move(shape), rng, static_cast<T>(init_std(kind, fan_in)));
}

template <class T>
struct Linear {
    int w = -1, b = -1;
    int64_t in_dim = 0, out_dim = 0;

    Linear() = default;
    Linear(ParamStore<T>& ps, const std::string& name, int64_t in, int64_t out, Pcg32& rng,
           Init kind = Init::xavier)
        : in_dim(in), out_dim(out) {
        w = ps.add(name + ".w", init_weight<T>({in, out}, in, kind, rng));
        b = ps.add(name + ".b", Tensor<T>::zeros({out}));
    }

    // x [..., in] -> [..., out]
    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        Shape s      = g.val(x).shape;
        int64_t rows = g.val(x).numel() / in_dim;
        Var flat     = g.reshape(x, {rows, in_dim});
        Var y        = g.add_rowbcast(g.matmul(flat, p(w)), p(b));
        s.back()     = out_dim;
        return g.reshape(y, s);
    }
};

template <class T>
struct Conv2d {
    int w = -1, b = -1;
    int kh = 3, kw = 3, sh = 1, sw = 1, ph = 1, pw = 1;
    int64_t cin = 0, cout = 0;

    Conv2d() = default;
    Conv2d(ParamStore<T>& ps, const std::string& name, int64_t cin_, int64_t cout_, int k,
           int stride, int pad, Pcg32& rng, Init kind = Init::kaiming)
        : kh(k), kw(k), sh(stride), sw(stride), ph(pad), pw(pad), cin(cin_), cout(cout_) {
        int64_t fan = static_cast<int64_t>(k) * k * cin_;
        w           = ps.add(name + ".w", init_weight<T>({fan, cout_}, fan, kind, rng));
        b           = ps.add(name + ".b", Tensor<T>::zeros({cout_}));
    }

    // x [n,H,W,cin] -> [n,OH,OW,cout]
    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        const Tensor<T>& xv = g.val(x);
        int64_t n = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
        int64_t OH = (H + 2 * ph - kh) / sh + 1;
        int64_t OW = (W + 2 * pw - kw) / sw + 1;
        Var cols = g.im2col(x, kh, kw, sh, sw, ph, pw);            // [n, OH*OW, khkwC]
        Var flat = g.reshape(cols, {n * OH * OW, kh * kw * cin});
        Var y    = g.add_rowbcast(g.matmul(flat, p(w)), p(b));
        return g.reshape(y, {n, OH, OW, cout});
    }
};

template <class T>
struct LayerNorm {
    int gamma = -1, beta = -1;
    int64_t dim = 0;
    double eps  = 1e-5;

    LayerNorm() = default;
    LayerNorm(ParamStore<T>& ps, const std::string& name, int64_t d) : dim(d) {
        gamma = ps.add(name + ".g", Tensor<T>::full({d}, T(1)));
        beta  = ps.add(name + ".b", Tensor<T>::zeros({d}));
    }

    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        Shape s      = g.val(x).shape;
        int64_t rows = g.val(x).numel() / dim;
        Var flat = g.reshape(x, {rows, dim});
        Var mu   = g.rowmean(flat);
        Var xc   = g.sub_colbcast(flat, mu);
        Var var  = g.rowmean(g.mul(xc, xc));
        Var y    = g.mul_colbcast(xc, g.rsqrt_eps(var, eps));
        y        = g.add_rowbcast(g.mul_rowbcast(y, p(gamma)), p(beta));
        return g.reshape(y, s);
    }
};

template <class T>
struct GroupNorm {
    int gamma = -1, beta = -1;
    int groups   = 8;
    int64_t chan = 0;
    double eps   = 1e-5;

    GroupNorm() = default;
    GroupNorm(ParamStore<T>& ps, const std::string& name, int64_t c, int g_) : groups(g_), chan(c) {
        while (chan % groups != 0) groups /= 2;  // keep divisibility for narrow layers
        gamma = ps.add(name + ".g", Tensor<T>::full({c}, T(1)));
        beta  = ps.add(name + ".b", Tensor<T>::zeros({c}));
    }

    // x [n,h,w,c]; normalise over (h,w,c/groups) per (n, group)
    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        Shape s   = g.val(x).shape;
        int64_t n = s[0], h = s[1], w = s[2], c = s[3];
        int64_t cg = c / groups;
        Var r  = g.reshape(x, {n, h * w, groups, cg});
        Var pm = g.permute(r, {0, 2, 1, 3});                 // [n, G, hw, cg]
        Var f  = g.reshape(pm, {n * groups, h * w * cg});
        Var mu = g.rowmean(f);
        Var xc = g.sub_colbcast(f, mu);
        Var vr = g.rowmean(g.mul(xc, xc));
        Var y  = g.mul_colbcast(xc, g.rsqrt_eps(vr, eps));
        y      = g.permute(g.reshape(y, {n, groups, h * w, cg}), {0, 2, 1, 3});
        y      = g.reshape(y, {n * h * w, c});
        y      = g.add_rowbcast(g.mul_rowbcast(y, p(gamma)), p(beta));
        return g.reshape(y, s);
    }
};

// Single-head scaled dot-product attention. q [B,M,D], k/v [B,N,D].
// mask: additive, shape [N] (broadcast) or [B*M, N]-flattened full shape.
template <class T>
Var scaled_dot_attention(Graph<T>& g, Var q, Var k, Var v, const Tensor<T>* mask = nullptr) {
    int64_t d  = g.val(q).dim(2);
    Var scores = g.scale(g.bmm(q, g.transpose_last(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    Var att    = g.softmax_lastdim(scores, mask);
    return g.bmm(att, v);
}

// Attention weights alone (for normalisation tests).
template <class T>
Tensor<T> attention_weights(Graph<T>& g, Var q, Var k, const Tensor<T>* mask = nullptr) {
    int64_t d  = g.val(q).dim(2);
    Var scores = g.scale(g.bmm(q, g.transpose_last(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    return g.val(g.softmax_lastdim(scores, mask));
}

// Pre-LN residual attention block, zero-initialised output projection so the
// block is an exact identity at init. Covers self-attention (kv_src == x),
// cross-attention (kv_src from a context encoder) and the KV-cache path
// (k_prefix/v_prefix prepended along the token axis).
template <class T>
struct AttnBlock {
    LayerNorm<T> ln;
    Linear<T> q, k, v, o;

    AttnBlock() = default;
    AttnBlock(ParamStore<T>& ps, const std::string& name, int64_t dim, int64_t kv_dim, Pcg32& rng)
        : ln(ps, name + ".ln", dim),
          q(ps, name + ".q", dim, dim, rng, Init::xavier),
          k(ps, name + ".k", kv_dim, dim, rng, Init::xavier),
          v(ps, name + ".v", kv_dim, dim, rng, Init::xavier),
          o(ps, name + ".o", dim, dim, rng, Init::zero) {}

    Var forward(Graph<T>& g, Bind<T>& p, Var x, Var kv_src, const Tensor<T>* mask = nullptr,
                const Tensor<T>* k_prefix = nullptr, const Tensor<T>* v_prefix = nullptr,
                Tensor<T>* k_out = nullptr, Tensor<T>* v_out = nullptr) const {
        Var xn = ln.forward(g, p, x);
        Var qv = q.forward(g, p, xn);
        Var kv = k.forward(g, p, kv_src);
        Var vv = v.forward(g, p, kv_src);
        if (k_out) *k_out = g.val(kv);
        if (v_out) *v_out = g.val(vv);
        const Tensor<T>* m = mask;
        Tensor<T> extended_mask;
        if (k_prefix) {
            Var kp = g.leaf(*k_prefix);
            Var vp = g.leaf(*v_prefix);
            kv     = g.concat({kp, kv}, 1);
            vv     = g.concat({vp, vv}, 1);
            if (mask) {  // prefix tokens are always attendable
                extended_mask = Tensor<T>::zeros({g.val(kv).dim(1)});
                int64_t np    = k_prefix->dim(1);
                for (int64_t i = 0; i < mask->numel(); ++i) extended_mask[np + i] = (*mask)[i];
                m = &extended_mask;
            }
        }
        Var att = scaled_dot_attention(g, qv, kv, vv, m);
        return g.add(x, o.forward(g, p, att));
    }
};

// Two-layer MLP with SiLU, residual, zero-init second layer.
template <class T>
struct MlpBlock {
    LayerNorm<T> ln;
    Linear<T> fc1, fc2;

    MlpBlock() = default;
    MlpBlock(ParamStore<T>& ps, const std::string& name, int64_t dim, int64_t hidden, Pcg32& rng)
        : ln(ps, name + ".ln", dim),
          fc1(ps, name + ".fc1", dim, hidden, rng, Init::kaiming),
          fc2(ps, name + ".fc2", hidden, dim, rng, Init::zero) {}

    Var forward(Graph<T>& g, Bind<T>& p, Var x) const {
        return g.add(x, fc2.forward(g, p, g.silu(fc1.forward(g, p, ln.forward(g, p, x)))));
    }
};

// Standard sinusoidal embedding for a diffusion timestep.
template <class T>
Tensor<T> sinusoidal_embedding(int t, int64_t dim) {
    Tensor<T> e({dim});
    int64_t half = dim / 2;
    for (int64_t i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                               static_cast<double>(half > 1 ? half - 1 : 1));
        e[i]        = static_cast<T>(std::sin(t * freq));
        e[half + i] = static_cast<T>(std::cos(t * freq));
    }
    return e;
}

}  // namespace filmrestore
