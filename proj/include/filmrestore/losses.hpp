#pragma once

#include <cmath>
#include <vector>

#include "filmrestore/autodiff.hpp"
#include "filmrestore/errors.hpp"
#include "filmrestore/tensor.hpp"

namespace filmrestore {

struct LossWeights {
    double alpha_p = 1.0;
    double alpha_d = 81.0;
};

struct LossReport {
    double l_noise = 0, l_preprocess = 0, l_defect = 0, l_total = 0;
};

// Mean squared error over all entries.
template <class T>
double loss_noise(const Tensor<T>& eps, const Tensor<T>& eps_pred) {
    if (!eps.same_shape(eps_pred)) throw InputError("loss_noise: shape mismatch");
    double acc = 0;
    for (size_t i = 0; i < eps.v.size(); ++i) {
        double d = static_cast<double>(eps.v[i]) - static_cast<double>(eps_pred.v[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(eps.numel());
}

template <class T>
Var loss_noise(Graph<T>& g, Var eps, Var eps_pred) {
    Var d = g.sub(eps_pred, eps);
    return g.mean_all(g.mul(d, d));
}

// 2x box downsample per frame, the resampler used for ground-truth pyramids.
template <class T>
Tensor<T> downsample2x(const Tensor<T>& x) {
    int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    Tensor<T> out({n, h / 2, w / 2, c});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t y = 0; y < h / 2; ++y)
            for (int64_t xx = 0; xx < w / 2; ++xx)
                for (int64_t k = 0; k < c; ++k)
                    out.at4(i, y, xx, k) =
                        (x.at4(i, 2 * y, 2 * xx, k) + x.at4(i, 2 * y, 2 * xx + 1, k) +
                         x.at4(i, 2 * y + 1, 2 * xx, k) + x.at4(i, 2 * y + 1, 2 * xx + 1, k)) /
                        T(4);
    return out;
}

// Sum over scales of the per-pixel mean absolute error between each pyramid
// prediction and the box-downsampled ground truth (plain sum over scales, the
// inner norm averaged per pixel so the value is resolution independent).
template <class T>
double loss_preprocess(const std::vector<Tensor<T>>& pyramid, const Tensor<T>& gt) {
    if (pyramid.empty()) throw ConfigError("loss_preprocess: empty pyramid");
    double total  = 0;
    Tensor<T> ref = gt;
    for (size_t j = 0; j < pyramid.size(); ++j) {
        if (j > 0) ref = downsample2x(ref);
        const Tensor<T>& pred = pyramid[j];
        if (!pred.same_shape(ref))
            throw ConfigError("loss_preprocess: scale " + std::to_string(j) + " shape mismatch");
        double acc = 0;
        for (size_t i = 0; i < pred.v.size(); ++i)
            acc += std::abs(static_cast<double>(pred.v[i]) - static_cast<double>(ref.v[i]));
        total += acc / static_cast<double>(pred.numel());
    }
    return total;
}

template <class T>
Var loss_preprocess(Graph<T>& g, const std::vector<Var>& pyramid, const Tensor<T>& gt) {
    if (pyramid.empty()) throw ConfigError("loss_preprocess: empty pyramid");
    Tensor<T> ref = gt;
    Var total     = -1;
    for (size_t j = 0; j < pyramid.size(); ++j) {
        if (j > 0) ref = downsample2x(ref);
        if (!g.val(pyramid[j]).same_shape(ref))
            throw ConfigError("loss_preprocess: scale " + std::to_string(j) + " shape mismatch");
        Var term = g.mean_all(g.abs_(g.sub(pyramid[j], g.leaf(ref))));
        total    = j == 0 ? term : g.add(total, term);
    }
    return total;
}

// Per-pixel mean of |(pred - gt) * mask| with the mask broadcast over
// channels; masked-out pixels contribute zero but stay in the denominator.
template <class T>
double loss_defect(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<uint8_t>& mask) {
    if (!pred.same_shape(gt)) throw InputError("loss_defect: shape mismatch");
    if (pred.ndim() != 4 || mask.ndim() != 3 || mask.dim(0) != pred.dim(0) ||
        mask.dim(1) != pred.dim(1) || mask.dim(2) != pred.dim(2))
        throw InputError("loss_defect: mask must be [N,H,W] matching pred");
    for (uint8_t m : mask.v)
        if (m != 0 && m != 1) throw InputError("loss_defect: mask must be binary");
    int64_t C  = pred.dim(3);
    double acc = 0;
    for (int64_t i = 0; i < mask.numel(); ++i) {
        if (!mask[i]) continue;
        for (int64_t c = 0; c < C; ++c)
            acc += std::abs(static_cast<double>(pred[i * C + c]) - static_cast<double>(gt[i * C + c]));
    }
    return acc / static_cast<double>(pred.numel());
}

template <class T>
Var loss_defect(Graph<T>& g, Var pred, const Tensor<T>& gt, const Tensor<uint8_t>& mask) {
    const Tensor<T>& pv = g.val(pred);
    if (!pv.same_shape(gt)) throw InputError("loss_defect: shape mismatch");
    for (uint8_t m : mask.v)
        if (m != 0 && m != 1) throw InputError("loss_defect: mask must be binary");
    int64_t C = pv.dim(3);
    Tensor<T> mb(pv.shape);
    for (int64_t i = 0; i < mask.numel(); ++i)
        for (int64_t c = 0; c < C; ++c) mb[i * C + c] = static_cast<T>(mask[i]);
    Var d = g.mul(g.sub(pred, g.leaf(gt)), g.leaf(mb));
    return g.mean_all(g.abs_(d));
}

inline double loss_total(double l_noise, double l_preprocess, double l_defect,
                         const LossWeights& w = {}) {
    if (w.alpha_p < 0 || w.alpha_d < 0) throw ConfigError("loss_total: negative weights");
    return l_noise + w.alpha_p * l_preprocess + w.alpha_d * l_defect;
}

inline LossReport make_loss_report(double l_noise, double l_preprocess, double l_defect,
                                   const LossWeights& w = {}) {
    LossReport r;
    r.l_noise      = l_noise;
    r.l_preprocess = l_preprocess;
    r.l_defect     = l_defect;
    r.l_total      = loss_total(l_noise, l_preprocess, l_defect, w);
    return r;
}

template <class T>
Var loss_total(Graph<T>& g, Var l_noise, Var l_preprocess, Var l_defect, const LossWeights& w = {}) {
    return g.add(l_noise, g.add(g.scale(l_preprocess, w.alpha_p), g.scale(l_defect, w.alpha_d)));
}

}  // namespace filmrestore
