#pragma once

#include <array>
#include <vector>

#include "filmrestore/errors.hpp"
#include "filmrestore/frame_volume.hpp"
#include "filmrestore/tensor.hpp"

namespace filmrestore {

// One 3-D patch: temporal window [t0,t1) and spatial box [y0,y1)x[x0,x1),
// all half-open, plus the normalised bounding box used by the Fourier embedder.
struct PatchSpec {
    int64_t t0 = 0, t1 = 0;
    int64_t y0 = 0, y1 = 0;
    int64_t x0 = 0, x1 = 0;
    std::array<double, 4> norm_bbox{};  // (x0/W, y0/H, x1/W, y1/H)

    int64_t nt() const { return t1 - t0; }
    int64_t nh() const { return y1 - y0; }
    int64_t nw() const { return x1 - x0; }
};

inline std::array<double, 4> normalize_bbox(const PatchSpec& s, int64_t H, int64_t W) {
    return {static_cast<double>(s.x0) / W, static_cast<double>(s.y0) / H,
            static_cast<double>(s.x1) / W, static_cast<double>(s.y1) / H};
}

struct PatchGrid {
    std::vector<PatchSpec> specs;  // raster order: temporal-major, then row, then column
    int64_t ot = 0, oy = 0, ox = 0;
    int64_t N = 0, H = 0, W = 0;
    int64_t pt = 0, ph = 0, pw = 0;

    // Grid with all coordinates divided by a spatial stride (latent space).
    PatchGrid scaled(int64_t stride) const {
        PatchGrid g = *this;
        auto div    = [&](int64_t v, const char* what) {
            if (v % stride != 0)
                throw AlignmentError(std::string(what) + " not divisible by latent stride");
            return v / stride;
        };
        g.H  = div(H, "frame height");
        g.W  = div(W, "frame width");
        g.oy = div(oy, "overlap");
        g.ox = div(ox, "overlap");
        g.ph = div(ph, "patch height");
        g.pw = div(pw, "patch width");
        for (auto& s : g.specs) {
            s.y0 = div(s.y0, "patch y0");
            s.y1 = div(s.y1, "patch y1");
            s.x0 = div(s.x0, "patch x0");
            s.x1 = div(s.x1, "patch x1");
        }
        return g;
    }
};

namespace detail {

// Start offsets along one axis: stride = patch - overlap, last start clamped
// flush so the final patch ends exactly at the border.
inline std::vector<int64_t> axis_starts(int64_t dim, int64_t patch, int64_t overlap) {
    std::vector<int64_t> starts;
    int64_t stride = patch - overlap;
    int64_t s      = 0;
    while (true) {
        int64_t c = std::min(s, dim - patch);
        if (starts.empty() || c > starts.back()) starts.push_back(c);
        if (c == dim - patch) break;
        s += stride;
    }
    return starts;
}

}  // namespace detail

inline PatchGrid build_grid(int64_t N, int64_t H, int64_t W, int64_t pt, int64_t ph, int64_t pw,
                            int64_t ot, int64_t oy, int64_t ox) {
    if (pt > N || ph > H || pw > W)
        throw ConfigError("build_grid: patch dims exceed frame dims");
    if (pt < 1 || ph < 1 || pw < 1) throw ConfigError("build_grid: patch dims must be positive");
    if (ot >= pt || oy >= ph || ox >= pw || ot < 0 || oy < 0 || ox < 0)
        throw ConfigError("build_grid: overlaps must lie in [0, patch)");
    PatchGrid g;
    g.N = N; g.H = H; g.W = W;
    g.pt = pt; g.ph = ph; g.pw = pw;
    g.ot = ot; g.oy = oy; g.ox = ox;
    auto ts = detail::axis_starts(N, pt, ot);
    auto ys = detail::axis_starts(H, ph, oy);
    auto xs = detail::axis_starts(W, pw, ox);
    for (int64_t t : ts)
        for (int64_t y : ys)
            for (int64_t x : xs) {
                PatchSpec s;
                s.t0 = t; s.t1 = t + pt;
                s.y0 = y; s.y1 = y + ph;
                s.x0 = x; s.x1 = x + pw;
                s.norm_bbox = normalize_bbox(s, H, W);
                g.specs.push_back(s);
            }
    return g;
}

// Slice a [N,H,W,C] grid; value semantics (the result owns its data).
template <class T>
Tensor<T> extract_patch(const Tensor<T>& vol, const PatchSpec& s) {
    if (vol.ndim() != 4) throw InputError("extract_patch: want 4-D volume");
    if (s.t0 < 0 || s.t1 > vol.dim(0) || s.y0 < 0 || s.y1 > vol.dim(1) || s.x0 < 0 ||
        s.x1 > vol.dim(2) || s.t0 >= s.t1 || s.y0 >= s.y1 || s.x0 >= s.x1)
        throw InputError("extract_patch: spec outside volume");
    int64_t C = vol.dim(3);
    Tensor<T> out({s.nt(), s.nh(), s.nw(), C});
    for (int64_t t = 0; t < s.nt(); ++t)
        for (int64_t y = 0; y < s.nh(); ++y) {
            const T* src = &vol.at4(s.t0 + t, s.y0 + y, s.x0, 0);
            T* dst       = &out.at4(t, y, 0, 0);
            std::copy(src, src + s.nw() * C, dst);
        }
    return out;
}

inline FrameVolume extract_patch(const FrameVolume& v, const PatchSpec& s) {
    return FrameVolume(extract_patch(v.data, s), v.fps);
}

namespace detail {

// Separable feather factor for position u within [s, e) on an axis of size
// dim with overlap o: weight 1 in the interior, linear ramp towards a patch
// edge that has a neighbour. Strictly positive everywhere inside the patch.
inline double feather_axis(int64_t u, int64_t s, int64_t e, int64_t dim, int64_t o) {
    double w   = 1.0;
    double ramp = static_cast<double>(std::max<int64_t>(o, 1));
    if (s > 0) w = std::min(w, static_cast<double>(u - s + 1) / ramp);
    if (e < dim) w = std::min(w, static_cast<double>(e - u) / ramp);
    return w;
}

}  // namespace detail

// Weighted feathered reassembly; weights are normalised per pixel so the
// blend is an exact partition of unity.
template <class T>
Tensor<T> assemble_patches(const std::vector<Tensor<T>>& patches, const PatchGrid& g) {
    if (patches.size() != g.specs.size())
        throw AssemblyError("assemble_patches: patch count does not match grid");
    if (patches.empty()) throw AssemblyError("assemble_patches: empty grid");
    int64_t C = patches[0].dim(3);
    Tensor<T> num({g.N, g.H, g.W, C});
    Tensor<double> den({g.N, g.H, g.W, 1});
    for (size_t i = 0; i < patches.size(); ++i) {
        const PatchSpec& s  = g.specs[i];
        const Tensor<T>& p  = patches[i];
        if (p.ndim() != 4 || p.dim(0) != s.nt() || p.dim(1) != s.nh() || p.dim(2) != s.nw() ||
            p.dim(3) != C)
            throw AssemblyError("assemble_patches: patch shape does not match its spec");
        for (int64_t t = 0; t < s.nt(); ++t) {
            double wt = detail::feather_axis(s.t0 + t, s.t0, s.t1, g.N, g.ot);
            for (int64_t y = 0; y < s.nh(); ++y) {
                double wy = wt * detail::feather_axis(s.y0 + y, s.y0, s.y1, g.H, g.oy);
                for (int64_t x = 0; x < s.nw(); ++x) {
                    double w = wy * detail::feather_axis(s.x0 + x, s.x0, s.x1, g.W, g.ox);
                    T* dst   = &num.at4(s.t0 + t, s.y0 + y, s.x0 + x, 0);
                    const T* src = &p.at4(t, y, x, 0);
                    for (int64_t c = 0; c < C; ++c) dst[c] += static_cast<T>(w) * src[c];
                    den.at4(s.t0 + t, s.y0 + y, s.x0 + x, 0) += w;
                }
            }
        }
    }
    for (int64_t i = 0; i < num.numel() / C; ++i) {
        double d = den[i];
        if (d <= 0.0) throw AssemblyError("assemble_patches: uncovered pixel");
        for (int64_t c = 0; c < C; ++c) num[i * C + c] = static_cast<T>(num[i * C + c] / d);
    }
    return num;
}

inline FrameVolume assemble_patches(const std::vector<FrameVolume>& patches, const PatchGrid& g) {
    std::vector<Tensor<double>> ts;
    ts.reserve(patches.size());
    double fps = patches.empty() ? 24.0 : patches[0].fps;
    for (const auto& p : patches) ts.push_back(p.data);
    return FrameVolume(assemble_patches(ts, g), fps);
}

}  // namespace filmrestore
