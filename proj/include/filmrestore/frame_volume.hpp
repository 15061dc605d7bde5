#pragma once

#include <algorithm>
#include <cmath>

#include "filmrestore/errors.hpp"
#include "filmrestore/tensor.hpp"

namespace filmrestore {

// A video clip as a 4-D value grid [N frames, H, W, C], values in [0,1].
struct FrameVolume {
    Tensor<double> data;  // [N, H, W, C]
    double fps = 24.0;

    FrameVolume() = default;
    FrameVolume(int64_t n, int64_t h, int64_t w, int64_t c, double fps_ = 24.0)
        : data({n, h, w, c}), fps(fps_) {}
    explicit FrameVolume(Tensor<double> d, double fps_ = 24.0) : data(std::move(d)), fps(fps_) {
        if (data.ndim() != 4) throw InputError("FrameVolume: want 4-D [N,H,W,C]");
    }

    int64_t frames() const { return data.dim(0); }
    int64_t height() const { return data.dim(1); }
    int64_t width() const { return data.dim(2); }
    int64_t channels() const { return data.dim(3); }

    void validate() const {
        if (data.ndim() != 4) throw InputError("FrameVolume: want 4-D [N,H,W,C]");
        if (frames() < 1) throw InputError("FrameVolume: need at least one frame");
        if (channels() != 1 && channels() != 3) throw InputError("FrameVolume: C must be 1 or 3");
        for (double v : data.v)
            if (!(v >= 0.0 && v <= 1.0)) throw InputError("FrameVolume: values must lie in [0,1]");
    }

    void clamp01() {
        for (auto& v : data.v) v = std::clamp(v, 0.0, 1.0);
    }

    // One frame as [H,W,C].
    Tensor<double> frame(int64_t i) const {
        Tensor<double> f({height(), width(), channels()});
        std::copy(data.v.begin() + i * f.numel(), data.v.begin() + (i + 1) * f.numel(), f.v.begin());
        return f;
    }

    void set_frame(int64_t i, const Tensor<double>& f) {
        std::copy(f.v.begin(), f.v.end(), data.v.begin() + i * f.numel());
    }
};

// Bilinear sample with clamped coordinates; x in [0,W), y in [0,H).
inline double bilinear_at(const Tensor<double>& img, int64_t n, double y, double x, int64_t c) {
    int64_t H = img.dim(1), W = img.dim(2);
    y         = std::clamp(y, 0.0, static_cast<double>(H - 1));
    x         = std::clamp(x, 0.0, static_cast<double>(W - 1));
    int64_t y0 = static_cast<int64_t>(std::floor(y)), x0 = static_cast<int64_t>(std::floor(x));
    int64_t y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
    double fy = y - y0, fx = x - x0;
    double a = img.at4(n, y0, x0, c), b = img.at4(n, y0, x1, c);
    double d = img.at4(n, y1, x0, c), e = img.at4(n, y1, x1, c);
    return a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + d * fy * (1 - fx) + e * fy * fx;
}

// Bilinear resize of every frame to (oh, ow); align-corners-false convention.
inline Tensor<double> resize_bilinear(const Tensor<double>& vol, int64_t oh, int64_t ow) {
    int64_t N = vol.dim(0), H = vol.dim(1), W = vol.dim(2), C = vol.dim(3);
    Tensor<double> out({N, oh, ow, C});
    double sy = static_cast<double>(H) / oh, sx = static_cast<double>(W) / ow;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t y = 0; y < oh; ++y) {
            double srcy = (y + 0.5) * sy - 0.5;
            for (int64_t x = 0; x < ow; ++x) {
                double srcx = (x + 0.5) * sx - 0.5;
                for (int64_t c = 0; c < C; ++c)
                    out.at4(n, y, x, c) = bilinear_at(vol, n, srcy, srcx, c);
            }
        }
    return out;
}

inline FrameVolume resize_bilinear(const FrameVolume& v, int64_t oh, int64_t ow) {
    FrameVolume out(resize_bilinear(v.data, oh, ow), v.fps);
    out.clamp01();
    return out;
}

}  // namespace filmrestore
