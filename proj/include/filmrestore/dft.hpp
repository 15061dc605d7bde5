#pragma once

#include <cmath>
#include <vector>

#include "filmrestore/tensor.hpp"

namespace filmrestore {

// Unitary discrete Fourier transforms over the (frames, height, width) axes of
// a [n,h,w,c] grid, per channel. Naive O(L^2) per axis with twiddle tables:
// desk-scale axes are tiny and the transform stays plan-free and bit
// deterministic. Each axis carries a 1/sqrt(L) factor, so Parseval holds
// exactly and forward/inverse are adjoint to each other.

namespace dft_detail {

template <class T>
void transform_axis(std::vector<T>& re, std::vector<T>& im, int64_t len, int64_t stride,
                    int64_t total, bool inverse) {
    if (len == 1) return;
    std::vector<double> tw_re(static_cast<size_t>(len)), tw_im(static_cast<size_t>(len));
    const double sign = inverse ? 1.0 : -1.0;
    for (int64_t k = 0; k < len; ++k) {
        double ang = sign * 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(len);
        tw_re[static_cast<size_t>(k)] = std::cos(ang);
        tw_im[static_cast<size_t>(k)] = std::sin(ang);
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(len));
    std::vector<double> buf_re(static_cast<size_t>(len)), buf_im(static_cast<size_t>(len));
    int64_t fibers = total / len;
    for (int64_t f = 0; f < fibers; ++f) {
        // fiber f covers offsets base + j*stride; base enumerates the other axes
        int64_t outer = f / stride, inner = f % stride;
        int64_t base  = outer * len * stride + inner;
        for (int64_t k = 0; k < len; ++k) {
            double ar = 0, ai = 0;
            for (int64_t j = 0; j < len; ++j) {
                int64_t idx = static_cast<int64_t>((j * k) % len);
                double xr = re[static_cast<size_t>(base + j * stride)];
                double xi = im[static_cast<size_t>(base + j * stride)];
                ar += xr * tw_re[static_cast<size_t>(idx)] - xi * tw_im[static_cast<size_t>(idx)];
                ai += xr * tw_im[static_cast<size_t>(idx)] + xi * tw_re[static_cast<size_t>(idx)];
            }
            buf_re[static_cast<size_t>(k)] = ar * norm;
            buf_im[static_cast<size_t>(k)] = ai * norm;
        }
        for (int64_t k = 0; k < len; ++k) {
            re[static_cast<size_t>(base + k * stride)] = static_cast<T>(buf_re[static_cast<size_t>(k)]);
            im[static_cast<size_t>(base + k * stride)] = static_cast<T>(buf_im[static_cast<size_t>(k)]);
        }
    }
}

}  // namespace dft_detail

// In-place 3-D DFT over axes (0,1,2) of a [n,h,w] complex grid stored as
// separate re/im vectors with c interleaved as the innermost stride.
template <class T>
void dft3(std::vector<T>& re, std::vector<T>& im, int64_t n, int64_t h, int64_t w, int64_t c,
          bool inverse) {
    int64_t total = n * h * w * c;
    dft_detail::transform_axis(re, im, w, c, total, inverse);
    dft_detail::transform_axis(re, im, h, w * c, total, inverse);
    dft_detail::transform_axis(re, im, n, h * w * c, total, inverse);
}

}  // namespace filmrestore
