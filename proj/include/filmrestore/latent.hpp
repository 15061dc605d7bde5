#pragma once

#include "filmrestore/tensor.hpp"

namespace filmrestore {

// Encoded feature grid [n frames, h, w, c] at 1/stride spatial resolution.
// orig_h/orig_w remember the pre-pad pixel dims so decode can crop.
template <class T>
struct LatentVolume {
    Tensor<T> data;
    int64_t stride = 8;
    int64_t orig_h = 0, orig_w = 0;

    int64_t frames() const { return data.dim(0); }
    int64_t h() const { return data.dim(1); }
    int64_t w() const { return data.dim(2); }
    int64_t channels() const { return data.dim(3); }
};

}  // namespace filmrestore
