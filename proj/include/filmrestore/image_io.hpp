#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "filmrestore/errors.hpp"
#include "filmrestore/tensor.hpp"

namespace filmrestore {

// Binary PNM readers/writers. 8-bit P6/P5 for frames (lossless given the 8-bit
// quantisation), 1-bit P4 for masks (bit-exact).

inline uint8_t quantize8(double v) {
    double q = std::round(v * 255.0);
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    return static_cast<uint8_t>(q);
}

// img [H,W,3] in [0,1] -> P6, or [H,W] -> P5.
inline void write_image_ppm(const std::string& path, const Tensor<double>& img) {
    bool color = img.ndim() == 3;
    if (color && img.dim(2) != 3) throw InputError("write_image_ppm: want [H,W,3] or [H,W]");
    int64_t h = img.dim(0), w = img.dim(1);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open for write: " + path);
    f << (color ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(w * (color ? 3 : 1)));
    for (int64_t y = 0; y < h; ++y) {
        const double* src = img.data() + y * w * (color ? 3 : 1);
        for (size_t i = 0; i < row.size(); ++i) row[i] = quantize8(src[i]);
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw DatasetError("short write: " + path);
}

namespace detail {
inline int pnm_int(std::istream& f) {
    int c = f.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = f.get();
        c = f.get();
    }
    int v = 0;
    while (std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = f.get();
    }
    return v;
}
}  // namespace detail

inline Tensor<double> read_image_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open: " + path);
    char p, kind;
    f.get(p);
    f.get(kind);
    if (p != 'P' || (kind != '6' && kind != '5')) throw DatasetError("not a P5/P6 file: " + path);
    bool color = kind == '6';
    int64_t w = detail::pnm_int(f), h = detail::pnm_int(f), maxval = detail::pnm_int(f);
    if (w <= 0 || h <= 0 || maxval != 255) throw DatasetError("unsupported PNM header: " + path);
    Tensor<double> img(color ? Shape{h, w, 3} : Shape{h, w});
    std::vector<uint8_t> row(static_cast<size_t>(w * (color ? 3 : 1)));
    for (int64_t y = 0; y < h; ++y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!f) throw DatasetError("truncated PNM: " + path);
        double* dst = img.data() + y * w * (color ? 3 : 1);
        for (size_t i = 0; i < row.size(); ++i) dst[i] = row[i] / 255.0;
    }
    return img;
}

// mask [H,W], values {0,1} -> P4 (1 bit per pixel, MSB first, 1 = set).
inline void write_mask_pbm(const std::string& path, const Tensor<uint8_t>& mask) {
    int64_t h = mask.dim(0), w = mask.dim(1);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open for write: " + path);
    f << "P4\n" << w << " " << h << "\n";
    int64_t rowbytes = (w + 7) / 8;
    std::vector<uint8_t> row(static_cast<size_t>(rowbytes));
    for (int64_t y = 0; y < h; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int64_t x = 0; x < w; ++x)
            if (mask.at2(y, x)) row[static_cast<size_t>(x / 8)] |= static_cast<uint8_t>(0x80u >> (x % 8));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw DatasetError("short write: " + path);
}

inline Tensor<uint8_t> read_mask_pbm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open: " + path);
    char p, kind;
    f.get(p);
    f.get(kind);
    if (p != 'P' || kind != '4') throw DatasetError("not a P4 file: " + path);
    int64_t w = detail::pnm_int(f), h = detail::pnm_int(f);
    if (w <= 0 || h <= 0) throw DatasetError("bad PBM header: " + path);
    Tensor<uint8_t> mask({h, w});
    int64_t rowbytes = (w + 7) / 8;
    std::vector<uint8_t> row(static_cast<size_t>(rowbytes));
    for (int64_t y = 0; y < h; ++y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!f) throw DatasetError("truncated PBM: " + path);
        for (int64_t x = 0; x < w; ++x)
            mask.at2(y, x) = (row[static_cast<size_t>(x / 8)] >> (7 - x % 8)) & 1u;
    }
    return mask;
}

}  // namespace filmrestore
