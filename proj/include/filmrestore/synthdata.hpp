#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "filmrestore/errors.hpp"
#include "filmrestore/frame_volume.hpp"
#include "filmrestore/image_io.hpp"
#include "filmrestore/rng.hpp"

namespace filmrestore {

enum class DefectKind { sparse_dust, intensive_dust, cigarette_burn, flicker_scratch, constant_scratch };

inline const char* defect_kind_name(DefectKind k) {
    switch (k) {
        case DefectKind::sparse_dust: return "sparse_dust";
        case DefectKind::intensive_dust: return "intensive_dust";
        case DefectKind::cigarette_burn: return "cigarette_burn";
        case DefectKind::flicker_scratch: return "flicker_scratch";
        case DefectKind::constant_scratch: return "constant_scratch";
    }
    return "?";
}

// Per-defect opacity field plus the colour it is composited with.
struct DefectTemplate {
    Tensor<double> alpha;          // [N, H, W] in [0,1], sparse support
    std::array<double, 3> color{}; // RGB in [0,1]
    DefectKind kind = DefectKind::sparse_dust;
};

struct DefectSample {
    FrameVolume degraded;
    FrameVolume clean;
    Tensor<uint8_t> mask;  // [N, H, W], {0,1}
    std::string caption;
    std::string camera_angle;
    std::string shot_size;
    uint64_t seed = 0;
};

struct DegradeConfig {
    double rescale   = 1.0;  // r in (0,1]; 1.0 skips the resample
    int jpeg_quality = 95;   // q in [1,100]
    double grain     = 0.0;  // zero-mean Gaussian sigma

    void validate() const {
        if (!(rescale > 0.0 && rescale <= 1.0))
            throw ConfigError("degrade: rescale must lie in (0,1]");
        if (grain < 0.0) throw ConfigError("degrade: grain must be >= 0");
        if (jpeg_quality < 1 || jpeg_quality > 100)
            throw ConfigError("degrade: jpeg_quality must lie in [1,100]");
    }
};

namespace detail {

// Orthonormal 8-point DCT-II basis.
struct Dct8 {
    double c[8][8];
    Dct8() {
        for (int k = 0; k < 8; ++k)
            for (int n = 0; n < 8; ++n)
                c[k][n] = (k == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8)) *
                          std::cos((2 * n + 1) * k * 3.14159265358979323846 / 16.0);
    }
};

inline const Dct8& dct8() {
    static const Dct8 d;
    return d;
}

// JPEG Annex K luminance quantisation table.
inline const int* jpeg_luma_table() {
    static const int t[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                              14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                              18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                              49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    return t;
}

// DCT-quantisation round trip on one channel plane, blockwise, with edge
// replication for partial border blocks. Values in the 0..255 domain.
inline void jpeg_roundtrip_plane(std::vector<double>& plane, int64_t H, int64_t W, int quality) {
    const Dct8& d = dct8();
    int s         = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    double q[64];
    for (int i = 0; i < 64; ++i) {
        int v = (jpeg_luma_table()[i] * s + 50) / 100;
        q[i]  = std::clamp(v, 1, 255);
    }
    double blk[8][8], tmp[8][8];
    for (int64_t by = 0; by < H; by += 8)
        for (int64_t bx = 0; bx < W; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    int64_t sy = std::min<int64_t>(by + y, H - 1);
                    int64_t sx = std::min<int64_t>(bx + x, W - 1);
                    blk[y][x]  = plane[static_cast<size_t>(sy * W + sx)] - 128.0;
                }
            // 2-D DCT, quantise, dequantise, inverse
            for (int y = 0; y < 8; ++y)
                for (int k = 0; k < 8; ++k) {
                    double acc = 0;
                    for (int n = 0; n < 8; ++n) acc += d.c[k][n] * blk[y][n];
                    tmp[y][k] = acc;
                }
            for (int x = 0; x < 8; ++x)
                for (int k = 0; k < 8; ++k) {
                    double acc = 0;
                    for (int n = 0; n < 8; ++n) acc += d.c[k][n] * tmp[n][x];
                    blk[k][x] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    double qq = q[y * 8 + x];
                    blk[y][x] = std::round(blk[y][x] / qq) * qq;
                }
            for (int x = 0; x < 8; ++x)
                for (int n = 0; n < 8; ++n) {
                    double acc = 0;
                    for (int k = 0; k < 8; ++k) acc += d.c[k][n] * blk[k][x];
                    tmp[n][x] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int n = 0; n < 8; ++n) {
                    double acc = 0;
                    for (int k = 0; k < 8; ++k) acc += d.c[k][n] * tmp[y][k];
                    if (by + y < H && bx + n < W)
                        plane[static_cast<size_t>((by + y) * W + bx + n)] = acc + 128.0;
                }
        }
}

}  // namespace detail

// Rescale (down-then-up) -> DCT-quantisation round trip -> grain. Output dims
// equal input dims, values clamped to [0,1]. Deterministic given (cfg, seed).
inline FrameVolume degrade_quality(const FrameVolume& clip, const DegradeConfig& cfg,
                                   uint64_t seed = 0) {
    cfg.validate();
    int64_t N = clip.frames(), H = clip.height(), W = clip.width(), C = clip.channels();
    FrameVolume out = clip;

    if (cfg.rescale < 1.0) {
        int64_t dh = std::max<int64_t>(1, static_cast<int64_t>(std::llround(H * cfg.rescale)));
        int64_t dw = std::max<int64_t>(1, static_cast<int64_t>(std::llround(W * cfg.rescale)));
        Tensor<double> down = resize_bilinear(out.data, dh, dw);
        out.data            = resize_bilinear(down, H, W);
    }

    std::vector<double> plane(static_cast<size_t>(H * W));
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x)
                    plane[static_cast<size_t>(y * W + x)] = out.data.at4(n, y, x, c) * 255.0;
            detail::jpeg_roundtrip_plane(plane, H, W, cfg.jpeg_quality);
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x)
                    out.data.at4(n, y, x, c) = plane[static_cast<size_t>(y * W + x)] / 255.0;
        }

    if (cfg.grain > 0.0) {
        Pcg32 rng(seed, 0x67261);
        for (auto& v : out.data.v) v += rng.normal() * cfg.grain;
    }
    out.clamp01();
    return out;
}

// out(p) = (1-a(p)) * clip(p) + a(p) * color, a(p) the max alpha over
// templates at p (the argmax template's colour wins).
inline FrameVolume colorize_and_composite(const FrameVolume& clip,
                                          const std::vector<DefectTemplate>& templates) {
    int64_t N = clip.frames(), H = clip.height(), W = clip.width(), C = clip.channels();
    FrameVolume out = clip;
    std::vector<Tensor<double>> alphas;
    alphas.reserve(templates.size());
    for (const auto& t : templates) {
        if (t.alpha.ndim() != 3 || t.alpha.dim(0) != N)
            throw InputError("composite: template frame count must match clip");
        if (t.alpha.dim(1) == H && t.alpha.dim(2) == W) {
            alphas.push_back(t.alpha);
        } else {
            Tensor<double> a4 = t.alpha.reshaped({N, t.alpha.dim(1), t.alpha.dim(2), 1});
            alphas.push_back(resize_bilinear(a4, H, W).reshaped({N, H, W}));
        }
        if (alphas.back().dim(1) != H || alphas.back().dim(2) != W)
            throw InternalError("composite: dimension mismatch after resize");
    }
    for (int64_t n = 0; n < N; ++n)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                double a  = 0.0;
                int which = -1;
                for (size_t i = 0; i < alphas.size(); ++i) {
                    double av = alphas[i].at3(n, y, x);
                    if (av > a) {
                        a     = av;
                        which = static_cast<int>(i);
                    }
                }
                if (which < 0) continue;
                const auto& col = templates[static_cast<size_t>(which)].color;
                double gray     = (col[0] + col[1] + col[2]) / 3.0;
                for (int64_t c = 0; c < C; ++c) {
                    double cc = C == 3 ? col[static_cast<size_t>(c)] : gray;
                    double& v = out.data.at4(n, y, x, c);
                    v         = (1.0 - a) * v + a * cc;
                }
            }
    out.clamp01();
    return out;
}

// mask(p) = 1 iff max alpha over templates at p is strictly above threshold.
inline Tensor<uint8_t> compute_defect_mask(const std::vector<DefectTemplate>& templates,
                                           int64_t N, int64_t H, int64_t W,
                                           double threshold = 0.02) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ConfigError("compute_defect_mask: threshold must lie in (0,1)");
    Tensor<uint8_t> mask({N, H, W});
    for (const auto& t : templates) {
        if (t.alpha.dim(0) != N || t.alpha.dim(1) != H || t.alpha.dim(2) != W)
            throw InputError("compute_defect_mask: template dims must match");
        for (int64_t i = 0; i < mask.numel(); ++i)
            if (t.alpha[i] > threshold) mask[i] = 1;
    }
    return mask;
}

// ---- procedural defect templates ----

namespace detail {

inline void splat_disk(Tensor<double>& alpha, int64_t n, double cy, double cx, double radius,
                       double peak, double feather) {
    int64_t H = alpha.dim(1), W = alpha.dim(2);
    int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(cy - radius - feather - 1));
    int64_t y1 = std::min(H, static_cast<int64_t>(cy + radius + feather + 2));
    int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(cx - radius - feather - 1));
    int64_t x1 = std::min(W, static_cast<int64_t>(cx + radius + feather + 2));
    for (int64_t y = y0; y < y1; ++y)
        for (int64_t x = x0; x < x1; ++x) {
            double d = std::hypot(y - cy, x - cx);
            double a = peak * std::clamp((radius + feather - d) / feather, 0.0, 1.0);
            double& dst = alpha.at3(n, y, x);
            dst = std::max(dst, a);
        }
}

inline void splat_vline(Tensor<double>& alpha, int64_t n, double cx, double width, double peak) {
    int64_t H = alpha.dim(1), W = alpha.dim(2);
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = std::max<int64_t>(0, static_cast<int64_t>(cx - width));
             x < std::min(W, static_cast<int64_t>(cx + width + 1)); ++x) {
            double a    = peak * std::clamp(width - std::abs(x - cx) + 0.5, 0.0, 1.0);
            double& dst = alpha.at3(n, y, x);
            dst = std::max(dst, std::min(a, 1.0));
        }
}

inline std::array<double, 3> defect_color(Pcg32& rng) {
    double base = rng.uniform() < 0.6 ? rng.uniform(0.02, 0.15) : rng.uniform(0.85, 0.98);
    return {std::clamp(base + rng.uniform(-0.02, 0.02), 0.0, 1.0),
            std::clamp(base + rng.uniform(-0.02, 0.02), 0.0, 1.0),
            std::clamp(base + rng.uniform(-0.02, 0.02), 0.0, 1.0)};
}

}  // namespace detail

inline DefectTemplate generate_defect_template(DefectKind kind, int64_t N, int64_t H, int64_t W,
                                               Pcg32& rng) {
    DefectTemplate t;
    t.kind  = kind;
    t.color = detail::defect_color(rng);
    t.alpha = Tensor<double>::zeros({N, H, W});
    switch (kind) {
        case DefectKind::sparse_dust:
            for (int64_t n = 0; n < N; ++n) {
                int k = 1 + rng.uniform_int(3);
                for (int i = 0; i < k; ++i)
                    detail::splat_disk(t.alpha, n, rng.uniform(0, H - 1), rng.uniform(0, W - 1),
                                       rng.uniform(1.0, 3.0), rng.uniform(0.75, 1.0),
                                       rng.uniform(0.8, 1.6));
            }
            break;
        case DefectKind::intensive_dust:
            for (int64_t n = 0; n < N; ++n) {
                int k = 8 + rng.uniform_int(12);
                for (int i = 0; i < k; ++i)
                    detail::splat_disk(t.alpha, n, rng.uniform(0, H - 1), rng.uniform(0, W - 1),
                                       rng.uniform(0.7, 1.8), rng.uniform(0.6, 1.0),
                                       rng.uniform(0.6, 1.2));
            }
            break;
        case DefectKind::cigarette_burn: {
            double cy = rng.uniform(0.25, 0.75) * H, cx = rng.uniform(0.25, 0.75) * W;
            double r  = rng.uniform(0.08, 0.16) * std::min(H, W);
            int64_t f0 = rng.uniform_int(static_cast<int>(std::max<int64_t>(1, N / 2)));
            int64_t f1 = std::min<int64_t>(N, f0 + 2 + rng.uniform_int(static_cast<int>(N)));
            for (int64_t n = f0; n < f1; ++n) {
                double grow = 1.0 + 0.12 * (n - f0);
                detail::splat_disk(t.alpha, n, cy + rng.uniform(-1, 1), cx + rng.uniform(-1, 1),
                                   r * grow, rng.uniform(0.9, 1.0), 2.0);
            }
            break;
        }
        case DefectKind::flicker_scratch: {
            double x    = rng.uniform(0.1, 0.9) * W;
            double peak = rng.uniform(0.7, 1.0);
            double wdt  = rng.uniform(0.5, 1.2);
            for (int64_t n = 0; n < N; ++n) {
                x += rng.uniform(-1.5, 1.5);
                x = std::clamp(x, 1.0, W - 2.0);
                if (rng.uniform() < 0.55) detail::splat_vline(t.alpha, n, x, wdt, peak);
            }
            break;
        }
        case DefectKind::constant_scratch: {
            double x    = rng.uniform(0.1, 0.9) * W;
            double peak = rng.uniform(0.75, 1.0);
            double wdt  = rng.uniform(0.5, 1.0);
            for (int64_t n = 0; n < N; ++n) {
                x += rng.uniform(-0.4, 0.4);
                x = std::clamp(x, 1.0, W - 2.0);
                detail::splat_vline(t.alpha, n, x, wdt, peak);
            }
            break;
        }
    }
    return t;
}

// ---- sample synthesis ----

struct SynthConfig {
    int64_t min_frames    = 4;
    int defects_min       = 1;
    int defects_max       = 4;
    double mask_threshold = 0.02;
    double rescale_min = 0.85, rescale_max = 1.0;
    int jpeg_min = 70, jpeg_max = 95;
    double grain_min = 0.0, grain_max = 0.02;
    std::string caption;  // empty -> stub caption
    std::string content_hint = "archival footage";
};

struct SynthDetail {
    std::vector<DefectTemplate> templates;  // alphas already thresholded
    DegradeConfig degrade;
};

inline DefectSample synthesize_sample(const FrameVolume& clean, uint64_t seed,
                                      const SynthConfig& cfg, SynthDetail* detail_out = nullptr) {
    if (clean.frames() < cfg.min_frames) throw InputError("synthesize_sample: clip too short");
    int64_t N = clean.frames(), H = clean.height(), W = clean.width();
    Pcg32 rng(seed, 0x5eed);

    DegradeConfig d;
    d.rescale      = rng.uniform(cfg.rescale_min, cfg.rescale_max);
    d.jpeg_quality = cfg.jpeg_min + rng.uniform_int(cfg.jpeg_max - cfg.jpeg_min + 1);
    d.grain        = rng.uniform(cfg.grain_min, cfg.grain_max);

    int n_templates = cfg.defects_min + rng.uniform_int(cfg.defects_max - cfg.defects_min + 1);
    std::vector<DefectTemplate> templates;
    for (int i = 0; i < n_templates; ++i) {
        auto kind = static_cast<DefectKind>(rng.uniform_int(5));
        templates.push_back(generate_defect_template(kind, N, H, W, rng));
        // zero sub-threshold alpha so defects touch exactly the masked pixels
        for (auto& a : templates.back().alpha.v)
            if (a <= cfg.mask_threshold) a = 0.0;
    }

    DefectSample s;
    s.seed     = seed;
    s.clean    = clean;
    s.degraded = colorize_and_composite(degrade_quality(clean, d, seed), templates);
    s.mask     = compute_defect_mask(templates, N, H, W, cfg.mask_threshold);

    static const char* angles[] = {"eye-level", "high-angle", "low-angle"};
    static const char* sizes[]  = {"close-up", "medium", "wide"};
    s.camera_angle = angles[rng.uniform_int(3)];
    s.shot_size    = sizes[rng.uniform_int(3)];
    s.caption = cfg.caption.empty()
                    ? s.shot_size + " " + s.camera_angle + " shot of " + cfg.content_hint
                    : cfg.caption;
    if (detail_out) {
        detail_out->templates = std::move(templates);
        detail_out->degrade   = d;
    }
    return s;
}

// ---- dataset directory layout ----
// <dir>/{degraded/,clean/,mask/,manifest.txt}, frames named %06d.

namespace detail {
inline std::string frame_name(int64_t i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06lld.%s", static_cast<long long>(i), ext);
    return buf;
}
}  // namespace detail

inline void write_sample(const DefectSample& s, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "degraded");
    fs::create_directories(dir / "clean");
    fs::create_directories(dir / "mask");
    int64_t N = s.clean.frames(), H = s.clean.height(), W = s.clean.width();
    for (int64_t i = 0; i < N; ++i) {
        write_image_ppm((dir / "degraded" / detail::frame_name(i, "ppm")).string(), s.degraded.frame(i));
        write_image_ppm((dir / "clean" / detail::frame_name(i, "ppm")).string(), s.clean.frame(i));
        Tensor<uint8_t> m({H, W});
        std::copy(s.mask.v.begin() + i * H * W, s.mask.v.begin() + (i + 1) * H * W, m.v.begin());
        write_mask_pbm((dir / "mask" / detail::frame_name(i, "pbm")).string(), m);
    }
    std::ofstream mf(dir / "manifest.txt");
    if (!mf) throw DatasetError("cannot write manifest in " + dir.string());
    mf << "caption: " << s.caption << "\n";
    mf << "fps: " << s.clean.fps << "\n";
    mf << "camera_angle: " << s.camera_angle << "\n";
    mf << "shot_size: " << s.shot_size << "\n";
    mf << "seed: " << s.seed << "\n";
    mf << "frames: " << N << "\n";
}

inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DatasetError("missing manifest: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        auto pos = line.find(": ");
        if (pos == std::string::npos) continue;
        kv[line.substr(0, pos)] = line.substr(pos + 2);
    }
    return kv;
}

inline DefectSample read_sample(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    auto manifest = read_manifest(dir / "manifest.txt");

    auto list_frames = [&](const char* sub) {
        std::vector<fs::path> out;
        fs::path d = dir / sub;
        if (!fs::exists(d)) throw DatasetError("missing subfolder: " + d.string());
        for (const auto& e : fs::directory_iterator(d)) out.push_back(e.path());
        std::sort(out.begin(), out.end());
        return out;
    };
    auto deg = list_frames("degraded"), cln = list_frames("clean"), msk = list_frames("mask");
    if (deg.empty() || deg.size() != cln.size() || deg.size() != msk.size())
        throw DatasetError("frame-count mismatch between subfolders in " + dir.string());

    DefectSample s;
    int64_t N = static_cast<int64_t>(deg.size());
    for (int64_t i = 0; i < N; ++i) {
        Tensor<double> df = read_image_ppm(deg[static_cast<size_t>(i)].string());
        Tensor<double> cf = read_image_ppm(cln[static_cast<size_t>(i)].string());
        Tensor<uint8_t> mf = read_mask_pbm(msk[static_cast<size_t>(i)].string());
        if (i == 0) {
            int64_t H = df.dim(0), W = df.dim(1);
            int64_t C = df.ndim() == 3 ? df.dim(2) : 1;
            s.degraded = FrameVolume(N, H, W, C);
            s.clean    = FrameVolume(N, H, W, C);
            s.mask     = Tensor<uint8_t>({N, H, W});
        }
        if (df.dim(0) != s.degraded.height() || df.dim(1) != s.degraded.width())
            throw DatasetError("inconsistent frame dims in " + dir.string());
        s.degraded.set_frame(i, df.ndim() == 3 ? df : df.reshaped({df.dim(0), df.dim(1), 1}));
        s.clean.set_frame(i, cf.ndim() == 3 ? cf : cf.reshaped({cf.dim(0), cf.dim(1), 1}));
        std::copy(mf.v.begin(), mf.v.end(), s.mask.v.begin() + i * mf.numel());
    }
    s.caption      = manifest.count("caption") ? manifest["caption"] : "";
    s.camera_angle = manifest.count("camera_angle") ? manifest["camera_angle"] : "";
    s.shot_size    = manifest.count("shot_size") ? manifest["shot_size"] : "";
    if (manifest.count("fps")) {
        s.degraded.fps = s.clean.fps = std::stod(manifest["fps"]);
    }
    if (manifest.count("seed")) s.seed = std::stoull(manifest["seed"]);
    if (manifest.count("frames") && std::stoll(manifest["frames"]) != N)
        throw DatasetError("manifest frame count disagrees with " + dir.string());
    return s;
}

// ---- procedural clean clips (toy content for the desk-scale experiments) ----

struct ToyClip {
    FrameVolume clip;
    std::string description;
};

// Smooth drifting background plus a few feathered moving shapes. Soft edges
// keep the content representable by a stride-8 autoencoder.
inline ToyClip generate_toy_clip(uint64_t seed, int64_t N, int64_t H, int64_t W) {
    Pcg32 rng(seed, 0xc11b);
    ToyClip out;
    out.clip = FrameVolume(N, H, W, 3);

    std::array<double, 3> base{};
    double tone = rng.uniform(0.35, 0.6);
    for (auto& b : base) b = std::clamp(tone + rng.uniform(-0.06, 0.06), 0.1, 0.9);
    double gx = rng.uniform(-0.25, 0.25), gy = rng.uniform(-0.25, 0.25);
    double amp = rng.uniform(0.02, 0.06), fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
    double drift = rng.uniform(-0.3, 0.3);
    double pan_x = rng.uniform(-1.2, 1.2), pan_y = rng.uniform(-0.6, 0.6);

    struct Blob {
        int type;  // 0 disk, 1 rect, 2 vertical bar
        double cy, cx, vy, vx, r, h, w, feather;
        std::array<double, 3> color;
    };
    int n_shapes = 2 + rng.uniform_int(3);
    std::vector<Blob> shapes;
    for (int i = 0; i < n_shapes; ++i) {
        Blob b;
        b.type = rng.uniform_int(3);
        b.cy   = rng.uniform(0.15, 0.85) * H;
        b.cx   = rng.uniform(0.15, 0.85) * W;
        b.vy   = rng.uniform(-1.0, 1.0);
        b.vx   = rng.uniform(-1.5, 1.5);
        b.r    = rng.uniform(0.08, 0.2) * std::min(H, W);
        b.h    = rng.uniform(0.1, 0.3) * H;
        b.w    = b.type == 2 ? rng.uniform(2.0, 4.0) : rng.uniform(0.1, 0.3) * W;
        b.feather = rng.uniform(1.5, 3.0);
        double contrast = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.18, 0.32);
        for (int c = 0; c < 3; ++c)
            b.color[static_cast<size_t>(c)] =
                std::clamp(base[static_cast<size_t>(c)] + contrast + rng.uniform(-0.04, 0.04), 0.05, 0.95);
        shapes.push_back(b);
    }

    for (int64_t n = 0; n < N; ++n) {
        double ox = pan_x * n, oy = pan_y * n;
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                double u = (x + ox) / W - 0.5, v = (y + oy) / H - 0.5;
                double shade = gx * u + gy * v +
                               amp * std::sin(2 * 3.14159265358979323846 * (fx * u + fy * v) + drift * n);
                for (int64_t c = 0; c < 3; ++c)
                    out.clip.data.at4(n, y, x, c) =
                        std::clamp(base[static_cast<size_t>(c)] + shade, 0.05, 0.95);
            }
        for (const auto& b : shapes) {
            double cy = b.cy + b.vy * n - oy, cx = b.cx + b.vx * n - ox;
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    double a = 0;
                    if (b.type == 0) {
                        double d = std::hypot(y - cy, x - cx);
                        a        = std::clamp((b.r - d) / b.feather + 1.0, 0.0, 1.0);
                    } else if (b.type == 1) {
                        double dy = std::abs(y - cy) - b.h / 2, dx = std::abs(x - cx) - b.w / 2;
                        a = std::clamp(1.0 - std::max(dy, dx) / b.feather, 0.0, 1.0);
                    } else {
                        double dx = std::abs(x - cx) - b.w / 2;
                        a         = std::clamp(1.0 - dx / b.feather, 0.0, 1.0);
                    }
                    if (a <= 0) continue;
                    for (int64_t c = 0; c < 3; ++c) {
                        double& dst = out.clip.data.at4(n, y, x, c);
                        dst = (1 - a) * dst + a * b.color[static_cast<size_t>(c)];
                    }
                }
        }
    }
    static const char* names[] = {"disks", "plates", "bars"};
    out.description = std::to_string(n_shapes) + " drifting " +
                      names[shapes[0].type] + " over a soft gradient backdrop";
    return out;
}

}  // namespace filmrestore
