#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "filmrestore/tensor.hpp"

namespace filmrestore {

using Var = int32_t;

// Reverse-mode tape. Nodes are appended in topological order, so backward is a
// single reverse sweep. Backward closures are only recorded on nodes whose
// result actually influences a differentiable leaf; forward-only evaluation
// (inference) therefore skips all closure bookkeeping.
template <class T>
class Graph {
  public:
    struct Node {
        Tensor<T> val;
        Tensor<T> grad;  // allocated lazily
        bool needs = false;
        std::function<void(Graph&, Var)> back;  // empty for leaves / no-grad nodes
    };

    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

    Var leaf(Tensor<T> value, bool requires_grad = false) {
        Node n;
        n.val   = std::move(value);
        n.needs = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    const Tensor<T>& val(Var v) const { return nodes_[static_cast<size_t>(v)].val; }
    Tensor<T>& val_mut(Var v) { return nodes_[static_cast<size_t>(v)].val; }
    bool wants(Var v) const { return nodes_[static_cast<size_t>(v)].needs; }

    Tensor<T>& grad(Var v) {
        Node& n = nodes_[static_cast<size_t>(v)];
        if (n.grad.shape.empty() && !n.val.shape.empty()) n.grad = Tensor<T>::zeros(n.val.shape);
        return n.grad;
    }

    // Generic node builder; composite modules register custom ops through it.
    Var node(Tensor<T> value, std::vector<Var> parents, std::function<void(Graph&, Var)> back) {
        bool needs = false;
        for (Var p : parents) needs = needs || wants(p);
        Node n;
        n.val   = std::move(value);
        n.needs = needs;
        if (needs) n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    void backward(Var root) {
        if (val(root).numel() != 1) throw InternalError("backward: root must be scalar");
        grad(root).v[0] = T(1);
        for (int64_t i = root; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back && !n.grad.shape.empty()) n.back(*this, static_cast<Var>(i));
        }
    }

    // ---- elementwise ----

    Var add(Var a, Var b) {
        const Tensor<T>&x = val(a), &y = val(b);
        if (!x.same_shape(y)) throw InternalError("add: shape mismatch");
        Tensor<T> out = x;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += y.v[i];
        return node(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) g.grad(a) += go;
            if (g.wants(b)) g.grad(b) += go;
        });
    }

    Var sub(Var a, Var b) {
        const Tensor<T>&x = val(a), &y = val(b);
        if (!x.same_shape(y)) throw InternalError("sub: shape mismatch");
        Tensor<T> out = x;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= y.v[i];
        return node(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) g.grad(a) += go;
            if (g.wants(b)) {
                Tensor<T>& gb = g.grad(b);
                for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] -= go.v[i];
            }
        });
    }

    Var mul(Var a, Var b) {
        const Tensor<T>&x = val(a), &y = val(b);
        if (!x.same_shape(y)) throw InternalError("mul: shape mismatch");
        Tensor<T> out = x;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= y.v[i];
        return node(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) {
                Tensor<T>& ga      = g.grad(a);
                const Tensor<T>& y = g.val(b);
                for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += go.v[i] * y.v[i];
            }
            if (g.wants(b)) {
                Tensor<T>& gb      = g.grad(b);
                const Tensor<T>& x = g.val(a);
                for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += go.v[i] * x.v[i];
            }
        });
    }

    Var scale(Var a, double s) {
        Tensor<T> out = val(a);
        for (auto& x : out.v) x = static_cast<T>(x * s);
        return node(std::move(out), {a}, [a, s](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += static_cast<T>(go.v[i] * s);
        });
    }

    Var add_scalar(Var a, double s) {
        Tensor<T> out = val(a);
        for (auto& x : out.v) x = static_cast<T>(x + s);
        return node(std::move(out), {a},
                    [a](Graph& g, Var self) { g.grad(a) += g.grad(self); });
    }

    Var sigmoid(Var a) {
        Tensor<T> out = val(a);
        for (auto& x : out.v) x = T(1) / (T(1) + std::exp(-x));
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            const Tensor<T>& y  = g.val(self);
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i)
                ga.v[i] += go.v[i] * y.v[i] * (T(1) - y.v[i]);
        });
    }

    Var silu(Var a) {
        const Tensor<T>& x = val(a);
        Tensor<T> out      = x;
        for (auto& t : out.v) {
            T s = T(1) / (T(1) + std::exp(-t));
            t   = t * s;
        }
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            const Tensor<T>& x  = g.val(a);
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i) {
                T s = T(1) / (T(1) + std::exp(-x.v[i]));
                ga.v[i] += go.v[i] * (s + x.v[i] * s * (T(1) - s));
            }
        });
    }

    Var abs_(Var a) {
        Tensor<T> out = val(a);
        for (auto& x : out.v) x = std::abs(x);
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            const Tensor<T>& x  = g.val(a);
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i)
                ga.v[i] += x.v[i] > T(0) ? go.v[i] : (x.v[i] < T(0) ? -go.v[i] : T(0));
        });
    }

    // 1/sqrt(x + eps)
    Var rsqrt_eps(Var a, double eps) {
        Tensor<T> out = val(a);
        for (auto& x : out.v) x = T(1) / std::sqrt(x + static_cast<T>(eps));
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            const Tensor<T>& y  = g.val(self);
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i)
                ga.v[i] += go.v[i] * T(-0.5) * y.v[i] * y.v[i] * y.v[i];
        });
    }

    // ---- shape ----

    Var reshape(Var a, Shape s) {
        if (numel_of(s) != val(a).numel()) throw InternalError("reshape: numel mismatch");
        Tensor<T> out = val(a);
        out.shape     = s;
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += go.v[i];
        });
    }

    Var permute(Var a, std::vector<int> perm) {
        const Tensor<T>& x = val(a);
        int nd             = x.ndim();
        if (static_cast<int>(perm.size()) != nd) throw InternalError("permute: rank mismatch");
        Shape oshape(static_cast<size_t>(nd));
        for (int i = 0; i < nd; ++i) oshape[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);
        Tensor<T> out(oshape);
        permute_copy(x, out, perm, false);
        return node(std::move(out), {a}, [a, perm](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            permute_copy(go, ga, perm, true);
        });
    }

    Var concat(const std::vector<Var>& parts, int axis) {
        if (parts.empty()) throw InternalError("concat: empty");
        const Tensor<T>& first = val(parts[0]);
        int nd                 = first.ndim();
        Shape oshape           = first.shape;
        int64_t total          = 0;
        for (Var p : parts) total += val(p).dim(axis);
        oshape[static_cast<size_t>(axis)] = total;
        // outer = product of dims before axis, inner = product after
        int64_t outer = 1, inner = 1;
        for (int i = 0; i < axis; ++i) outer *= first.dim(i);
        for (int i = axis + 1; i < nd; ++i) inner *= first.dim(i);
        Tensor<T> out(oshape);
        int64_t off = 0;
        for (Var p : parts) {
            const Tensor<T>& x = val(p);
            int64_t ax         = x.dim(axis);
            for (int64_t o = 0; o < outer; ++o)
                std::copy(x.v.begin() + o * ax * inner, x.v.begin() + (o + 1) * ax * inner,
                          out.v.begin() + (o * total + off) * inner);
            off += ax;
        }
        std::vector<Var> ps = parts;
        return node(std::move(out), ps, [ps, axis, outer, inner, total](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            int64_t off         = 0;
            for (Var p : ps) {
                int64_t ax = g.val(p).dim(axis);
                if (g.wants(p)) {
                    Tensor<T>& gp = g.grad(p);
                    for (int64_t o = 0; o < outer; ++o) {
                        const T* src = go.data() + (o * total + off) * inner;
                        T* dst       = gp.data() + o * ax * inner;
                        for (int64_t i = 0; i < ax * inner; ++i) dst[i] += src[i];
                    }
                }
                off += ax;
            }
        });
    }

    Var slice(Var a, int axis, int64_t start, int64_t len) {
        const Tensor<T>& x = val(a);
        int nd             = x.ndim();
        int64_t outer = 1, inner = 1;
        for (int i = 0; i < axis; ++i) outer *= x.dim(i);
        for (int i = axis + 1; i < nd; ++i) inner *= x.dim(i);
        int64_t ax   = x.dim(axis);
        Shape oshape = x.shape;
        oshape[static_cast<size_t>(axis)] = len;
        Tensor<T> out(oshape);
        for (int64_t o = 0; o < outer; ++o)
            std::copy(x.v.begin() + (o * ax + start) * inner, x.v.begin() + (o * ax + start + len) * inner,
                      out.v.begin() + o * len * inner);
        return node(std::move(out), {a}, [a, axis, start, len, outer, inner, ax](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t o = 0; o < outer; ++o) {
                const T* src = go.data() + o * len * inner;
                T* dst       = ga.data() + (o * ax + start) * inner;
                for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
            }
        });
    }

    // ---- reductions / broadcasts (2-D views [R, C]) ----

    Var rowsum(Var a) {
        const Tensor<T>& x = val(a);
        if (x.ndim() != 2) throw InternalError("rowsum: want 2-D");
        int64_t r = x.dim(0), c = x.dim(1);
        Tensor<T> out({r});
        for (int64_t i = 0; i < r; ++i) {
            T s = 0;
            for (int64_t j = 0; j < c; ++j) s += x.at2(i, j);
            out[i] = s;
        }
        return node(std::move(out), {a}, [a, r, c](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t i = 0; i < r; ++i)
                for (int64_t j = 0; j < c; ++j) ga.at2(i, j) += go[i];
        });
    }

    Var rowmean(Var a) { return scale(rowsum(a), 1.0 / static_cast<double>(val(a).dim(1))); }

    Var sum_all(Var a) {
        const Tensor<T>& x = val(a);
        Tensor<T> out({1});
        T s = 0;
        for (T t : x.v) s += t;
        out[0] = s;
        return node(std::move(out), {a}, [a](Graph& g, Var self) {
            T go          = g.grad(self)[0];
            Tensor<T>& ga = g.grad(a);
            for (auto& t : ga.v) t += go;
        });
    }

    Var mean_all(Var a) { return scale(sum_all(a), 1.0 / static_cast<double>(val(a).numel())); }

    // x[R,C] op s[R], broadcast along columns
    Var add_colbcast(Var a, Var s) { return colbcast_impl(a, s, /*mul=*/false, /*neg=*/false); }
    Var sub_colbcast(Var a, Var s) { return colbcast_impl(a, s, /*mul=*/false, /*neg=*/true); }
    Var mul_colbcast(Var a, Var s) { return colbcast_impl(a, s, /*mul=*/true, /*neg=*/false); }

    // x[R,C] op b[C], broadcast along rows
    Var add_rowbcast(Var a, Var b) { return rowbcast_impl(a, b, /*mul=*/false); }
    Var mul_rowbcast(Var a, Var b) { return rowbcast_impl(a, b, /*mul=*/true); }

    // ---- matmul ----

    Var matmul(Var a, Var b) {
        Tensor<T> out = filmrestore::matmul(val(a), val(b));
        return node(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) matmul_a_bt_acc(go, g.val(b), g.grad(a));
            if (g.wants(b)) matmul_at_b_acc(g.val(a), go, g.grad(b));
        });
    }

    // Batched matmul: a[B,M,K] * b[B,K,N] -> [B,M,N]
    Var bmm(Var a, Var b) {
        const Tensor<T>&x = val(a), &y = val(b);
        if (x.ndim() != 3 || y.ndim() != 3 || x.dim(0) != y.dim(0) || x.dim(2) != y.dim(1))
            throw InternalError("bmm: bad shapes");
        int64_t B = x.dim(0), M = x.dim(1), K = x.dim(2), N = y.dim(2);
        Tensor<T> out({B, M, N});
        using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        for (int64_t i = 0; i < B; ++i) {
            Eigen::Map<const Mat> ma(x.data() + i * M * K, M, K);
            Eigen::Map<const Mat> mb(y.data() + i * K * N, K, N);
            Eigen::Map<Mat> mo(out.data() + i * M * N, M, N);
            mo.noalias() = ma * mb;
        }
        return node(std::move(out), {a, b}, [a, b, B, M, K, N](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            if (g.wants(a)) {
                Tensor<T>& ga      = g.grad(a);
                const Tensor<T>& y = g.val(b);
                for (int64_t i = 0; i < B; ++i) {
                    Eigen::Map<const Mat> mg(go.data() + i * M * N, M, N);
                    Eigen::Map<const Mat> mb(y.data() + i * K * N, K, N);
                    Eigen::Map<Mat> mga(ga.data() + i * M * K, M, K);
                    mga.noalias() += mg * mb.transpose();
                }
            }
            if (g.wants(b)) {
                Tensor<T>& gb      = g.grad(b);
                const Tensor<T>& x = g.val(a);
                for (int64_t i = 0; i < B; ++i) {
                    Eigen::Map<const Mat> mg(go.data() + i * M * N, M, N);
                    Eigen::Map<const Mat> ma(x.data() + i * M * K, M, K);
                    Eigen::Map<Mat> mgb(gb.data() + i * K * N, K, N);
                    mgb.noalias() += ma.transpose() * mg;
                }
            }
        });
    }

    // [..., M, N] -> [..., N, M] for 2-D and 3-D tensors
    Var transpose_last(Var a) {
        const Tensor<T>& x = val(a);
        if (x.ndim() == 2) return permute(a, {1, 0});
        if (x.ndim() == 3) return permute(a, {0, 2, 1});
        throw InternalError("transpose_last: want 2-D or 3-D");
    }

    // ---- softmax ----

    // Softmax over the last dim. Optional additive mask, shape either equal to
    // x or [C] (broadcast over rows); use large negative values to mask out.
    Var softmax_lastdim(Var a, const Tensor<T>* mask = nullptr) {
        const Tensor<T>& x = val(a);
        int64_t c          = x.dim(x.ndim() - 1);
        int64_t r          = x.numel() / c;
        bool mask_full     = mask && mask->numel() == x.numel();
        if (mask && !mask_full && mask->numel() != c)
            throw InternalError("softmax: mask shape");
        Tensor<T> out = x;
        for (int64_t i = 0; i < r; ++i) {
            T* row = out.data() + i * c;
            if (mask) {
                const T* m = mask_full ? mask->data() + i * c : mask->data();
                for (int64_t j = 0; j < c; ++j) row[j] += m[j];
            }
            T mx = row[0];
            for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
            T s = 0;
            for (int64_t j = 0; j < c; ++j) {
                row[j] = std::exp(row[j] - mx);
                s += row[j];
            }
            for (int64_t j = 0; j < c; ++j) row[j] /= s;
        }
        return node(std::move(out), {a}, [a, r, c](Graph& g, Var self) {
            const Tensor<T>& y  = g.val(self);
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t i = 0; i < r; ++i) {
                const T* yr = y.data() + i * c;
                const T* gr = go.data() + i * c;
                T dot       = 0;
                for (int64_t j = 0; j < c; ++j) dot += yr[j] * gr[j];
                T* out = ga.data() + i * c;
                for (int64_t j = 0; j < c; ++j) out[j] += (gr[j] - dot) * yr[j];
            }
        });
    }

    // ---- image ops (channels-last [n, H, W, C]) ----

    // Patches of size kh*kw gathered into rows: out[n, OH*OW, kh*kw*C].
    Var im2col(Var a, int kh, int kw, int sh, int sw, int ph, int pw) {
        const Tensor<T>& x = val(a);
        if (x.ndim() != 4) throw InternalError("im2col: want 4-D");
        int64_t n = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
        int64_t OH = (H + 2 * ph - kh) / sh + 1;
        int64_t OW = (W + 2 * pw - kw) / sw + 1;
        Tensor<T> out({n, OH * OW, kh * kw * C});
        im2col_copy(x, out, kh, kw, sh, sw, ph, pw, OH, OW);
        return node(std::move(out), {a}, [a, kh, kw, sh, sw, ph, pw, OH, OW](Graph& g, Var self) {
            col2im_acc(g.grad(self), g.grad(a), kh, kw, sh, sw, ph, pw, OH, OW);
        });
    }

    Var upsample_nearest2(Var a) {
        const Tensor<T>& x = val(a);
        int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        Tensor<T> out({n, h * 2, w * 2, c});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t y = 0; y < h * 2; ++y)
                for (int64_t xx = 0; xx < w * 2; ++xx) {
                    const T* src = &x.at4(i, y / 2, xx / 2, 0);
                    T* dst       = &out.at4(i, y, xx, 0);
                    std::copy(src, src + c, dst);
                }
        return node(std::move(out), {a}, [a, n, h, w, c](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t i = 0; i < n; ++i)
                for (int64_t y = 0; y < h * 2; ++y)
                    for (int64_t xx = 0; xx < w * 2; ++xx) {
                        const T* src = &go.at4(i, y, xx, 0);
                        T* dst       = &ga.at4(i, y / 2, xx / 2, 0);
                        for (int64_t k = 0; k < c; ++k) dst[k] += src[k];
                    }
        });
    }

    Var avgpool2(Var a) {
        const Tensor<T>& x = val(a);
        int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        int64_t oh = h / 2, ow = w / 2;
        Tensor<T> out({n, oh, ow, c});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t xx = 0; xx < ow; ++xx)
                    for (int64_t k = 0; k < c; ++k)
                        out.at4(i, y, xx, k) =
                            (x.at4(i, 2 * y, 2 * xx, k) + x.at4(i, 2 * y, 2 * xx + 1, k) +
                             x.at4(i, 2 * y + 1, 2 * xx, k) + x.at4(i, 2 * y + 1, 2 * xx + 1, k)) /
                            T(4);
        return node(std::move(out), {a}, [a, n, oh, ow, c](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t i = 0; i < n; ++i)
                for (int64_t y = 0; y < oh; ++y)
                    for (int64_t xx = 0; xx < ow; ++xx)
                        for (int64_t k = 0; k < c; ++k) {
                            T v = go.at4(i, y, xx, k) / T(4);
                            ga.at4(i, 2 * y, 2 * xx, k) += v;
                            ga.at4(i, 2 * y, 2 * xx + 1, k) += v;
                            ga.at4(i, 2 * y + 1, 2 * xx, k) += v;
                            ga.at4(i, 2 * y + 1, 2 * xx + 1, k) += v;
                        }
        });
    }

    Var reflect_pad2(Var a, int pt, int pb, int pl, int pr) {
        const Tensor<T>& x = val(a);
        int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        Tensor<T> out({n, h + pt + pb, w + pl + pr, c});
        auto refl = [](int64_t i, int64_t lo, int64_t n_) {
            int64_t j = i - lo;
            if (j < 0) j = -j;
            if (j >= n_) j = 2 * n_ - 2 - j;
            return j;
        };
        for (int64_t i = 0; i < n; ++i)
            for (int64_t y = 0; y < h + pt + pb; ++y)
                for (int64_t xx = 0; xx < w + pl + pr; ++xx) {
                    const T* src = &x.at4(i, refl(y, pt, h), refl(xx, pl, w), 0);
                    std::copy(src, src + c, &out.at4(i, y, xx, 0));
                }
        return node(std::move(out), {a}, [a, pt, pb, pl, pr, n, h, w, c, refl](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& ga       = g.grad(a);
            for (int64_t i = 0; i < n; ++i)
                for (int64_t y = 0; y < h + pt + pb; ++y)
                    for (int64_t xx = 0; xx < w + pl + pr; ++xx) {
                        const T* src = &go.at4(i, y, xx, 0);
                        T* dst       = &ga.at4(i, refl(y, pt, h), refl(xx, pl, w), 0);
                        for (int64_t k = 0; k < c; ++k) dst[k] += src[k];
                    }
        });
    }

    // Embedding lookup: table[V, D] gathered by ids -> [len(ids), D].
    Var gather_rows(Var table, std::vector<int64_t> ids) {
        const Tensor<T>& tb = val(table);
        int64_t d           = tb.dim(1);
        Tensor<T> out({static_cast<int64_t>(ids.size()), d});
        for (size_t i = 0; i < ids.size(); ++i)
            std::copy(tb.data() + ids[i] * d, tb.data() + (ids[i] + 1) * d, out.data() + static_cast<int64_t>(i) * d);
        return node(std::move(out), {table}, [table, ids, d](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            Tensor<T>& gt       = g.grad(table);
            for (size_t i = 0; i < ids.size(); ++i) {
                const T* src = go.data() + static_cast<int64_t>(i) * d;
                T* dst       = gt.data() + ids[i] * d;
                for (int64_t k = 0; k < d; ++k) dst[k] += src[k];
            }
        });
    }

  private:
    std::vector<Node> nodes_;

    Var colbcast_impl(Var a, Var s, bool mul_mode, bool neg) {
        const Tensor<T>&x = val(a), &sc = val(s);
        if (x.ndim() != 2 || sc.numel() != x.dim(0)) throw InternalError("colbcast: shapes");
        int64_t r = x.dim(0), c = x.dim(1);
        Tensor<T> out = x;
        for (int64_t i = 0; i < r; ++i) {
            T sv   = neg ? -sc[i] : sc[i];
            T* row = out.data() + i * c;
            for (int64_t j = 0; j < c; ++j) row[j] = mul_mode ? row[j] * sv : row[j] + sv;
        }
        return node(std::move(out), {a, s}, [a, s, r, c, mul_mode, neg](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) {
                Tensor<T>& ga = g.grad(a);
                if (mul_mode) {
                    const Tensor<T>& sc = g.val(s);
                    for (int64_t i = 0; i < r; ++i)
                        for (int64_t j = 0; j < c; ++j) ga.at2(i, j) += go.at2(i, j) * sc[i];
                } else {
                    for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += go.v[i];
                }
            }
            if (g.wants(s)) {
                Tensor<T>& gs = g.grad(s);
                if (mul_mode) {
                    const Tensor<T>& x = g.val(a);
                    for (int64_t i = 0; i < r; ++i) {
                        T acc = 0;
                        for (int64_t j = 0; j < c; ++j) acc += go.at2(i, j) * x.at2(i, j);
                        gs[i] += acc;
                    }
                } else {
                    for (int64_t i = 0; i < r; ++i) {
                        T acc = 0;
                        for (int64_t j = 0; j < c; ++j) acc += go.at2(i, j);
                        gs[i] += neg ? -acc : acc;
                    }
                }
            }
        });
    }

    Var rowbcast_impl(Var a, Var b, bool mul_mode) {
        const Tensor<T>&x = val(a), &bb = val(b);
        if (x.ndim() != 2 || bb.numel() != x.dim(1)) throw InternalError("rowbcast: shapes");
        int64_t r = x.dim(0), c = x.dim(1);
        Tensor<T> out = x;
        for (int64_t i = 0; i < r; ++i) {
            T* row = out.data() + i * c;
            for (int64_t j = 0; j < c; ++j) row[j] = mul_mode ? row[j] * bb[j] : row[j] + bb[j];
        }
        return node(std::move(out), {a, b}, [a, b, r, c, mul_mode](Graph& g, Var self) {
            const Tensor<T>& go = g.grad(self);
            if (g.wants(a)) {
                Tensor<T>& ga = g.grad(a);
                if (mul_mode) {
                    const Tensor<T>& bb = g.val(b);
                    for (int64_t i = 0; i < r; ++i)
                        for (int64_t j = 0; j < c; ++j) ga.at2(i, j) += go.at2(i, j) * bb[j];
                } else {
                    for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += go.v[i];
                }
            }
            if (g.wants(b)) {
                Tensor<T>& gb = g.grad(b);
                if (mul_mode) {
                    const Tensor<T>& x = g.val(a);
                    for (int64_t i = 0; i < r; ++i)
                        for (int64_t j = 0; j < c; ++j) gb[j] += go.at2(i, j) * x.at2(i, j);
                } else {
                    for (int64_t i = 0; i < r; ++i)
                        for (int64_t j = 0; j < c; ++j) gb[j] += go.at2(i, j);
                }
            }
        });
    }

    static void permute_copy(const Tensor<T>& src, Tensor<T>& dst, const std::vector<int>& perm,
                             bool invert) {
        int nd = src.ndim();
        Shape in_shape = invert ? dst.shape : src.shape;
        std::vector<int64_t> in_strides(static_cast<size_t>(nd), 1), out_strides(static_cast<size_t>(nd), 1);
        Shape out_shape(static_cast<size_t>(nd));
        for (int i = 0; i < nd; ++i) out_shape[static_cast<size_t>(i)] = in_shape[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        for (int i = nd - 2; i >= 0; --i) {
            in_strides[static_cast<size_t>(i)]  = in_strides[static_cast<size_t>(i + 1)] * in_shape[static_cast<size_t>(i + 1)];
            out_strides[static_cast<size_t>(i)] = out_strides[static_cast<size_t>(i + 1)] * out_shape[static_cast<size_t>(i + 1)];
        }
        int64_t n = numel_of(in_shape);
        std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
        for (int64_t lin = 0; lin < n; ++lin) {
            int64_t rem = lin;
            int64_t out_off = 0;
            for (int i = 0; i < nd; ++i) {
                idx[static_cast<size_t>(i)] = rem / in_strides[static_cast<size_t>(i)];
                rem %= in_strides[static_cast<size_t>(i)];
            }
            for (int i = 0; i < nd; ++i) out_off += idx[static_cast<size_t>(perm[static_cast<size_t>(i)])] * out_strides[static_cast<size_t>(i)];
            if (invert)
                dst.v[static_cast<size_t>(lin)] += src.v[static_cast<size_t>(out_off)];
            else
                dst.v[static_cast<size_t>(out_off)] = src.v[static_cast<size_t>(lin)];
        }
    }

    static void im2col_copy(const Tensor<T>& x, Tensor<T>& out, int kh, int kw, int sh, int sw,
                            int ph, int pw, int64_t OH, int64_t OW) {
        int64_t n = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    T* dst = out.data() + ((i * OH * OW) + oy * OW + ox) * (kh * kw * C);
                    for (int ky = 0; ky < kh; ++ky) {
                        int64_t yy = oy * sh - ph + ky;
                        for (int kx = 0; kx < kw; ++kx) {
                            int64_t xx = ox * sw - pw + kx;
                            T* d       = dst + (ky * kw + kx) * C;
                            if (yy < 0 || yy >= H || xx < 0 || xx >= W) {
                                std::fill(d, d + C, T(0));
                            } else {
                                const T* s = &x.at4(i, yy, xx, 0);
                                std::copy(s, s + C, d);
                            }
                        }
                    }
                }
    }

    static void col2im_acc(const Tensor<T>& gcol, Tensor<T>& gx, int kh, int kw, int sh, int sw,
                           int ph, int pw, int64_t OH, int64_t OW) {
        int64_t n = gx.dim(0), H = gx.dim(1), W = gx.dim(2), C = gx.dim(3);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    const T* src = gcol.data() + ((i * OH * OW) + oy * OW + ox) * (kh * kw * C);
                    for (int ky = 0; ky < kh; ++ky) {
                        int64_t yy = oy * sh - ph + ky;
                        if (yy < 0 || yy >= H) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int64_t xx = ox * sw - pw + kx;
                            if (xx < 0 || xx >= W) continue;
                            const T* s = src + (ky * kw + kx) * C;
                            T* d       = &gx.at4(i, yy, xx, 0);
                            for (int64_t k = 0; k < C; ++k) d[k] += s[k];
                        }
                    }
                }
    }
};

}  // namespace filmrestore
