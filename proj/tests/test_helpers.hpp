#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "filmrestore/autodiff.hpp"
#include "filmrestore/rng.hpp"

namespace testutil {

using filmrestore::Graph;
using filmrestore::Pcg32;
using filmrestore::Tensor;
using filmrestore::Var;

// Central finite differences of a scalar graph vs backprop, w.r.t. one leaf.
// build(g, x) constructs the graph and returns the scalar root Var.
// Returns the max relative error over input entries.
inline double gradcheck_fn(const std::function<Var(Graph<double>&, Var)>& build,
                           const Tensor<double>& x0, double h = 1e-5, double floor = 1e-7) {
    Graph<double> g;
    Var x    = g.leaf(x0, true);
    Var root = build(g, x);
    g.backward(root);
    Tensor<double> analytic = g.grad(x);

    double max_rel    = 0;
    Tensor<double> xp = x0;
    for (int64_t i = 0; i < x0.numel(); ++i) {
        xp.v[static_cast<size_t>(i)] = x0.v[static_cast<size_t>(i)] + h;
        Graph<double> gp;
        double fp = gp.val(build(gp, gp.leaf(xp)))[0];
        xp.v[static_cast<size_t>(i)] = x0.v[static_cast<size_t>(i)] - h;
        Graph<double> gm;
        double fm = gm.val(build(gm, gm.leaf(xp)))[0];
        xp.v[static_cast<size_t>(i)] = x0.v[static_cast<size_t>(i)];

        double num   = (fp - fm) / (2 * h);
        double denom = std::max({std::abs(num), std::abs(analytic[i]), floor});
        max_rel      = std::max(max_rel, std::abs(num - analytic[i]) / denom);
    }
    return max_rel;
}

}  // namespace testutil
