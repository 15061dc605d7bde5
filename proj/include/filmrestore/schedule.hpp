#pragma once

#include <cmath>
#include <vector>

#include "filmrestore/autodiff.hpp"
#include "filmrestore/errors.hpp"
#include "filmrestore/tensor.hpp"

namespace filmrestore {

// DDPM noise schedule: betas in (0,1), monotone non-decreasing, with the
// cumulative alpha-bar products used by the forward process.
struct NoiseSchedule {
    int T = 1000;
    std::vector<double> betas, alphas, alpha_bar;

    explicit NoiseSchedule(std::vector<double> b) : T(static_cast<int>(b.size())), betas(std::move(b)) {
        if (betas.empty()) throw ConfigError("NoiseSchedule: empty betas");
        double prev = 0.0, prod = 1.0;
        for (double beta : betas) {
            if (!(beta > 0.0 && beta < 1.0))
                throw ConfigError("NoiseSchedule: betas must lie in (0,1)");
            if (beta < prev) throw ConfigError("NoiseSchedule: betas must be non-decreasing");
            prev = beta;
            alphas.push_back(1.0 - beta);
            prod *= 1.0 - beta;
            alpha_bar.push_back(prod);
        }
    }

    static NoiseSchedule linear(int T = 1000, double beta_start = 1e-4, double beta_end = 2e-2) {
        std::vector<double> b(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t)
            b[static_cast<size_t>(t)] =
                T == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * t / static_cast<double>(T - 1);
        return NoiseSchedule(std::move(b));
    }

    double abar(int t) const {
        if (t < 0 || t >= T) throw InputError("timestep outside [0,T)");
        return alpha_bar[static_cast<size_t>(t)];
    }
};

// z_t = sqrt(abar) * z0 + sqrt(1-abar) * eps
template <class T>
Tensor<T> forward_mix(const Tensor<T>& z0, const Tensor<T>& eps, double abar) {
    if (!z0.same_shape(eps)) throw InputError("forward_mix: shape mismatch");
    T a = static_cast<T>(std::sqrt(abar)), b = static_cast<T>(std::sqrt(1.0 - abar));
    Tensor<T> out = z0;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a * out.v[i] + b * eps.v[i];
    return out;
}

template <class T>
Tensor<T> add_noise(const Tensor<T>& z0, int t, const Tensor<T>& eps, const NoiseSchedule& s) {
    return forward_mix(z0, eps, s.abar(t));
}

// One-step x0 estimate: z0_hat = (z_t - sqrt(1-abar)*eps_pred) / sqrt(abar)
template <class T>
Tensor<T> z0_estimate(const Tensor<T>& z_t, const Tensor<T>& eps_pred, double abar) {
    T a = static_cast<T>(1.0 / std::sqrt(abar)), b = static_cast<T>(std::sqrt(1.0 - abar));
    Tensor<T> out = z_t;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a * (out.v[i] - b * eps_pred.v[i]);
    return out;
}

// Graph version, used by the defect loss during training.
template <class T>
Var z0_estimate(Graph<T>& g, Var z_t, Var eps_pred, double abar) {
    Var num = g.sub(z_t, g.scale(eps_pred, std::sqrt(1.0 - abar)));
    return g.scale(num, 1.0 / std::sqrt(abar));
}

// Deterministic (eta = 0) DDIM transition from abar_t to abar_prev.
template <class T>
Tensor<T> ddim_step(const Tensor<T>& z_t, const Tensor<T>& eps_pred, double abar_t,
                    double abar_prev) {
    Tensor<T> z0 = z0_estimate(z_t, eps_pred, abar_t);
    return forward_mix(z0, eps_pred, abar_prev);
}

// Strided sub-schedule for the sampler: `steps` timesteps, descending,
// including both endpoints T-1 and 0.
inline std::vector<int> ddim_taus(int T, int steps) {
    if (steps < 1 || T < 1) throw ConfigError("ddim_taus: want steps >= 1, T >= 1");
    std::vector<int> taus;
    if (steps == 1) {
        taus.push_back(T - 1);
        return taus;
    }
    for (int k = steps - 1; k >= 0; --k)
        taus.push_back(static_cast<int>(std::llround(static_cast<double>(k) * (T - 1) /
                                                     static_cast<double>(steps - 1))));
    // strictly decreasing even when steps > T
    std::vector<int> out;
    for (int t : taus)
        if (out.empty() || t < out.back()) out.push_back(t);
    return out;
}

}  // namespace filmrestore
