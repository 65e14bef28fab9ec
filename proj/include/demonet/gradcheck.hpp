#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "demonet/errors.hpp"
#include "demonet/random.hpp"
#include "demonet/tape.hpp"

namespace demonet {

template <typename Real>
using Objective = std::function<Var(Tape<Real>&, std::span<const Var>)>;

struct GradCheckOptions {
    double eps = 1e-5;
    std::size_t max_coords_per_param = 0;  // 0 checks every coordinate
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    double max_error = 0;  // max |g_fd - g_tape| / max(1, |g_fd|)
    std::size_t coords_checked = 0;
};

// Compares tape gradients of a scalar objective against central differences.
// The objective must be deterministic: stochastic ops have to use frozen masks.
template <typename Real>
GradCheckResult finite_diff_check(const Objective<Real>& f, std::vector<Matrix<Real>>& params,
                                  const GradCheckOptions& opts = {}) {
    if (!(opts.eps > 0)) throw ValidationError("finite difference step must be positive");

    auto evaluate = [&](std::vector<Matrix<Real>>* grads) {
        Tape<Real> tape;
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (const auto& p : params) vars.push_back(tape.parameter(p));
        Var loss = f(tape, vars);
        const Real value = tape.value(loss)(0, 0);
        if (grads) {
            tape.backward(loss);
            grads->clear();
            for (Var v : vars) grads->push_back(tape.grad(v));
        }
        return static_cast<double>(value);
    };

    std::vector<Matrix<Real>> analytic;
    const double base = evaluate(&analytic);
    if (evaluate(nullptr) != base) {
        throw ValidationError("objective is nondeterministic; freeze dropout masks before checking gradients");
    }

    GradCheckResult result;
    Rng rng(opts.seed);
    const Real eps = static_cast<Real>(opts.eps);
    for (std::size_t p = 0; p < params.size(); ++p) {
        std::vector<std::size_t> coords(params[p].size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (opts.max_coords_per_param > 0 && coords.size() > opts.max_coords_per_param) {
            shuffle(coords.begin(), coords.end(), rng);
            coords.resize(opts.max_coords_per_param);
        }
        for (std::size_t i : coords) {
            Real& x = params[p].data()[i];
            const Real saved = x;
            x = saved + eps;
            const double up = evaluate(nullptr);
            x = saved - eps;
            const double down = evaluate(nullptr);
            x = saved;
            const double fd = (up - down) / (2.0 * static_cast<double>(eps));
            const double tape_grad = static_cast<double>(analytic[p].data()[i]);
            result.max_error = std::max(result.max_error, std::abs(fd - tape_grad) / std::max(1.0, std::abs(fd)));
            ++result.coords_checked;
        }
    }
    return result;
}

}  // namespace demonet
