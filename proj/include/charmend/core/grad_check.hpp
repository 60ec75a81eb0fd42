#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "charmend/core/errors.hpp"
#include "charmend/core/param_store.hpp"
#include "charmend/core/rng.hpp"

namespace charmend {

/// Compares analytic gradients against central finite differences
/// (f(t+h) - f(t-h)) / 2h, evaluated at the current parameter values.
///
/// Samples roughly `budget` coordinates spread over all parameters, at
/// least one per tensor, or every coordinate when the model is small.
/// Returns the max relative error with denominator max(|a|, |n|, 1e-8).
///
/// The loss function must be deterministic (disable dropout). It may
/// return long double: evaluating the loss in extended precision keeps
/// the difference quotient meaningful on coordinates whose true gradient
/// sits near the 64-bit rounding floor of the loss itself.
template <typename LossFn>
inline double grad_check(LossFn&& loss_fn, const GradMap& analytic, ParamStore& store, double h,
                         Rng& rng, size_t budget = 200) {
    using S = std::decay_t<decltype(loss_fn(store))>;
    const size_t total = store.total_values();
    double max_rel = 0.0;
    for (auto& entry : store.entries()) {
        auto git = analytic.find(entry.name);
        if (git == analytic.end())
            throw ArgumentError("grad_check: no analytic gradient for " + entry.name);
        const Tensor& g = git->second;
        const size_t n = entry.value.numel();

        std::vector<size_t> coords;
        if (total <= budget) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            size_t want = std::max<size_t>(1, budget * n / total);
            want = std::min(want, n);
            for (size_t i = 0; i < want; ++i) coords.push_back(rng.uniform_index(n));
        }

        for (size_t c : coords) {
            double* slot = entry.value.data() + c;
            const double saved = *slot;
            *slot = saved + h;
            const S up = loss_fn(store);
            *slot = saved - h;
            const S down = loss_fn(store);
            *slot = saved;
            if (!std::isfinite(static_cast<double>(up)) || !std::isfinite(static_cast<double>(down)))
                throw NumericError("grad_check: non-finite loss near " + entry.name);
            const double numeric = static_cast<double>((up - down) / S(2.0 * h));
            const double a = g[c];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace charmend
