#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/core/tensor.hpp"

namespace charmend {

/// Gradient set keyed by parameter name.
using GradMap = std::unordered_map<std::string, Tensor>;

/// Ordered name -> Tensor map holding trainable parameters plus the Adam
/// moment estimates. Iteration order is insertion order, which fixes the
/// checkpoint manifest order. Not internally synchronized.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t) {
        if (index_.count(name)) throw ArgumentError("parameter already registered: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, std::move(t), Tensor(), Tensor()});
        return entries_.back().value;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
        return entries_[it->second].value;
    }

    const Tensor& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
        return entries_[it->second].value;
    }

    size_t size() const { return entries_.size(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.name);
        return out;
    }

    size_t total_values() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

    /// Zero-filled gradient map with one slot per parameter.
    GradMap zero_grads() const {
        GradMap g;
        g.reserve(entries_.size());
        for (const auto& e : entries_) g.emplace(e.name, Tensor(e.value.shape()));
        return g;
    }

    uint64_t step_count() const { return step_; }

    /// One Adam update (Kingma & Ba) with bias correction. The step counter
    /// advances exactly once per call, so two identical calls are not
    /// idempotent. Parameters without an entry in `grads` keep their moments.
    void adam_step(const GradMap& grads, double lr, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8) {
        for (const auto& [name, g] : grads) {
            auto it = index_.find(name);
            if (it == index_.end()) throw ArgumentError("adam_step: gradient for unknown parameter " + name);
            if (!entries_[it->second].value.same_shape(g)) {
                throw DimensionError("adam_step: gradient shape " + g.shape_str() +
                                     " does not match parameter " + name + " " +
                                     entries_[it->second].value.shape_str());
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (auto& e : entries_) {
            auto git = grads.find(e.name);
            if (git == grads.end()) continue;
            const Tensor& g = git->second;
            if (e.m.numel() == 0) {
                e.m = Tensor(e.value.shape());
                e.v = Tensor(e.value.shape());
            }
            double* p = e.value.data();
            double* m = e.m.data();
            double* v = e.v.data();
            const double* gd = g.data();
            const size_t n = e.value.numel();
            for (size_t i = 0; i < n; ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gd[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * gd[i] * gd[i];
                p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
            }
        }
    }

    struct Entry {
        std::string name;
        Tensor value;
        Tensor m;  // Adam first moment, allocated on first update
        Tensor v;  // Adam second moment
    };

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
    uint64_t step_ = 0;
};

}  // namespace charmend
