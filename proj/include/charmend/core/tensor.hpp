#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/core/rng.hpp"

namespace charmend {

/// Dense row-major array of 64-bit floats. The sole numeric currency of
/// the library; 32-bit floats appear only inside checkpoint files.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(numel_of(shape_), fill) {}

    Tensor(std::vector<size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        if (numel_of(shape_) != data_.size()) {
            throw DimensionError("tensor shape/value count mismatch: shape holds " +
                                 std::to_string(numel_of(shape_)) + ", got " +
                                 std::to_string(data_.size()) + " values");
        }
    }

    static Tensor vector_of(std::vector<double> values) {
        size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor uniform_init(std::vector<size_t> shape, double lo, double hi, Rng& rng) {
        Tensor t(std::move(shape));
        for (double& v : t.data_) v = rng.uniform(lo, hi);
        return t;
    }

    const std::vector<size_t>& shape() const { return shape_; }
    size_t ndim() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }

    /// Rows/cols of a 2-d tensor; a 1-d tensor is a single column.
    size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }
    double& at(size_t r, size_t c) { return data_[r * cols() + c]; }
    double at(size_t r, size_t c) const { return data_[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

    static size_t numel_of(const std::vector<size_t>& shape) {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

}  // namespace charmend
