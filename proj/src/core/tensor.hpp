#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace dcn {

// Dense float tensor, contiguous row-major storage. Network activations use
// the NCHW convention. Deliberately minimal: the layer implementations own
// all the interesting math.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(compute_numel(shape_)), 0.0f);
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor full(std::vector<int> shape, float v) {
        Tensor t(std::move(shape));
        t.fill(v);
        return t;
    }

    bool empty() const { return data_.empty(); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessor.
    float& at(int n, int c, int h, int w) {
        assert(ndim() == 4);
        return data_[static_cast<size_t>(((int64_t(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    float at(int n, int c, int h, int w) const {
        return const_cast<Tensor*>(this)->at(n, c, h, w);
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.0f); }

    Tensor& operator+=(const Tensor& o) {
        check_same_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Tensor& operator*=(float s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void check_same_shape(const Tensor& o) const {
        if (!same_shape(o))
            throw InputError("tensor shape mismatch: " + shape_string() + " vs " + o.shape_string());
    }

    std::string shape_string() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    bool all_finite() const;

private:
    static int64_t compute_numel(const std::vector<int>& shape) {
        int64_t n = 1;
        for (const int d : shape) {
            if (d <= 0) throw InputError("tensor dimensions must be positive");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

} // namespace dcn
