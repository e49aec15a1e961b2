#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmdr {

// Base error type for the whole library. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// Dense row-major n-d array of f32. Copies are shallow (data is shared);
// the convention throughout the engine is that a tensor recorded on a tape
// is never mutated afterwards. Parameter tensors are mutated in place by
// the optimizer, which is safe because tapes are rebuilt every pass.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<int> shape, const std::vector<float>& values) {
        const int64_t n = count(shape);
        check(static_cast<int64_t>(values.size()) == n,
              "tensor: shape does not match data length");
        shape_ = std::move(shape);
        alloc(n);
        std::copy(values.begin(), values.end(), data_.get());
    }

    // Uninitialized storage; every op output is fully written by its forward.
    static Tensor uninit(std::vector<int> shape) {
        Tensor t;
        const int64_t n = count(shape);
        t.shape_ = std::move(shape);
        t.alloc(n);
        return t;
    }

    static Tensor zeros(std::vector<int> shape) {
        Tensor t = uninit(std::move(shape));
        std::fill_n(t.data_.get(), t.size_, 0.0f);
        return t;
    }

    static Tensor full(std::vector<int> shape, float v) {
        Tensor t = uninit(std::move(shape));
        std::fill_n(t.data_.get(), t.size_, v);
        return t;
    }

    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }

    int64_t size() const { return size_; }

    // Rank-2 helpers; rank-1 tensors are treated as a single row.
    int rows() const { return rank() == 2 ? shape_[0] : 1; }
    int cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }

    float* data() { return data_.get(); }
    const float* data() const { return data_.get(); }

    float& at(int64_t i) { return data_.get()[i]; }
    float at(int64_t i) const { return data_.get()[i]; }

    float item() const {
        check(size() == 1, "tensor: item() on non-scalar");
        return data_.get()[0];
    }

    bool defined() const { return static_cast<bool>(data_); }

    Tensor clone() const {
        Tensor t = uninit(shape_);
        std::copy_n(data_.get(), size_, t.data_.get());
        return t;
    }

    Tensor reshaped(std::vector<int> shape) const {
        check(count(shape) == size(), "tensor: reshape size mismatch");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;  // shares storage
        t.size_ = size_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        const float* p = data_.get();
        for (int64_t i = 0; i < size_; ++i)
            if (!std::isfinite(p[i])) return false;
        return true;
    }

    static int64_t count(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            check(d > 0, "tensor: dims must be positive");
            n *= d;
        }
        return n;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    void alloc(int64_t n) {
        data_ = std::shared_ptr<float[]>(new float[static_cast<size_t>(n)]);
        size_ = n;
    }

    std::vector<int> shape_;
    std::shared_ptr<float[]> data_;
    int64_t size_ = 0;
};

}  // namespace nmdr
