#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace stimpute {

/// Dense row-major tensor of doubles, up to 4 dimensions.
class Tensor {
public:
    static constexpr int kMaxDims = 4;

    Tensor() = default;

    explicit Tensor(std::initializer_list<int64_t> shape) { reshape(shape); }
    explicit Tensor(const std::vector<int64_t>& shape) {
        reshape(std::vector<int64_t>(shape));
    }

    static Tensor zeros(std::initializer_list<int64_t> shape) { return Tensor(shape); }

    static Tensor full(std::initializer_list<int64_t> shape, double v) {
        Tensor t(shape);
        t.fill(v);
        return t;
    }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data_[0] = v;
        return t;
    }

    void reshape(std::initializer_list<int64_t> shape) {
        reshape(std::vector<int64_t>(shape));
    }

    void reshape(const std::vector<int64_t>& shape) {
        if (shape.size() > kMaxDims) throw std::invalid_argument("tensor rank > 4");
        ndim_ = static_cast<int>(shape.size());
        int64_t n = 1;
        for (int i = 0; i < ndim_; ++i) {
            if (shape[i] < 0) throw std::invalid_argument("negative tensor dim");
            dims_[i] = shape[i];
            n *= shape[i];
        }
        data_.assign(static_cast<size_t>(n), 0.0);
    }

    int ndim() const { return ndim_; }
    int64_t dim(int i) const { return dims_[i]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    std::vector<int64_t> shape() const {
        return std::vector<int64_t>(dims_.begin(), dims_.begin() + ndim_);
    }

    bool same_shape(const Tensor& o) const {
        if (ndim_ != o.ndim_) return false;
        for (int i = 0; i < ndim_; ++i)
            if (dims_[i] != o.dims_[i]) return false;
        return true;
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * dims_[1] + j)]; }
    double at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * dims_[1] + j)]; }

    double& at(int64_t i, int64_t j, int64_t k) {
        return data_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
    }
    double at(int64_t i, int64_t j, int64_t k) const {
        return data_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.0); }

    bool is_finite() const;
    std::string shape_str() const;

private:
    std::array<int64_t, kMaxDims> dims_{0, 0, 0, 0};
    int ndim_ = 0;
    std::vector<double> data_;
};

// Plain (non-autodiff) helpers used by schedules, masking, metrics.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace stimpute
