#include "stimpute/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace stimpute {

bool Tensor::is_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < ndim_; ++i) os << (i ? "x" : "") << dims_[i];
    os << "]";
    return os.str();
}

static void check_same(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw std::invalid_argument("tensor size mismatch");
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same(a, b);
    Tensor y = a;
    for (int64_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same(a, b);
    Tensor y = a;
    for (int64_t i = 0; i < y.size(); ++i) y[i] -= b[i];
    return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same(a, b);
    Tensor y = a;
    for (int64_t i = 0; i < y.size(); ++i) y[i] *= b[i];
    return y;
}

Tensor scale(const Tensor& a, double s) {
    Tensor y = a;
    for (int64_t i = 0; i < y.size(); ++i) y[i] *= s;
    return y;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same(a, b);
    double m = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

}  // namespace stimpute
