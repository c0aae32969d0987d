#pragma once

#include <string>
#include <vector>

#include "stimpute/tensor.hpp"

namespace stimpute {

enum class ScheduleShape { kLinear, kQuadratic };

ScheduleShape schedule_shape_from_string(const std::string& s);
std::string to_string(ScheduleShape s);

/// beta_t / alpha_t / alpha_bar_t / sigma2_t sequences for T diffusion steps.
/// Indexing follows the step convention t in 1..T: beta(t) etc. alpha_bar(0)
/// is defined as 1, which forces sigma2(1) = 0.
class NoiseSchedule {
public:
    NoiseSchedule() = default;
    NoiseSchedule(int T, double beta_1, double beta_T, ScheduleShape shape);

    int steps() const { return T_; }
    ScheduleShape shape() const { return shape_; }
    double beta_1() const { return beta_lo_; }
    double beta_T() const { return beta_hi_; }

    double beta(int t) const { return beta_.at(static_cast<size_t>(t - 1)); }
    double alpha(int t) const { return 1.0 - beta(t); }
    double alpha_bar(int t) const { return alpha_bar_.at(static_cast<size_t>(t)); }
    double sigma2(int t) const { return sigma2_.at(static_cast<size_t>(t - 1)); }
    double sigma(int t) const;

private:
    int T_ = 0;
    double beta_lo_ = 0.0, beta_hi_ = 0.0;
    ScheduleShape shape_ = ScheduleShape::kQuadratic;
    std::vector<double> beta_;       // [T], index t-1
    std::vector<double> alpha_bar_;  // [T+1], index t, alpha_bar_[0] = 1
    std::vector<double> sigma2_;     // [T], index t-1
};

}  // namespace stimpute
