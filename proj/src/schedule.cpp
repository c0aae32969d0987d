#include "stimpute/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace stimpute {

ScheduleShape schedule_shape_from_string(const std::string& s) {
    if (s == "linear") return ScheduleShape::kLinear;
    if (s == "quadratic") return ScheduleShape::kQuadratic;
    throw std::invalid_argument("unknown schedule shape: " + s);
}

std::string to_string(ScheduleShape s) {
    return s == ScheduleShape::kLinear ? "linear" : "quadratic";
}

NoiseSchedule::NoiseSchedule(int T, double beta_1, double beta_T, ScheduleShape shape)
    : T_(T), beta_lo_(beta_1), beta_hi_(beta_T), shape_(shape) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (!(beta_1 > 0.0) || !(beta_1 <= beta_T) || !(beta_T < 1.0))
        throw std::invalid_argument("schedule: need 0 < beta_1 <= beta_T < 1");
    beta_.resize(static_cast<size_t>(T));
    if (T == 1) {
        beta_[0] = beta_1;
    } else if (shape == ScheduleShape::kLinear) {
        const double step = (beta_T - beta_1) / (T - 1);
        for (int t = 0; t < T; ++t) beta_[static_cast<size_t>(t)] = beta_1 + step * t;
    } else {
        const double lo = std::sqrt(beta_1);
        const double hi = std::sqrt(beta_T);
        const double step = (hi - lo) / (T - 1);
        for (int t = 0; t < T; ++t) {
            const double r = lo + step * t;
            beta_[static_cast<size_t>(t)] = r * r;
        }
    }
    beta_.front() = beta_1;
    beta_.back() = T == 1 ? beta_1 : beta_T;

    alpha_bar_.resize(static_cast<size_t>(T) + 1);
    alpha_bar_[0] = 1.0;
    for (int t = 1; t <= T; ++t)
        alpha_bar_[static_cast<size_t>(t)] =
            alpha_bar_[static_cast<size_t>(t) - 1] * (1.0 - beta_[static_cast<size_t>(t) - 1]);

    sigma2_.resize(static_cast<size_t>(T));
    for (int t = 1; t <= T; ++t)
        sigma2_[static_cast<size_t>(t) - 1] =
            (1.0 - alpha_bar_[static_cast<size_t>(t) - 1]) /
            (1.0 - alpha_bar_[static_cast<size_t>(t)]) * beta_[static_cast<size_t>(t) - 1];
}

double NoiseSchedule::sigma(int t) const { return std::sqrt(sigma2(t)); }

}  // namespace stimpute
