#include "stimpute/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace stimpute {

Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& schedule) {
    if (x0.size() != eps.size()) throw std::invalid_argument("forward_sample: shape mismatch");
    if (t < 0 || t > schedule.steps())
        throw std::invalid_argument("forward_sample: step out of range");
    if (t == 0) return x0;
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Tensor out = x0;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, int t,
                    const NoiseSchedule& schedule, Rng& rng, const Tensor* noise_mask) {
    if (x_t.size() != eps_hat.size())
        throw std::invalid_argument("reverse_step: shape mismatch");
    if (t < 1 || t > schedule.steps())
        throw std::invalid_argument("reverse_step: step out of range");
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
    const double coeff = schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
    const double sigma = schedule.sigma(t);
    Tensor out = x_t;
    for (int64_t i = 0; i < out.size(); ++i) {
        if (noise_mask && (*noise_mask)[i] == 0.0) continue;
        double v = inv_sqrt_alpha * (x_t[i] - coeff * eps_hat[i]);
        if (t > 1) v += sigma * rng.normal();
        out[i] = v;
        if (!std::isfinite(v)) throw std::runtime_error("reverse_step: non-finite value");
    }
    return out;
}

double masked_noise_loss(const Tensor& eps, const Tensor& eps_hat,
                         const Tensor& target_mask) {
    if (eps.size() != eps_hat.size() || eps.size() != target_mask.size())
        throw std::invalid_argument("masked_noise_loss: shape mismatch");
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < eps.size(); ++i) {
        if (target_mask[i] == 0.0) continue;
        const double e = eps[i] - eps_hat[i];
        sum += e * e;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("masked_noise_loss: empty target mask");
    return sum / static_cast<double>(count);
}

}  // namespace stimpute
