#pragma once

#include "stimpute/rng.hpp"
#include "stimpute/schedule.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, elementwise.
/// t = 0 returns x0 (alpha_bar_0 = 1).
Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& schedule);

/// One denoising step: mean = (x_t - beta_t/sqrt(1-alpha_bar_t) * eps_hat) /
/// sqrt(alpha_t), plus sigma_t * z with z ~ N(0,I) for t > 1 (sigma2_1 = 0, so
/// the last step adds no noise). `noise_mask`, when given, restricts both the
/// update and the injected noise to masked cells.
Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, int t,
                    const NoiseSchedule& schedule, Rng& rng,
                    const Tensor* noise_mask = nullptr);

/// Mean of (eps - eps_hat)^2 over cells where target_mask = 1.
double masked_noise_loss(const Tensor& eps, const Tensor& eps_hat,
                         const Tensor& target_mask);

}  // namespace stimpute
