#pragma once

#include <vector>

#include "stimpute/tensor.hpp"

namespace stimpute {

/// Mean absolute / squared error over cells where mask = 1, in data units.
double mae(const Tensor& pred, const Tensor& truth, const Tensor& mask);
double mse(const Tensor& pred, const Tensor& truth, const Tensor& mask);

/// The 19 evenly spaced quantile levels 0.05 .. 0.95.
struct QuantileGrid {
    std::vector<double> levels;
    QuantileGrid();
};

/// Lower empirical quantile: the ceil(alpha * S)-th order statistic.
double empirical_quantile(std::vector<double> sorted_samples, double alpha);

/// Discretized CRPS: sum_i 2 * pinball_loss(D^-1(alpha_i), x) / 19.
double crps_single(const std::vector<double>& samples, double x,
                   const QuantileGrid& grid);

/// Mean of crps_single over masked cells; `samples` is the S-member ensemble.
double crps_aggregate(const std::vector<Tensor>& samples, const Tensor& truth,
                      const Tensor& mask, const QuantileGrid& grid);

}  // namespace stimpute
