#include "stimpute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stimpute {

namespace {

double masked_mean_error(const Tensor& pred, const Tensor& truth, const Tensor& mask,
                         bool squared) {
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw std::invalid_argument("metrics: shape mismatch");
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < pred.size(); ++i) {
        if (mask[i] == 0.0) continue;
        const double e = pred[i] - truth[i];
        sum += squared ? e * e : std::fabs(e);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("metrics: empty mask");
    return sum / static_cast<double>(count);
}

}  // namespace

double mae(const Tensor& pred, const Tensor& truth, const Tensor& mask) {
    return masked_mean_error(pred, truth, mask, false);
}

double mse(const Tensor& pred, const Tensor& truth, const Tensor& mask) {
    return masked_mean_error(pred, truth, mask, true);
}

QuantileGrid::QuantileGrid() {
    for (int i = 1; i <= 19; ++i) levels.push_back(0.05 * i);
}

double empirical_quantile(std::vector<double> sorted_samples, double alpha) {
    if (sorted_samples.empty())
        throw std::invalid_argument("empirical_quantile: empty sample set");
    const auto s = static_cast<double>(sorted_samples.size());
    auto idx = static_cast<int64_t>(std::ceil(alpha * s));
    idx = std::clamp<int64_t>(idx, 1, static_cast<int64_t>(s));
    return sorted_samples[static_cast<size_t>(idx - 1)];
}

double crps_single(const std::vector<double>& samples, double x,
                   const QuantileGrid& grid) {
    if (samples.empty()) throw std::invalid_argument("crps: empty sample set");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (double alpha : grid.levels) {
        const double z = empirical_quantile(sorted, alpha);
        const double indicator = x < z ? 1.0 : 0.0;
        acc += 2.0 * (alpha - indicator) * (x - z);
    }
    return acc / static_cast<double>(grid.levels.size());
}

double crps_aggregate(const std::vector<Tensor>& samples, const Tensor& truth,
                      const Tensor& mask, const QuantileGrid& grid) {
    if (samples.empty()) throw std::invalid_argument("crps: empty ensemble");
    if (truth.size() != mask.size()) throw std::invalid_argument("crps: shape mismatch");
    double sum = 0.0;
    int64_t count = 0;
    std::vector<double> cell(samples.size());
    for (int64_t i = 0; i < truth.size(); ++i) {
        if (mask[i] == 0.0) continue;
        for (size_t s = 0; s < samples.size(); ++s) cell[s] = samples[s][i];
        sum += crps_single(cell, truth[i], grid);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("crps: empty mask");
    return sum / static_cast<double>(count);
}

}  // namespace stimpute
