#pragma once

#include <vector>

#include "stimpute/training.hpp"

namespace stimpute {

struct ImputeSettings {
    int n_samples = 100;
    uint64_t seed = 1;
};

/// Ensemble imputation for one window. Samples carry original data units;
/// observed cells are copied verbatim from the window into every sample, and
/// truly-missing non-target cells stay NaN.
struct ImputationResult {
    std::vector<Tensor> samples;  // n_samples x [N, L]
    Tensor point_estimate;        // [N, L], per-cell median over the ensemble
    Tensor target_mask;           // [N, L]
};

/// Runs the reverse chain from pure noise on the target cells, conditioned on
/// the interpolated observations; independent replicas run in parallel with
/// per-replica random streams.
ImputationResult impute_window(const ModelSet& m, const Window& window,
                               const Normalization& norm, const ImputeSettings& settings);

/// Per-cell median across samples (average of the two middle order statistics
/// for an even count).
double sample_median(std::vector<double>& values);

}  // namespace stimpute
