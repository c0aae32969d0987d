#pragma once

#include <vector>

#include "stimpute/dataset.hpp"

namespace stimpute {

struct SeasonalTerm {
    double period_steps = 24.0;  // >= 2
    double amplitude = 1.0;
    double phase = 0.0;
};

struct SynthConfig {
    int64_t nodes = 8;
    int64_t length = 960;
    int step_minutes = 30;
    double trend_slope = 0.004;
    double trend_slope_jitter = 0.5;   // relative spread across nodes
    double trend_offset = 10.0;
    double trend_offset_jitter = 2.0;  // absolute spread across nodes
    std::vector<SeasonalTerm> seasonal;
    double noise_sigma = 0.1;
    double coupling = 0.3;  // neighbor-mixture weight in [0,1]
    uint64_t seed = 7;
    double kernel_width = 0.0;  // 0 = std of pairwise distances
    double threshold = 0.1;

    void validate() const;
};

/// Synthetic series with a known trend/seasonal/spatial/noise decomposition
/// over a random-geometric sensor graph. values = trend + seasonal + spatial
/// coupling + noise, all components returned separately.
struct SynthOutput {
    Tensor values;    // [N, T]
    Tensor trend;     // [N, T]
    Tensor seasonal;  // [N, T]
    Tensor spatial;   // [N, T]
    Tensor noise;     // [N, T]
    GraphSpec graph;
    std::vector<int64_t> timestamps;
    int step_minutes = 0;
};

SynthOutput synth_generate(const SynthConfig& cfg);

Dataset synth_dataset(const SynthOutput& out, int window_len, int stride);

std::vector<SeasonalTerm> parse_seasonal_spec(const std::string& spec);

}  // namespace stimpute
