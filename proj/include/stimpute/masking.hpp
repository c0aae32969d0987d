#pragma once

#include <vector>

#include "stimpute/dataset.hpp"
#include "stimpute/rng.hpp"

namespace stimpute {

/// Moves each observed cell to the target mask with probability `rate`.
/// Ground truth stays in `values` for scoring; observed_mask drops to 0.
Window apply_point_mask(const Window& w, double rate, Rng& rng);

struct BlockMaskConfig {
    double point_rate = 0.05;   // extra i.i.d. point masking on top of blocks
    double start_prob = 0.0015; // per (sensor, step) probability of starting a block
    int min_len = 0;            // steps; 1h at the window's sampling interval
    int max_len = 0;            // steps; 4h
};

struct BlockMaskStats {
    int64_t block_starts = 0;
    std::vector<int> sampled_lengths;  // lengths as drawn, before end-of-window clipping
};

/// Per sensor, every step independently starts an outage block with
/// probability start_prob; block length is uniform in [min_len, max_len] and
/// clipped at the window end. A point mask at point_rate is applied on top.
Window apply_block_mask(const Window& w, const BlockMaskConfig& cfg, Rng& rng,
                        BlockMaskStats* stats = nullptr);

/// min/max block lengths in steps for an outage band given in hours.
BlockMaskConfig block_config_for_hours(double min_hours, double max_hours,
                                       int step_minutes, double point_rate = 0.05,
                                       double start_prob = 0.0015);

}  // namespace stimpute
