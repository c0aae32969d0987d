#include "stimpute/masking.hpp"

#include <cmath>
#include <stdexcept>

namespace stimpute {

Window apply_point_mask(const Window& w, double rate, Rng& rng) {
    if (rate <= 0.0 || rate >= 1.0)
        throw std::invalid_argument("point mask rate must lie in (0,1)");
    if (w.observed_count() == 0)
        throw std::invalid_argument("point mask: window has no observed cells");
    Window out = w;
    for (int64_t i = 0; i < out.values.size(); ++i) {
        if (out.observed_mask[i] == 0.0) continue;
        if (rng.bernoulli(rate)) {
            out.observed_mask[i] = 0.0;
            out.target_mask[i] = 1.0;
        }
    }
    return out;
}

BlockMaskConfig block_config_for_hours(double min_hours, double max_hours,
                                       int step_minutes, double point_rate,
                                       double start_prob) {
    if (step_minutes <= 0) throw std::invalid_argument("step_minutes must be positive");
    BlockMaskConfig cfg;
    cfg.point_rate = point_rate;
    cfg.start_prob = start_prob;
    cfg.min_len = std::max(1, static_cast<int>(std::lround(min_hours * 60.0 / step_minutes)));
    cfg.max_len = std::max(cfg.min_len,
                           static_cast<int>(std::lround(max_hours * 60.0 / step_minutes)));
    return cfg;
}

Window apply_block_mask(const Window& w, const BlockMaskConfig& cfg, Rng& rng,
                        BlockMaskStats* stats) {
    if (cfg.min_len <= 0 || cfg.min_len > cfg.max_len)
        throw std::invalid_argument("block mask: need 0 < min_len <= max_len");
    if (cfg.max_len >= w.length())
        throw std::invalid_argument("block mask: max_len must be below window length");
    // start_prob = 0 is the degenerate no-block process (point masking only)
    if (cfg.start_prob < 0.0 || cfg.start_prob >= 1.0 || cfg.point_rate <= 0.0 ||
        cfg.point_rate >= 1.0)
        throw std::invalid_argument("block mask: probabilities out of range");

    const int64_t N = w.nodes();
    const int64_t L = w.length();
    Window out = w;
    Tensor blocked({N, L});
    for (int64_t i = 0; i < N; ++i) {
        for (int64_t l = 0; l < L; ++l) {
            if (!rng.bernoulli(cfg.start_prob)) continue;
            const int len =
                static_cast<int>(rng.uniform_int(cfg.min_len, cfg.max_len));
            if (stats) {
                ++stats->block_starts;
                stats->sampled_lengths.push_back(len);
            }
            const int64_t end = std::min<int64_t>(L, l + len);
            for (int64_t m = l; m < end; ++m) blocked.at(i, m) = 1.0;
        }
    }
    for (int64_t i = 0; i < out.values.size(); ++i) {
        const bool point = rng.bernoulli(cfg.point_rate);  // independent of blocks
        const bool hit = blocked[i] != 0.0 || point;
        if (hit && out.observed_mask[i] != 0.0) {
            out.observed_mask[i] = 0.0;
            out.target_mask[i] = 1.0;
        }
    }
    return out;
}

}  // namespace stimpute
