#include "stimpute/baselines.hpp"

#include <stdexcept>

namespace stimpute {

BaselineMethod baseline_from_string(const std::string& s) {
    if (s == "mean") return BaselineMethod::kMean;
    if (s == "linear") return BaselineMethod::kLinear;
    throw std::invalid_argument("unknown baseline: " + s);
}

Tensor baseline_impute(const Window& w, BaselineMethod method) {
    const int64_t n = w.nodes();
    const int64_t L = w.length();
    if (w.observed_count() == 0)
        throw std::invalid_argument("baseline: window has no observations");

    std::vector<double> node_mean(static_cast<size_t>(n));
    std::vector<bool> node_has_obs(static_cast<size_t>(n), false);
    double global_sum = 0.0;
    int64_t global_cnt = 0;
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        int64_t c = 0;
        for (int64_t l = 0; l < L; ++l)
            if (w.observed_mask.at(i, l) != 0.0) {
                s += w.values.at(i, l);
                ++c;
            }
        if (c > 0) {
            node_mean[static_cast<size_t>(i)] = s / c;
            node_has_obs[static_cast<size_t>(i)] = true;
            global_sum += s;
            global_cnt += c;
        }
    }
    const double global_mean = global_sum / static_cast<double>(global_cnt);
    for (int64_t i = 0; i < n; ++i)
        if (!node_has_obs[static_cast<size_t>(i)])
            node_mean[static_cast<size_t>(i)] = global_mean;

    if (method == BaselineMethod::kMean) {
        Tensor out = w.values;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t l = 0; l < L; ++l)
                if (w.observed_mask.at(i, l) == 0.0)
                    out.at(i, l) = node_mean[static_cast<size_t>(i)];
        return out;
    }
    InterpolatedConditioner interp = linear_interpolate(w, node_mean);
    Tensor out = interp.values;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t l = 0; l < L; ++l)
            if (w.observed_mask.at(i, l) != 0.0) out.at(i, l) = w.values.at(i, l);
    return out;
}

}  // namespace stimpute
