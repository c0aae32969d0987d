#include "stimpute/imputer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stimpute {

double sample_median(std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample set");
    std::sort(values.begin(), values.end());
    const size_t s = values.size();
    if (s % 2 == 1) return values[s / 2];
    return 0.5 * (values[s / 2 - 1] + values[s / 2]);
}

ImputationResult impute_window(const ModelSet& m, const Window& window,
                               const Normalization& norm,
                               const ImputeSettings& settings) {
    if (settings.n_samples < 1)
        throw std::invalid_argument("impute: need at least one sample");
    if (window.target_count() == 0)
        throw std::invalid_argument("impute: window has no target cells");
    const int64_t N = window.nodes();
    const int64_t L = window.length();
    const int T = m.schedule.steps();

    const Window norm_win = normalize_window(window, norm);
    const InterpolatedConditioner cond = linear_interpolate(norm_win);
    const Tensor& mask = window.target_mask;

    // The conditional representation depends only on the conditioner and the
    // graph; compute it once and share it across replicas and steps.
    Tensor c_con_value;
    {
        Tape t;
        c_con_value = t.val(m.encoder->forward(t, cond.values, m.supports));
    }

    ImputationResult out;
    out.target_mask = mask;
    out.samples.assign(static_cast<size_t>(settings.n_samples), Tensor());

#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < settings.n_samples; ++s) {
        Rng rng = Rng::stream(settings.seed, "impute", static_cast<uint64_t>(s));
        Tensor x({N, L});
        for (int64_t i = 0; i < x.size(); ++i)
            x[i] = mask[i] != 0.0 ? rng.normal() : 0.0;
        Tape tape;
        for (int t_step = T; t_step >= 1; --t_step) {
            tape.clear();
            Tape::Id c_con = tape.input(c_con_value);
            Tape::Id eps_hat_id = m.predictor->forward(tape, c_con, cond.values, x,
                                                       t_step, m.supports);
            const Tensor& eps_hat3 = tape.val(eps_hat_id);
            Tensor eps_hat({N, L});
            for (int64_t i = 0; i < eps_hat.size(); ++i) eps_hat[i] = eps_hat3[i];
            x = reverse_step(x, eps_hat, t_step, m.schedule, rng, &mask);
        }
        Tensor sample = window.values;
        for (int64_t i = 0; i < N; ++i)
            for (int64_t l = 0; l < L; ++l)
                if (mask.at(i, l) != 0.0)
                    sample.at(i, l) = norm.denormalize(x.at(i, l), i);
        out.samples[static_cast<size_t>(s)] = std::move(sample);
    }

    out.point_estimate = window.values;
    std::vector<double> cell(static_cast<size_t>(settings.n_samples));
    for (int64_t i = 0; i < N * L; ++i) {
        if (mask[i] == 0.0) continue;
        for (int s = 0; s < settings.n_samples; ++s)
            cell[static_cast<size_t>(s)] = out.samples[static_cast<size_t>(s)][i];
        out.point_estimate[i] = sample_median(cell);
    }
    return out;
}

}  // namespace stimpute
