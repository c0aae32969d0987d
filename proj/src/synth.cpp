#include "stimpute/synth.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stimpute/rng.hpp"

namespace stimpute {

void SynthConfig::validate() const {
    if (nodes < 1 || length < 2) throw std::invalid_argument("synth: bad dimensions");
    if (coupling < 0.0 || coupling > 1.0)
        throw std::invalid_argument("synth: coupling must lie in [0,1]");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth: negative noise sigma");
    for (const auto& s : seasonal) {
        if (s.period_steps < 2.0)
            throw std::invalid_argument("synth: seasonal period must be >= 2 steps");
        if (!std::isfinite(s.amplitude))
            throw std::invalid_argument("synth: non-finite amplitude");
    }
}

std::vector<SeasonalTerm> parse_seasonal_spec(const std::string& spec) {
    std::vector<SeasonalTerm> terms;
    if (spec.empty() || spec == "none") return terms;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        SeasonalTerm t;
        if (std::sscanf(item.c_str(), "%lf:%lf:%lf", &t.period_steps, &t.amplitude,
                        &t.phase) != 3)
            throw std::invalid_argument("seasonal term must be period:amp:phase, got " +
                                        item);
        terms.push_back(t);
    }
    return terms;
}

SynthOutput synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    const int64_t N = cfg.nodes;
    const int64_t T = cfg.length;
    constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

    // Random-geometric sensor layout in the unit square.
    Rng geo = Rng::stream(cfg.seed, "synth_geo");
    std::vector<double> px(static_cast<size_t>(N)), py(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) {
        px[static_cast<size_t>(i)] = geo.uniform01();
        py[static_cast<size_t>(i)] = geo.uniform01();
    }
    GraphSpec graph;
    graph.distances = Tensor({N, N});
    for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < N; ++j) {
            const double dx = px[static_cast<size_t>(i)] - px[static_cast<size_t>(j)];
            const double dy = py[static_cast<size_t>(i)] - py[static_cast<size_t>(j)];
            graph.distances.at(i, j) = std::sqrt(dx * dx + dy * dy);
        }
    double width = cfg.kernel_width;
    if (width <= 0.0) {
        double s = 0.0, s2 = 0.0;
        int64_t cnt = 0;
        for (int64_t i = 0; i < N; ++i)
            for (int64_t j = 0; j < N; ++j) {
                if (i == j) continue;
                const double d = graph.distances.at(i, j);
                s += d;
                s2 += d * d;
                ++cnt;
            }
        width = cnt > 0 ? std::sqrt(std::max(s2 / cnt - (s / cnt) * (s / cnt), 1e-12))
                        : 1.0;
        if (width <= 0.0) width = 1.0;
    }
    graph.adjacency = build_adjacency(graph.distances, width, cfg.threshold);
    for (int64_t i = 0; i < N; ++i)
        graph.node_ids.push_back("s" + std::to_string(i));
    graph.validate();

    // Per-node trend parameters and seasonal phase shifts.
    Rng comp = Rng::stream(cfg.seed, "synth_components");
    std::vector<double> slope(static_cast<size_t>(N)), offset(static_cast<size_t>(N));
    std::vector<std::vector<double>> phase(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) {
        slope[static_cast<size_t>(i)] =
            cfg.trend_slope * (1.0 + cfg.trend_slope_jitter * comp.uniform(-1.0, 1.0));
        offset[static_cast<size_t>(i)] =
            cfg.trend_offset + cfg.trend_offset_jitter * comp.uniform(-1.0, 1.0);
        for (const auto& term : cfg.seasonal)
            phase[static_cast<size_t>(i)].push_back(term.phase +
                                                    kTwoPi * comp.uniform01());
    }

    SynthOutput out;
    out.step_minutes = cfg.step_minutes;
    out.graph = graph;
    out.values = Tensor({N, T});
    out.trend = Tensor({N, T});
    out.seasonal = Tensor({N, T});
    out.spatial = Tensor({N, T});
    out.noise = Tensor({N, T});

    for (int64_t i = 0; i < N; ++i)
        for (int64_t l = 0; l < T; ++l) {
            out.trend.at(i, l) =
                offset[static_cast<size_t>(i)] + slope[static_cast<size_t>(i)] * l;
            double ssum = 0.0;
            for (size_t k = 0; k < cfg.seasonal.size(); ++k) {
                const auto& term = cfg.seasonal[k];
                ssum += term.amplitude * std::sin(kTwoPi * l / term.period_steps +
                                                  phase[static_cast<size_t>(i)][k]);
            }
            out.seasonal.at(i, l) = ssum;
        }

    // Neighbor mixture of the clean (trend + seasonal) signals, self excluded.
    if (cfg.coupling > 0.0) {
        for (int64_t i = 0; i < N; ++i) {
            double wsum = 0.0;
            for (int64_t j = 0; j < N; ++j)
                if (j != i) wsum += graph.adjacency.at(i, j);
            if (wsum <= 0.0) continue;
            for (int64_t l = 0; l < T; ++l) {
                double mix = 0.0;
                for (int64_t j = 0; j < N; ++j) {
                    if (j == i) continue;
                    const double w = graph.adjacency.at(i, j);
                    if (w == 0.0) continue;
                    mix += w * (out.trend.at(j, l) + out.seasonal.at(j, l) -
                                offset[static_cast<size_t>(j)]);
                }
                out.spatial.at(i, l) = cfg.coupling * mix / wsum;
            }
        }
    }

    Rng noise = Rng::stream(cfg.seed, "synth_noise");
    for (int64_t i = 0; i < out.noise.size(); ++i)
        out.noise[i] = cfg.noise_sigma > 0.0 ? noise.normal() * cfg.noise_sigma : 0.0;

    for (int64_t i = 0; i < out.values.size(); ++i)
        out.values[i] =
            out.trend[i] + out.seasonal[i] + out.spatial[i] + out.noise[i];

    const int64_t t0 = parse_iso8601("2024-01-01T00:00:00");
    for (int64_t l = 0; l < T; ++l)
        out.timestamps.push_back(t0 + l * static_cast<int64_t>(cfg.step_minutes) * 60);
    return out;
}

Dataset synth_dataset(const SynthOutput& out, int window_len, int stride) {
    return make_dataset(out.values, out.graph, out.timestamps, out.step_minutes,
                        window_len, stride);
}

}  // namespace stimpute
