#include "stimpute/cond_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace stimpute {

void CondEncoderConfig::resolve() {
    if (!use_trend && !use_season)
        throw std::invalid_argument("encoder: cannot ablate both trend and season");
    if (!use_trend) {
        d_trend = 0;
        d_season = d;
    } else if (!use_season) {
        d_season = 0;
        d_trend = d;
    }
    if (d_trend + d_season != d)
        throw std::invalid_argument("encoder: d must equal d_trend + d_season");
    if (mlp_hidden <= 0) mlp_hidden = d;
    if (L < 2) throw std::invalid_argument("encoder: window length must be >= 2");
}

ConditionalEncoder::ConditionalEncoder(ParameterStore& store,
                                       const CondEncoderConfig& cfg, int64_t n_nodes,
                                       Rng& rng)
    : cfg_(cfg) {
    cfg_.resolve();
    const int d = cfg_.d;
    in_w_ = &store.create("cond_enc.in.w", {1, d});
    init_uniform_fanin(*in_w_, 1, rng);
    in_b_ = &store.create("cond_enc.in.b", {d});

    if (cfg_.use_trend) {
        const int M = static_cast<int>(std::floor(std::log2(cfg_.L / 2.0)));
        for (int m = 0; m <= M; ++m) {
            const int k = 1 << m;
            Parameter& w = store.create(
                "cond_enc.trend.expert" + std::to_string(m) + ".w", {k, d, cfg_.d_trend});
            init_uniform_fanin(w, k * d, rng);
            Parameter& b = store.create(
                "cond_enc.trend.expert" + std::to_string(m) + ".b", {cfg_.d_trend});
            expert_w_.push_back(&w);
            expert_b_.push_back(&b);
        }
    }
    if (cfg_.use_season) {
        const int F = cfg_.L / 2 + 1;
        fw_re_ = &store.create("cond_enc.season.w_re", {F, d, cfg_.d_season});
        fw_im_ = &store.create("cond_enc.season.w_im", {F, d, cfg_.d_season});
        fb_re_ = &store.create("cond_enc.season.b_re", {F, cfg_.d_season});
        fb_im_ = &store.create("cond_enc.season.b_im", {F, cfg_.d_season});
        init_uniform_fanin(*fw_re_, d, rng);
        init_uniform_fanin(*fw_im_, d, rng);
    }

    gcn_ = std::make_unique<GraphConv>(store, "cond_enc.gcn", d, n_nodes, cfg_.gcn_order,
                                       cfg_.adapt_dim, rng);
    ln_gamma_ = &store.create("cond_enc.norm.gamma", {d});
    ln_gamma_->value.fill(1.0);
    ln_beta_ = &store.create("cond_enc.norm.beta", {d});
    mlp_w1_ = &store.create("cond_enc.mlp.w1", {d, cfg_.mlp_hidden});
    init_uniform_fanin(*mlp_w1_, d, rng);
    mlp_b1_ = &store.create("cond_enc.mlp.b1", {cfg_.mlp_hidden});
    mlp_w2_ = &store.create("cond_enc.mlp.w2", {cfg_.mlp_hidden, d});
    init_uniform_fanin(*mlp_w2_, cfg_.mlp_hidden, rng);
    mlp_b2_ = &store.create("cond_enc.mlp.b2", {d});
}

Tape::Id ConditionalEncoder::embed(Tape& t, const Tensor& cond_values) const {
    const int64_t n = cond_values.dim(0);
    const int64_t L = cond_values.dim(1);
    if (L != cfg_.L) throw std::invalid_argument("encoder: window length mismatch");
    Tensor x({n, L, 1});
    for (int64_t i = 0; i < cond_values.size(); ++i) x[i] = cond_values[i];
    return t.linear(t.input(std::move(x)), t.param(*in_w_), t.param(*in_b_));
}

Tape::Id ConditionalEncoder::extract_trend(Tape& t, Tape::Id c_in) const {
    if (!cfg_.use_trend) throw std::logic_error("trend branch is ablated");
    Tape::Id sum = -1;
    for (size_t m = 0; m < expert_w_.size(); ++m) {
        Tape::Id e = t.causal_conv(c_in, t.param(*expert_w_[m]), t.param(*expert_b_[m]));
        sum = (sum < 0) ? e : t.add(sum, e);
    }
    return t.scale(sum, 1.0 / static_cast<double>(expert_w_.size()));
}

Tape::Id ConditionalEncoder::extract_season(Tape& t, Tape::Id c_in) const {
    if (!cfg_.use_season) throw std::logic_error("seasonal branch is ablated");
    return t.fourier_affine(c_in, t.param(*fw_re_), t.param(*fw_im_), t.param(*fb_re_),
                            t.param(*fb_im_));
}

ConditionalEncoder::Parts ConditionalEncoder::forward_parts(
    Tape& t, const Tensor& cond_values, const GraphSupports& g) const {
    Parts p;
    p.c_in = embed(t, cond_values);
    if (cfg_.use_trend) p.c_trend = extract_trend(t, p.c_in);
    if (cfg_.use_season) p.c_season = extract_season(t, p.c_in);
    if (cfg_.use_trend && cfg_.use_season) {
        p.c_tem = t.concat_ch(p.c_trend, p.c_season);
    } else {
        p.c_tem = cfg_.use_trend ? p.c_trend : p.c_season;
    }
    p.c_spa = gcn_->forward(t, p.c_tem, g);
    Tape::Id fused = t.layer_norm(t.add(p.c_spa, p.c_tem), t.param(*ln_gamma_),
                                  t.param(*ln_beta_));
    Tape::Id h = t.relu(t.linear(fused, t.param(*mlp_w1_), t.param(*mlp_b1_)));
    p.c_con = t.linear(h, t.param(*mlp_w2_), t.param(*mlp_b2_));
    return p;
}

}  // namespace stimpute
