#include "stimpute/noise_predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace stimpute {

void NoisePredictorConfig::resolve() {
    if (d % heads != 0)
        throw std::invalid_argument("noise predictor: d must be divisible by heads");
    if (t_embed_dim % 2 != 0)
        throw std::invalid_argument("noise predictor: t_embed_dim must be even");
    if (layers < 1) throw std::invalid_argument("noise predictor: need >= 1 layer");
    if (mlp_hidden <= 0) mlp_hidden = d;
}

NoisePredictor::NoisePredictor(ParameterStore& store, const NoisePredictorConfig& cfg,
                               int64_t n_nodes, Rng& rng)
    : cfg_(cfg) {
    cfg_.resolve();
    const int d = cfg_.d;
    in_w_ = &store.create("noise_pred.in.w", {2, d});
    init_uniform_fanin(*in_w_, 2, rng);
    in_b_ = &store.create("noise_pred.in.b", {d});

    for (int r = 0; r < cfg_.layers; ++r) {
        const std::string p = "noise_pred.layer" + std::to_string(r) + ".";
        Layer ly;
        ly.tproj_w = &store.create(p + "tproj.w", {cfg_.t_embed_dim, d});
        init_uniform_fanin(*ly.tproj_w, cfg_.t_embed_dim, rng);
        ly.tproj_b = &store.create(p + "tproj.b", {d});
        auto attn = [&](const char* tag, Parameter*& wq, Parameter*& wk, Parameter*& wv,
                        Parameter*& wo) {
            wq = &store.create(p + tag + ".wq", {d, d});
            wk = &store.create(p + tag + ".wk", {d, d});
            wv = &store.create(p + tag + ".wv", {d, d});
            wo = &store.create(p + tag + ".wo", {d, d});
            for (Parameter* w : {wq, wk, wv, wo}) init_uniform_fanin(*w, d, rng);
        };
        attn("attn_t", ly.t_wq, ly.t_wk, ly.t_wv, ly.t_wo);
        attn("attn_s", ly.s_wq, ly.s_wk, ly.s_wv, ly.s_wo);
        ly.gcn = std::make_unique<GraphConv>(store, p + "gcn", d, n_nodes,
                                             cfg_.gcn_order, cfg_.adapt_dim, rng);
        ly.ln_attn_g = &store.create(p + "norm_attn.gamma", {d});
        ly.ln_attn_g->value.fill(1.0);
        ly.ln_attn_b = &store.create(p + "norm_attn.beta", {d});
        ly.ln_gcn_g = &store.create(p + "norm_gcn.gamma", {d});
        ly.ln_gcn_g->value.fill(1.0);
        ly.ln_gcn_b = &store.create(p + "norm_gcn.beta", {d});
        ly.mlp_w1 = &store.create(p + "mlp.w1", {d, cfg_.mlp_hidden});
        init_uniform_fanin(*ly.mlp_w1, d, rng);
        ly.mlp_b1 = &store.create(p + "mlp.b1", {cfg_.mlp_hidden});
        ly.mlp_w2 = &store.create(p + "mlp.w2", {cfg_.mlp_hidden, d});
        init_uniform_fanin(*ly.mlp_w2, cfg_.mlp_hidden, rng);
        ly.mlp_b2 = &store.create(p + "mlp.b2", {d});
        ly.gate_w = &store.create(p + "gate.w", {d, 2 * d});
        init_uniform_fanin(*ly.gate_w, d, rng);
        ly.gate_b = &store.create(p + "gate.b", {2 * d});
        ly.res_w = &store.create(p + "res.w", {d, d});
        init_uniform_fanin(*ly.res_w, d, rng);
        ly.res_b = &store.create(p + "res.b", {d});
        ly.skip_w = &store.create(p + "skip.w", {d, d});
        init_uniform_fanin(*ly.skip_w, d, rng);
        ly.skip_b = &store.create(p + "skip.b", {d});
        layers_.push_back(std::move(ly));
    }

    out_w1_ = &store.create("noise_pred.out.w1", {d, d});
    init_uniform_fanin(*out_w1_, d, rng);
    out_b1_ = &store.create("noise_pred.out.b1", {d});
    // zero-initialized head: the untrained model predicts zero noise
    out_w2_ = &store.create("noise_pred.out.w2", {d, 1});
    out_b2_ = &store.create("noise_pred.out.b2", {1});
}

Tensor NoisePredictor::step_embedding(int t_step) const {
    const int half = cfg_.t_embed_dim / 2;
    Tensor e({cfg_.t_embed_dim});
    for (int i = 0; i < half; ++i) {
        const double freq =
            std::pow(10000.0, -static_cast<double>(i) / std::max(1, half - 1));
        e[i] = std::sin(t_step * freq);
        e[half + i] = std::cos(t_step * freq);
    }
    return e;
}

Tape::Id NoisePredictor::temporal_attention(Tape& t, int layer, Tape::Id h,
                                            Tape::Id c_con) const {
    const Layer& ly = layers_[static_cast<size_t>(layer)];
    Tape::Id q = t.linear(c_con, t.param(*ly.t_wq));
    Tape::Id k = t.linear(c_con, t.param(*ly.t_wk));
    Tape::Id v = t.linear(h, t.param(*ly.t_wv));
    return t.linear(t.attention(q, k, v, cfg_.heads, /*over_time=*/true),
                    t.param(*ly.t_wo));
}

Tape::Id NoisePredictor::spatial_block(Tape& t, int layer, Tape::Id h_tem,
                                       Tape::Id c_con, const GraphSupports& g) const {
    const Layer& ly = layers_[static_cast<size_t>(layer)];
    Tape::Id q = t.linear(c_con, t.param(*ly.s_wq));
    Tape::Id k = t.linear(c_con, t.param(*ly.s_wk));
    Tape::Id v = t.linear(h_tem, t.param(*ly.s_wv));
    Tape::Id attn = t.linear(t.attention(q, k, v, cfg_.heads, /*over_time=*/false),
                             t.param(*ly.s_wo));
    Tape::Id branch_attn = t.layer_norm(t.add(attn, h_tem), t.param(*ly.ln_attn_g),
                                        t.param(*ly.ln_attn_b));
    Tape::Id gcn_out = ly.gcn->forward(t, h_tem, g);
    Tape::Id branch_gcn = t.layer_norm(t.add(gcn_out, h_tem), t.param(*ly.ln_gcn_g),
                                       t.param(*ly.ln_gcn_b));
    Tape::Id merged = t.add(branch_attn, branch_gcn);
    Tape::Id hidden = t.relu(t.linear(merged, t.param(*ly.mlp_w1), t.param(*ly.mlp_b1)));
    return t.linear(hidden, t.param(*ly.mlp_w2), t.param(*ly.mlp_b2));
}

Tape::Id NoisePredictor::forward(Tape& t, Tape::Id c_con, const Tensor& cond_values,
                                 const Tensor& x_t, int t_step, const GraphSupports& g,
                                 Tape::Id* residual_tap) const {
    if (!cond_values.same_shape(x_t))
        throw std::invalid_argument("noise predictor: conditioner/x_t shape mismatch");
    const int64_t N = cond_values.dim(0);
    const int64_t L = cond_values.dim(1);
    Tensor stacked({N, L, 2});
    for (int64_t i = 0; i < N * L; ++i) {
        stacked[2 * i] = cond_values[i];
        stacked[2 * i + 1] = x_t[i];
    }
    Tape::Id h = t.linear(t.input(std::move(stacked)), t.param(*in_w_), t.param(*in_b_));
    const Tensor t_emb = step_embedding(t_step);

    Tape::Id skip_sum = -1;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int r = 0; r < cfg_.layers; ++r) {
        const Layer& ly = layers_[static_cast<size_t>(r)];
        Tape::Id h_tem = temporal_attention(t, r, h, c_con);
        Tape::Id h_spa = spatial_block(t, r, h_tem, c_con, g);
        Tape::Id temb_proj = t.linear(t.input(t_emb), t.param(*ly.tproj_w),
                                      t.param(*ly.tproj_b));
        Tape::Id gated_in = t.channel_bias(h_spa, temb_proj);
        Tape::Id gates = t.linear(gated_in, t.param(*ly.gate_w), t.param(*ly.gate_b));
        Tape::Id z = t.mul(t.tanh_(t.slice_ch(gates, 0, cfg_.d)),
                           t.sigmoid_(t.slice_ch(gates, cfg_.d, cfg_.d)));
        Tape::Id res = t.linear(z, t.param(*ly.res_w), t.param(*ly.res_b));
        h = t.scale(t.add(h, res), inv_sqrt2);
        Tape::Id skip = t.linear(z, t.param(*ly.skip_w), t.param(*ly.skip_b));
        skip_sum = (skip_sum < 0) ? skip : t.add(skip_sum, skip);
    }
    if (residual_tap) *residual_tap = h;

    Tape::Id s = t.relu(t.scale(skip_sum, 1.0 / std::sqrt(double(cfg_.layers))));
    Tape::Id o = t.relu(t.linear(s, t.param(*out_w1_), t.param(*out_b1_)));
    return t.linear(o, t.param(*out_w2_), t.param(*out_b2_));  // [N, L, 1]
}

}  // namespace stimpute
