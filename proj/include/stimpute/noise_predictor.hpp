#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stimpute/graph_conv.hpp"
#include "stimpute/params.hpp"
#include "stimpute/schedule.hpp"
#include "stimpute/tape.hpp"

namespace stimpute {

struct NoisePredictorConfig {
    int d = 64;
    int layers = 4;
    int heads = 8;
    int t_embed_dim = 128;
    int gcn_order = 2;
    int adapt_dim = 10;
    int mlp_hidden = 0;  // 0 = d

    void resolve();
};

/// Denoising network: embeds (conditioner || noisy target), runs stacked
/// residual layers of conditional temporal attention, spatial attention +
/// graph decoding, and a gated unit, then collapses the summed skips to a
/// single noise channel. Queries/keys of every attention come from the
/// conditional representation; values carry the layer input.
class NoisePredictor {
public:
    NoisePredictor(ParameterStore& store, const NoisePredictorConfig& cfg,
                   int64_t n_nodes, Rng& rng);

    /// eps_hat [N, L]. `residual_tap`, when given, receives the final residual
    /// layer's output (the features consumed by the contrastive heads).
    Tape::Id forward(Tape& t, Tape::Id c_con, const Tensor& cond_values /*[N,L]*/,
                     const Tensor& x_t /*[N,L]*/, int t_step,
                     const GraphSupports& g, Tape::Id* residual_tap = nullptr) const;

    /// Sinusoidal embedding of the diffusion step.
    Tensor step_embedding(int t_step) const;

    /// The spatial half of one residual layer; exposed for the locality and
    /// graph-oracle properties.
    Tape::Id spatial_block(Tape& t, int layer, Tape::Id h_tem, Tape::Id c_con,
                           const GraphSupports& g) const;

    Tape::Id temporal_attention(Tape& t, int layer, Tape::Id h, Tape::Id c_con) const;

    const NoisePredictorConfig& config() const { return cfg_; }
    GraphConv& layer_gcn(int r) { return *layers_[static_cast<size_t>(r)].gcn; }

private:
    struct Layer {
        Parameter *tproj_w, *tproj_b;
        Parameter *t_wq, *t_wk, *t_wv, *t_wo;
        Parameter *s_wq, *s_wk, *s_wv, *s_wo;
        std::unique_ptr<GraphConv> gcn;
        Parameter *ln_attn_g, *ln_attn_b, *ln_gcn_g, *ln_gcn_b;
        Parameter *mlp_w1, *mlp_b1, *mlp_w2, *mlp_b2;
        Parameter *gate_w, *gate_b;
        Parameter *res_w, *res_b;
        Parameter *skip_w, *skip_b;
    };

    NoisePredictorConfig cfg_;
    Parameter *in_w_, *in_b_;
    std::vector<Layer> layers_;
    Parameter *out_w1_, *out_b1_;
    Parameter *out_w2_, *out_b2_;  // zero-initialized head
};

}  // namespace stimpute
