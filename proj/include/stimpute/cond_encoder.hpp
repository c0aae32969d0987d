#pragma once

#include <string>
#include <vector>

#include "stimpute/graph_conv.hpp"
#include "stimpute/params.hpp"
#include "stimpute/tape.hpp"

namespace stimpute {

struct CondEncoderConfig {
    int L = 0;
    int d = 64;
    int d_trend = 32;
    int d_season = 32;
    bool use_trend = true;   // disabling reallocates the full width to the other branch
    bool use_season = true;
    int gcn_order = 2;
    int adapt_dim = 10;
    int mlp_hidden = 0;  // 0 = d

    void resolve();  // applies the ablation width rules and checks d = d_T + d_S
};

/// Builds the conditional representation from the interpolated conditioner:
/// input embedding, causal-conv trend experts, learnable Fourier seasonal
/// layer, graph fusion, and the final norm+MLP head.
class ConditionalEncoder {
public:
    ConditionalEncoder(ParameterStore& store, const CondEncoderConfig& cfg,
                       int64_t n_nodes, Rng& rng);

    struct Parts {
        Tape::Id c_in = -1;
        Tape::Id c_trend = -1;   // -1 when the trend branch is ablated
        Tape::Id c_season = -1;  // -1 when the seasonal branch is ablated
        Tape::Id c_tem = -1;
        Tape::Id c_spa = -1;
        Tape::Id c_con = -1;
    };

    Parts forward_parts(Tape& t, const Tensor& cond_values /*[N,L]*/,
                        const GraphSupports& g) const;
    Tape::Id forward(Tape& t, const Tensor& cond_values, const GraphSupports& g) const {
        return forward_parts(t, cond_values, g).c_con;
    }

    // Branch entry points, exposed for the spectral/causality properties.
    Tape::Id embed(Tape& t, const Tensor& cond_values) const;
    Tape::Id extract_trend(Tape& t, Tape::Id c_in) const;
    Tape::Id extract_season(Tape& t, Tape::Id c_in) const;

    const CondEncoderConfig& config() const { return cfg_; }
    int expert_count() const { return static_cast<int>(expert_w_.size()); }
    int expert_kernel(int m) const { return 1 << m; }

    // Parameter handles for tests that pin specific weights.
    Parameter& fourier_w_re() { return *fw_re_; }
    Parameter& fourier_w_im() { return *fw_im_; }
    Parameter& fourier_b_re() { return *fb_re_; }
    Parameter& fourier_b_im() { return *fb_im_; }
    Parameter& expert_weight(int m) { return *expert_w_[static_cast<size_t>(m)]; }
    Parameter& expert_bias(int m) { return *expert_b_[static_cast<size_t>(m)]; }
    GraphConv& gcn() { return *gcn_; }

private:
    CondEncoderConfig cfg_;
    Parameter* in_w_;
    Parameter* in_b_;
    std::vector<Parameter*> expert_w_;
    std::vector<Parameter*> expert_b_;
    Parameter* fw_re_ = nullptr;
    Parameter* fw_im_ = nullptr;
    Parameter* fb_re_ = nullptr;
    Parameter* fb_im_ = nullptr;
    std::unique_ptr<GraphConv> gcn_;
    Parameter* ln_gamma_;
    Parameter* ln_beta_;
    Parameter* mlp_w1_;
    Parameter* mlp_b1_;
    Parameter* mlp_w2_;
    Parameter* mlp_b2_;
};

}  // namespace stimpute
