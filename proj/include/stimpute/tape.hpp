#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stimpute/params.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// Precomputed cos/sin tables for the learnable Fourier layer, cached per L.
struct DftTables {
    int L = 0;
    int F = 0;
    Tensor cos_fl;  // [F, L], cos(2*pi*f*l/L)
    Tensor sin_fl;  // [F, L]
    static const DftTables& for_length(int L);
};

/// Reverse-mode autodiff over a linear tape of tensor ops. Values are computed
/// eagerly on op creation; backward() walks the tape in reverse. Gradients of
/// Parameter leaves accumulate into Parameter::grad.
class Tape {
public:
    using Id = int32_t;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Drops all nodes but keeps allocated capacity.
    void clear() { nodes_.clear(); }

    Id input(Tensor v);
    Id param(Parameter& p);

    const Tensor& val(Id id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Tensor& grad_of(Id id) const { return nodes_[static_cast<size_t>(id)].grad; }

    /// Seeds d(root)/d(root) = seed and accumulates gradients down the tape.
    void backward(Id root, double seed = 1.0);

    // ---- ops ----
    Id linear(Id x, Id W, Id b = -1);     // x [..., ci] -> [..., co]
    Id causal_conv(Id x, Id W, Id b);     // x [N,L,ci], W [K,ci,co]
    Id fourier_affine(Id x, Id w_re, Id w_im, Id b_re, Id b_im);  // x [N,L,ci]
    Id attention(Id q, Id k, Id v, int heads, bool over_time);    // all [N,L,d]
    Id propagate(Id p_mat, Id x);         // p [N,N], x [N,L,C]
    Id layer_norm(Id x, Id gamma, Id beta);
    Id matmul_nt(Id a, Id b);             // a [N,r], b [M,r] -> [N,M]
    Id row_normalize(Id x);               // [R,C] row sums to 1; zero rows stay zero
    Id relu(Id x);
    Id tanh_(Id x);
    Id sigmoid_(Id x);
    Id add(Id a, Id b);
    Id add_scaled(Id a, Id b, double alpha);  // a + alpha * b
    Id mul(Id a, Id b);
    Id scale(Id x, double s);
    Id channel_bias(Id x, Id v);          // x [..., C] + v [C]
    Id concat_ch(Id a, Id b);             // along the last axis
    Id slice_ch(Id x, int from, int width);
    Id mean_pool_nl(Id x);                // [N,L,C] -> [C]
    Id l2_normalize(Id v);
    Id mul_mask(Id x, Tensor mask);       // elementwise by a constant
    Id masked_mse(Id pred, Tensor target, Tensor mask);     // -> scalar
    Id info_nce(Id q, Tensor k_pos, Tensor queue, double tau);  // -> scalar
    Id dot_const(Id x, Tensor w);         // sum(w * x) -> scalar (test head)

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        kInput, kParam, kLinear, kCausalConv, kFourier, kAttention, kPropagate,
        kLayerNorm, kMatmulNT, kRowNormalize, kRelu, kTanh, kSigmoid, kAdd,
        kAddScaled, kMul, kScale, kChannelBias, kConcatCh, kSliceCh, kMeanPoolNL,
        kL2Normalize, kMulMask, kMaskedMSE, kInfoNCE, kDotConst,
    };

    struct Node {
        Op kind;
        Tensor value;
        Tensor grad;
        std::array<Id, 5> parents{-1, -1, -1, -1, -1};
        int n_parents = 0;
        Parameter* param = nullptr;
        std::vector<Tensor> ctx;
        std::vector<double> scalars;
        std::vector<int64_t> ints;
        const DftTables* tables = nullptr;
    };

    Id push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    Node& at(Id id) { return nodes_[static_cast<size_t>(id)]; }
    Tensor& ensure_grad(Id id);
    void backward_node(Id id);

    std::vector<Node> nodes_;
};

}  // namespace stimpute
