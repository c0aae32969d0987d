#pragma once

#include <deque>
#include <vector>

#include "stimpute/params.hpp"
#include "stimpute/tape.hpp"

namespace stimpute {

struct ContrastiveConfig {
    int feat_dim = 64;      // pooled feature width (the model channel size)
    int embed_dim = 64;
    int queue_capacity = 1024;
    double tau = 0.07;
    double momentum = 0.999;
    double dropout = 0.1;   // feature dropout per view during training
};

/// Query/key projection heads over pooled residual features, MoCo-style: the
/// key head is a momentum copy of the query head, negatives come from a FIFO
/// queue of past keys, and no gradient ever flows through the key path.
class ContrastiveHead {
public:
    ContrastiveHead(ParameterStore& store, const ContrastiveConfig& cfg, Rng& rng);

    /// Query view on the tape; gradients flow into `pooled` and the query head.
    Tape::Id query_embedding(Tape& t, Tape::Id pooled, const Tensor& dropout_mask) const;

    /// Key view as a plain forward pass (stop-gradient by construction).
    /// Throws on a zero-norm embedding.
    Tensor key_embedding(const Tensor& pooled, const Tensor& dropout_mask) const;

    /// Scaled Bernoulli keep-mask over the pooled features; all-ones when the
    /// configured dropout rate is zero.
    Tensor make_dropout_mask(Rng& rng) const;

    /// key_param <- m * key_param + (1-m) * query_param
    void momentum_update(double m);
    void momentum_update() { momentum_update(cfg_.momentum); }

    /// Enqueues new keys and drops the oldest beyond the capacity. Errors when
    /// the capacity cannot hold one batch.
    void push_keys(const std::vector<Tensor>& keys);

    Tensor queue_matrix() const;  // [current_size, embed_dim]
    int64_t queue_size() const { return static_cast<int64_t>(queue_.size()); }
    void clear_queue() { queue_.clear(); }

    const ContrastiveConfig& config() const { return cfg_; }

private:
    Tensor head_forward(const Tensor& x, const Parameter& w1, const Parameter& b1,
                        const Parameter& w2, const Parameter& b2, const Parameter& w3,
                        const Parameter& b3) const;

    ContrastiveConfig cfg_;
    Parameter *q_w1_, *q_b1_, *q_w2_, *q_b2_, *q_w3_, *q_b3_;
    Parameter *k_w1_, *k_b1_, *k_w2_, *k_b2_, *k_w3_, *k_b3_;
    std::deque<Tensor> queue_;
};

/// InfoNCE with unit-norm embeddings: softmax cross entropy of the positive
/// against the queued negatives at temperature tau. Zero when the queue is
/// empty.
double info_nce(const Tensor& q, const Tensor& k_pos, const Tensor& queue, double tau);

/// loss_rl + alpha * loss_cl
inline double total_loss(double loss_rl, double loss_cl, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("total_loss: alpha must be >= 0");
    return loss_rl + alpha * loss_cl;
}

}  // namespace stimpute
