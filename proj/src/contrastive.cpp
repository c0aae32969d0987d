#include "stimpute/contrastive.hpp"

#include <cmath>
#include <stdexcept>

#include "stimpute/kernels.hpp"

namespace stimpute {

ContrastiveHead::ContrastiveHead(ParameterStore& store, const ContrastiveConfig& cfg,
                                 Rng& rng)
    : cfg_(cfg) {
    if (cfg_.tau <= 0.0) throw std::invalid_argument("contrastive: tau must be positive");
    const int d = cfg_.feat_dim;
    const int dc = cfg_.embed_dim;
    auto make_head = [&](const char* ns, Parameter*& w1, Parameter*& b1, Parameter*& w2,
                         Parameter*& b2, Parameter*& w3, Parameter*& b3, bool trainable) {
        const std::string p = std::string("ctr.") + ns + ".";
        w1 = &store.create(p + "res.w1", {d, d});
        b1 = &store.create(p + "res.b1", {d});
        w2 = &store.create(p + "res.w2", {d, d});
        b2 = &store.create(p + "res.b2", {d});
        w3 = &store.create(p + "proj.w", {d, dc});
        b3 = &store.create(p + "proj.b", {dc});
        for (Parameter* w : {w1, w2, w3}) init_uniform_fanin(*w, d, rng);
        for (Parameter* q : {w1, b1, w2, b2, w3, b3}) q->trainable = trainable;
    };
    make_head("query", q_w1_, q_b1_, q_w2_, q_b2_, q_w3_, q_b3_, true);
    make_head("key", k_w1_, k_b1_, k_w2_, k_b2_, k_w3_, k_b3_, false);
    // the key head starts as an exact copy of the query head
    momentum_update(0.0);
}

Tape::Id ContrastiveHead::query_embedding(Tape& t, Tape::Id pooled,
                                          const Tensor& dropout_mask) const {
    Tape::Id x = t.mul_mask(pooled, dropout_mask);
    Tape::Id h1 = t.relu(t.linear(x, t.param(*q_w1_), t.param(*q_b1_)));
    Tape::Id h2 = t.add(t.linear(h1, t.param(*q_w2_), t.param(*q_b2_)), x);
    return t.l2_normalize(t.linear(h2, t.param(*q_w3_), t.param(*q_b3_)));
}

Tensor ContrastiveHead::head_forward(const Tensor& x, const Parameter& w1,
                                     const Parameter& b1, const Parameter& w2,
                                     const Parameter& b2, const Parameter& w3,
                                     const Parameter& b3) const {
    const int d = cfg_.feat_dim;
    const int dc = cfg_.embed_dim;
    Tensor h1({d});
    kernels::linear_fwd(x.data(), w1.value.data(), b1.value.data(), h1.data(), 1, d, d);
    for (int i = 0; i < d; ++i) h1[i] = h1[i] > 0.0 ? h1[i] : 0.0;
    Tensor h2({d});
    kernels::linear_fwd(h1.data(), w2.value.data(), b2.value.data(), h2.data(), 1, d, d);
    for (int i = 0; i < d; ++i) h2[i] += x[i];
    Tensor e({dc});
    kernels::linear_fwd(h2.data(), w3.value.data(), b3.value.data(), e.data(), 1, d, dc);
    double norm2 = 0.0;
    for (int i = 0; i < dc; ++i) norm2 += e[i] * e[i];
    const double norm = std::sqrt(norm2);
    if (norm < 1e-12)
        throw std::runtime_error("contrastive: degenerate zero-norm embedding");
    for (int i = 0; i < dc; ++i) e[i] /= norm;
    return e;
}

Tensor ContrastiveHead::key_embedding(const Tensor& pooled,
                                      const Tensor& dropout_mask) const {
    if (pooled.size() != cfg_.feat_dim || dropout_mask.size() != cfg_.feat_dim)
        throw std::invalid_argument("contrastive: pooled feature width mismatch");
    Tensor x = mul(pooled, dropout_mask);
    return head_forward(x, *k_w1_, *k_b1_, *k_w2_, *k_b2_, *k_w3_, *k_b3_);
}

Tensor ContrastiveHead::make_dropout_mask(Rng& rng) const {
    Tensor m({cfg_.feat_dim});
    if (cfg_.dropout <= 0.0) {
        m.fill(1.0);
        return m;
    }
    const double keep = 1.0 - cfg_.dropout;
    for (int64_t i = 0; i < m.size(); ++i)
        m[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    return m;
}

void ContrastiveHead::momentum_update(double m) {
    if (m < 0.0 || m > 1.0) throw std::invalid_argument("momentum must lie in [0,1]");
    const Parameter* qs[] = {q_w1_, q_b1_, q_w2_, q_b2_, q_w3_, q_b3_};
    Parameter* ks[] = {k_w1_, k_b1_, k_w2_, k_b2_, k_w3_, k_b3_};
    for (int i = 0; i < 6; ++i)
        for (int64_t j = 0; j < ks[i]->value.size(); ++j)
            ks[i]->value[j] = m * ks[i]->value[j] + (1.0 - m) * qs[i]->value[j];
}

void ContrastiveHead::push_keys(const std::vector<Tensor>& keys) {
    if (static_cast<int64_t>(keys.size()) > cfg_.queue_capacity)
        throw std::invalid_argument("contrastive: queue capacity below batch size");
    for (const Tensor& k : keys) {
        if (k.size() != cfg_.embed_dim)
            throw std::invalid_argument("contrastive: key dim mismatch");
        queue_.push_back(k);
    }
    while (static_cast<int64_t>(queue_.size()) > cfg_.queue_capacity) queue_.pop_front();
}

Tensor ContrastiveHead::queue_matrix() const {
    const int64_t k = queue_size();
    Tensor m({k, cfg_.embed_dim});
    for (int64_t i = 0; i < k; ++i)
        for (int j = 0; j < cfg_.embed_dim; ++j)
            m.at(i, j) = queue_[static_cast<size_t>(i)][j];
    return m;
}

double info_nce(const Tensor& q, const Tensor& k_pos, const Tensor& queue, double tau) {
    Tape t;
    return t.val(t.info_nce(t.input(q), k_pos, queue, tau))[0];
}

}  // namespace stimpute
