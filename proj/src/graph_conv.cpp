#include "stimpute/graph_conv.hpp"

namespace stimpute {

GraphSupports GraphSupports::from_graph(const GraphSpec& g) {
    const int64_t n = g.nodes();
    GraphSupports s;
    s.fwd = Tensor({n, n});
    s.bwd = Tensor({n, n});
    for (int64_t i = 0; i < n; ++i) {
        double row = 0.0, col = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            row += g.adjacency.at(i, j);
            col += g.adjacency.at(j, i);
        }
        for (int64_t j = 0; j < n; ++j) {
            s.fwd.at(i, j) = row > 0.0 ? g.adjacency.at(i, j) / row : 0.0;
            s.bwd.at(i, j) = col > 0.0 ? g.adjacency.at(j, i) / col : 0.0;
        }
    }
    return s;
}

GraphConv::GraphConv(ParameterStore& store, const std::string& prefix, int channels,
                     int64_t n_nodes, int order, int adapt_dim, Rng& rng)
    : order_(order) {
    w_self_ = &store.create(prefix + ".self.w", {channels, channels});
    init_uniform_fanin(*w_self_, channels, rng);
    bias_ = &store.create(prefix + ".b", {channels});
    auto make_bank = [&](const char* tag, std::vector<Parameter*>& bank) {
        for (int k = 1; k <= order; ++k) {
            Parameter& p = store.create(prefix + "." + tag + std::to_string(k) + ".w",
                                        {channels, channels});
            init_uniform_fanin(p, channels, rng);
            bank.push_back(&p);
        }
    };
    make_bank("fwd", w_fwd_);
    make_bank("bwd", w_bwd_);
    make_bank("ada", w_ada_);
    emb_src_ = &store.create(prefix + ".emb_src", {n_nodes, adapt_dim});
    emb_dst_ = &store.create(prefix + ".emb_dst", {n_nodes, adapt_dim});
    rng.fill_normal(emb_src_->value, 0.3);
    rng.fill_normal(emb_dst_->value, 0.3);
}

Tape::Id GraphConv::adaptive_adjacency(Tape& t) const {
    return t.row_normalize(t.relu(t.matmul_nt(t.param(*emb_src_), t.param(*emb_dst_))));
}

Tape::Id GraphConv::forward(Tape& t, Tape::Id x, const GraphSupports& g) const {
    Tape::Id z = t.linear(x, t.param(*w_self_));
    auto apply = [&](Tape::Id support, const std::vector<Parameter*>& bank) {
        Tape::Id xk = x;
        for (int k = 0; k < order_; ++k) {
            xk = t.propagate(support, xk);
            z = t.add(z, t.linear(xk, t.param(*bank[static_cast<size_t>(k)])));
        }
    };
    apply(t.input(g.fwd), w_fwd_);
    apply(t.input(g.bwd), w_bwd_);
    apply(adaptive_adjacency(t), w_ada_);
    return t.channel_bias(z, t.param(*bias_));
}

}  // namespace stimpute
