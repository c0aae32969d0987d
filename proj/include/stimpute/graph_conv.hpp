#pragma once

#include <string>
#include <vector>

#include "stimpute/dataset.hpp"
#include "stimpute/params.hpp"
#include "stimpute/tape.hpp"

namespace stimpute {

/// Row-normalized transition matrices derived from the adjacency; the two
/// fixed supports of the diffusion-style graph convolution.
struct GraphSupports {
    Tensor fwd;  // rownorm(A)
    Tensor bwd;  // rownorm(A^T)
    int64_t nodes() const { return fwd.dim(0); }
    static GraphSupports from_graph(const GraphSpec& g);
};

/// Diffusion graph convolution with forward/backward transition supports plus
/// an adaptive adjacency learned as rownorm(relu(E_src E_dst^T)). Zeroing the
/// embedding tables zeroes the adaptive support entirely (zero rows propagate
/// nothing), leaving only the distance-based supports active.
class GraphConv {
public:
    GraphConv(ParameterStore& store, const std::string& prefix, int channels,
              int64_t n_nodes, int order, int adapt_dim, Rng& rng);

    Tape::Id forward(Tape& t, Tape::Id x, const GraphSupports& g) const;
    Tape::Id adaptive_adjacency(Tape& t) const;

    int order() const { return order_; }

private:
    int order_;
    Parameter* w_self_;
    Parameter* bias_;
    std::vector<Parameter*> w_fwd_;
    std::vector<Parameter*> w_bwd_;
    std::vector<Parameter*> w_ada_;
    Parameter* emb_src_;
    Parameter* emb_dst_;
};

}  // namespace stimpute
