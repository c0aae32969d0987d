#include "stimpute/tape.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "stimpute/kernels.hpp"

namespace stimpute {

const DftTables& DftTables::for_length(int L) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<DftTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(L);
    if (it == cache.end()) {
        auto t = std::make_unique<DftTables>();
        t->L = L;
        t->F = L / 2 + 1;
        t->cos_fl = Tensor({t->F, L});
        t->sin_fl = Tensor({t->F, L});
        const double w = 2.0 * 3.14159265358979323846 / L;
        for (int f = 0; f < t->F; ++f)
            for (int l = 0; l < L; ++l) {
                t->cos_fl.at(f, l) = std::cos(w * f * l);
                t->sin_fl.at(f, l) = std::sin(w * f * l);
            }
        it = cache.emplace(L, std::move(t)).first;
    }
    return *it->second;
}

namespace {

std::vector<int64_t> with_last(const Tensor& x, int64_t last) {
    auto s = x.shape();
    s.back() = last;
    return s;
}

}  // namespace

Tape::Id Tape::input(Tensor v) {
    Node n;
    n.kind = Op::kInput;
    n.value = std::move(v);
    return push(std::move(n));
}

Tape::Id Tape::param(Parameter& p) {
    Node n;
    n.kind = Op::kParam;
    n.value = p.value;
    n.param = &p;
    return push(std::move(n));
}

Tensor& Tape::ensure_grad(Id id) {
    Node& n = at(id);
    if (n.grad.size() != n.value.size()) {
        n.grad = Tensor(n.value.shape());
    }
    return n.grad;
}

Tape::Id Tape::linear(Id x, Id W, Id b) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(W);
    const int ci = static_cast<int>(wv.dim(0));
    const int co = static_cast<int>(wv.dim(1));
    if (xv.dim(xv.ndim() - 1) != ci) throw std::invalid_argument("linear: ci mismatch");
    const int64_t M = xv.size() / ci;
    Node n;
    n.kind = Op::kLinear;
    n.value = Tensor(with_last(xv, co));
    n.parents = {x, W, b, -1, -1};
    n.n_parents = b >= 0 ? 3 : 2;
    n.ints = {M, ci, co};
    kernels::linear_fwd(xv.data(), wv.data(), b >= 0 ? val(b).data() : nullptr,
                        n.value.data(), M, ci, co);
    return push(std::move(n));
}

Tape::Id Tape::causal_conv(Id x, Id W, Id b) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(W);
    const int N = static_cast<int>(xv.dim(0));
    const int L = static_cast<int>(xv.dim(1));
    const int K = static_cast<int>(wv.dim(0));
    const int ci = static_cast<int>(wv.dim(1));
    const int co = static_cast<int>(wv.dim(2));
    if (xv.dim(2) != ci) throw std::invalid_argument("causal_conv: ci mismatch");
    Node n;
    n.kind = Op::kCausalConv;
    n.value = Tensor({N, L, co});
    n.parents = {x, W, b, -1, -1};
    n.n_parents = 3;
    n.ints = {N, L, K, ci, co};
    kernels::causal_conv_fwd(xv.data(), wv.data(), b >= 0 ? val(b).data() : nullptr,
                             n.value.data(), N, L, K, ci, co);
    return push(std::move(n));
}

Tape::Id Tape::fourier_affine(Id x, Id w_re, Id w_im, Id b_re, Id b_im) {
    const Tensor& xv = val(x);
    const int N = static_cast<int>(xv.dim(0));
    const int L = static_cast<int>(xv.dim(1));
    const int ci = static_cast<int>(xv.dim(2));
    const DftTables& tb = DftTables::for_length(L);
    const int F = tb.F;
    const Tensor& wr = val(w_re);
    if (wr.dim(0) != F || wr.dim(1) != ci)
        throw std::invalid_argument("fourier_affine: parameter/length mismatch");
    const int co = static_cast<int>(wr.dim(2));
    Node n;
    n.kind = Op::kFourier;
    n.value = Tensor({N, L, co});
    n.parents = {x, w_re, w_im, b_re, b_im};
    n.n_parents = 5;
    n.ints = {N, L, F, ci, co};
    n.tables = &tb;
    n.ctx.emplace_back(Tensor({N, F, ci}));  // Xre
    n.ctx.emplace_back(Tensor({N, F, ci}));  // Xim
    kernels::fourier_fwd(xv.data(), wr.data(), val(w_im).data(), val(b_re).data(),
                         val(b_im).data(), tb.cos_fl.data(), tb.sin_fl.data(),
                         n.value.data(), n.ctx[0].data(), n.ctx[1].data(), N, L, F, ci,
                         co);
    return push(std::move(n));
}

Tape::Id Tape::attention(Id q, Id k, Id v, int heads, bool over_time) {
    const Tensor& qv = val(q);
    const int N = static_cast<int>(qv.dim(0));
    const int L = static_cast<int>(qv.dim(1));
    const int d = static_cast<int>(qv.dim(2));
    if (d % heads != 0) throw std::invalid_argument("attention: d % heads != 0");
    if (!val(k).same_shape(qv) || !val(v).same_shape(qv))
        throw std::invalid_argument("attention: q/k/v shape mismatch");
    const int64_t B = over_time ? N : L;
    const int64_t S = over_time ? L : N;
    Node n;
    n.kind = Op::kAttention;
    n.value = Tensor({N, L, d});
    n.parents = {q, k, v, -1, -1};
    n.n_parents = 3;
    n.ints = {N, L, d, heads, over_time ? 1 : 0};
    n.ctx.emplace_back(Tensor({B * heads, S, S}));
    kernels::attention_fwd(qv.data(), val(k).data(), val(v).data(), n.ctx[0].data(),
                           n.value.data(), N, L, d, heads, over_time);
    return push(std::move(n));
}

Tape::Id Tape::propagate(Id p_mat, Id x) {
    const Tensor& pv = val(p_mat);
    const Tensor& xv = val(x);
    const int N = static_cast<int>(pv.dim(0));
    if (pv.dim(1) != N || xv.dim(0) != N)
        throw std::invalid_argument("propagate: adjacency/node-count mismatch");
    const int64_t LC = xv.size() / N;
    Node n;
    n.kind = Op::kPropagate;
    n.value = Tensor(xv.shape());
    n.parents = {p_mat, x, -1, -1, -1};
    n.n_parents = 2;
    n.ints = {N, LC};
    kernels::propagate_fwd(pv.data(), xv.data(), n.value.data(), N, LC);
    return push(std::move(n));
}

Tape::Id Tape::layer_norm(Id x, Id gamma, Id beta) {
    const Tensor& xv = val(x);
    const int C = static_cast<int>(xv.dim(xv.ndim() - 1));
    const int64_t M = xv.size() / C;
    Node n;
    n.kind = Op::kLayerNorm;
    n.value = Tensor(xv.shape());
    n.parents = {x, gamma, beta, -1, -1};
    n.n_parents = 3;
    n.ints = {M, C};
    n.ctx.emplace_back(Tensor({M}));  // mean
    n.ctx.emplace_back(Tensor({M}));  // inv_std
    kernels::layer_norm_fwd(xv.data(), val(gamma).data(), val(beta).data(),
                            n.value.data(), n.ctx[0].data(), n.ctx[1].data(), M, C);
    return push(std::move(n));
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    const int64_t N = av.dim(0), r = av.dim(1), M = bv.dim(0);
    if (bv.dim(1) != r) throw std::invalid_argument("matmul_nt: inner dim mismatch");
    Node n;
    n.kind = Op::kMatmulNT;
    n.value = Tensor({N, M});
    n.parents = {a, b, -1, -1, -1};
    n.n_parents = 2;
    for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < M; ++j) {
            double s = 0.0;
            for (int64_t k = 0; k < r; ++k) s += av.at(i, k) * bv.at(j, k);
            n.value.at(i, j) = s;
        }
    return push(std::move(n));
}

Tape::Id Tape::row_normalize(Id x) {
    const Tensor& xv = val(x);
    const int64_t R = xv.dim(0), C = xv.dim(1);
    Node n;
    n.kind = Op::kRowNormalize;
    n.value = Tensor({R, C});
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    n.ctx.emplace_back(Tensor({R}));
    for (int64_t r = 0; r < R; ++r) {
        double s = 0.0;
        for (int64_t c = 0; c < C; ++c) s += xv.at(r, c);
        n.ctx[0][r] = s;
        if (s > 1e-12)
            for (int64_t c = 0; c < C; ++c) n.value.at(r, c) = xv.at(r, c) / s;
    }
    return push(std::move(n));
}

Tape::Id Tape::relu(Id x) {
    Node n;
    n.kind = Op::kRelu;
    n.value = Tensor(val(x).shape());
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    kernels::ew_relu_fwd(val(x).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::tanh_(Id x) {
    Node n;
    n.kind = Op::kTanh;
    n.value = Tensor(val(x).shape());
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    kernels::ew_tanh_fwd(val(x).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::sigmoid_(Id x) {
    Node n;
    n.kind = Op::kSigmoid;
    n.value = Tensor(val(x).shape());
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    kernels::ew_sigmoid_fwd(val(x).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
    if (val(a).size() != val(b).size()) throw std::invalid_argument("add: size mismatch");
    Node n;
    n.kind = Op::kAdd;
    n.value = Tensor(val(a).shape());
    n.parents = {a, b, -1, -1, -1};
    n.n_parents = 2;
    kernels::ew_add_fwd(val(a).data(), val(b).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::add_scaled(Id a, Id b, double alpha) {
    if (val(a).size() != val(b).size())
        throw std::invalid_argument("add_scaled: size mismatch");
    Node n;
    n.kind = Op::kAddScaled;
    n.value = val(a);
    n.parents = {a, b, -1, -1, -1};
    n.n_parents = 2;
    n.scalars = {alpha};
    kernels::ew_axpy(alpha, val(b).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
    if (val(a).size() != val(b).size()) throw std::invalid_argument("mul: size mismatch");
    Node n;
    n.kind = Op::kMul;
    n.value = Tensor(val(a).shape());
    n.parents = {a, b, -1, -1, -1};
    n.n_parents = 2;
    kernels::ew_mul_fwd(val(a).data(), val(b).data(), n.value.data(), n.value.size());
    return push(std::move(n));
}

Tape::Id Tape::scale(Id x, double s) {
    Node n;
    n.kind = Op::kScale;
    n.value = val(x);
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    n.scalars = {s};
    for (int64_t i = 0; i < n.value.size(); ++i) n.value[i] *= s;
    return push(std::move(n));
}

Tape::Id Tape::channel_bias(Id x, Id v) {
    const Tensor& xv = val(x);
    const Tensor& vv = val(v);
    const int C = static_cast<int>(vv.size());
    if (xv.dim(xv.ndim() - 1) != C)
        throw std::invalid_argument("channel_bias: channel mismatch");
    Node n;
    n.kind = Op::kChannelBias;
    n.value = xv;
    n.parents = {x, v, -1, -1, -1};
    n.n_parents = 2;
    n.ints = {xv.size() / C, C};
    for (int64_t m = 0; m < n.ints[0]; ++m)
        for (int c = 0; c < C; ++c) n.value[m * C + c] += vv[c];
    return push(std::move(n));
}

Tape::Id Tape::concat_ch(Id a, Id b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    const int ca = static_cast<int>(av.dim(av.ndim() - 1));
    const int cb = static_cast<int>(bv.dim(bv.ndim() - 1));
    const int64_t M = av.size() / ca;
    if (bv.size() / cb != M) throw std::invalid_argument("concat_ch: leading mismatch");
    Node n;
    n.kind = Op::kConcatCh;
    n.value = Tensor(with_last(av, ca + cb));
    n.parents = {a, b, -1, -1, -1};
    n.n_parents = 2;
    n.ints = {M, ca, cb};
    for (int64_t m = 0; m < M; ++m) {
        double* y = n.value.data() + m * (ca + cb);
        const double* pa = av.data() + m * ca;
        const double* pb = bv.data() + m * cb;
        for (int c = 0; c < ca; ++c) y[c] = pa[c];
        for (int c = 0; c < cb; ++c) y[ca + c] = pb[c];
    }
    return push(std::move(n));
}

Tape::Id Tape::slice_ch(Id x, int from, int width) {
    const Tensor& xv = val(x);
    const int C = static_cast<int>(xv.dim(xv.ndim() - 1));
    if (from < 0 || from + width > C) throw std::invalid_argument("slice_ch: bounds");
    const int64_t M = xv.size() / C;
    Node n;
    n.kind = Op::kSliceCh;
    n.value = Tensor(with_last(xv, width));
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    n.ints = {M, C, from, width};
    for (int64_t m = 0; m < M; ++m)
        for (int c = 0; c < width; ++c) n.value[m * width + c] = xv[m * C + from + c];
    return push(std::move(n));
}

Tape::Id Tape::mean_pool_nl(Id x) {
    const Tensor& xv = val(x);
    const int C = static_cast<int>(xv.dim(xv.ndim() - 1));
    const int64_t M = xv.size() / C;
    Node n;
    n.kind = Op::kMeanPoolNL;
    n.value = Tensor({C});
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    n.ints = {M, C};
    for (int64_t m = 0; m < M; ++m)
        for (int c = 0; c < C; ++c) n.value[c] += xv[m * C + c];
    for (int c = 0; c < C; ++c) n.value[c] /= static_cast<double>(M);
    return push(std::move(n));
}

Tape::Id Tape::l2_normalize(Id v) {
    const Tensor& vv = val(v);
    double norm2 = 0.0;
    for (int64_t i = 0; i < vv.size(); ++i) norm2 += vv[i] * vv[i];
    const double norm = std::sqrt(norm2);
    if (norm < 1e-12)
        throw std::runtime_error("l2_normalize: degenerate zero-norm embedding");
    Node n;
    n.kind = Op::kL2Normalize;
    n.value = stimpute::scale(vv, 1.0 / norm);
    n.parents = {v, -1, -1, -1, -1};
    n.n_parents = 1;
    n.scalars = {norm};
    return push(std::move(n));
}

Tape::Id Tape::mul_mask(Id x, Tensor mask) {
    if (val(x).size() != mask.size())
        throw std::invalid_argument("mul_mask: size mismatch");
    Node n;
    n.kind = Op::kMulMask;
    n.value = Tensor(val(x).shape());
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    kernels::ew_mul_fwd(val(x).data(), mask.data(), n.value.data(), n.value.size());
    n.ctx.push_back(std::move(mask));
    return push(std::move(n));
}

Tape::Id Tape::masked_mse(Id pred, Tensor target, Tensor mask) {
    const Tensor& pv = val(pred);
    if (pv.size() != target.size() || pv.size() != mask.size())
        throw std::invalid_argument("masked_mse: shape mismatch");
    double count = 0.0;
    double sum = 0.0;
    for (int64_t i = 0; i < pv.size(); ++i) {
        if (mask[i] == 0.0) continue;
        count += 1.0;
        const double e = pv[i] - target[i];
        sum += e * e;
    }
    if (count == 0.0) throw std::invalid_argument("masked_mse: empty target mask");
    Node n;
    n.kind = Op::kMaskedMSE;
    n.value = Tensor::scalar(sum / count);
    n.parents = {pred, -1, -1, -1, -1};
    n.n_parents = 1;
    n.scalars = {count};
    n.ctx.push_back(std::move(target));
    n.ctx.push_back(std::move(mask));
    return push(std::move(n));
}

Tape::Id Tape::info_nce(Id q, Tensor k_pos, Tensor queue, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be positive");
    const Tensor& qv = val(q);
    const int64_t dc = qv.size();
    if (k_pos.size() != dc) throw std::invalid_argument("info_nce: k_pos dim mismatch");
    const int64_t K = queue.size() == 0 ? 0 : queue.dim(0);
    if (K > 0 && queue.dim(1) != dc)
        throw std::invalid_argument("info_nce: queue dim mismatch");
    double s_pos = 0.0;
    for (int64_t i = 0; i < dc; ++i) s_pos += qv[i] * k_pos[i];
    s_pos /= tau;
    Tensor logits({K + 1});
    logits[0] = s_pos;
    for (int64_t j = 0; j < K; ++j) {
        double s = 0.0;
        for (int64_t i = 0; i < dc; ++i) s += qv[i] * queue.at(j, i);
        logits[j + 1] = s / tau;
    }
    double mx = logits[0];
    for (int64_t j = 1; j <= K; ++j) mx = std::max(mx, logits[j]);
    double z = 0.0;
    for (int64_t j = 0; j <= K; ++j) z += std::exp(logits[j] - mx);
    const double lse = mx + std::log(z);
    Tensor probs({K + 1});
    for (int64_t j = 0; j <= K; ++j) probs[j] = std::exp(logits[j] - lse);
    Node n;
    n.kind = Op::kInfoNCE;
    n.value = Tensor::scalar(lse - s_pos);
    n.parents = {q, -1, -1, -1, -1};
    n.n_parents = 1;
    n.scalars = {tau};
    n.ctx.push_back(std::move(k_pos));
    n.ctx.push_back(std::move(queue));
    n.ctx.push_back(std::move(probs));
    return push(std::move(n));
}

Tape::Id Tape::dot_const(Id x, Tensor w) {
    const Tensor& xv = val(x);
    if (xv.size() != w.size()) throw std::invalid_argument("dot_const: size mismatch");
    double s = 0.0;
    for (int64_t i = 0; i < xv.size(); ++i) s += xv[i] * w[i];
    Node n;
    n.kind = Op::kDotConst;
    n.value = Tensor::scalar(s);
    n.parents = {x, -1, -1, -1, -1};
    n.n_parents = 1;
    n.ctx.push_back(std::move(w));
    return push(std::move(n));
}

void Tape::backward(Id root, double seed) {
    if (val(root).size() != 1)
        throw std::invalid_argument("backward: root must be scalar");
    ensure_grad(root)[0] += seed;
    for (Id id = root; id >= 0; --id) {
        Node& n = at(id);
        if (n.grad.size() != n.value.size()) continue;  // not on the path
        backward_node(id);
    }
}

void Tape::backward_node(Id id) {
    Node& n = at(id);
    const Tensor& g = n.grad;
    auto pgrad = [&](int slot) -> double* {
        const Id pid = n.parents[static_cast<size_t>(slot)];
        return ensure_grad(pid).data();
    };
    auto pval = [&](int slot) -> const Tensor& {
        return val(n.parents[static_cast<size_t>(slot)]);
    };
    switch (n.kind) {
        case Op::kInput:
            break;
        case Op::kParam:
            for (int64_t i = 0; i < g.size(); ++i) n.param->grad[i] += g[i];
            break;
        case Op::kLinear: {
            const int64_t M = n.ints[0];
            const int ci = static_cast<int>(n.ints[1]);
            const int co = static_cast<int>(n.ints[2]);
            kernels::linear_bwd_x(g.data(), pval(1).data(), pgrad(0), M, ci, co);
            kernels::linear_bwd_w(pval(0).data(), g.data(), pgrad(1),
                                  n.n_parents > 2 ? pgrad(2) : nullptr, M, ci, co);
            break;
        }
        case Op::kCausalConv: {
            const int N = static_cast<int>(n.ints[0]);
            const int L = static_cast<int>(n.ints[1]);
            const int K = static_cast<int>(n.ints[2]);
            const int ci = static_cast<int>(n.ints[3]);
            const int co = static_cast<int>(n.ints[4]);
            kernels::causal_conv_bwd_x(g.data(), pval(1).data(), pgrad(0), N, L, K, ci, co);
            kernels::causal_conv_bwd_w(pval(0).data(), g.data(), pgrad(1),
                                       n.parents[2] >= 0 ? pgrad(2) : nullptr, N, L, K,
                                       ci, co);
            break;
        }
        case Op::kFourier: {
            const int N = static_cast<int>(n.ints[0]);
            const int L = static_cast<int>(n.ints[1]);
            const int F = static_cast<int>(n.ints[2]);
            const int ci = static_cast<int>(n.ints[3]);
            const int co = static_cast<int>(n.ints[4]);
            Tensor dYre({N, F, co}), dYim({N, F, co});
            kernels::fourier_bwd(g.data(), pval(1).data(), pval(2).data(),
                                 n.ctx[0].data(), n.ctx[1].data(), n.tables->cos_fl.data(),
                                 n.tables->sin_fl.data(), pgrad(0), pgrad(1), pgrad(2),
                                 pgrad(3), pgrad(4), dYre.data(), dYim.data(), N, L, F,
                                 ci, co);
            break;
        }
        case Op::kAttention: {
            const int N = static_cast<int>(n.ints[0]);
            const int L = static_cast<int>(n.ints[1]);
            const int d = static_cast<int>(n.ints[2]);
            const int heads = static_cast<int>(n.ints[3]);
            const bool over_time = n.ints[4] != 0;
            kernels::attention_bwd(pval(0).data(), pval(1).data(), pval(2).data(),
                                   n.ctx[0].data(), g.data(), pgrad(0), pgrad(1),
                                   pgrad(2), N, L, d, heads, over_time);
            break;
        }
        case Op::kPropagate: {
            const int N = static_cast<int>(n.ints[0]);
            const int64_t LC = n.ints[1];
            if (at(n.parents[0]).kind != Op::kInput)
                kernels::propagate_bwd_p(pval(1).data(), g.data(), pgrad(0), N, LC);
            kernels::propagate_bwd_x(pval(0).data(), g.data(), pgrad(1), N, LC);
            break;
        }
        case Op::kLayerNorm: {
            const int64_t M = n.ints[0];
            const int C = static_cast<int>(n.ints[1]);
            kernels::layer_norm_bwd(pval(0).data(), pval(1).data(), n.ctx[0].data(),
                                    n.ctx[1].data(), g.data(), pgrad(0), pgrad(1),
                                    pgrad(2), M, C);
            break;
        }
        case Op::kMatmulNT: {
            const Tensor& a = pval(0);
            const Tensor& b = pval(1);
            const int64_t N = a.dim(0), r = a.dim(1), M = b.dim(0);
            double* da = pgrad(0);
            double* db = pgrad(1);
            for (int64_t i = 0; i < N; ++i)
                for (int64_t j = 0; j < M; ++j) {
                    const double gij = g.at(i, j);
                    if (gij == 0.0) continue;
                    for (int64_t k = 0; k < r; ++k) {
                        da[i * r + k] += gij * b.at(j, k);
                        db[j * r + k] += gij * a.at(i, k);
                    }
                }
            break;
        }
        case Op::kRowNormalize: {
            const Tensor& y = n.value;
            const int64_t R = y.dim(0), C = y.dim(1);
            double* dx = pgrad(0);
            for (int64_t r = 0; r < R; ++r) {
                const double s = n.ctx[0][r];
                if (s <= 1e-12) continue;
                double dot = 0.0;
                for (int64_t c = 0; c < C; ++c) dot += g.at(r, c) * y.at(r, c);
                for (int64_t c = 0; c < C; ++c)
                    dx[r * C + c] += (g.at(r, c) - dot) / s;
            }
            break;
        }
        case Op::kRelu: {
            const Tensor& x = pval(0);
            double* dx = pgrad(0);
            for (int64_t i = 0; i < g.size(); ++i)
                if (x[i] > 0.0) dx[i] += g[i];
            break;
        }
        case Op::kTanh: {
            double* dx = pgrad(0);
            for (int64_t i = 0; i < g.size(); ++i)
                dx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
            break;
        }
        case Op::kSigmoid: {
            double* dx = pgrad(0);
            for (int64_t i = 0; i < g.size(); ++i)
                dx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
            break;
        }
        case Op::kAdd: {
            kernels::ew_axpy(1.0, g.data(), pgrad(0), g.size());
            kernels::ew_axpy(1.0, g.data(), pgrad(1), g.size());
            break;
        }
        case Op::kAddScaled: {
            kernels::ew_axpy(1.0, g.data(), pgrad(0), g.size());
            kernels::ew_axpy(n.scalars[0], g.data(), pgrad(1), g.size());
            break;
        }
        case Op::kMul: {
            const Tensor& a = pval(0);
            const Tensor& b = pval(1);
            double* da = pgrad(0);
            double* db = pgrad(1);
            for (int64_t i = 0; i < g.size(); ++i) {
                da[i] += g[i] * b[i];
                db[i] += g[i] * a[i];
            }
            break;
        }
        case Op::kScale:
            kernels::ew_axpy(n.scalars[0], g.data(), pgrad(0), g.size());
            break;
        case Op::kChannelBias: {
            const int64_t M = n.ints[0];
            const int C = static_cast<int>(n.ints[1]);
            kernels::ew_axpy(1.0, g.data(), pgrad(0), g.size());
            double* dv = pgrad(1);
            for (int64_t m = 0; m < M; ++m)
                for (int c = 0; c < C; ++c) dv[c] += g[m * C + c];
            break;
        }
        case Op::kConcatCh: {
            const int64_t M = n.ints[0];
            const int ca = static_cast<int>(n.ints[1]);
            const int cb = static_cast<int>(n.ints[2]);
            double* da = pgrad(0);
            double* db = pgrad(1);
            for (int64_t m = 0; m < M; ++m) {
                const double* gr = g.data() + m * (ca + cb);
                for (int c = 0; c < ca; ++c) da[m * ca + c] += gr[c];
                for (int c = 0; c < cb; ++c) db[m * cb + c] += gr[ca + c];
            }
            break;
        }
        case Op::kSliceCh: {
            const int64_t M = n.ints[0];
            const int C = static_cast<int>(n.ints[1]);
            const int from = static_cast<int>(n.ints[2]);
            const int width = static_cast<int>(n.ints[3]);
            double* dx = pgrad(0);
            for (int64_t m = 0; m < M; ++m)
                for (int c = 0; c < width; ++c)
                    dx[m * C + from + c] += g[m * width + c];
            break;
        }
        case Op::kMeanPoolNL: {
            const int64_t M = n.ints[0];
            const int C = static_cast<int>(n.ints[1]);
            const double inv = 1.0 / static_cast<double>(M);
            double* dx = pgrad(0);
            for (int64_t m = 0; m < M; ++m)
                for (int c = 0; c < C; ++c) dx[m * C + c] += g[c] * inv;
            break;
        }
        case Op::kL2Normalize: {
            const double norm = n.scalars[0];
            const Tensor& y = n.value;
            double dot = 0.0;
            for (int64_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
            double* dv = pgrad(0);
            for (int64_t i = 0; i < g.size(); ++i)
                dv[i] += (g[i] - y[i] * dot) / norm;
            break;
        }
        case Op::kMulMask: {
            const Tensor& mask = n.ctx[0];
            double* dx = pgrad(0);
            for (int64_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
            break;
        }
        case Op::kMaskedMSE: {
            const double gout = g[0];
            const Tensor& pred = pval(0);
            const Tensor& target = n.ctx[0];
            const Tensor& mask = n.ctx[1];
            const double inv = 2.0 / n.scalars[0];
            double* dp = pgrad(0);
            for (int64_t i = 0; i < pred.size(); ++i)
                if (mask[i] != 0.0) dp[i] += gout * inv * (pred[i] - target[i]);
            break;
        }
        case Op::kInfoNCE: {
            const double gout = g[0];
            const Tensor& k_pos = n.ctx[0];
            const Tensor& queue = n.ctx[1];
            const Tensor& probs = n.ctx[2];
            const double tau = n.scalars[0];
            const int64_t dc = k_pos.size();
            const int64_t K = probs.size() - 1;
            double* dq = pgrad(0);
            const double c_pos = gout * (probs[0] - 1.0) / tau;
            for (int64_t i = 0; i < dc; ++i) dq[i] += c_pos * k_pos[i];
            for (int64_t j = 0; j < K; ++j) {
                const double c = gout * probs[j + 1] / tau;
                for (int64_t i = 0; i < dc; ++i) dq[i] += c * queue.at(j, i);
            }
            break;
        }
        case Op::kDotConst: {
            const double gout = g[0];
            const Tensor& w = n.ctx[0];
            double* dx = pgrad(0);
            for (int64_t i = 0; i < w.size(); ++i) dx[i] += gout * w[i];
            break;
        }
    }
}

}  // namespace stimpute
