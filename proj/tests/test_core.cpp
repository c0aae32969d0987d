#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "stimpute/kernels.hpp"
#include "stimpute/params.hpp"
#include "stimpute/rng.hpp"
#include "stimpute/tape.hpp"
#include "stimpute/tensor.hpp"
#include "stimpute/threading.hpp"

using namespace stimpute;

namespace {

Tensor random_tensor(std::initializer_list<int64_t> shape, Rng& rng, double s = 1.0) {
    Tensor t(shape);
    rng.fill_normal(t, s);
    return t;
}

// Central finite differences of a scalar-valued closure w.r.t. one parameter,
// compared against the analytic gradient accumulated in p.grad.
void check_param_grad(Parameter& p, const std::function<double()>& loss_fn,
                      const Tensor& analytic, double tol = 1e-6) {
    const double h = 1e-6;
    for (int64_t i = 0; i < p.value.size(); ++i) {
        const double keep = p.value[i];
        p.value[i] = keep + h;
        const double lp = loss_fn();
        p.value[i] = keep - h;
        const double lm = loss_fn();
        p.value[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double ga = analytic[i];
        const double denom = std::max({1.0, std::fabs(fd), std::fabs(ga)});
        CAPTURE(p.name);
        CAPTURE(i);
        CHECK(std::fabs(fd - ga) / denom < tol);
    }
}

}  // namespace

TEST_CASE("rng streams are deterministic and independent") {
    Rng a = Rng::stream(42, "mask", 3);
    Rng b = Rng::stream(42, "mask", 3);
    Rng c = Rng::stream(42, "mask", 4);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const uint64_t va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("rng normal moments") {
    Rng rng(7);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::fabs(s / n) < 0.01);
    CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("rng uniform_int covers range uniformly") {
    Rng rng(11);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) counts[static_cast<size_t>(rng.uniform_int(0, 6))]++;
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("kernels: serial and omp variants agree bitwise") {
    Rng rng(123);
    threading::set_threads(2);

    SUBCASE("linear") {
        const int64_t M = 97;
        const int ci = 13, co = 17;
        Tensor x = random_tensor({M, ci}, rng);
        Tensor W = random_tensor({ci, co}, rng);
        Tensor b = random_tensor({co}, rng);
        Tensor y1({M, co}), y2({M, co});
        kernels::serial::linear_fwd(x.data(), W.data(), b.data(), y1.data(), M, ci, co);
        kernels::omp::linear_fwd(x.data(), W.data(), b.data(), y2.data(), M, ci, co);
        CHECK(bitwise_equal(y1, y2));

        Tensor dy = random_tensor({M, co}, rng);
        Tensor dx1({M, ci}), dx2({M, ci}), dW1({ci, co}), dW2({ci, co}), db1({co}),
            db2({co});
        kernels::serial::linear_bwd_x(dy.data(), W.data(), dx1.data(), M, ci, co);
        kernels::omp::linear_bwd_x(dy.data(), W.data(), dx2.data(), M, ci, co);
        CHECK(bitwise_equal(dx1, dx2));
        kernels::serial::linear_bwd_w(x.data(), dy.data(), dW1.data(), db1.data(), M, ci,
                                      co);
        kernels::omp::linear_bwd_w(x.data(), dy.data(), dW2.data(), db2.data(), M, ci,
                                   co);
        CHECK(bitwise_equal(dW1, dW2));
        CHECK(bitwise_equal(db1, db2));
    }

    SUBCASE("causal conv") {
        const int N = 5, L = 31, K = 4, ci = 6, co = 9;
        Tensor x = random_tensor({N, L, ci}, rng);
        Tensor W = random_tensor({K, ci, co}, rng);
        Tensor b = random_tensor({co}, rng);
        Tensor y1({N, L, co}), y2({N, L, co});
        kernels::serial::causal_conv_fwd(x.data(), W.data(), b.data(), y1.data(), N, L, K,
                                         ci, co);
        kernels::omp::causal_conv_fwd(x.data(), W.data(), b.data(), y2.data(), N, L, K,
                                      ci, co);
        CHECK(bitwise_equal(y1, y2));
    }

    SUBCASE("attention both axes") {
        const int N = 6, L = 11, d = 8, heads = 2;
        Tensor Q = random_tensor({N, L, d}, rng);
        Tensor K = random_tensor({N, L, d}, rng);
        Tensor V = random_tensor({N, L, d}, rng);
        for (bool over_time : {true, false}) {
            const int64_t B = over_time ? N : L;
            const int64_t S = over_time ? L : N;
            Tensor p1({B * heads, S, S}), p2({B * heads, S, S});
            Tensor o1({N, L, d}), o2({N, L, d});
            kernels::serial::attention_fwd(Q.data(), K.data(), V.data(), p1.data(),
                                           o1.data(), N, L, d, heads, over_time);
            kernels::omp::attention_fwd(Q.data(), K.data(), V.data(), p2.data(),
                                        o2.data(), N, L, d, heads, over_time);
            CHECK(bitwise_equal(o1, o2));
            CHECK(bitwise_equal(p1, p2));
        }
    }

    SUBCASE("fourier") {
        const int N = 3, L = 24, ci = 4, co = 5;
        const DftTables& tb = DftTables::for_length(L);
        Tensor x = random_tensor({N, L, ci}, rng);
        Tensor Wre = random_tensor({tb.F, ci, co}, rng);
        Tensor Wim = random_tensor({tb.F, ci, co}, rng);
        Tensor Bre = random_tensor({tb.F, co}, rng);
        Tensor Bim = random_tensor({tb.F, co}, rng);
        Tensor y1({N, L, co}), y2({N, L, co});
        Tensor Xr1({N, tb.F, ci}), Xi1({N, tb.F, ci}), Xr2({N, tb.F, ci}),
            Xi2({N, tb.F, ci});
        kernels::serial::fourier_fwd(x.data(), Wre.data(), Wim.data(), Bre.data(),
                                     Bim.data(), tb.cos_fl.data(), tb.sin_fl.data(),
                                     y1.data(), Xr1.data(), Xi1.data(), N, L, tb.F, ci,
                                     co);
        kernels::omp::fourier_fwd(x.data(), Wre.data(), Wim.data(), Bre.data(),
                                  Bim.data(), tb.cos_fl.data(), tb.sin_fl.data(),
                                  y2.data(), Xr2.data(), Xi2.data(), N, L, tb.F, ci, co);
        CHECK(bitwise_equal(y1, y2));
        CHECK(bitwise_equal(Xr1, Xr2));
    }

    SUBCASE("propagate / layer norm / elementwise") {
        const int N = 7;
        const int64_t LC = 40;
        Tensor P = random_tensor({N, N}, rng);
        Tensor x = random_tensor({N, LC}, rng);
        Tensor y1({N, LC}), y2({N, LC});
        kernels::serial::propagate_fwd(P.data(), x.data(), y1.data(), N, LC);
        kernels::omp::propagate_fwd(P.data(), x.data(), y2.data(), N, LC);
        CHECK(bitwise_equal(y1, y2));

        const int C = 8;
        const int64_t M = 35;
        Tensor xx = random_tensor({M, C}, rng);
        Tensor gamma = random_tensor({C}, rng);
        Tensor beta = random_tensor({C}, rng);
        Tensor z1({M, C}), z2({M, C}), m1({M}), m2({M}), s1({M}), s2({M});
        kernels::serial::layer_norm_fwd(xx.data(), gamma.data(), beta.data(), z1.data(),
                                        m1.data(), s1.data(), M, C);
        kernels::omp::layer_norm_fwd(xx.data(), gamma.data(), beta.data(), z2.data(),
                                     m2.data(), s2.data(), M, C);
        CHECK(bitwise_equal(z1, z2));

        Tensor t1({M, C}), t2({M, C});
        kernels::serial::ew_tanh_fwd(xx.data(), t1.data(), xx.size());
        kernels::omp::ew_tanh_fwd(xx.data(), t2.data(), xx.size());
        CHECK(bitwise_equal(t1, t2));
    }
}

TEST_CASE("attention softmax rows sum to 1 and uniform keys give mean of values") {
    Rng rng(5);
    const int N = 3, L = 7, d = 8, heads = 2;
    Tensor Q = random_tensor({N, L, d}, rng);
    Tensor K({N, L, d});
    // identical keys along the attended axis -> constant scores -> uniform weights
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < d; ++c) K.at(n, l, c) = 0.37 * c;
    Tensor V = random_tensor({N, L, d}, rng);
    Tensor probs({static_cast<int64_t>(N) * heads, L, L});
    Tensor out({N, L, d});
    kernels::attention_fwd(Q.data(), K.data(), V.data(), probs.data(), out.data(), N, L,
                           d, heads, true);
    for (int64_t p = 0; p < probs.dim(0); ++p)
        for (int i = 0; i < L; ++i) {
            double s = 0.0;
            for (int j = 0; j < L; ++j) s += probs.at(p, i, j);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < d; ++c) {
            double mean_v = 0.0;
            for (int l = 0; l < L; ++l) mean_v += V.at(n, l, c);
            mean_v /= L;
            for (int l = 0; l < L; ++l)
                CHECK(out.at(n, l, c) == doctest::Approx(mean_v).epsilon(1e-9));
        }
}

TEST_CASE("attention with a single attended position is the identity on V") {
    Rng rng(6);
    const int N = 4, L = 1, d = 6, heads = 3;
    Tensor Q = random_tensor({N, L, d}, rng);
    Tensor K = random_tensor({N, L, d}, rng);
    Tensor V = random_tensor({N, L, d}, rng);
    Tensor probs({static_cast<int64_t>(N) * heads, 1, 1});
    Tensor out({N, L, d});
    kernels::attention_fwd(Q.data(), K.data(), V.data(), probs.data(), out.data(), N, L,
                           d, heads, true);
    CHECK(max_abs_diff(out, V) < 1e-12);
    for (int64_t i = 0; i < probs.size(); ++i) CHECK(probs[i] == 1.0);
}

TEST_CASE("tape: finite differences validate every op backward") {
    Rng rng(99);
    threading::set_threads(1);
    ParameterStore store;

    SUBCASE("linear + relu + layer_norm chain") {
        Parameter& W = store.create("w", {5, 4});
        Parameter& b = store.create("b", {4});
        Parameter& gamma = store.create("g", {4});
        Parameter& beta = store.create("bt", {4});
        rng.fill_normal(W.value);
        rng.fill_normal(b.value);
        rng.fill_uniform(gamma.value, 0.5, 1.5);
        rng.fill_normal(beta.value);
        Tensor x = random_tensor({3, 6, 5}, rng);
        Tensor head = random_tensor({3 * 6 * 4}, rng);
        auto loss = [&]() {
            Tape t;
            auto y = t.layer_norm(t.relu(t.linear(t.input(x), t.param(W), t.param(b))),
                                  t.param(gamma), t.param(beta));
            return t.val(t.dot_const(y, head))[0];
        };
        store.zero_grads();
        {
            Tape t;
            auto y = t.layer_norm(t.relu(t.linear(t.input(x), t.param(W), t.param(b))),
                                  t.param(gamma), t.param(beta));
            t.backward(t.dot_const(y, head));
        }
        check_param_grad(W, loss, W.grad);
        check_param_grad(b, loss, b.grad);
        check_param_grad(gamma, loss, gamma.grad);
        check_param_grad(beta, loss, beta.grad);
    }

    SUBCASE("causal conv") {
        Parameter& W = store.create("w", {3, 4, 5});
        Parameter& b = store.create("b", {5});
        rng.fill_normal(W.value);
        rng.fill_normal(b.value);
        Tensor x = random_tensor({2, 9, 4}, rng);
        Tensor head = random_tensor({2 * 9 * 5}, rng);
        auto loss = [&]() {
            Tape t;
            return t.val(t.dot_const(t.causal_conv(t.input(x), t.param(W), t.param(b)),
                                     head))[0];
        };
        store.zero_grads();
        {
            Tape t;
            t.backward(
                t.dot_const(t.causal_conv(t.input(x), t.param(W), t.param(b)), head));
        }
        check_param_grad(W, loss, W.grad);
        check_param_grad(b, loss, b.grad);
    }

    SUBCASE("fourier affine, odd and even lengths") {
        for (int L : {8, 9}) {
            ParameterStore st;
            const int F = L / 2 + 1;
            Parameter& Wre = st.create("wre", {F, 3, 2});
            Parameter& Wim = st.create("wim", {F, 3, 2});
            Parameter& Bre = st.create("bre", {F, 2});
            Parameter& Bim = st.create("bim", {F, 2});
            rng.fill_normal(Wre.value);
            rng.fill_normal(Wim.value);
            rng.fill_normal(Bre.value);
            rng.fill_normal(Bim.value);
            Tensor x = random_tensor({2, L, 3}, rng);
            Tensor head = random_tensor({static_cast<int64_t>(2) * L * 2}, rng);
            auto loss = [&]() {
                Tape t;
                return t.val(t.dot_const(
                    t.fourier_affine(t.input(x), t.param(Wre), t.param(Wim), t.param(Bre),
                                     t.param(Bim)),
                    head))[0];
            };
            st.zero_grads();
            {
                Tape t;
                t.backward(t.dot_const(
                    t.fourier_affine(t.input(x), t.param(Wre), t.param(Wim), t.param(Bre),
                                     t.param(Bim)),
                    head));
            }
            check_param_grad(Wre, loss, Wre.grad);
            check_param_grad(Wim, loss, Wim.grad);
            check_param_grad(Bre, loss, Bre.grad);
            check_param_grad(Bim, loss, Bim.grad);
        }
    }

    SUBCASE("attention w.r.t. q/k/v via linear projections") {
        const int N = 2, L = 5, d = 4, heads = 2;
        Parameter& Wq = store.create("wq", {d, d});
        Parameter& Wk = store.create("wk", {d, d});
        Parameter& Wv = store.create("wv", {d, d});
        rng.fill_normal(Wq.value, 0.5);
        rng.fill_normal(Wk.value, 0.5);
        rng.fill_normal(Wv.value, 0.5);
        Tensor c = random_tensor({N, L, d}, rng);
        Tensor x = random_tensor({N, L, d}, rng);
        Tensor head = random_tensor({static_cast<int64_t>(N) * L * d}, rng);
        for (bool over_time : {true, false}) {
            auto loss = [&]() {
                Tape t;
                auto ci = t.input(c);
                auto q = t.linear(ci, t.param(Wq));
                auto k = t.linear(ci, t.param(Wk));
                auto v = t.linear(t.input(x), t.param(Wv));
                return t.val(t.dot_const(t.attention(q, k, v, heads, over_time), head))[0];
            };
            store.zero_grads();
            {
                Tape t;
                auto ci = t.input(c);
                auto q = t.linear(ci, t.param(Wq));
                auto k = t.linear(ci, t.param(Wk));
                auto v = t.linear(t.input(x), t.param(Wv));
                t.backward(t.dot_const(t.attention(q, k, v, heads, over_time), head));
            }
            check_param_grad(Wq, loss, Wq.grad, 1e-5);
            check_param_grad(Wk, loss, Wk.grad, 1e-5);
            check_param_grad(Wv, loss, Wv.grad, 1e-5);
        }
    }

    SUBCASE("adaptive adjacency path: matmul_nt + relu + row_normalize + propagate") {
        const int N = 4, r = 3;
        Parameter& E1 = store.create("e1", {N, r});
        Parameter& E2 = store.create("e2", {N, r});
        rng.fill_uniform(E1.value, 0.1, 1.0);
        rng.fill_uniform(E2.value, 0.1, 1.0);
        Tensor x = random_tensor({N, 6, 2}, rng);
        Tensor head = random_tensor({static_cast<int64_t>(N) * 6 * 2}, rng);
        auto loss = [&]() {
            Tape t;
            auto adj = t.row_normalize(t.relu(t.matmul_nt(t.param(E1), t.param(E2))));
            return t.val(t.dot_const(t.propagate(adj, t.input(x)), head))[0];
        };
        store.zero_grads();
        {
            Tape t;
            auto adj = t.row_normalize(t.relu(t.matmul_nt(t.param(E1), t.param(E2))));
            t.backward(t.dot_const(t.propagate(adj, t.input(x)), head));
        }
        check_param_grad(E1, loss, E1.grad, 1e-5);
        check_param_grad(E2, loss, E2.grad, 1e-5);
    }

    SUBCASE("pool, normalize, info_nce and masked_mse") {
        const int C = 6;
        Parameter& W = store.create("w", {C, 4});
        rng.fill_normal(W.value);
        Tensor x = random_tensor({3, 5, C}, rng);
        Tensor k_pos = random_tensor({4}, rng);
        {
            double nn = 0.0;
            for (int64_t i = 0; i < k_pos.size(); ++i) nn += k_pos[i] * k_pos[i];
            for (int64_t i = 0; i < k_pos.size(); ++i) k_pos[i] /= std::sqrt(nn);
        }
        Tensor queue({3, 4});
        rng.fill_normal(queue);
        Tensor target = random_tensor({3, 5, C}, rng);
        Tensor mask({3, 5, C});
        for (int64_t i = 0; i < mask.size(); ++i) mask[i] = (i % 3 == 0) ? 1.0 : 0.0;
        auto loss = [&]() {
            Tape t;
            auto xi = t.input(x);
            auto mse = t.masked_mse(xi, target, mask);
            auto q = t.l2_normalize(t.linear(t.mean_pool_nl(xi), t.param(W)));
            auto nce = t.info_nce(q, k_pos, queue, 0.07);
            return t.val(t.add_scaled(mse, nce, 0.25))[0];
        };
        // masked_mse has no parameters; route the gradient through W only.
        Parameter& Wm = store.create("wm", {C, C});
        rng.fill_normal(Wm.value, 0.3);
        auto loss2 = [&]() {
            Tape t;
            auto xi = t.linear(t.input(x), t.param(Wm));
            auto mse = t.masked_mse(xi, target, mask);
            auto q = t.l2_normalize(t.linear(t.mean_pool_nl(xi), t.param(W)));
            auto nce = t.info_nce(q, k_pos, queue, 0.07);
            return t.val(t.add_scaled(mse, nce, 0.25))[0];
        };
        (void)loss;
        store.zero_grads();
        {
            Tape t;
            auto xi = t.linear(t.input(x), t.param(Wm));
            auto mse = t.masked_mse(xi, target, mask);
            auto q = t.l2_normalize(t.linear(t.mean_pool_nl(xi), t.param(W)));
            auto nce = t.info_nce(q, k_pos, queue, 0.07);
            t.backward(t.add_scaled(mse, nce, 0.25));
        }
        check_param_grad(W, loss2, W.grad, 1e-5);
        check_param_grad(Wm, loss2, Wm.grad, 1e-5);
    }

    SUBCASE("gated unit composition: concat/slice/tanh/sigmoid/mul") {
        Parameter& W = store.create("w", {4, 8});
        rng.fill_normal(W.value, 0.7);
        Tensor a = random_tensor({2, 3, 2}, rng);
        Tensor bb = random_tensor({2, 3, 2}, rng);
        Tensor head = random_tensor({2 * 3 * 4}, rng);
        auto loss = [&]() {
            Tape t;
            auto x = t.concat_ch(t.input(a), t.input(bb));
            auto g = t.linear(x, t.param(W));
            auto z = t.mul(t.tanh_(t.slice_ch(g, 0, 4)), t.sigmoid_(t.slice_ch(g, 4, 4)));
            return t.val(t.dot_const(z, head))[0];
        };
        store.zero_grads();
        {
            Tape t;
            auto x = t.concat_ch(t.input(a), t.input(bb));
            auto g = t.linear(x, t.param(W));
            auto z = t.mul(t.tanh_(t.slice_ch(g, 0, 4)), t.sigmoid_(t.slice_ch(g, 4, 4)));
            t.backward(t.dot_const(z, head));
        }
        check_param_grad(W, loss, W.grad);
    }
}

TEST_CASE("info_nce closed-form cases") {
    Tape t;
    Tensor q({3});
    q[0] = 1.0;
    auto qi = t.input(q);
    SUBCASE("empty queue gives exactly zero") {
        Tensor k = q;
        auto l = t.info_nce(t.l2_normalize(qi), k, Tensor({0, 3}), 0.07);
        CHECK(t.val(l)[0] == 0.0);
    }
    SUBCASE("orthogonal negative at tau=1") {
        Tensor k = q;
        Tensor queue({1, 3});
        queue.at(0, 1) = 1.0;
        auto l = t.info_nce(t.l2_normalize(qi), k, queue, 1.0);
        CHECK(t.val(l)[0] == doctest::Approx(0.3132616875).epsilon(1e-8));
    }
}

TEST_CASE("adam takes a step and cosine schedule hits endpoints") {
    ParameterStore store;
    Parameter& p = store.create("p", {2});
    p.value[0] = 1.0;
    p.value[1] = -1.0;
    p.grad[0] = 0.5;
    p.grad[1] = -0.5;
    AdamOptimizer opt;
    opt.step(store, 1e-2);
    CHECK(p.value[0] < 1.0);
    CHECK(p.value[1] > -1.0);
    CHECK(cosine_lr(1e-3, 0, 100) == doctest::Approx(1e-3));
    CHECK(cosine_lr(1e-3, 99, 100) == doctest::Approx(0.0).epsilon(1e-12));
}
