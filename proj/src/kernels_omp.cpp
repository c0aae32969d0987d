#include <cmath>

#include "kernels_detail.hpp"
#include "stimpute/kernels.hpp"

// OpenMP variants. The parallel axis always indexes disjoint output slices and
// the per-slice math is the shared detail:: body, so results are bitwise equal
// to the serial reference for any thread count.

namespace stimpute::kernels::omp {

using namespace detail;

void linear_fwd(const double* x, const double* W, const double* b, double* y, int64_t M,
                int ci, int co) {
#pragma omp parallel for schedule(static)
    for (int64_t m = 0; m < M; ++m) linear_row(x + m * ci, W, b, y + m * co, ci, co);
}

void linear_bwd_x(const double* dy, const double* W, double* dx, int64_t M, int ci,
                  int co) {
#pragma omp parallel for schedule(static)
    for (int64_t m = 0; m < M; ++m)
        linear_row_bwd_x(dy + m * co, W, dx + m * ci, ci, co);
}

void linear_bwd_w(const double* x, const double* dy, double* dW, double* db, int64_t M,
                  int ci, int co) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < ci; ++k)
        linear_wrow_bwd(x, dy, dW + static_cast<int64_t>(k) * co, M, ci, co, k);
    if (db) {
        for (int64_t m = 0; m < M; ++m)
            for (int j = 0; j < co; ++j) db[j] += dy[m * co + j];
    }
}

void causal_conv_fwd(const double* x, const double* W, const double* b, double* y, int N,
                     int L, int K, int ci, int co) {
#pragma omp parallel for schedule(static) collapse(2)
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < L; ++l) {
            const double* xn = x + static_cast<int64_t>(n) * L * ci;
            double* yn = y + static_cast<int64_t>(n) * L * co;
            causal_conv_cell(xn, W, b, yn + static_cast<int64_t>(l) * co, l, K, ci, co);
        }
    }
}

void causal_conv_bwd_x(const double* dy, const double* W, double* dx, int N, int L,
                       int K, int ci, int co) {
#pragma omp parallel for schedule(static) collapse(2)
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < L; ++l) {
            const double* dyn = dy + static_cast<int64_t>(n) * L * co;
            double* dxn = dx + static_cast<int64_t>(n) * L * ci;
            causal_conv_cell_bwd_x(dyn, W, dxn + static_cast<int64_t>(l) * ci, l, L, K,
                                   ci, co);
        }
    }
}

void causal_conv_bwd_w(const double* x, const double* dy, double* dW, double* db, int N,
                       int L, int K, int ci, int co) {
#pragma omp parallel for schedule(static) collapse(2)
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < ci; ++k)
            causal_conv_wrow_bwd(x, dy, dW + (static_cast<int64_t>(j) * ci + k) * co, N,
                                 L, ci, co, j, k);
    if (db) {
        for (int64_t m = 0; m < static_cast<int64_t>(N) * L; ++m)
            for (int c = 0; c < co; ++c) db[c] += dy[m * co + c];
    }
}

void attention_fwd(const double* Q, const double* K, const double* V, double* probs,
                   double* out, int N, int L, int d, int heads, bool over_time) {
    const AttnLayout lo = attn_layout(N, L, d, over_time);
    const int dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int64_t pairs = lo.batches * heads;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < pairs; ++p) {
        const int64_t b = p / heads;
        const int h = static_cast<int>(p % heads);
        attention_pair_fwd(Q, K, V, probs + p * lo.seq * lo.seq, out, lo, b, dh, h,
                           scale);
    }
}

void attention_bwd(const double* Q, const double* K, const double* V, const double* probs,
                   const double* dout, double* dQ, double* dK, double* dV, int N, int L,
                   int d, int heads, bool over_time) {
    const AttnLayout lo = attn_layout(N, L, d, over_time);
    const int dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int64_t pairs = lo.batches * heads;
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < pairs; ++p) {
        const int64_t b = p / heads;
        const int h = static_cast<int>(p % heads);
        attention_pair_bwd(Q, K, V, probs + p * lo.seq * lo.seq, dout, dQ, dK, dV, lo, b,
                           dh, h, scale);
    }
}

void propagate_fwd(const double* P, const double* x, double* y, int N, int64_t LC) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        double* yn = y + n * LC;
        for (int64_t i = 0; i < LC; ++i) yn[i] = 0.0;
        for (int m = 0; m < N; ++m) {
            const double p = P[static_cast<int64_t>(n) * N + m];
            if (p == 0.0) continue;
            const double* xm = x + m * LC;
            for (int64_t i = 0; i < LC; ++i) yn[i] += p * xm[i];
        }
    }
}

void propagate_bwd_x(const double* P, const double* dy, double* dx, int N, int64_t LC) {
#pragma omp parallel for schedule(static)
    for (int m = 0; m < N; ++m) {
        double* dxm = dx + m * LC;
        for (int n = 0; n < N; ++n) {
            const double p = P[static_cast<int64_t>(n) * N + m];
            if (p == 0.0) continue;
            const double* dyn = dy + n * LC;
            for (int64_t i = 0; i < LC; ++i) dxm[i] += p * dyn[i];
        }
    }
}

void propagate_bwd_p(const double* x, const double* dy, double* dP, int N, int64_t LC) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        const double* dyn = dy + n * LC;
        for (int m = 0; m < N; ++m) {
            const double* xm = x + m * LC;
            double acc = 0.0;
            for (int64_t i = 0; i < LC; ++i) acc += dyn[i] * xm[i];
            dP[static_cast<int64_t>(n) * N + m] += acc;
        }
    }
}

void layer_norm_fwd(const double* x, const double* gamma, const double* beta, double* y,
                    double* mean, double* inv_std, int64_t M, int C) {
#pragma omp parallel for schedule(static)
    for (int64_t m = 0; m < M; ++m)
        layer_norm_row(x + m * C, gamma, beta, y + m * C, mean + m, inv_std + m, C);
}

void layer_norm_bwd(const double* x, const double* gamma, const double* mean,
                    const double* inv_std, const double* dy, double* dx, double* dgamma,
                    double* dbeta, int64_t M, int C) {
#pragma omp parallel for schedule(static)
    for (int64_t m = 0; m < M; ++m)
        layer_norm_row_bwd(x + m * C, gamma, mean[m], inv_std[m], dy + m * C, dx + m * C,
                           C);
    if (dgamma && dbeta) {
        // Accumulated serially: C is small and the sum order must stay fixed.
        for (int64_t m = 0; m < M; ++m) {
            const double* xr = x + m * C;
            const double* dyr = dy + m * C;
            for (int c = 0; c < C; ++c) {
                dgamma[c] += dyr[c] * (xr[c] - mean[m]) * inv_std[m];
                dbeta[c] += dyr[c];
            }
        }
    }
}

void fourier_fwd(const double* x, const double* Wre, const double* Wim, const double* Bre,
                 const double* Bim, const double* cosfl, const double* sinfl, double* y,
                 double* Xre, double* Xim, int N, int L, int F, int ci, int co) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n)
        fourier_node_fwd(x + static_cast<int64_t>(n) * L * ci, Wre, Wim, Bre, Bim, cosfl,
                         sinfl, y + static_cast<int64_t>(n) * L * co,
                         Xre + static_cast<int64_t>(n) * F * ci,
                         Xim + static_cast<int64_t>(n) * F * ci, L, F, ci, co);
}

void fourier_bwd(const double* dy, const double* Wre, const double* Wim,
                 const double* Xre, const double* Xim, const double* cosfl,
                 const double* sinfl, double* dx, double* dWre, double* dWim,
                 double* dBre, double* dBim, double* dYre, double* dYim, int N, int L,
                 int F, int ci, int co) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n)
        fourier_node_bwd_x(dy + static_cast<int64_t>(n) * L * co, Wre, Wim, cosfl, sinfl,
                           dx + static_cast<int64_t>(n) * L * ci,
                           dYre + static_cast<int64_t>(n) * F * co,
                           dYim + static_cast<int64_t>(n) * F * co, L, F, ci, co);
#pragma omp parallel for schedule(static)
    for (int f = 0; f < F; ++f)
        fourier_freq_bwd_w(Xre, Xim, dYre, dYim,
                           dWre + static_cast<int64_t>(f) * ci * co,
                           dWim + static_cast<int64_t>(f) * ci * co,
                           dBre + static_cast<int64_t>(f) * co,
                           dBim + static_cast<int64_t>(f) * co, N, F, ci, co, f);
}

void ew_tanh_fwd(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void ew_sigmoid_fwd(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void ew_relu_fwd(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void ew_add_fwd(const double* a, const double* b, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void ew_mul_fwd(const double* a, const double* b, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void ew_axpy(double alpha, const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace stimpute::kernels::omp
