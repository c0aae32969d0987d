#pragma once

#include <cmath>
#include <cstring>

// Per-element bodies shared by the serial and OpenMP kernel variants. Each
// helper computes one independent slice of the output with a fixed summation
// order, so the two variants stay bitwise identical under any thread count.

namespace stimpute::kernels::detail {

// One output row of y = x W + b.
inline void linear_row(const double* xr, const double* W, const double* b, double* yr,
                       int ci, int co) {
    if (b) {
        std::memcpy(yr, b, sizeof(double) * static_cast<size_t>(co));
    } else {
        std::memset(yr, 0, sizeof(double) * static_cast<size_t>(co));
    }
    for (int k = 0; k < ci; ++k) {
        const double a = xr[k];
        if (a == 0.0) continue;
        const double* wr = W + static_cast<int64_t>(k) * co;
        for (int j = 0; j < co; ++j) yr[j] += a * wr[j];
    }
}

// One output row of dx += dy W^T.
inline void linear_row_bwd_x(const double* dyr, const double* W, double* dxr, int ci,
                             int co) {
    for (int k = 0; k < ci; ++k) {
        const double* wr = W + static_cast<int64_t>(k) * co;
        double acc = 0.0;
        for (int j = 0; j < co; ++j) acc += dyr[j] * wr[j];
        dxr[k] += acc;
    }
}

// One row k of dW += x^T dy (loops all M positions for a fixed input channel).
inline void linear_wrow_bwd(const double* x, const double* dy, double* dWr, int64_t M,
                            int ci, int co, int k) {
    for (int64_t m = 0; m < M; ++m) {
        const double a = x[m * ci + k];
        if (a == 0.0) continue;
        const double* dyr = dy + m * co;
        for (int j = 0; j < co; ++j) dWr[j] += a * dyr[j];
    }
}

// Causal conv output at one (n, l): y = b + sum_j x[n, l-j] W[j].
inline void causal_conv_cell(const double* xn, const double* W, const double* b,
                             double* yr, int l, int K, int ci, int co) {
    if (b) {
        std::memcpy(yr, b, sizeof(double) * static_cast<size_t>(co));
    } else {
        std::memset(yr, 0, sizeof(double) * static_cast<size_t>(co));
    }
    const int jmax = (l < K - 1) ? l : K - 1;
    for (int j = 0; j <= jmax; ++j) {
        const double* xr = xn + static_cast<int64_t>(l - j) * ci;
        const double* Wj = W + static_cast<int64_t>(j) * ci * co;
        for (int k = 0; k < ci; ++k) {
            const double a = xr[k];
            if (a == 0.0) continue;
            const double* wr = Wj + static_cast<int64_t>(k) * co;
            for (int c = 0; c < co; ++c) yr[c] += a * wr[c];
        }
    }
}

// Causal conv input gradient at one (n, l): dx[n,l] += sum_j W[j] dy[n,l+j].
inline void causal_conv_cell_bwd_x(const double* dyn, const double* W, double* dxr,
                                   int l, int L, int K, int ci, int co) {
    const int jmax = (L - 1 - l < K - 1) ? (L - 1 - l) : (K - 1);
    for (int j = 0; j <= jmax; ++j) {
        const double* dyr = dyn + static_cast<int64_t>(l + j) * co;
        const double* Wj = W + static_cast<int64_t>(j) * ci * co;
        for (int k = 0; k < ci; ++k) {
            const double* wr = Wj + static_cast<int64_t>(k) * co;
            double acc = 0.0;
            for (int c = 0; c < co; ++c) acc += wr[c] * dyr[c];
            dxr[k] += acc;
        }
    }
}

// dW[j,k,:] += sum_{n,l>=j} x[n,l-j,k] dy[n,l,:], for one (j, k) pair.
inline void causal_conv_wrow_bwd(const double* x, const double* dy, double* dWr, int N,
                                 int L, int ci, int co, int j, int k) {
    for (int n = 0; n < N; ++n) {
        const double* xn = x + static_cast<int64_t>(n) * L * ci;
        const double* dyn = dy + static_cast<int64_t>(n) * L * co;
        for (int l = j; l < L; ++l) {
            const double a = xn[static_cast<int64_t>(l - j) * ci + k];
            if (a == 0.0) continue;
            const double* dyr = dyn + static_cast<int64_t>(l) * co;
            for (int c = 0; c < co; ++c) dWr[c] += a * dyr[c];
        }
    }
}

struct AttnLayout {
    int64_t batches;  // independent attention problems (N or L)
    int64_t seq;      // attended positions per problem (L or N)
    int64_t pos_stride;
    int64_t batch_stride;
};

inline AttnLayout attn_layout(int N, int L, int d, bool over_time) {
    if (over_time) return {N, L, static_cast<int64_t>(d), static_cast<int64_t>(L) * d};
    return {L, N, static_cast<int64_t>(L) * d, static_cast<int64_t>(d)};
}

// Forward attention for one (batch, head) pair; writes the softmax matrix into
// probs [seq, seq] and accumulates head output into out.
void attention_pair_fwd(const double* Q, const double* K, const double* V, double* probs,
                        double* out, const AttnLayout& lo, int64_t b, int dh, int head,
                        double scale);

void attention_pair_bwd(const double* Q, const double* K, const double* V,
                        const double* probs, const double* dout, double* dQ, double* dK,
                        double* dV, const AttnLayout& lo, int64_t b, int dh, int head,
                        double scale);

inline void layer_norm_row(const double* xr, const double* gamma, const double* beta,
                           double* yr, double* mean, double* inv_std, int C) {
    double mu = 0.0;
    for (int c = 0; c < C; ++c) mu += xr[c];
    mu /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
        const double dl = xr[c] - mu;
        var += dl * dl;
    }
    var /= C;
    const double is = 1.0 / std::sqrt(var + 1e-5);
    *mean = mu;
    *inv_std = is;
    for (int c = 0; c < C; ++c) yr[c] = gamma[c] * (xr[c] - mu) * is + beta[c];
}

inline void layer_norm_row_bwd(const double* xr, const double* gamma, double mean,
                               double inv_std, const double* dyr, double* dxr, int C) {
    // dx = (gamma*dy - mean_c(gamma*dy) - xhat * mean_c(gamma*dy*xhat)) * inv_std
    double s1 = 0.0, s2 = 0.0;
    for (int c = 0; c < C; ++c) {
        const double g = gamma[c] * dyr[c];
        s1 += g;
        s2 += g * (xr[c] - mean) * inv_std;
    }
    s1 /= C;
    s2 /= C;
    for (int c = 0; c < C; ++c) {
        const double xhat = (xr[c] - mean) * inv_std;
        dxr[c] += (gamma[c] * dyr[c] - s1 - xhat * s2) * inv_std;
    }
}

// Fourier layer, one node: spectra, per-frequency complex affine, inverse rDFT.
void fourier_node_fwd(const double* xn, const double* Wre, const double* Wim,
                      const double* Bre, const double* Bim, const double* cosfl,
                      const double* sinfl, double* yn, double* Xre_n, double* Xim_n,
                      int L, int F, int ci, int co);

// Stage 1 of the backward (per node): recompute dY from dy, then form dx.
void fourier_node_bwd_x(const double* dyn, const double* Wre, const double* Wim,
                        const double* cosfl, const double* sinfl, double* dxn,
                        double* dYre_n, double* dYim_n, int L, int F, int ci, int co);

// Stage 2 of the backward (per frequency): weight/bias gradients.
void fourier_freq_bwd_w(const double* Xre, const double* Xim, const double* dYre,
                        const double* dYim, double* dWre_f, double* dWim_f,
                        double* dBre_f, double* dBim_f, int N, int F, int ci, int co,
                        int f);

}  // namespace stimpute::kernels::detail
