#pragma once

#include <cstdint>

namespace stimpute::kernels {

// Compute kernels shared by the model forward/backward passes. Every kernel
// exists twice: `serial::` is the straightforward reference implementation,
// `omp::` parallelizes the outer loop with OpenMP. Both compute each output
// element with the same sequential summation order, so their results are
// bitwise identical and independent of the thread count; the dispatchers at
// namespace scope pick a variant per call. `bench/kernels_bench` compares
// their throughput.
//
// Backward kernels accumulate (+=) into their gradient outputs.

#define STIMPUTE_KERNEL_LIST(X)                                                          \
    /* y[M,co] = x[M,ci] W[ci,co] (+ b[co]) */                                           \
    X(void, linear_fwd,                                                                  \
      (const double* x, const double* W, const double* b, double* y, int64_t M, int ci, \
       int co),                                                                          \
      (x, W, b, y, M, ci, co))                                                           \
    X(void, linear_bwd_x,                                                                \
      (const double* dy, const double* W, double* dx, int64_t M, int ci, int co),       \
      (dy, W, dx, M, ci, co))                                                            \
    X(void, linear_bwd_w,                                                                \
      (const double* x, const double* dy, double* dW, double* db, int64_t M, int ci,    \
       int co),                                                                          \
      (x, dy, dW, db, M, ci, co))                                                        \
    /* causal conv: x[N,L,ci], W[K,ci,co]; y[n,l,co] = sum_{j<=min(l,K-1)} x[n,l-j] W[j] */ \
    X(void, causal_conv_fwd,                                                             \
      (const double* x, const double* W, const double* b, double* y, int N, int L,      \
       int K, int ci, int co),                                                           \
      (x, W, b, y, N, L, K, ci, co))                                                     \
    X(void, causal_conv_bwd_x,                                                           \
      (const double* dy, const double* W, double* dx, int N, int L, int K, int ci,      \
       int co),                                                                          \
      (dy, W, dx, N, L, K, ci, co))                                                      \
    X(void, causal_conv_bwd_w,                                                           \
      (const double* x, const double* dy, double* dW, double* db, int N, int L, int K,  \
       int ci, int co),                                                                  \
      (x, dy, dW, db, N, L, K, ci, co))                                                  \
    /* multi-head scaled dot-product attention on [N,L,d]; over_time attends            \
       along L per node, otherwise along N per time step. probs: [B,H,S,S]. */          \
    X(void, attention_fwd,                                                               \
      (const double* Q, const double* K, const double* V, double* probs, double* out,   \
       int N, int L, int d, int heads, bool over_time),                                  \
      (Q, K, V, probs, out, N, L, d, heads, over_time))                                  \
    X(void, attention_bwd,                                                               \
      (const double* Q, const double* K, const double* V, const double* probs,          \
       const double* dout, double* dQ, double* dK, double* dV, int N, int L, int d,     \
       int heads, bool over_time),                                                       \
      (Q, K, V, probs, dout, dQ, dK, dV, N, L, d, heads, over_time))                     \
    /* y[n,l,c] = sum_m P[n,m] x[m,l,c] */                                               \
    X(void, propagate_fwd,                                                               \
      (const double* P, const double* x, double* y, int N, int64_t LC), (P, x, y, N, LC)) \
    X(void, propagate_bwd_x,                                                             \
      (const double* P, const double* dy, double* dx, int N, int64_t LC),                \
      (P, dy, dx, N, LC))                                                                \
    X(void, propagate_bwd_p,                                                             \
      (const double* x, const double* dy, double* dP, int N, int64_t LC),                \
      (x, dy, dP, N, LC))                                                                \
    /* layer norm over the last axis (C) at M positions */                               \
    X(void, layer_norm_fwd,                                                              \
      (const double* x, const double* gamma, const double* beta, double* y,             \
       double* mean, double* inv_std, int64_t M, int C),                                 \
      (x, gamma, beta, y, mean, inv_std, M, C))                                          \
    X(void, layer_norm_bwd,                                                              \
      (const double* x, const double* gamma, const double* mean, const double* inv_std, \
       const double* dy, double* dx, double* dgamma, double* dbeta, int64_t M, int C),   \
      (x, gamma, mean, inv_std, dy, dx, dgamma, dbeta, M, C))                            \
    /* learnable Fourier layer: per node, rDFT along L, complex affine per              \
       frequency, inverse rDFT. cosfl/sinfl are [F,L] tables; Xre/Xim [N,F,ci]          \
       spectra saved for backward. */                                                    \
    X(void, fourier_fwd,                                                                 \
      (const double* x, const double* Wre, const double* Wim, const double* Bre,        \
       const double* Bim, const double* cosfl, const double* sinfl, double* y,           \
       double* Xre, double* Xim, int N, int L, int F, int ci, int co),                   \
      (x, Wre, Wim, Bre, Bim, cosfl, sinfl, y, Xre, Xim, N, L, F, ci, co))               \
    X(void, fourier_bwd,                                                                 \
      (const double* dy, const double* Wre, const double* Wim, const double* Xre,       \
       const double* Xim, const double* cosfl, const double* sinfl, double* dx,          \
       double* dWre, double* dWim, double* dBre, double* dBim, double* dYre,             \
       double* dYim, int N, int L, int F, int ci, int co),                               \
      (dy, Wre, Wim, Xre, Xim, cosfl, sinfl, dx, dWre, dWim, dBre, dBim, dYre, dYim, N, \
       L, F, ci, co))                                                                    \
    /* elementwise */                                                                    \
    X(void, ew_tanh_fwd, (const double* x, double* y, int64_t n), (x, y, n))             \
    X(void, ew_sigmoid_fwd, (const double* x, double* y, int64_t n), (x, y, n))          \
    X(void, ew_relu_fwd, (const double* x, double* y, int64_t n), (x, y, n))             \
    X(void, ew_add_fwd, (const double* a, const double* b, double* y, int64_t n),        \
      (a, b, y, n))                                                                      \
    X(void, ew_mul_fwd, (const double* a, const double* b, double* y, int64_t n),        \
      (a, b, y, n))                                                                      \
    X(void, ew_axpy, (double alpha, const double* x, double* y, int64_t n), (alpha, x, y, n))

#define STIMPUTE_DECLARE_KERNEL(ret, name, args, call) ret name args;

namespace serial {
STIMPUTE_KERNEL_LIST(STIMPUTE_DECLARE_KERNEL)
}

namespace omp {
STIMPUTE_KERNEL_LIST(STIMPUTE_DECLARE_KERNEL)
}

// Dispatchers: route to omp:: or serial:: based on the threading policy.
STIMPUTE_KERNEL_LIST(STIMPUTE_DECLARE_KERNEL)

#undef STIMPUTE_DECLARE_KERNEL

}  // namespace stimpute::kernels
