#include "stimpute/kernels.hpp"
#include "stimpute/threading.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stimpute::threading {

namespace {
int g_threads = 0;  // 0 = OpenMP default
}

void set_threads(int n) {
    g_threads = n < 0 ? 0 : n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

bool use_parallel(int64_t work) {
#ifdef _OPENMP
    if (threads() <= 1) return false;
    if (omp_in_parallel()) return false;
    return work >= 32768;
#else
    (void)work;
    return false;
#endif
}

}  // namespace stimpute::threading

namespace stimpute::kernels {

using threading::use_parallel;

void linear_fwd(const double* x, const double* W, const double* b, double* y, int64_t M,
                int ci, int co) {
    const int64_t work = M * ci * co;
    if (use_parallel(work)) return omp::linear_fwd(x, W, b, y, M, ci, co);
    serial::linear_fwd(x, W, b, y, M, ci, co);
}

void linear_bwd_x(const double* dy, const double* W, double* dx, int64_t M, int ci,
                  int co) {
    if (use_parallel(M * ci * co)) return omp::linear_bwd_x(dy, W, dx, M, ci, co);
    serial::linear_bwd_x(dy, W, dx, M, ci, co);
}

void linear_bwd_w(const double* x, const double* dy, double* dW, double* db, int64_t M,
                  int ci, int co) {
    if (use_parallel(M * ci * co) && ci > 1)
        return omp::linear_bwd_w(x, dy, dW, db, M, ci, co);
    serial::linear_bwd_w(x, dy, dW, db, M, ci, co);
}

void causal_conv_fwd(const double* x, const double* W, const double* b, double* y, int N,
                     int L, int K, int ci, int co) {
    const int64_t work = static_cast<int64_t>(N) * L * K * ci * co;
    if (use_parallel(work)) return omp::causal_conv_fwd(x, W, b, y, N, L, K, ci, co);
    serial::causal_conv_fwd(x, W, b, y, N, L, K, ci, co);
}

void causal_conv_bwd_x(const double* dy, const double* W, double* dx, int N, int L,
                       int K, int ci, int co) {
    const int64_t work = static_cast<int64_t>(N) * L * K * ci * co;
    if (use_parallel(work)) return omp::causal_conv_bwd_x(dy, W, dx, N, L, K, ci, co);
    serial::causal_conv_bwd_x(dy, W, dx, N, L, K, ci, co);
}

void causal_conv_bwd_w(const double* x, const double* dy, double* dW, double* db, int N,
                       int L, int K, int ci, int co) {
    const int64_t work = static_cast<int64_t>(N) * L * K * ci * co;
    if (use_parallel(work)) return omp::causal_conv_bwd_w(x, dy, dW, db, N, L, K, ci, co);
    serial::causal_conv_bwd_w(x, dy, dW, db, N, L, K, ci, co);
}

void attention_fwd(const double* Q, const double* K, const double* V, double* probs,
                   double* out, int N, int L, int d, int heads, bool over_time) {
    const int64_t S = over_time ? L : N;
    const int64_t B = over_time ? N : L;
    const int64_t work = B * S * S * d;
    if (use_parallel(work))
        return omp::attention_fwd(Q, K, V, probs, out, N, L, d, heads, over_time);
    serial::attention_fwd(Q, K, V, probs, out, N, L, d, heads, over_time);
}

void attention_bwd(const double* Q, const double* K, const double* V, const double* probs,
                   const double* dout, double* dQ, double* dK, double* dV, int N, int L,
                   int d, int heads, bool over_time) {
    const int64_t S = over_time ? L : N;
    const int64_t B = over_time ? N : L;
    if (use_parallel(B * S * S * d * 2))
        return omp::attention_bwd(Q, K, V, probs, dout, dQ, dK, dV, N, L, d, heads,
                                  over_time);
    serial::attention_bwd(Q, K, V, probs, dout, dQ, dK, dV, N, L, d, heads, over_time);
}

void propagate_fwd(const double* P, const double* x, double* y, int N, int64_t LC) {
    if (use_parallel(static_cast<int64_t>(N) * N * LC))
        return omp::propagate_fwd(P, x, y, N, LC);
    serial::propagate_fwd(P, x, y, N, LC);
}

void propagate_bwd_x(const double* P, const double* dy, double* dx, int N, int64_t LC) {
    if (use_parallel(static_cast<int64_t>(N) * N * LC))
        return omp::propagate_bwd_x(P, dy, dx, N, LC);
    serial::propagate_bwd_x(P, dy, dx, N, LC);
}

void propagate_bwd_p(const double* x, const double* dy, double* dP, int N, int64_t LC) {
    if (use_parallel(static_cast<int64_t>(N) * N * LC))
        return omp::propagate_bwd_p(x, dy, dP, N, LC);
    serial::propagate_bwd_p(x, dy, dP, N, LC);
}

void layer_norm_fwd(const double* x, const double* gamma, const double* beta, double* y,
                    double* mean, double* inv_std, int64_t M, int C) {
    if (use_parallel(M * C * 4))
        return omp::layer_norm_fwd(x, gamma, beta, y, mean, inv_std, M, C);
    serial::layer_norm_fwd(x, gamma, beta, y, mean, inv_std, M, C);
}

void layer_norm_bwd(const double* x, const double* gamma, const double* mean,
                    const double* inv_std, const double* dy, double* dx, double* dgamma,
                    double* dbeta, int64_t M, int C) {
    if (use_parallel(M * C * 6))
        return omp::layer_norm_bwd(x, gamma, mean, inv_std, dy, dx, dgamma, dbeta, M, C);
    serial::layer_norm_bwd(x, gamma, mean, inv_std, dy, dx, dgamma, dbeta, M, C);
}

void fourier_fwd(const double* x, const double* Wre, const double* Wim, const double* Bre,
                 const double* Bim, const double* cosfl, const double* sinfl, double* y,
                 double* Xre, double* Xim, int N, int L, int F, int ci, int co) {
    const int64_t work =
        static_cast<int64_t>(N) * F * (static_cast<int64_t>(L) * (ci + co) + ci * co * 4);
    if (use_parallel(work))
        return omp::fourier_fwd(x, Wre, Wim, Bre, Bim, cosfl, sinfl, y, Xre, Xim, N, L, F,
                                ci, co);
    serial::fourier_fwd(x, Wre, Wim, Bre, Bim, cosfl, sinfl, y, Xre, Xim, N, L, F, ci, co);
}

void fourier_bwd(const double* dy, const double* Wre, const double* Wim,
                 const double* Xre, const double* Xim, const double* cosfl,
                 const double* sinfl, double* dx, double* dWre, double* dWim,
                 double* dBre, double* dBim, double* dYre, double* dYim, int N, int L,
                 int F, int ci, int co) {
    const int64_t work =
        static_cast<int64_t>(N) * F * (static_cast<int64_t>(L) * (ci + co) + ci * co * 8);
    if (use_parallel(work))
        return omp::fourier_bwd(dy, Wre, Wim, Xre, Xim, cosfl, sinfl, dx, dWre, dWim,
                                dBre, dBim, dYre, dYim, N, L, F, ci, co);
    serial::fourier_bwd(dy, Wre, Wim, Xre, Xim, cosfl, sinfl, dx, dWre, dWim, dBre, dBim,
                        dYre, dYim, N, L, F, ci, co);
}

void ew_tanh_fwd(const double* x, double* y, int64_t n) {
    if (use_parallel(n * 8)) return omp::ew_tanh_fwd(x, y, n);
    serial::ew_tanh_fwd(x, y, n);
}

void ew_sigmoid_fwd(const double* x, double* y, int64_t n) {
    if (use_parallel(n * 8)) return omp::ew_sigmoid_fwd(x, y, n);
    serial::ew_sigmoid_fwd(x, y, n);
}

void ew_relu_fwd(const double* x, double* y, int64_t n) {
    if (use_parallel(n * 2)) return omp::ew_relu_fwd(x, y, n);
    serial::ew_relu_fwd(x, y, n);
}

void ew_add_fwd(const double* a, const double* b, double* y, int64_t n) {
    if (use_parallel(n * 2)) return omp::ew_add_fwd(a, b, y, n);
    serial::ew_add_fwd(a, b, y, n);
}

void ew_mul_fwd(const double* a, const double* b, double* y, int64_t n) {
    if (use_parallel(n * 2)) return omp::ew_mul_fwd(a, b, y, n);
    serial::ew_mul_fwd(a, b, y, n);
}

void ew_axpy(double alpha, const double* x, double* y, int64_t n) {
    if (use_parallel(n * 2)) return omp::ew_axpy(alpha, x, y, n);
    serial::ew_axpy(alpha, x, y, n);
}

}  // namespace stimpute::kernels
