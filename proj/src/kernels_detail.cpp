#include "kernels_detail.hpp"

#include <vector>

namespace stimpute::kernels::detail {

void attention_pair_fwd(const double* Q, const double* K, const double* V, double* probs,
                        double* out, const AttnLayout& lo, int64_t b, int dh, int head,
                        double scale) {
    const int64_t S = lo.seq;
    const int64_t hoff = static_cast<int64_t>(head) * dh;
    std::vector<double> row(static_cast<size_t>(S));
    for (int64_t i = 0; i < S; ++i) {
        const double* qi = Q + b * lo.batch_stride + i * lo.pos_stride + hoff;
        double mx = -1e300;
        for (int64_t j = 0; j < S; ++j) {
            const double* kj = K + b * lo.batch_stride + j * lo.pos_stride + hoff;
            double s = 0.0;
            for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
            row[static_cast<size_t>(j)] = s * scale;
            if (row[static_cast<size_t>(j)] > mx) mx = row[static_cast<size_t>(j)];
        }
        double z = 0.0;
        for (int64_t j = 0; j < S; ++j) {
            row[static_cast<size_t>(j)] = std::exp(row[static_cast<size_t>(j)] - mx);
            z += row[static_cast<size_t>(j)];
        }
        double* prow = probs + i * S;
        double* oi = out + b * lo.batch_stride + i * lo.pos_stride + hoff;
        for (int c = 0; c < dh; ++c) oi[c] = 0.0;
        for (int64_t j = 0; j < S; ++j) {
            const double p = row[static_cast<size_t>(j)] / z;
            prow[j] = p;
            if (p == 0.0) continue;
            const double* vj = V + b * lo.batch_stride + j * lo.pos_stride + hoff;
            for (int c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
    }
}

void attention_pair_bwd(const double* Q, const double* K, const double* V,
                        const double* probs, const double* dout, double* dQ, double* dK,
                        double* dV, const AttnLayout& lo, int64_t b, int dh, int head,
                        double scale) {
    const int64_t S = lo.seq;
    const int64_t hoff = static_cast<int64_t>(head) * dh;
    std::vector<double> dp(static_cast<size_t>(S));
    std::vector<double> ds(static_cast<size_t>(S));
    auto at = [&](const double* base, int64_t s) {
        return base + b * lo.batch_stride + s * lo.pos_stride + hoff;
    };
    auto at_mut = [&](double* base, int64_t s) {
        return base + b * lo.batch_stride + s * lo.pos_stride + hoff;
    };
    for (int64_t i = 0; i < S; ++i) {
        const double* doi = at(dout, i);
        const double* prow = probs + i * S;
        double dot_pp = 0.0;
        for (int64_t j = 0; j < S; ++j) {
            const double* vj = at(V, j);
            double acc = 0.0;
            for (int c = 0; c < dh; ++c) acc += doi[c] * vj[c];
            dp[static_cast<size_t>(j)] = acc;
            dot_pp += acc * prow[j];
        }
        for (int64_t j = 0; j < S; ++j)
            ds[static_cast<size_t>(j)] = prow[j] * (dp[static_cast<size_t>(j)] - dot_pp);
        double* dqi = at_mut(dQ, i);
        for (int64_t j = 0; j < S; ++j) {
            const double w = ds[static_cast<size_t>(j)] * scale;
            const double p = prow[j];
            const double* kj = at(K, j);
            const double* qi = at(Q, i);
            double* dkj = at_mut(dK, j);
            double* dvj = at_mut(dV, j);
            for (int c = 0; c < dh; ++c) {
                dqi[c] += w * kj[c];
                dkj[c] += w * qi[c];
                dvj[c] += p * doi[c];
            }
        }
    }
}

namespace {

inline double irdft_weight(int f, int L, int F) {
    if (f == 0) return 1.0;
    if (L % 2 == 0 && f == F - 1) return 1.0;
    return 2.0;
}

}  // namespace

void fourier_node_fwd(const double* xn, const double* Wre, const double* Wim,
                      const double* Bre, const double* Bim, const double* cosfl,
                      const double* sinfl, double* yn, double* Xre_n, double* Xim_n,
                      int L, int F, int ci, int co) {
    // rDFT along time, all input channels at once.
    for (int f = 0; f < F; ++f) {
        double* xr = Xre_n + static_cast<int64_t>(f) * ci;
        double* xi = Xim_n + static_cast<int64_t>(f) * ci;
        for (int k = 0; k < ci; ++k) {
            xr[k] = 0.0;
            xi[k] = 0.0;
        }
        const double* cf = cosfl + static_cast<int64_t>(f) * L;
        const double* sf = sinfl + static_cast<int64_t>(f) * L;
        for (int l = 0; l < L; ++l) {
            const double* xl = xn + static_cast<int64_t>(l) * ci;
            const double c = cf[l], s = sf[l];
            for (int k = 0; k < ci; ++k) {
                xr[k] += c * xl[k];
                xi[k] -= s * xl[k];
            }
        }
    }
    // Complex affine per frequency.
    std::vector<double> Yre(static_cast<size_t>(F) * co);
    std::vector<double> Yim(static_cast<size_t>(F) * co);
    for (int f = 0; f < F; ++f) {
        double* yre = Yre.data() + static_cast<int64_t>(f) * co;
        double* yim = Yim.data() + static_cast<int64_t>(f) * co;
        const double* bre = Bre + static_cast<int64_t>(f) * co;
        const double* bim = Bim + static_cast<int64_t>(f) * co;
        for (int c = 0; c < co; ++c) {
            yre[c] = bre[c];
            yim[c] = bim[c];
        }
        const double* xr = Xre_n + static_cast<int64_t>(f) * ci;
        const double* xi = Xim_n + static_cast<int64_t>(f) * ci;
        for (int k = 0; k < ci; ++k) {
            const double ar = xr[k], ai = xi[k];
            const double* wre = Wre + (static_cast<int64_t>(f) * ci + k) * co;
            const double* wim = Wim + (static_cast<int64_t>(f) * ci + k) * co;
            for (int c = 0; c < co; ++c) {
                yre[c] += wre[c] * ar - wim[c] * ai;
                yim[c] += wre[c] * ai + wim[c] * ar;
            }
        }
    }
    // Inverse rDFT (Hermitian extension implied by the real input).
    const double inv_l = 1.0 / L;
    for (int l = 0; l < L; ++l) {
        double* yl = yn + static_cast<int64_t>(l) * co;
        for (int c = 0; c < co; ++c) yl[c] = 0.0;
        for (int f = 0; f < F; ++f) {
            const double w = irdft_weight(f, L, F) * inv_l;
            const double cv = cosfl[static_cast<int64_t>(f) * L + l] * w;
            const double sv = sinfl[static_cast<int64_t>(f) * L + l] * w;
            const double* yre = Yre.data() + static_cast<int64_t>(f) * co;
            const double* yim = Yim.data() + static_cast<int64_t>(f) * co;
            for (int c = 0; c < co; ++c) yl[c] += yre[c] * cv - yim[c] * sv;
        }
    }
}

void fourier_node_bwd_x(const double* dyn, const double* Wre, const double* Wim,
                        const double* cosfl, const double* sinfl, double* dxn,
                        double* dYre_n, double* dYim_n, int L, int F, int ci, int co) {
    const double inv_l = 1.0 / L;
    for (int f = 0; f < F; ++f) {
        const double w = irdft_weight(f, L, F) * inv_l;
        double* dyre = dYre_n + static_cast<int64_t>(f) * co;
        double* dyim = dYim_n + static_cast<int64_t>(f) * co;
        for (int c = 0; c < co; ++c) {
            dyre[c] = 0.0;
            dyim[c] = 0.0;
        }
        const double* cf = cosfl + static_cast<int64_t>(f) * L;
        const double* sf = sinfl + static_cast<int64_t>(f) * L;
        for (int l = 0; l < L; ++l) {
            const double* dyl = dyn + static_cast<int64_t>(l) * co;
            const double cv = cf[l] * w, sv = sf[l] * w;
            for (int c = 0; c < co; ++c) {
                dyre[c] += cv * dyl[c];
                dyim[c] -= sv * dyl[c];
            }
        }
    }
    std::vector<double> dXre(static_cast<size_t>(F) * ci, 0.0);
    std::vector<double> dXim(static_cast<size_t>(F) * ci, 0.0);
    for (int f = 0; f < F; ++f) {
        const double* dyre = dYre_n + static_cast<int64_t>(f) * co;
        const double* dyim = dYim_n + static_cast<int64_t>(f) * co;
        double* dxr = dXre.data() + static_cast<int64_t>(f) * ci;
        double* dxi = dXim.data() + static_cast<int64_t>(f) * ci;
        for (int k = 0; k < ci; ++k) {
            const double* wre = Wre + (static_cast<int64_t>(f) * ci + k) * co;
            const double* wim = Wim + (static_cast<int64_t>(f) * ci + k) * co;
            double ar = 0.0, ai = 0.0;
            for (int c = 0; c < co; ++c) {
                ar += dyre[c] * wre[c] + dyim[c] * wim[c];
                ai += -dyre[c] * wim[c] + dyim[c] * wre[c];
            }
            dxr[k] = ar;
            dxi[k] = ai;
        }
    }
    for (int l = 0; l < L; ++l) {
        double* dxl = dxn + static_cast<int64_t>(l) * ci;
        for (int f = 0; f < F; ++f) {
            const double cv = cosfl[static_cast<int64_t>(f) * L + l];
            const double sv = sinfl[static_cast<int64_t>(f) * L + l];
            const double* dxr = dXre.data() + static_cast<int64_t>(f) * ci;
            const double* dxi = dXim.data() + static_cast<int64_t>(f) * ci;
            for (int k = 0; k < ci; ++k) dxl[k] += dxr[k] * cv - dxi[k] * sv;
        }
    }
}

void fourier_freq_bwd_w(const double* Xre, const double* Xim, const double* dYre,
                        const double* dYim, double* dWre_f, double* dWim_f,
                        double* dBre_f, double* dBim_f, int N, int F, int ci, int co,
                        int f) {
    for (int n = 0; n < N; ++n) {
        const double* xr = Xre + (static_cast<int64_t>(n) * F + f) * ci;
        const double* xi = Xim + (static_cast<int64_t>(n) * F + f) * ci;
        const double* dyre = dYre + (static_cast<int64_t>(n) * F + f) * co;
        const double* dyim = dYim + (static_cast<int64_t>(n) * F + f) * co;
        for (int k = 0; k < ci; ++k) {
            const double ar = xr[k], ai = xi[k];
            double* dwre = dWre_f + static_cast<int64_t>(k) * co;
            double* dwim = dWim_f + static_cast<int64_t>(k) * co;
            for (int c = 0; c < co; ++c) {
                dwre[c] += dyre[c] * ar + dyim[c] * ai;
                dwim[c] += -dyre[c] * ai + dyim[c] * ar;
            }
        }
        for (int c = 0; c < co; ++c) {
            dBre_f[c] += dyre[c];
            dBim_f[c] += dyim[c];
        }
    }
}

}  // namespace stimpute::kernels::detail
