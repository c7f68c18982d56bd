// Independent reference implementations used as test oracles. Everything in
// this header is deliberately written the dumb way (nested loops, direct
// formula evaluation) and shares no code with the library paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "svsr/image.hpp"
#include "svsr/rng.hpp"
#include "svsr/tensor.hpp"

namespace oracle {

inline void fill_uniform(svsr::Tensor& t, svsr::Rng& rng, double lo = 0.0,
                         double hi = 1.0) {
    for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform();
}

inline void fill_uniform(svsr::Image& img, svsr::Rng& rng, double lo = 0.0,
                         double hi = 1.0) {
    for (auto& v : img.px) v = lo + (hi - lo) * rng.uniform();
}

// ---------------------------------------------------------------------------
// Gradient checking.

// Max relative error between the analytic gradient of f w.r.t. `leaves` and
// central finite differences. f must rebuild its graph from the leaves on
// every call.
inline double max_grad_rel_err(const std::function<svsr::Tensor()>& f,
                               std::vector<svsr::Tensor> leaves,
                               double h = 1e-5) {
    for (auto& leaf : leaves) leaf.zero_grad();
    auto loss = f();
    loss.backward();

    double worst = 0.0;
    for (auto& leaf : leaves) {
        std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
        auto data = leaf.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = f().item();
            data[i] = saved - h;
            const double down = f().item();
            data[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
            worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Convolution.

enum class Pad { kReplicate, kZero };

inline double padded_at(const std::vector<double>& v, int h, int w, int c, int y,
                        int x, int ch, Pad pad) {
    if (y < 0 || y >= h || x < 0 || x >= w) {
        if (pad == Pad::kZero) return 0.0;
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
    }
    return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
}

// Same-size correlation, input H x W x Ci, kernel kh x kw x Ci x Co.
inline std::vector<double> conv2d_ref(const std::vector<double>& in, int h, int w,
                                      int ci, const std::vector<double>& k, int kh,
                                      int kw, int co, Pad pad) {
    std::vector<double> out(static_cast<std::size_t>(h) * w * co, 0.0);
    const int ph = kh / 2, pw = kw / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int oc = 0; oc < co; ++oc) {
                double acc = 0.0;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        for (int cc = 0; cc < ci; ++cc)
                            acc += padded_at(in, h, w, ci, y + ky - ph, x + kx - pw,
                                             cc, pad) *
                                   k[((static_cast<std::size_t>(ky) * kw + kx) * ci +
                                      cc) * co + oc];
                out[(static_cast<std::size_t>(y) * w + x) * co + oc] = acc;
            }
    return out;
}

// Single kh x kw kernel applied to every channel.
inline std::vector<double> conv2d_shared_ref(const std::vector<double>& in, int h,
                                             int w, int c,
                                             const std::vector<double>& k, int kh,
                                             int kw, Pad pad) {
    std::vector<double> out(static_cast<std::size_t>(h) * w * c, 0.0);
    const int ph = kh / 2, pw = kw / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        acc += padded_at(in, h, w, c, y + ky - ph, x + kx - pw, ch,
                                         pad) *
                               k[static_cast<std::size_t>(ky) * kw + kx];
                out[(static_cast<std::size_t>(y) * w + x) * c + ch] = acc;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Direct O(N^2) DFT, orthonormal scaling.

inline void dft2_ref(const std::vector<double>& in, int h, int w,
                     std::vector<double>& out_re, std::vector<double>& out_im) {
    out_re.assign(static_cast<std::size_t>(h) * w, 0.0);
    out_im.assign(static_cast<std::size_t>(h) * w, 0.0);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l) {
            std::complex<double> acc(0.0, 0.0);
            for (int m = 0; m < h; ++m)
                for (int n = 0; n < w; ++n) {
                    const double phase = -two_pi * (static_cast<double>(k) * m / h +
                                                    static_cast<double>(l) * n / w);
                    acc += in[static_cast<std::size_t>(m) * w + n] *
                           std::complex<double>(std::cos(phase), std::sin(phase));
                }
            acc /= std::sqrt(static_cast<double>(h) * w);
            out_re[static_cast<std::size_t>(k) * w + l] = acc.real();
            out_im[static_cast<std::size_t>(k) * w + l] = acc.imag();
        }
}

// ---------------------------------------------------------------------------
// Anisotropic Gaussian kernel in covariance form: Sigma = R diag(s1^2, s2^2)
// R^T with R the rotation by theta, evaluated on the centered K x K grid and
// normalized to sum one.

inline std::vector<double> gaussian_kernel_cov_ref(double theta, double s1,
                                                   double s2, int k) {
    // Inverse covariance entries.
    const double c = std::cos(theta), s = std::sin(theta);
    const double i1 = 1.0 / (s1 * s1), i2 = 1.0 / (s2 * s2);
    const double a = c * c * i1 + s * s * i2;
    const double b = s * c * (i1 - i2);
    const double d = s * s * i1 + c * c * i2;
    const int r = k / 2;
    std::vector<double> out(static_cast<std::size_t>(k) * k);
    double total = 0.0;
    for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) {
            const double u = x - r;  // horizontal offset
            const double v = y - r;  // vertical offset
            const double q = a * u * u + 2.0 * b * u * v + d * v * v;
            const double val = std::exp(-0.5 * q);
            out[static_cast<std::size_t>(y) * k + x] = val;
            total += val;
        }
    for (double& v : out) v /= total;
    return out;
}

// ---------------------------------------------------------------------------
// Texture feature: BT.601 luma, forward-difference gradient magnitude,
// exact median by full sort over a replicate-padded window, min-max
// normalization.

inline svsr::Image texture_feature_ref(const svsr::Image& img, int window) {
    const int h = img.h, w = img.w;
    std::vector<double> y(static_cast<std::size_t>(h) * w);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            y[static_cast<std::size_t>(yy) * w + xx] =
                img.c == 1 ? img.at(yy, xx, 0)
                           : 0.299 * img.at(yy, xx, 0) + 0.587 * img.at(yy, xx, 1) +
                                 0.114 * img.at(yy, xx, 2);

    std::vector<double> mag(y.size(), 0.0);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            const double gx =
                xx + 1 < w ? y[static_cast<std::size_t>(yy) * w + xx + 1] -
                                 y[static_cast<std::size_t>(yy) * w + xx]
                           : 0.0;
            const double gy =
                yy + 1 < h ? y[static_cast<std::size_t>(yy + 1) * w + xx] -
                                 y[static_cast<std::size_t>(yy) * w + xx]
                           : 0.0;
            mag[static_cast<std::size_t>(yy) * w + xx] = std::sqrt(gx * gx + gy * gy);
        }

    const int r = window / 2;
    svsr::Image out(h, w, 1);
    std::vector<double> win;
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            win.clear();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int sy = std::clamp(yy + dy, 0, h - 1);
                    const int sx = std::clamp(xx + dx, 0, w - 1);
                    win.push_back(mag[static_cast<std::size_t>(sy) * w + sx]);
                }
            std::sort(win.begin(), win.end());
            out.at(yy, xx, 0) = win[win.size() / 2];
        }

    const double lo = *std::min_element(out.px.begin(), out.px.end());
    const double hi = *std::max_element(out.px.begin(), out.px.end());
    if (hi - lo <= 0.0) {
        std::fill(out.px.begin(), out.px.end(), 0.0);
    } else {
        for (double& v : out.px) v = (v - lo) / (hi - lo);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spatially-variant degradation via the explicit per-pixel mixed kernel:
// k_p = sum_i W_i[p] g_i, applied with replicate borders, then subsampled.

inline std::vector<double> mixed_kernel_degradation_ref(
    const std::vector<double>& x, int h, int w, int c,
    const std::vector<std::vector<double>>& kernels, int k,
    const std::vector<std::vector<double>>& maps, int s) {
    const int r = k / 2;
    std::vector<double> hr(static_cast<std::size_t>(h) * w * c, 0.0);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            std::vector<double> kmix(static_cast<std::size_t>(k) * k, 0.0);
            for (std::size_t i = 0; i < kernels.size(); ++i) {
                const double wgt = maps[i][static_cast<std::size_t>(y) * w + xx];
                for (std::size_t j = 0; j < kmix.size(); ++j)
                    kmix[j] += wgt * kernels[i][j];
            }
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        acc += kmix[static_cast<std::size_t>(ky) * k + kx] *
                               padded_at(x, h, w, c, y + ky - r, xx + kx - r, ch,
                                         Pad::kReplicate);
                hr[(static_cast<std::size_t>(y) * w + xx) * c + ch] = acc;
            }
        }
    std::vector<double> out(static_cast<std::size_t>(h / s) * (w / s) * c);
    for (int y = 0; y < h / s; ++y)
        for (int xx = 0; xx < w / s; ++xx)
            for (int ch = 0; ch < c; ++ch)
                out[(static_cast<std::size_t>(y) * (w / s) + xx) * c + ch] =
                    hr[(static_cast<std::size_t>(y) * s * w + xx * s) * c + ch];
    return out;
}

// ---------------------------------------------------------------------------
// Anisotropic total variation: sum over both forward differences, all
// channels.

inline double tv_l1_ref(const std::vector<double>& v, int h, int w, int c) {
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const auto at = [&](int yy, int xx) {
                    return v[(static_cast<std::size_t>(yy) * w + xx) * c + ch];
                };
                if (x + 1 < w) acc += std::abs(at(y, x + 1) - at(y, x));
                if (y + 1 < h) acc += std::abs(at(y + 1, x) - at(y, x));
            }
    return acc;
}

}  // namespace oracle
