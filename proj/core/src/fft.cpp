#include "svsr/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace svsr {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
// Plans are created with FFTW_UNALIGNED so they can run on any heap buffer.
class PlanCache {
public:
    static fftw_plan get(int h, int w, int sign) {
        static PlanCache cache;
        std::lock_guard<std::mutex> lock(cache.mutex_);
        auto key = std::make_tuple(h, w, sign);
        auto it = cache.plans_.find(key);
        if (it != cache.plans_.end()) return it->second;
        std::vector<fftw_complex> in(static_cast<std::size_t>(h) * w);
        std::vector<fftw_complex> out(static_cast<std::size_t>(h) * w);
        fftw_plan p = fftw_plan_dft_2d(h, w, in.data(), out.data(), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

// One orthonormal 2-D transform of an interleaved channel. `re`/`im` are
// per-channel planes of length h*w.
void transform_plane(int h, int w, const double* re, const double* im,
                     double* out_re, double* out_im, bool inverse) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<fftw_complex> in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = re ? re[i] : 0.0;
        in[i][1] = im ? im[i] : 0.0;
    }
    fftw_plan plan = PlanCache::get(h, w, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
    fftw_execute_dft(plan, in.data(), out.data());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        out_re[i] = out[i][0] * scale;
        out_im[i] = out[i][1] * scale;
    }
}

void resolve_dims(const Shape& shape, const char* op, int* h, int* w, int* c) {
    if (shape.size() == 2) {
        *h = shape[0];
        *w = shape[1];
        *c = 1;
    } else if (shape.size() == 3) {
        *h = shape[0];
        *w = shape[1];
        *c = shape[2];
    } else {
        throw DimensionError(std::string(op) + ": expected rank 2 or 3, got " +
                             shape_str(shape));
    }
}

// Channel-interleaved <-> planar shuffles around the per-plane transform.
template <typename T>
void dft_channels(int h, int w, int c, const T* re, const T* im, T* out_re,
                  T* out_im, bool inverse) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> pre(n), pim(n), qre(n), qim(n);
#pragma omp parallel for schedule(static) firstprivate(pre, pim, qre, qim)
    for (int ch = 0; ch < c; ++ch) {
        for (std::size_t i = 0; i < n; ++i) {
            pre[i] = re ? static_cast<double>(re[i * c + ch]) : 0.0;
            pim[i] = im ? static_cast<double>(im[i * c + ch]) : 0.0;
        }
        transform_plane(h, w, pre.data(), pim.data(), qre.data(), qim.data(),
                        inverse);
        for (std::size_t i = 0; i < n; ++i) {
            if (out_re) out_re[i * c + ch] = static_cast<T>(qre[i]);
            if (out_im) out_im[i * c + ch] = static_cast<T>(qim[i]);
        }
    }
}

}  // namespace

template <typename T>
ComplexTensorT<T> fft2(const TensorT<T>& x) {
    int h, w, c;
    resolve_dims(x.shape(), "fft2", &h, &w, &c);
    std::vector<T> re(x.numel()), im(x.numel());
    dft_channels<T>(h, w, c, x.data().data(), nullptr, re.data(), im.data(), false);

    auto attach = [&](std::vector<T> value, bool imag_part) {
        auto out = TensorT<T>::from_data(x.shape(), std::move(value));
        if (x.requires_grad()) {
            auto node = out.node();
            node->requires_grad = true;
            node->parents = {x.node()};
            // d/dx of a real-linear map: apply the adjoint (the inverse
            // orthonormal DFT) to the output gradient and keep the real part.
            node->backprop = [h, w, c, imag_part](detail::NodeT<T>& out_node) {
                auto& p = *out_node.parents[0];
                if (!p.requires_grad) return;
                p.ensure_grad();
                std::vector<T> gre(out_node.numel());
                const T* g_as_re = imag_part ? nullptr : out_node.grad.data();
                const T* g_as_im = imag_part ? out_node.grad.data() : nullptr;
                dft_channels<T>(h, w, c, g_as_re, g_as_im, gre.data(), nullptr, true);
                for (std::size_t i = 0; i < gre.size(); ++i) p.grad[i] += gre[i];
            };
        }
        return out;
    };

    ComplexTensorT<T> out;
    out.re = attach(std::move(re), false);
    out.im = attach(std::move(im), true);
    return out;
}

template <typename T>
TensorT<T> ifft2_real(const ComplexTensorT<T>& x) {
    if (x.re.shape() != x.im.shape()) {
        throw DimensionError("ifft2_real: real/imag shape mismatch");
    }
    int h, w, c;
    resolve_dims(x.re.shape(), "ifft2_real", &h, &w, &c);
    std::vector<T> re(x.re.numel());
    dft_channels<T>(h, w, c, x.re.data().data(), x.im.data().data(), re.data(),
                    nullptr, true);

    auto out = TensorT<T>::from_data(x.re.shape(), std::move(re));
    if (x.re.requires_grad() || x.im.requires_grad()) {
        auto node = out.node();
        node->requires_grad = true;
        node->parents = {x.re.node(), x.im.node()};
        node->backprop = [h, w, c](detail::NodeT<T>& out_node) {
            auto& pre = *out_node.parents[0];
            auto& pim = *out_node.parents[1];
            std::vector<T> gre(out_node.numel()), gim(out_node.numel());
            dft_channels<T>(h, w, c, out_node.grad.data(), nullptr, gre.data(),
                            gim.data(), false);
            if (pre.requires_grad) {
                pre.ensure_grad();
                for (std::size_t i = 0; i < gre.size(); ++i) pre.grad[i] += gre[i];
            }
            if (pim.requires_grad) {
                pim.ensure_grad();
                for (std::size_t i = 0; i < gim.size(); ++i) pim.grad[i] += gim[i];
            }
        };
    }
    return out;
}

template ComplexTensorT<double> fft2(const TensorT<double>&);
template ComplexTensorT<float> fft2(const TensorT<float>&);
template TensorT<double> ifft2_real(const ComplexTensorT<double>&);
template TensorT<float> ifft2_real(const ComplexTensorT<float>&);

}  // namespace svsr
