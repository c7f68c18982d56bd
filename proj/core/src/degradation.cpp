#include "svsr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace svsr {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void DegradationConfig::validate() const {
    if (n_atoms < 1) throw ContractError("n_atoms must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ContractError("kernel_size must be odd and positive");
    }
    if (sigma_g <= 0.0) throw ContractError("sigma_g must be positive");
    if (median_window < 1 || median_window % 2 == 0) {
        throw ContractError("median_window must be odd and positive");
    }
    if (scale < 1) throw ContractError("scale must be >= 1");
}

double softplus_value(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
    if (y <= 0.0) {
        throw ContractError("softplus_inverse: value must be positive, got " +
                            std::to_string(y));
    }
    // ln(e^y - 1), stable for large y.
    return y > 30.0 ? y : std::log(std::expm1(y));
}

AtomKernelParams AtomKernelParams::from_constrained(
    const std::vector<KernelTriple>& triples, bool requires_grad) {
    const int n = static_cast<int>(triples.size());
    std::vector<double> th(n), s1(n), s2(n);
    for (int i = 0; i < n; ++i) {
        th[static_cast<std::size_t>(i)] = triples[static_cast<std::size_t>(i)].theta;
        s1[static_cast<std::size_t>(i)] =
            softplus_inverse(triples[static_cast<std::size_t>(i)].sigma1);
        s2[static_cast<std::size_t>(i)] =
            softplus_inverse(triples[static_cast<std::size_t>(i)].sigma2);
    }
    AtomKernelParams p;
    p.theta_raw = Tensor::from_data({n}, std::move(th), requires_grad);
    p.sigma1_raw = Tensor::from_data({n}, std::move(s1), requires_grad);
    p.sigma2_raw = Tensor::from_data({n}, std::move(s2), requires_grad);
    return p;
}

std::vector<KernelTriple> AtomKernelParams::constrained() const {
    std::vector<KernelTriple> out(static_cast<std::size_t>(n_atoms()));
    for (int i = 0; i < n_atoms(); ++i) {
        const double raw = theta_raw.at(i);
        double theta = raw - kPi * std::floor(raw / kPi);
        if (theta >= kPi) theta = 0.0;
        out[static_cast<std::size_t>(i)] = {theta, softplus_value(sigma1_raw.at(i)),
                                            softplus_value(sigma2_raw.at(i))};
    }
    return out;
}

std::vector<Tensor> AtomKernelParams::raw_tensors() const {
    return {theta_raw, sigma1_raw, sigma2_raw};
}

void AtomKernelParams::set_requires_grad(bool value) {
    theta_raw.set_requires_grad(value);
    sigma1_raw.set_requires_grad(value);
    sigma2_raw.set_requires_grad(value);
}

void AtomKernelParams::zero_grad() {
    theta_raw.zero_grad();
    sigma1_raw.zero_grad();
    sigma2_raw.zero_grad();
}

Tensor synthesize_atom_kernel(const AtomKernelParams& params, int atom,
                              int kernel_size) {
    if (atom < 0 || atom >= params.n_atoms()) {
        throw ContractError("synthesize_atom_kernel: atom index out of range");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ContractError("synthesize_atom_kernel: kernel size must be odd");
    }
    const int k = kernel_size;
    const int r = k / 2;

    // Centered coordinate grids: u along width, v along height.
    std::vector<double> ug(static_cast<std::size_t>(k) * k);
    std::vector<double> vg(static_cast<std::size_t>(k) * k);
    for (int y = 0; y < k; ++y) {
        for (int x = 0; x < k; ++x) {
            ug[static_cast<std::size_t>(y) * k + x] = x - r;
            vg[static_cast<std::size_t>(y) * k + x] = y - r;
        }
    }
    auto u = Tensor::from_data({k, k}, std::move(ug));
    auto v = Tensor::from_data({k, k}, std::move(vg));

    auto theta = wrap_angle(index(params.theta_raw, atom), kPi);
    auto s1 = softplus(index(params.sigma1_raw, atom));
    auto s2 = softplus(index(params.sigma2_raw, atom));
    auto c = cos(theta);
    auto s = sin(theta);

    // Projections onto the rotated axes.
    auto p1 = add(scale_by(u, c), scale_by(v, s));
    auto p2 = sub(scale_by(v, c), scale_by(u, s));

    // The 1/(sqrt(2 pi) sigma) prefactors are constant over the grid and
    // cancel in the sum normalization.
    auto q1 = div_by(mul(p1, p1), mul_scalar(mul(s1, s1), 2.0));
    auto q2 = div_by(mul(p2, p2), mul_scalar(mul(s2, s2), 2.0));
    auto raw = exp(neg(add(q1, q2)));
    return div_by(raw, sum(raw));
}

KernelDictionary synthesize_dictionary(const AtomKernelParams& params,
                                       int kernel_size) {
    KernelDictionary dict;
    dict.kernel_size = kernel_size;
    dict.kernels.reserve(static_cast<std::size_t>(params.n_atoms()));
    for (int i = 0; i < params.n_atoms(); ++i) {
        dict.kernels.push_back(synthesize_atom_kernel(params, i, kernel_size));
    }
    return dict;
}

namespace {

// Exact median of an odd-sized window via partial sort.
double window_median(const Image& img, int cy, int cx, int radius,
                     std::vector<double>& scratch) {
    scratch.clear();
    for (int dy = -radius; dy <= radius; ++dy) {
        const int y = std::clamp(cy + dy, 0, img.h - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
            const int x = std::clamp(cx + dx, 0, img.w - 1);
            scratch.push_back(img.at(y, x, 0));
        }
    }
    auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    return *mid;
}

}  // namespace

Image texture_feature(const Image& img, int window) {
    if (window < 1 || window % 2 == 0) {
        throw ContractError("texture_feature: window must be odd");
    }
    const Image y = luma(img);

    Image grad_mag(y.h, y.w, 1);
    for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
            const double gx = xx + 1 < y.w ? y.at(yy, xx + 1, 0) - y.at(yy, xx, 0) : 0.0;
            const double gy = yy + 1 < y.h ? y.at(yy + 1, xx, 0) - y.at(yy, xx, 0) : 0.0;
            grad_mag.at(yy, xx, 0) = std::sqrt(gx * gx + gy * gy);
        }
    }

    Image filtered(y.h, y.w, 1);
    const int radius = window / 2;
    std::vector<double> scratch;
    scratch.reserve(static_cast<std::size_t>(window) * window);
    for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
            filtered.at(yy, xx, 0) = window_median(grad_mag, yy, xx, radius, scratch);
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(filtered.px.begin(), filtered.px.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 0.0) {
        std::fill(filtered.px.begin(), filtered.px.end(), 0.0);
        return filtered;
    }
    for (double& v : filtered.px) v = (v - lo) / (hi - lo);
    return filtered;
}

Image membership(const Image& texture, int atom, int n_atoms, double sigma_g) {
    if (n_atoms < 2) {
        throw ContractError("membership requires n_atoms >= 2 (n_atoms = 1 bypasses it)");
    }
    if (atom < 0 || atom >= n_atoms) {
        throw ContractError("membership: atom index out of range");
    }
    const double center = static_cast<double>(atom) / (n_atoms - 1);
    const double gain = static_cast<double>(n_atoms - 1) / (2.0 * sigma_g * sigma_g);
    Image out(texture.h, texture.w, 1);
    for (std::size_t i = 0; i < texture.px.size(); ++i) {
        const double d = texture.px[i] - center;
        out.px[i] = std::exp(-gain * d * d);
    }
    return out;
}

std::vector<Tensor> CoefficientMaps::as_tensors() const {
    std::vector<Tensor> out;
    out.reserve(maps.size());
    for (const auto& m : maps) {
        out.push_back(Tensor::from_data({m.h, m.w}, m.px));
    }
    return out;
}

CoefficientMaps coefficient_maps(const Image& img, const DegradationConfig& cfg) {
    cfg.validate();
    CoefficientMaps out;
    out.texture = texture_feature(img, cfg.median_window);
    if (cfg.n_atoms == 1) {
        // Degenerate spatially-invariant case.
        out.maps.push_back(Image(img.h, img.w, 1, 1.0));
        return out;
    }
    std::vector<Image> mu;
    mu.reserve(static_cast<std::size_t>(cfg.n_atoms));
    for (int i = 0; i < cfg.n_atoms; ++i) {
        mu.push_back(membership(out.texture, i, cfg.n_atoms, cfg.sigma_g));
    }
    Image denom(img.h, img.w, 1);
    for (const auto& m : mu) {
        for (std::size_t i = 0; i < denom.px.size(); ++i) denom.px[i] += m.px[i];
    }
    for (auto& m : mu) {
        for (std::size_t i = 0; i < m.px.size(); ++i) m.px[i] /= denom.px[i];
        out.maps.push_back(std::move(m));
    }
    return out;
}

Tensor apply_degradation(const Tensor& x, const KernelDictionary& dict,
                         const std::vector<Tensor>& maps, int s) {
    if (x.rank() != 3) {
        throw DimensionError("apply_degradation: expected H x W x C input");
    }
    if (dict.kernels.empty() || dict.kernels.size() != maps.size()) {
        throw DimensionError("apply_degradation: dictionary/maps size mismatch");
    }
    for (const auto& m : maps) {
        if (m.rank() != 2 || m.dim(0) != x.dim(0) || m.dim(1) != x.dim(1)) {
            throw DimensionError("apply_degradation: map size does not match input");
        }
    }
    Tensor acc;
    for (std::size_t i = 0; i < dict.kernels.size(); ++i) {
        auto blurred = conv2d_shared(x, dict.kernels[i], Padding::kReplicate);
        auto weighted = mul_map(blurred, maps[i]);
        acc = acc.defined() ? add(acc, weighted) : weighted;
    }
    return downsample(acc, s);
}

Tensor apply_degradation(const Tensor& x, const KernelDictionary& dict,
                         const CoefficientMaps& maps, int s) {
    return apply_degradation(x, dict, maps.as_tensors(), s);
}

}  // namespace svsr
