#pragma once

#include <vector>

#include "svsr/image.hpp"
#include "svsr/ops.hpp"
#include "svsr/tensor.hpp"

namespace svsr {

// Settings for the spatially-variant degradation operator.
struct DegradationConfig {
    int n_atoms = 5;        // dictionary size N_D
    int kernel_size = 15;   // odd support K
    double sigma_g = 0.5;   // membership shape parameter
    int median_window = 15; // odd texture-filter window P
    int scale = 2;          // subsampling factor s

    void validate() const;
};

// Constrained (readable) values of one atom kernel.
struct KernelTriple {
    double theta = 0.0;   // rotation, [0, pi)
    double sigma1 = 1.0;  // blur std along the rotated axis 1
    double sigma2 = 1.0;  // blur std along the rotated axis 2
};

// Learnable parameters of the kernel dictionary, one (theta, sigma1, sigma2)
// triple per atom. Stored unconstrained so the M-step optimization is
// unconstrained: theta wraps mod pi on read, sigma passes through softplus.
struct AtomKernelParams {
    Tensor theta_raw;   // [N_D]
    Tensor sigma1_raw;  // [N_D]
    Tensor sigma2_raw;  // [N_D]

    int n_atoms() const { return theta_raw.defined() ? theta_raw.dim(0) : 0; }

    static AtomKernelParams from_constrained(const std::vector<KernelTriple>& triples,
                                             bool requires_grad);
    std::vector<KernelTriple> constrained() const;
    std::vector<Tensor> raw_tensors() const;
    void set_requires_grad(bool value);
    void zero_grad();
};

double softplus_value(double x);
double softplus_inverse(double y);

// Discretized atom kernels, non-negative and summing to one. Rebuilt from
// AtomKernelParams on every tape so the kernels stay differentiable w.r.t.
// the raw parameters.
struct KernelDictionary {
    std::vector<Tensor> kernels;  // N_D tensors, K x K
    int kernel_size = 0;

    int n_atoms() const { return static_cast<int>(kernels.size()); }
};

// Product of the two rotated 1-D Gaussians evaluated on the centered integer
// grid (x = column offset, y = row offset; theta measured from the horizontal
// axis), normalized to sum one. Differentiable w.r.t. the raw parameters.
Tensor synthesize_atom_kernel(const AtomKernelParams& params, int atom,
                              int kernel_size);

KernelDictionary synthesize_dictionary(const AtomKernelParams& params,
                                       int kernel_size);

// Texture feature h(x): gradient magnitude of the luma channel (forward
// differences, L2 magnitude), median-filtered with a window x window box
// (replicate borders), then min-max normalized into [0, 1]. A constant image
// maps to all zeros.
Image texture_feature(const Image& img, int window);

// Membership response for atom `atom` (0-based; bump centered at
// atom / (n_atoms - 1) over the normalized texture). Requires n_atoms >= 2.
Image membership(const Image& texture, int atom, int n_atoms, double sigma_g);

// Per-pixel mixing weights, one HR-sized map per atom, summing to one at
// every pixel. Treated as constants during optimization: they are recomputed
// from the current reconstruction outside the tape.
struct CoefficientMaps {
    std::vector<Image> maps;
    Image texture;

    int n_atoms() const { return static_cast<int>(maps.size()); }
    std::vector<Tensor> as_tensors() const;
};

CoefficientMaps coefficient_maps(const Image& img, const DegradationConfig& cfg);

// Spatially-variant degradation: convolve with every atom kernel, mix the
// results per pixel with the coefficient maps, then subsample by s.
// Differentiable w.r.t. x and the kernels.
Tensor apply_degradation(const Tensor& x, const KernelDictionary& dict,
                         const std::vector<Tensor>& maps, int s);
Tensor apply_degradation(const Tensor& x, const KernelDictionary& dict,
                         const CoefficientMaps& maps, int s);

}  // namespace svsr
