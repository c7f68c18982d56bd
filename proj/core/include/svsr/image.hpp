#pragma once

#include <string>
#include <vector>

#include "svsr/tensor.hpp"

namespace svsr {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Plain dense image, H x W x C row-major with channels fastest, values
// nominally in [0, 1]. This is the non-differentiable counterpart of Tensor
// used by I/O, metrics and the synthetic-degradation harness.
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<double> px;

    Image() = default;
    Image(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_),
          px(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    double& at(int y, int x, int ch) {
        return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    double at(int y, int x, int ch) const {
        return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    std::size_t numel() const { return px.size(); }
    bool empty() const { return px.empty(); }
};

// 8-bit PNG I/O. Reading maps gray/gray-alpha/RGBA inputs onto 3-channel RGB
// in [0, 1]; writing clamps, scales to [0, 255] and rounds.
Image read_png(const std::string& path);
void write_png_rgb8(const std::string& path, const Image& img);
void write_png_gray8(const std::string& path, const Image& img);

// Catmull-Rom style bicubic (a = -0.5) with half-pixel centers and replicate
// borders, matching the usual image-resize convention.
Image bicubic_resize(const Image& img, int out_h, int out_w);
Image bicubic_upsample(const Image& img, int s);

Image center_crop(const Image& img, int out_h, int out_w);
Image crop(const Image& img, int y0, int x0, int out_h, int out_w);
Image pad_replicate(const Image& img, int bottom, int right);

// Full-swing BT.601 luma (texture analysis).
Image luma(const Image& img);
// Studio-swing BT.601 luma on [0,1]: (16 + 65.481 R + 128.553 G + 24.966 B)/255
// (metric evaluation).
Image luma_studio(const Image& img);

Image clamp01(Image img);

Tensor to_tensor(const Image& img, bool requires_grad = false);
Image to_image(const Tensor& t);

}  // namespace svsr
