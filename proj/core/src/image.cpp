#include "svsr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace svsr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

double cubic_weight(double t) {
    // Keys cubic with a = -0.5.
    const double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

}  // namespace

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);

    // Normalize everything to 8-bit RGB.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<png_byte> row(png_get_rowbytes(png, info));
    Image img(static_cast<int>(height), static_cast<int>(width), 3);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                img.at(static_cast<int>(y), static_cast<int>(x), ch) =
                    row[x * 3 + ch] / 255.0;
            }
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace {

void write_png_impl(const std::string& path, const Image& img, int color_type) {
    const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    if (img.c != channels) {
        throw IoError("write_png: expected " + std::to_string(channels) +
                      " channels, got " + std::to_string(img.c));
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path + " for writing");

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w),
                 static_cast<png_uint_32>(img.h), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(img.w) * channels);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                const double v = std::clamp(img.at(y, x, ch), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * channels + ch] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_rgb8(const std::string& path, const Image& img) {
    write_png_impl(path, img, PNG_COLOR_TYPE_RGB);
}

void write_png_gray8(const std::string& path, const Image& img) {
    write_png_impl(path, img, PNG_COLOR_TYPE_GRAY);
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
    Image out(out_h, out_w, img.c);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y)) - 1;
        double wy[4];
        for (int i = 0; i < 4; ++i) wy[i] = cubic_weight(src_y - (y0 + i));
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x)) - 1;
            double wx[4];
            for (int i = 0; i < 4; ++i) wx[i] = cubic_weight(src_x - (x0 + i));
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                double wsum = 0.0;
                for (int i = 0; i < 4; ++i) {
                    const int yy = std::clamp(y0 + i, 0, img.h - 1);
                    for (int j = 0; j < 4; ++j) {
                        const int xx = std::clamp(x0 + j, 0, img.w - 1);
                        const double wgt = wy[i] * wx[j];
                        acc += wgt * img.at(yy, xx, ch);
                        wsum += wgt;
                    }
                }
                out.at(y, x, ch) = acc / wsum;
            }
        }
    }
    return out;
}

Image bicubic_upsample(const Image& img, int s) {
    return bicubic_resize(img, img.h * s, img.w * s);
}

Image crop(const Image& img, int y0, int x0, int out_h, int out_w) {
    if (y0 < 0 || x0 < 0 || y0 + out_h > img.h || x0 + out_w > img.w) {
        throw DimensionError("crop: region out of bounds");
    }
    Image out(out_h, out_w, img.c);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            for (int ch = 0; ch < img.c; ++ch) {
                out.at(y, x, ch) = img.at(y0 + y, x0 + x, ch);
            }
        }
    }
    return out;
}

Image center_crop(const Image& img, int out_h, int out_w) {
    return crop(img, (img.h - out_h) / 2, (img.w - out_w) / 2, out_h, out_w);
}

Image pad_replicate(const Image& img, int bottom, int right) {
    Image out(img.h + bottom, img.w + right, img.c);
    for (int y = 0; y < out.h; ++y) {
        const int sy = std::min(y, img.h - 1);
        for (int x = 0; x < out.w; ++x) {
            const int sx = std::min(x, img.w - 1);
            for (int ch = 0; ch < img.c; ++ch) {
                out.at(y, x, ch) = img.at(sy, sx, ch);
            }
        }
    }
    return out;
}

Image luma(const Image& img) {
    if (img.c == 1) return img;
    Image out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            out.at(y, x, 0) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                              0.114 * img.at(y, x, 2);
        }
    }
    return out;
}

Image luma_studio(const Image& img) {
    if (img.c != 3) throw DimensionError("luma_studio: expected 3 channels");
    Image out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            out.at(y, x, 0) = (16.0 + 65.481 * img.at(y, x, 0) +
                               128.553 * img.at(y, x, 1) + 24.966 * img.at(y, x, 2)) /
                              255.0;
        }
    }
    return out;
}

Image clamp01(Image img) {
    for (double& v : img.px) v = std::clamp(v, 0.0, 1.0);
    return img;
}

Tensor to_tensor(const Image& img, bool requires_grad) {
    return Tensor::from_data({img.h, img.w, img.c}, img.px, requires_grad);
}

Image to_image(const Tensor& t) {
    if (t.rank() == 2) {
        Image out(t.dim(0), t.dim(1), 1);
        std::copy(t.data().begin(), t.data().end(), out.px.begin());
        return out;
    }
    if (t.rank() != 3) throw DimensionError("to_image: expected rank 2 or 3");
    Image out(t.dim(0), t.dim(1), t.dim(2));
    std::copy(t.data().begin(), t.data().end(), out.px.begin());
    return out;
}

}  // namespace svsr
