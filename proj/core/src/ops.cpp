#include "svsr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace svsr {

namespace {

template <typename T>
using Node = detail::NodeT<T>;

template <typename T>
TensorT<T> make_op(Shape shape, std::vector<T> value,
                   std::initializer_list<TensorT<T>> parents,
                   std::function<void(Node<T>&)> backprop) {
    auto out = TensorT<T>::from_data(std::move(shape), std::move(value));
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (needs) {
        auto node = out.node();
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (const auto& p : parents) node->parents.push_back(p.node());
        node->backprop = std::move(backprop);
    }
    return out;
}

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

template <typename T>
void check_rank(const TensorT<T>& a, int rank, const char* op) {
    if (a.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_str(a.shape()));
    }
}

// Spatial rank helper for ops that accept H x W or H x W x C.
template <typename T>
void spatial_dims(const TensorT<T>& a, const char* op, int* h, int* w, int* c) {
    if (a.rank() == 2) {
        *h = a.dim(0);
        *w = a.dim(1);
        *c = 1;
    } else if (a.rank() == 3) {
        *h = a.dim(0);
        *w = a.dim(1);
        *c = a.dim(2);
    } else {
        throw DimensionError(std::string(op) + ": expected rank 2 or 3, got " +
                             shape_str(a.shape()));
    }
}

template <typename T, typename Fwd, typename Deriv>
TensorT<T> pointwise_unary(const TensorT<T>& a, Fwd fwd, Deriv deriv) {
    const auto av = a.data();
    std::vector<T> v(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) v[i] = fwd(av[i]);
    return make_op<T>(
        a.shape(), std::move(v), {a}, [deriv](Node<T>& out) {
            auto& p = *out.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            const auto& x = *p.value;
            const auto& v = *out.value;
            for (std::size_t i = 0; i < x.size(); ++i) {
                p.grad[i] += out.grad[i] * deriv(x[i], v[i]);
            }
        });
}

// Accumulate g into parent if it participates in the graph.
template <typename T, typename Fn>
void into_parent(Node<T>& parent, Fn&& fill) {
    if (!parent.requires_grad) return;
    parent.ensure_grad();
    fill(parent.grad);
}

template <typename T>
std::vector<T> pad_spatial(const T* src, int h, int w, int c, int ph, int pw,
                           Padding mode) {
    const int hp = h + 2 * ph;
    const int wp = w + 2 * pw;
    std::vector<T> out(static_cast<std::size_t>(hp) * wp * c, T(0));
    for (int py = 0; py < hp; ++py) {
        int sy = py - ph;
        if (mode == Padding::kReplicate) sy = std::clamp(sy, 0, h - 1);
        if (sy < 0 || sy >= h) continue;
        for (int px = 0; px < wp; ++px) {
            int sx = px - pw;
            if (mode == Padding::kReplicate) sx = std::clamp(sx, 0, w - 1);
            if (sx < 0 || sx >= w) continue;
            const T* s = src + (static_cast<std::size_t>(sy) * w + sx) * c;
            T* d = out.data() + (static_cast<std::size_t>(py) * wp + px) * c;
            std::copy(s, s + c, d);
        }
    }
    return out;
}

// Scatter a padded-domain gradient back onto the source image.
template <typename T>
void fold_padded_grad(const std::vector<T>& gpad, int h, int w, int c, int ph,
                      int pw, Padding mode, std::vector<T>& grad) {
    const int wp = w + 2 * pw;
    const int hp = h + 2 * ph;
    for (int py = 0; py < hp; ++py) {
        int sy = py - ph;
        if (mode == Padding::kReplicate) sy = std::clamp(sy, 0, h - 1);
        if (sy < 0 || sy >= h) continue;
        for (int px = 0; px < wp; ++px) {
            int sx = px - pw;
            if (mode == Padding::kReplicate) sx = std::clamp(sx, 0, w - 1);
            if (sx < 0 || sx >= w) continue;
            const T* s = gpad.data() + (static_cast<std::size_t>(py) * wp + px) * c;
            T* d = grad.data() + (static_cast<std::size_t>(sy) * w + sx) * c;
            for (int ch = 0; ch < c; ++ch) d[ch] += s[ch];
        }
    }
}

}  // namespace

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "add");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> v(av.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
    return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        for (int k = 0; k < 2; ++k) {
            into_parent(*out.parents[k], [&](std::vector<T>& g) {
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
            });
        }
    });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "sub");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> v(av.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] - bv[i];
    return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
        });
    });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "mul");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> v(av.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
    return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        const auto& av = *out.parents[0]->value;
        const auto& bv = *out.parents[1]->value;
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * bv[i];
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * av[i];
        });
    });
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, double c) {
    return pointwise_unary(
        a, [c](T x) { return static_cast<T>(x + c); },
        [](T, T) { return T(1); });
}

template <typename T>
TensorT<T> mul_scalar(const TensorT<T>& a, double c) {
    return pointwise_unary(
        a, [c](T x) { return static_cast<T>(x * c); },
        [c](T, T) { return static_cast<T>(c); });
}

template <typename T>
TensorT<T> neg(const TensorT<T>& a) {
    return mul_scalar(a, -1.0);
}

template <typename T>
TensorT<T> exp(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return std::exp(x); }, [](T, T v) { return v; });
}

template <typename T>
TensorT<T> sqrt(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return std::sqrt(x); },
        [](T, T v) { return static_cast<T>(T(0.5) / v); });
}

template <typename T>
TensorT<T> reciprocal(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return T(1) / x; }, [](T, T v) { return -v * v; });
}

template <typename T>
TensorT<T> abs(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return std::abs(x); },
        [](T x, T) { return static_cast<T>(x > T(0) ? 1 : (x < T(0) ? -1 : 0)); });
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
    return pointwise_unary(
        a,
        [](T x) {
            if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
            const T e = std::exp(x);
            return e / (T(1) + e);
        },
        [](T, T v) { return v * (T(1) - v); });
}

template <typename T>
TensorT<T> softplus(const TensorT<T>& a) {
    return pointwise_unary(
        a,
        [](T x) { return x > T(30) ? x : std::log1p(std::exp(x)); },
        [](T x, T) {
            if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
            const T e = std::exp(x);
            return e / (T(1) + e);
        });
}

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& a, double slope) {
    return pointwise_unary(
        a,
        [slope](T x) { return x >= T(0) ? x : static_cast<T>(slope * x); },
        [slope](T x, T) { return x >= T(0) ? T(1) : static_cast<T>(slope); });
}

template <typename T>
TensorT<T> cos(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return std::cos(x); },
        [](T x, T) { return -std::sin(x); });
}

template <typename T>
TensorT<T> sin(const TensorT<T>& a) {
    return pointwise_unary(
        a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); });
}

template <typename T>
TensorT<T> wrap_angle(const TensorT<T>& a, double period) {
    return pointwise_unary(
        a,
        [period](T x) {
            T v = static_cast<T>(x - period * std::floor(x / period));
            if (v >= static_cast<T>(period)) v = T(0);  // fp edge at the seam
            return v;
        },
        [](T, T) { return T(1); });
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
    const auto av = a.data();
    T s = 0;
    for (T x : av) s += x;
    return make_op<T>({1}, {s}, {a}, [](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            const T go = out.grad[0];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
        });
    });
}

template <typename T>
TensorT<T> index(const TensorT<T>& a, int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= a.numel()) {
        throw DimensionError("index: out of range");
    }
    return make_op<T>({1}, {a.data()[static_cast<std::size_t>(i)]}, {a},
                      [i](Node<T>& out) {
                          into_parent(*out.parents[0], [&](std::vector<T>& g) {
                              g[static_cast<std::size_t>(i)] += out.grad[0];
                          });
                      });
}

template <typename T>
TensorT<T> scale_by(const TensorT<T>& a, const TensorT<T>& s) {
    if (s.numel() != 1) {
        throw DimensionError("scale_by: scale must be a 1-element tensor");
    }
    const auto av = a.data();
    const T sv = s.data()[0];
    std::vector<T> v(av.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * sv;
    return make_op<T>(a.shape(), std::move(v), {a, s}, [](Node<T>& out) {
        const auto& av = *out.parents[0]->value;
        const T sv = (*out.parents[1]->value)[0];
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * sv;
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            T acc = 0;
            for (std::size_t i = 0; i < av.size(); ++i) acc += out.grad[i] * av[i];
            g[0] += acc;
        });
    });
}

template <typename T>
TensorT<T> div_by(const TensorT<T>& a, const TensorT<T>& s) {
    return scale_by(a, reciprocal(s));
}

template <typename T>
TensorT<T> channel_mean(const TensorT<T>& x) {
    check_rank(x, 3, "channel_mean");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const auto xv = x.data();
    std::vector<T> v(static_cast<std::size_t>(c), T(0));
    for (std::size_t i = 0; i < xv.size(); ++i) v[i % c] += xv[i];
    const T inv = T(1) / static_cast<T>(h * w);
    for (T& m : v) m *= inv;
    return make_op<T>({c}, std::move(v), {x}, [inv, c](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += out.grad[i % c] * inv;
            }
        });
    });
}

template <typename T>
TensorT<T> add_channels(const TensorT<T>& x, const TensorT<T>& b) {
    check_rank(x, 3, "add_channels");
    check_rank(b, 1, "add_channels");
    const int c = x.dim(2);
    if (b.dim(0) != c) {
        throw DimensionError("add_channels: channel count mismatch");
    }
    const auto xv = x.data();
    const auto bv = b.data();
    std::vector<T> v(xv.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] + bv[i % c];
    return make_op<T>(x.shape(), std::move(v), {x, b}, [c](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < out.grad.size(); ++i) {
                g[i % c] += out.grad[i];
            }
        });
    });
}

template <typename T>
TensorT<T> mul_channels(const TensorT<T>& x, const TensorT<T>& s) {
    check_rank(x, 3, "mul_channels");
    check_rank(s, 1, "mul_channels");
    const int c = x.dim(2);
    if (s.dim(0) != c) {
        throw DimensionError("mul_channels: channel count mismatch");
    }
    const auto xv = x.data();
    const auto sv = s.data();
    std::vector<T> v(xv.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] * sv[i % c];
    return make_op<T>(x.shape(), std::move(v), {x, s}, [c](Node<T>& out) {
        const auto& xv = *out.parents[0]->value;
        const auto& sv = *out.parents[1]->value;
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += out.grad[i] * sv[i % c];
            }
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < out.grad.size(); ++i) {
                g[i % c] += out.grad[i] * xv[i];
            }
        });
    });
}

template <typename T>
TensorT<T> mul_map(const TensorT<T>& x, const TensorT<T>& map) {
    check_rank(x, 3, "mul_map");
    check_rank(map, 2, "mul_map");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (map.dim(0) != h || map.dim(1) != w) {
        throw DimensionError("mul_map: map size mismatch");
    }
    const auto xv = x.data();
    const auto mv = map.data();
    std::vector<T> v(xv.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] * mv[i / c];
    return make_op<T>(x.shape(), std::move(v), {x, map}, [c](Node<T>& out) {
        const auto& xv = *out.parents[0]->value;
        const auto& mv = *out.parents[1]->value;
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += out.grad[i] * mv[i / c];
            }
        });
        into_parent(*out.parents[1], [&](std::vector<T>& g) {
            for (std::size_t i = 0; i < out.grad.size(); ++i) {
                g[i / c] += out.grad[i] * xv[i];
            }
        });
    });
}

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    check_rank(a, 3, "concat_channels");
    check_rank(b, 3, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1)) {
        throw DimensionError("concat_channels: spatial size mismatch");
    }
    const int h = a.dim(0), w = a.dim(1), ca = a.dim(2), cb = b.dim(2);
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> v(static_cast<std::size_t>(h) * w * (ca + cb));
    for (int p = 0; p < h * w; ++p) {
        std::copy(av.begin() + static_cast<std::size_t>(p) * ca,
                  av.begin() + static_cast<std::size_t>(p + 1) * ca,
                  v.begin() + static_cast<std::size_t>(p) * (ca + cb));
        std::copy(bv.begin() + static_cast<std::size_t>(p) * cb,
                  bv.begin() + static_cast<std::size_t>(p + 1) * cb,
                  v.begin() + static_cast<std::size_t>(p) * (ca + cb) + ca);
    }
    return make_op<T>({h, w, ca + cb}, std::move(v), {a, b},
                      [h, w, ca, cb](Node<T>& out) {
                          into_parent(*out.parents[0], [&](std::vector<T>& g) {
                              for (int p = 0; p < h * w; ++p) {
                                  for (int ch = 0; ch < ca; ++ch) {
                                      g[static_cast<std::size_t>(p) * ca + ch] +=
                                          out.grad[static_cast<std::size_t>(p) * (ca + cb) + ch];
                                  }
                              }
                          });
                          into_parent(*out.parents[1], [&](std::vector<T>& g) {
                              for (int p = 0; p < h * w; ++p) {
                                  for (int ch = 0; ch < cb; ++ch) {
                                      g[static_cast<std::size_t>(p) * cb + ch] +=
                                          out.grad[static_cast<std::size_t>(p) * (ca + cb) + ca + ch];
                                  }
                              }
                          });
                      });
}

template <typename T>
TensorT<T> diff_x(const TensorT<T>& a) {
    int h, w, c;
    spatial_dims(a, "diff_x", &h, &w, &c);
    const auto av = a.data();
    std::vector<T> v(av.size(), T(0));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x + 1 < w; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                const std::size_t i = (static_cast<std::size_t>(y) * w + x) * c + ch;
                v[i] = av[i + c] - av[i];
            }
        }
    }
    return make_op<T>(a.shape(), std::move(v), {a}, [h, w, c](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x + 1 < w; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        const std::size_t i =
                            (static_cast<std::size_t>(y) * w + x) * c + ch;
                        g[i + c] += out.grad[i];
                        g[i] -= out.grad[i];
                    }
                }
            }
        });
    });
}

template <typename T>
TensorT<T> diff_y(const TensorT<T>& a) {
    int h, w, c;
    spatial_dims(a, "diff_y", &h, &w, &c);
    const auto av = a.data();
    std::vector<T> v(av.size(), T(0));
    const std::size_t row = static_cast<std::size_t>(w) * c;
    for (int y = 0; y + 1 < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                const std::size_t i = (static_cast<std::size_t>(y) * w + x) * c + ch;
                v[i] = av[i + row] - av[i];
            }
        }
    }
    return make_op<T>(a.shape(), std::move(v), {a}, [h, w, c, row](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (int y = 0; y + 1 < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        const std::size_t i =
                            (static_cast<std::size_t>(y) * w + x) * c + ch;
                        g[i + row] += out.grad[i];
                        g[i] -= out.grad[i];
                    }
                }
            }
        });
    });
}

template <typename T>
TensorT<T> downsample(const TensorT<T>& a, int s) {
    if (s < 1) throw DimensionError("downsample: scale must be >= 1");
    int h, w, c;
    spatial_dims(a, "downsample", &h, &w, &c);
    if (h % s != 0 || w % s != 0) {
        throw DimensionError("downsample: spatial dims " + shape_str(a.shape()) +
                             " not divisible by " + std::to_string(s));
    }
    const int ho = h / s, wo = w / s;
    const auto av = a.data();
    std::vector<T> v(static_cast<std::size_t>(ho) * wo * c);
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            const T* src = av.data() + (static_cast<std::size_t>(y) * s * w + x * s) * c;
            T* dst = v.data() + (static_cast<std::size_t>(y) * wo + x) * c;
            std::copy(src, src + c, dst);
        }
    }
    Shape out_shape = a.rank() == 2 ? Shape{ho, wo} : Shape{ho, wo, c};
    return make_op<T>(std::move(out_shape), std::move(v), {a},
                      [s, w, wo, ho, c](Node<T>& out) {
                          into_parent(*out.parents[0], [&](std::vector<T>& g) {
                              for (int y = 0; y < ho; ++y) {
                                  for (int x = 0; x < wo; ++x) {
                                      const T* src = out.grad.data() +
                                          (static_cast<std::size_t>(y) * wo + x) * c;
                                      T* dst = g.data() +
                                          (static_cast<std::size_t>(y) * s * w + x * s) * c;
                                      for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                                  }
                              }
                          });
                      });
}

template <typename T>
TensorT<T> avg_pool2(const TensorT<T>& a) {
    check_rank(a, 3, "avg_pool2");
    const int h = a.dim(0), w = a.dim(1), c = a.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw DimensionError("avg_pool2: spatial dims must be even");
    }
    const int ho = h / 2, wo = w / 2;
    const auto av = a.data();
    std::vector<T> v(static_cast<std::size_t>(ho) * wo * c);
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            for (int ch = 0; ch < c; ++ch) {
                const auto at = [&](int yy, int xx) {
                    return av[(static_cast<std::size_t>(yy) * w + xx) * c + ch];
                };
                v[(static_cast<std::size_t>(y) * wo + x) * c + ch] =
                    (at(2 * y, 2 * x) + at(2 * y, 2 * x + 1) + at(2 * y + 1, 2 * x) +
                     at(2 * y + 1, 2 * x + 1)) * T(0.25);
            }
        }
    }
    return make_op<T>({ho, wo, c}, std::move(v), {a}, [w, wo, ho, c](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (int y = 0; y < ho; ++y) {
                for (int x = 0; x < wo; ++x) {
                    for (int ch = 0; ch < c; ++ch) {
                        const T go =
                            out.grad[(static_cast<std::size_t>(y) * wo + x) * c + ch] *
                            T(0.25);
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                g[(static_cast<std::size_t>(2 * y + dy) * w + 2 * x + dx) *
                                      c + ch] += go;
                            }
                        }
                    }
                }
            }
        });
    });
}

template <typename T>
TensorT<T> upsample_nearest2(const TensorT<T>& a) {
    check_rank(a, 3, "upsample_nearest2");
    const int h = a.dim(0), w = a.dim(1), c = a.dim(2);
    const int ho = h * 2, wo = w * 2;
    const auto av = a.data();
    std::vector<T> v(static_cast<std::size_t>(ho) * wo * c);
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            const T* src = av.data() + (static_cast<std::size_t>(y / 2) * w + x / 2) * c;
            T* dst = v.data() + (static_cast<std::size_t>(y) * wo + x) * c;
            std::copy(src, src + c, dst);
        }
    }
    return make_op<T>({ho, wo, c}, std::move(v), {a}, [w, wo, ho, c](Node<T>& out) {
        into_parent(*out.parents[0], [&](std::vector<T>& g) {
            for (int y = 0; y < ho; ++y) {
                for (int x = 0; x < wo; ++x) {
                    const T* src =
                        out.grad.data() + (static_cast<std::size_t>(y) * wo + x) * c;
                    T* dst = g.data() + (static_cast<std::size_t>(y / 2) * w + x / 2) * c;
                    for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                }
            }
        });
    });
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernel, Padding padding) {
    check_rank(input, 3, "conv2d");
    check_rank(kernel, 4, "conv2d");
    const int h = input.dim(0), w = input.dim(1), ci = input.dim(2);
    const int kh = kernel.dim(0), kw = kernel.dim(1);
    const int co = kernel.dim(3);
    if (kernel.dim(2) != ci) {
        throw DimensionError("conv2d: kernel input channels " +
                             std::to_string(kernel.dim(2)) + " != input channels " +
                             std::to_string(ci));
    }
    if (kh % 2 == 0 || kw % 2 == 0) {
        throw DimensionError("conv2d: kernel dims must be odd");
    }
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const int wp = w + 2 * pw;
    const auto xp = pad_spatial(input.data().data(), h, w, ci, ph, pw, padding);
    const auto kv = kernel.data();

    std::vector<T> v(static_cast<std::size_t>(h) * w * co, T(0));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::vector<T> acc(static_cast<std::size_t>(co));
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), T(0));
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    const T* px =
                        xp.data() + (static_cast<std::size_t>(y + ky) * wp + x + kx) * ci;
                    const T* kr =
                        kv.data() + (static_cast<std::size_t>(ky) * kw + kx) * ci * co;
                    for (int cc = 0; cc < ci; ++cc) {
                        const T s = px[cc];
                        const T* kp = kr + static_cast<std::size_t>(cc) * co;
                        for (int oc = 0; oc < co; ++oc) acc[oc] += s * kp[oc];
                    }
                }
            }
            T* dst = v.data() + (static_cast<std::size_t>(y) * w + x) * co;
            std::copy(acc.begin(), acc.end(), dst);
        }
    }

    return make_op<T>(
        {h, w, co}, std::move(v), {input, kernel},
        [h, w, ci, kh, kw, co, ph, pw, wp, padding](Node<T>& out) {
            auto& in = *out.parents[0];
            auto& ker = *out.parents[1];
            const auto& g = out.grad;
            const int hp = h + 2 * ph;

            if (in.requires_grad) {
                in.ensure_grad();
                std::vector<T> gpad(static_cast<std::size_t>(hp) * wp * ci, T(0));
                const auto& kv = *ker.value;
#pragma omp parallel for schedule(static)
                for (int py = 0; py < hp; ++py) {
                    for (int px = 0; px < wp; ++px) {
                        T* gp = gpad.data() + (static_cast<std::size_t>(py) * wp + px) * ci;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int y = py - ky;
                            if (y < 0 || y >= h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int x = px - kx;
                                if (x < 0 || x >= w) continue;
                                const T* go =
                                    g.data() + (static_cast<std::size_t>(y) * w + x) * co;
                                const T* kr = kv.data() +
                                    (static_cast<std::size_t>(ky) * kw + kx) * ci * co;
                                for (int cc = 0; cc < ci; ++cc) {
                                    const T* kp = kr + static_cast<std::size_t>(cc) * co;
                                    T s = 0;
                                    for (int oc = 0; oc < co; ++oc) s += go[oc] * kp[oc];
                                    gp[cc] += s;
                                }
                            }
                        }
                    }
                }
                fold_padded_grad(gpad, h, w, ci, ph, pw, padding, in.grad);
            }

            if (ker.requires_grad) {
                ker.ensure_grad();
                const auto xp =
                    pad_spatial(in.value->data(), h, w, ci, ph, pw, padding);
#pragma omp parallel for schedule(static) collapse(2)
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        T* gk = ker.grad.data() +
                            (static_cast<std::size_t>(ky) * kw + kx) * ci * co;
                        for (int y = 0; y < h; ++y) {
                            for (int x = 0; x < w; ++x) {
                                const T* px = xp.data() +
                                    (static_cast<std::size_t>(y + ky) * wp + x + kx) * ci;
                                const T* go =
                                    g.data() + (static_cast<std::size_t>(y) * w + x) * co;
                                for (int cc = 0; cc < ci; ++cc) {
                                    const T s = px[cc];
                                    T* gp = gk + static_cast<std::size_t>(cc) * co;
                                    for (int oc = 0; oc < co; ++oc) gp[oc] += s * go[oc];
                                }
                            }
                        }
                    }
                }
            }
        });
}

template <typename T>
TensorT<T> conv2d_shared(const TensorT<T>& input, const TensorT<T>& kernel,
                         Padding padding) {
    check_rank(kernel, 2, "conv2d_shared");
    int h, w, c;
    spatial_dims(input, "conv2d_shared", &h, &w, &c);
    const int kh = kernel.dim(0), kw = kernel.dim(1);
    if (kh % 2 == 0 || kw % 2 == 0) {
        throw DimensionError("conv2d_shared: kernel dims must be odd");
    }
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const int wp = w + 2 * pw;
    const auto xp = pad_spatial(input.data().data(), h, w, c, ph, pw, padding);
    const auto kv = kernel.data();

    std::vector<T> v(input.numel(), T(0));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            T* dst = v.data() + (static_cast<std::size_t>(y) * w + x) * c;
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    const T kval = kv[static_cast<std::size_t>(ky) * kw + kx];
                    const T* px =
                        xp.data() + (static_cast<std::size_t>(y + ky) * wp + x + kx) * c;
                    for (int ch = 0; ch < c; ++ch) dst[ch] += kval * px[ch];
                }
            }
        }
    }

    return make_op<T>(
        input.shape(), std::move(v), {input, kernel},
        [h, w, c, kh, kw, ph, pw, wp, padding](Node<T>& out) {
            auto& in = *out.parents[0];
            auto& ker = *out.parents[1];
            const auto& g = out.grad;
            const int hp = h + 2 * ph;

            if (in.requires_grad) {
                in.ensure_grad();
                const auto& kv = *ker.value;
                std::vector<T> gpad(static_cast<std::size_t>(hp) * wp * c, T(0));
#pragma omp parallel for schedule(static)
                for (int py = 0; py < hp; ++py) {
                    for (int px = 0; px < wp; ++px) {
                        T* gp = gpad.data() + (static_cast<std::size_t>(py) * wp + px) * c;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int y = py - ky;
                            if (y < 0 || y >= h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int x = px - kx;
                                if (x < 0 || x >= w) continue;
                                const T kval = kv[static_cast<std::size_t>(ky) * kw + kx];
                                const T* go =
                                    g.data() + (static_cast<std::size_t>(y) * w + x) * c;
                                for (int ch = 0; ch < c; ++ch) gp[ch] += kval * go[ch];
                            }
                        }
                    }
                }
                fold_padded_grad(gpad, h, w, c, ph, pw, padding, in.grad);
            }

            if (ker.requires_grad) {
                ker.ensure_grad();
                const auto xp = pad_spatial(in.value->data(), h, w, c, ph, pw, padding);
#pragma omp parallel for schedule(static) collapse(2)
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        T acc = 0;
                        for (int y = 0; y < h; ++y) {
                            for (int x = 0; x < w; ++x) {
                                const T* px = xp.data() +
                                    (static_cast<std::size_t>(y + ky) * wp + x + kx) * c;
                                const T* go =
                                    g.data() + (static_cast<std::size_t>(y) * w + x) * c;
                                for (int ch = 0; ch < c; ++ch) acc += px[ch] * go[ch];
                            }
                        }
                        ker.grad[static_cast<std::size_t>(ky) * kw + kx] += acc;
                    }
                }
            }
        });
}

template <typename T>
TensorT<T> instance_norm(const TensorT<T>& x, const TensorT<T>& gamma,
                         const TensorT<T>& beta, double eps) {
    check_rank(x, 3, "instance_norm");
    if (eps <= 0) throw ContractError("instance_norm: eps must be positive");
    auto m = channel_mean(x);
    auto centered = add_channels(x, neg(m));
    auto var = channel_mean(mul(centered, centered));
    auto inv_std = reciprocal(sqrt(add_scalar(var, eps)));
    auto normalized = mul_channels(centered, inv_std);
    return add_channels(mul_channels(normalized, gamma), beta);
}

#define SVSR_INSTANTIATE_OPS(T)                                                        \
    template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);                     \
    template TensorT<T> sub(const TensorT<T>&, const TensorT<T>&);                     \
    template TensorT<T> mul(const TensorT<T>&, const TensorT<T>&);                     \
    template TensorT<T> add_scalar(const TensorT<T>&, double);                         \
    template TensorT<T> mul_scalar(const TensorT<T>&, double);                         \
    template TensorT<T> neg(const TensorT<T>&);                                        \
    template TensorT<T> exp(const TensorT<T>&);                                        \
    template TensorT<T> sqrt(const TensorT<T>&);                                       \
    template TensorT<T> reciprocal(const TensorT<T>&);                                 \
    template TensorT<T> abs(const TensorT<T>&);                                        \
    template TensorT<T> sigmoid(const TensorT<T>&);                                    \
    template TensorT<T> softplus(const TensorT<T>&);                                   \
    template TensorT<T> leaky_relu(const TensorT<T>&, double);                         \
    template TensorT<T> cos(const TensorT<T>&);                                        \
    template TensorT<T> sin(const TensorT<T>&);                                        \
    template TensorT<T> wrap_angle(const TensorT<T>&, double);                         \
    template TensorT<T> sum(const TensorT<T>&);                                        \
    template TensorT<T> index(const TensorT<T>&, int);                                 \
    template TensorT<T> scale_by(const TensorT<T>&, const TensorT<T>&);                \
    template TensorT<T> div_by(const TensorT<T>&, const TensorT<T>&);                  \
    template TensorT<T> channel_mean(const TensorT<T>&);                               \
    template TensorT<T> add_channels(const TensorT<T>&, const TensorT<T>&);            \
    template TensorT<T> mul_channels(const TensorT<T>&, const TensorT<T>&);            \
    template TensorT<T> mul_map(const TensorT<T>&, const TensorT<T>&);                 \
    template TensorT<T> concat_channels(const TensorT<T>&, const TensorT<T>&);         \
    template TensorT<T> diff_x(const TensorT<T>&);                                     \
    template TensorT<T> diff_y(const TensorT<T>&);                                     \
    template TensorT<T> downsample(const TensorT<T>&, int);                            \
    template TensorT<T> avg_pool2(const TensorT<T>&);                                  \
    template TensorT<T> upsample_nearest2(const TensorT<T>&);                          \
    template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&, Padding);         \
    template TensorT<T> conv2d_shared(const TensorT<T>&, const TensorT<T>&, Padding);  \
    template TensorT<T> instance_norm(const TensorT<T>&, const TensorT<T>&,            \
                                      const TensorT<T>&, double);

SVSR_INSTANTIATE_OPS(double)
SVSR_INSTANTIATE_OPS(float)

#undef SVSR_INSTANTIATE_OPS

}  // namespace svsr
