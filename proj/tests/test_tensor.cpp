#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "svsr/fft.hpp"
#include "svsr/ops.hpp"
#include "svsr/rng.hpp"
#include "svsr/tensor.hpp"

using namespace svsr;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false) {
    auto t = Tensor::zeros(std::move(shape), requires_grad);
    oracle::fill_uniform(t, rng, lo, hi);
    return t;
}

}  // namespace

TEST_CASE("tensor invariants") {
    auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at(1, 2) == 6.0);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), DimensionError);

    auto c = t.clone();
    c.data()[0] = 99.0;
    CHECK(t.at(0, 0) == 1.0);

    auto d = t.detach();
    CHECK(d.data().data() == t.data().data());  // shared storage
    CHECK_FALSE(d.requires_grad());
}

TEST_CASE("backward basics") {
    SUBCASE("loss = sum(x) gives all-ones gradient") {
        auto x = Tensor::full({3, 4}, 2.5, true);
        sum(x).backward();
        for (double g : x.grad()) CHECK(g == 1.0);
    }
    SUBCASE("loss = |x|^2 gives 2x") {
        Rng rng(7);
        auto x = random_tensor({4, 4}, rng, -2.0, 2.0, true);
        sum(mul(x, x)).backward();
        for (std::size_t i = 0; i < x.numel(); ++i) {
            CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-12));
        }
    }
    SUBCASE("non-scalar loss is rejected") {
        auto x = Tensor::full({2, 2}, 1.0, true);
        CHECK_THROWS_AS(mul(x, x).backward(), ContractError);
    }
    SUBCASE("repeated backward without reset accumulates on leaves") {
        auto x = Tensor::full({2}, 3.0, true);
        auto loss = sum(mul(x, x));
        loss.backward();
        loss.backward();
        CHECK(x.grad()[0] == doctest::Approx(12.0));  // 2 * (2x)
    }
    SUBCASE("diamond graph accumulates once per path") {
        auto x = Tensor::full({1}, 2.0, true);
        auto y = add(mul(x, x), mul(x, x));  // 2x^2, dy/dx = 4x
        y.backward();
        CHECK(x.grad()[0] == doctest::Approx(8.0));
    }
}

TEST_CASE("backward determinism: identical graphs yield bit-identical grads") {
    auto run = [](std::vector<double>* grads) {
        Rng rng(123);
        auto x = Tensor::zeros({6, 6, 2}, true);
        oracle::fill_uniform(x, rng, -1.0, 1.0);
        auto k = Tensor::zeros({3, 3, 2, 3}, true);
        oracle::fill_uniform(k, rng, -1.0, 1.0);
        auto y = conv2d(x, k);
        sum(mul(y, y)).backward();
        grads->assign(x.grad().begin(), x.grad().end());
        grads->insert(grads->end(), k.grad().begin(), k.grad().end());
    };
    std::vector<double> a, b;
    run(&a);
    run(&b);
    CHECK(a == b);
}

TEST_CASE("conv2d") {
    SUBCASE("1x1 identity kernel preserves input") {
        Rng rng(1);
        auto x = random_tensor({5, 7, 1}, rng);
        auto k = Tensor::from_data({1, 1, 1, 1}, {1.0});
        auto y = conv2d(x, k);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            CHECK(y.data()[i] == x.data()[i]);
        }
    }
    SUBCASE("sum-one kernel preserves a constant image") {
        auto x = Tensor::full({6, 6, 1}, 0.5);
        auto k = Tensor::full({3, 3, 1, 1}, 1.0 / 9.0);
        auto y = conv2d(x, k, Padding::kReplicate);
        for (double v : y.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("matches the nested-loop oracle") {
        Rng rng(42);
        for (auto pad : {Padding::kReplicate, Padding::kZero}) {
            auto x = random_tensor({5, 5, 2}, rng);
            auto k = random_tensor({3, 3, 2, 3}, rng);
            auto y = conv2d(x, k, pad);
            auto ref = oracle::conv2d_ref(
                {x.data().begin(), x.data().end()}, 5, 5, 2,
                {k.data().begin(), k.data().end()}, 3, 3, 3,
                pad == Padding::kZero ? oracle::Pad::kZero : oracle::Pad::kReplicate);
            for (std::size_t i = 0; i < ref.size(); ++i) {
                CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            }
        }
    }
    SUBCASE("channel mismatch raises a dimension error") {
        auto x = Tensor::zeros({4, 4, 2});
        auto k = Tensor::zeros({3, 3, 3, 1});
        CHECK_THROWS_AS(conv2d(x, k), DimensionError);
    }
    SUBCASE("even kernel raises a dimension error") {
        auto x = Tensor::zeros({4, 4, 1});
        auto k = Tensor::zeros({2, 2, 1, 1});
        CHECK_THROWS_AS(conv2d(x, k), DimensionError);
    }
}

TEST_CASE("conv2d_shared matches per-channel oracle") {
    Rng rng(5);
    auto x = random_tensor({6, 5, 3}, rng);
    auto k = random_tensor({5, 3}, rng);
    for (auto pad : {Padding::kReplicate, Padding::kZero}) {
        auto y = conv2d_shared(x, k, pad);
        auto ref = oracle::conv2d_shared_ref(
            {x.data().begin(), x.data().end()}, 6, 5, 3,
            {k.data().begin(), k.data().end()}, 5, 3,
            pad == Padding::kZero ? oracle::Pad::kZero : oracle::Pad::kReplicate);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("downsample") {
    SUBCASE("s=1 is the identity") {
        Rng rng(3);
        auto x = random_tensor({3, 3}, rng);
        auto y = downsample(x, 1);
        for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
    }
    SUBCASE("4x4 ramp keeps every second pixel from offset 0") {
        std::vector<double> ramp(16);
        for (int i = 0; i < 16; ++i) ramp[static_cast<std::size_t>(i)] = i;
        auto x = Tensor::from_data({4, 4}, ramp);
        auto y = downsample(x, 2);
        CHECK(y.shape() == Shape{2, 2});
        CHECK(y.at(0, 0) == 0.0);
        CHECK(y.at(0, 1) == 2.0);
        CHECK(y.at(1, 0) == 8.0);
        CHECK(y.at(1, 1) == 10.0);
    }
    SUBCASE("gradient is a keep-mask") {
        auto x = Tensor::zeros({4, 4}, true);
        sum(downsample(x, 2)).backward();
        for (int y = 0; y < 4; ++y) {
            for (int xx = 0; xx < 4; ++xx) {
                const double expected = (y % 2 == 0 && xx % 2 == 0) ? 1.0 : 0.0;
                CHECK(x.grad()[static_cast<std::size_t>(y) * 4 + xx] == expected);
            }
        }
    }
    SUBCASE("non-divisible dims raise a dimension error") {
        CHECK_THROWS_AS(downsample(Tensor::zeros({5, 4}), 2), DimensionError);
    }
}

TEST_CASE("fft2") {
    SUBCASE("delta image has flat spectrum of magnitude 1/sqrt(HW)") {
        auto x = Tensor::zeros({4, 8});
        x.data()[0] = 1.0;
        auto f = fft2(x);
        const double expected = 1.0 / std::sqrt(32.0);
        for (std::size_t i = 0; i < f.re.numel(); ++i) {
            const double mag = std::hypot(f.re.data()[i], f.im.data()[i]);
            CHECK(mag == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("Parseval holds exactly under orthonormal scaling") {
        Rng rng(11);
        auto x = random_tensor({7, 5}, rng);  // non power of two on purpose
        auto f = fft2(x);
        double spatial = 0.0, freq = 0.0;
        for (double v : x.data()) spatial += v * v;
        for (std::size_t i = 0; i < f.re.numel(); ++i) {
            freq += f.re.data()[i] * f.re.data()[i] + f.im.data()[i] * f.im.data()[i];
        }
        CHECK(freq == doctest::Approx(spatial).epsilon(1e-12));
    }
    SUBCASE("matches the direct DFT oracle on a random 8x8 input") {
        Rng rng(21);
        auto x = random_tensor({8, 8}, rng);
        auto f = fft2(x);
        std::vector<double> re, im;
        oracle::dft2_ref({x.data().begin(), x.data().end()}, 8, 8, re, im);
        for (std::size_t i = 0; i < re.size(); ++i) {
            CHECK(f.re.data()[i] == doctest::Approx(re[i]).epsilon(1e-10));
            CHECK(f.im.data()[i] == doctest::Approx(im[i]).epsilon(1e-10));
        }
    }
    SUBCASE("round trip within 1e-10") {
        Rng rng(31);
        auto x = random_tensor({6, 9}, rng);
        auto back = ifft2_real(fft2(x));
        for (std::size_t i = 0; i < x.numel(); ++i) {
            CHECK(back.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-10));
        }
    }
    SUBCASE("linearity within 1e-10") {
        Rng rng(41);
        auto x = random_tensor({5, 5}, rng);
        auto y = random_tensor({5, 5}, rng);
        const double a = 1.7, b = -0.4;
        auto lhs = fft2(add(mul_scalar(x, a), mul_scalar(y, b)));
        auto fx = fft2(x);
        auto fy = fft2(y);
        for (std::size_t i = 0; i < lhs.re.numel(); ++i) {
            CHECK(lhs.re.data()[i] ==
                  doctest::Approx(a * fx.re.data()[i] + b * fy.re.data()[i]).epsilon(1e-10));
            CHECK(lhs.im.data()[i] ==
                  doctest::Approx(a * fx.im.data()[i] + b * fy.im.data()[i]).epsilon(1e-10));
        }
    }
    SUBCASE("rank-3 input transforms channels independently") {
        Rng rng(51);
        auto x = random_tensor({4, 6, 2}, rng);
        auto f = fft2(x);
        CHECK(f.re.shape() == x.shape());
        CHECK(f.im.shape() == x.shape());
        for (int ch = 0; ch < 2; ++ch) {
            std::vector<double> plane(24);
            for (int i = 0; i < 24; ++i) {
                plane[static_cast<std::size_t>(i)] =
                    x.data()[static_cast<std::size_t>(i) * 2 + ch];
            }
            std::vector<double> re, im;
            oracle::dft2_ref(plane, 4, 6, re, im);
            for (int i = 0; i < 24; ++i) {
                CHECK(f.re.data()[static_cast<std::size_t>(i) * 2 + ch] ==
                      doctest::Approx(re[static_cast<std::size_t>(i)]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("instance_norm") {
    SUBCASE("constant channel maps to zero before affine") {
        auto gamma = Tensor::full({2}, 1.0);
        auto beta = Tensor::zeros({2});
        auto y = instance_norm(Tensor::full({4, 4, 2}, 0.5), gamma, beta);
        for (double v : y.data()) CHECK(v == 0.0);
        // Non-representable constants leave only rounding residue; eps keeps
        // the zero-variance division finite.
        auto y2 = instance_norm(Tensor::full({4, 4, 2}, 0.7), gamma, beta);
        for (double v : y2.data()) {
            CHECK(std::isfinite(v));
            CHECK(std::abs(v) < 1e-9);
        }
    }
    SUBCASE("two-value channel normalizes to +-1 up to eps") {
        auto x = Tensor::zeros({1, 2, 1});
        x.data()[0] = 0.0;
        x.data()[1] = 2.0;
        auto y = instance_norm(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), 1e-10);
        CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(y.data()[1] == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("gradient matches finite differences on 4x4x2") {
        Rng rng(61);
        auto x = random_tensor({4, 4, 2}, rng, -1.0, 1.0, true);
        auto gamma = random_tensor({2}, rng, 0.5, 1.5, true);
        auto beta = random_tensor({2}, rng, -0.5, 0.5, true);
        auto f = [&]() {
            auto y = instance_norm(x, gamma, beta);
            return sum(mul(y, y));
        };
        CHECK(oracle::max_grad_rel_err(f, {x, gamma, beta}) < 1e-6);
    }
}

// Spec-level property: every differentiable op passes a finite-difference
// check on randomized small tensors across at least 20 seeds.
TEST_CASE("gradcheck sweep over all differentiable ops") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 1000);
        auto x = random_tensor({4, 4, 2}, rng, -1.5, 1.5, true);
        auto y = random_tensor({4, 4, 2}, rng, -1.5, 1.5, true);
        auto v = random_tensor({2}, rng, 0.5, 1.5, true);
        auto s = random_tensor({1}, rng, 0.5, 2.0, true);
        auto m = random_tensor({4, 4}, rng, -1.0, 1.0, true);
        auto pos = random_tensor({4, 4, 2}, rng, 0.5, 2.0, true);
        auto k4 = random_tensor({3, 3, 2, 2}, rng, -1.0, 1.0, true);
        auto k2 = random_tensor({3, 3}, rng, -1.0, 1.0, true);

        const double tol = 1e-4;
        auto sq = [](const Tensor& t) { return sum(mul(t, t)); };

        CHECK(oracle::max_grad_rel_err([&] { return sq(add(x, y)); }, {x, y}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(sub(x, y)); }, {x, y}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(mul(x, y)); }, {x, y}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(add_scalar(x, 0.3)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(mul_scalar(x, -1.7)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(exp(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(sqrt(pos)); }, {pos}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(reciprocal(pos)); }, {pos}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(sigmoid(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(softplus(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(leaky_relu(x, 0.2)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(cos(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(sin(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(abs(add_scalar(x, 3.0))); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return index(x, 5); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(scale_by(x, s)); }, {x, s}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(div_by(x, s)); }, {x, s}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(channel_mean(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(add_channels(x, v)); }, {x, v}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(mul_channels(x, v)); }, {x, v}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(mul_map(x, m)); }, {x, m}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(concat_channels(x, y)); }, {x, y}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(diff_x(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(diff_y(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(downsample(x, 2)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(avg_pool2(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(upsample_nearest2(x)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] { return sq(wrap_angle(x, 3.0)); }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err(
                  [&] { return sq(conv2d(x, k4, Padding::kReplicate)); }, {x, k4}) < tol);
        CHECK(oracle::max_grad_rel_err(
                  [&] { return sq(conv2d(x, k4, Padding::kZero)); }, {x, k4}) < tol);
        CHECK(oracle::max_grad_rel_err(
                  [&] { return sq(conv2d_shared(x, k2, Padding::kReplicate)); }, {x, k2}) < tol);
        CHECK(oracle::max_grad_rel_err([&] {
                  auto f = fft2(x);
                  return add(sq(f.re), sq(f.im));
              }, {x}) < tol);
        CHECK(oracle::max_grad_rel_err([&] {
                  ComplexTensor ct{x, y};
                  return sq(ifft2_real(ct));
              }, {x, y}) < tol);
    }
}

TEST_CASE("float tensors are usable as the optimization dtype") {
    auto x = TensorF::full({2, 2}, 2.0f, true);
    auto loss = svsr::sum(svsr::mul(x, x));
    loss.backward();
    CHECK(loss.item() == doctest::Approx(16.0f));
    CHECK(x.grad()[0] == doctest::Approx(4.0f));

    auto xf = TensorF::full({4, 4, 1}, 0.25f);
    auto kf = TensorF::full({3, 3, 1, 1}, 1.0f / 9.0f);
    auto y = svsr::conv2d(xf, kf);
    CHECK(y.shape() == Shape{4, 4, 1});
    CHECK(y.data()[5] == doctest::Approx(0.25f));
}
