#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vitalrr/dsc.hpp"
#include "vitalrr/gradcheck.hpp"

using namespace vitalrr;
using testing::fill_normal;

namespace {

// Direct-loop convolution used as the oracle.
template <typename T>
Tensor<T> naive_conv(const Tensor<T>& x, const ConvSpec<T>& s) {
  Tensor<T> y(x.n(), s.out_ch, s.out_h(x.h()), s.out_w(x.w()));
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < s.out_ch; ++o)
      for (int oy = 0; oy < y.h(); ++oy)
        for (int ox = 0; ox < y.w(); ++ox) {
          double acc = s.bias[o];
          for (int i = 0; i < s.in_ch; ++i)
            for (int ky = 0; ky < s.kh; ++ky)
              for (int kx = 0; kx < s.kw; ++kx) {
                const int iy = oy * s.stride + ky - s.pad_h, ix = ox * s.stride + kx - s.pad_w;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                acc += static_cast<double>(s.w(o, i, ky, kx)) * x(n, i, iy, ix);
              }
          y(n, o, oy, ox) = static_cast<T>(acc);
        }
  return y;
}

double naive_bilinear(const Tensor<double>& x, int n, int c, double py, double px) {
  double acc = 0.0;
  const int y0 = static_cast<int>(std::floor(py)), x0 = static_cast<int>(std::floor(px));
  for (int dy = 0; dy < 2; ++dy)
    for (int dx = 0; dx < 2; ++dx) {
      const int yy = y0 + dy, xx = x0 + dx;
      if (yy < 0 || yy >= x.h() || xx < 0 || xx >= x.w()) continue;
      const double wy = 1.0 - std::abs(py - yy), wx = 1.0 - std::abs(px - xx);
      acc += wy * wx * x(n, c, yy, xx);
    }
  return acc;
}

// Snake convolution written out from its definition.
Tensor<double> naive_dsc(const Tensor<double>& x, const DscSpec<double>& s) {
  Tensor<double> delta = naive_conv(x, s.offset);
  for (double& v : delta.values()) v = std::tanh(v);
  Tensor<double> y(x.n(), s.main.out_ch, x.h(), x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < s.main.out_ch; ++o)
      for (int py = 0; py < x.h(); ++py)
        for (int px = 0; px < x.w(); ++px) {
          double acc = s.main.bias[o];
          for (int k = 0; k < kSnakeLength; ++k) {
            const int c = k - kSnakeCenter;
            double shift = 0.0;
            if (c > 0)
              for (int j = kSnakeCenter + 1; j <= k; ++j) shift += delta(n, j, py, px);
            if (c < 0)
              for (int j = k; j < kSnakeCenter; ++j) shift += delta(n, j, py, px);
            const bool h = s.axis == SnakeAxis::Horizontal;
            const double sy = h ? py + shift : py + c, sx = h ? px + c : px + shift;
            for (int i = 0; i < s.main.in_ch; ++i) acc += s.w(o, i, k) * naive_bilinear(x, n, i, sy, sx);
          }
          y(n, o, py, px) = acc;
        }
  return y;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

}  // namespace

TEST_SUITE("dsc") {

TEST_CASE("conv2d matches the direct-loop oracle") {
  std::mt19937_64 rng(1);
  for (auto [kh, kw, ph, pw, st] : {std::array{3, 3, 1, 1, 1}, std::array{1, 9, 0, 4, 1},
                                    std::array{9, 1, 4, 0, 1}, std::array{3, 3, 0, 0, 2},
                                    std::array{1, 1, 0, 0, 1}}) {
    ConvSpec<double> s(3, 4, kh, kw, ph, pw, st);
    fill_normal(s.weight, rng);
    fill_normal(s.bias, rng);
    Tensor<double> x(2, 3, 11, 13);
    fill_normal(x, rng);
    const auto got = conv2d_forward(x, s), want = naive_conv(x, s);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
  }
  ConvSpec<double> s(2, 1, 3, 3, 1, 1);
  CHECK_THROWS_AS(conv2d_forward(Tensor<double>(1, 3, 4, 4), s), ShapeError);
}

TEST_CASE("conv2d gradients match finite differences") {
  std::mt19937_64 rng(2);
  ConvSpec<double> s(2, 3, 3, 3, 1, 1);
  fill_normal(s.weight, rng);
  fill_normal(s.bias, rng);
  Tensor<double> x(2, 2, 6, 7), r(2, 3, 6, 7);
  fill_normal(x, rng);
  fill_normal(r, rng);
  const auto g = conv2d_backward(x, s, r);
  auto fx = [&](std::span<const double> p) {
    Tensor<double> xx = x;
    std::copy(p.begin(), p.end(), xx.values().begin());
    return dot(conv2d_forward(xx, s), r);
  };
  auto fw = [&](std::span<const double> p) {
    auto ss = s;
    std::copy(p.begin(), p.end(), ss.weight.begin());
    return dot(conv2d_forward(x, ss), r);
  };
  auto fb = [&](std::span<const double> p) {
    auto ss = s;
    std::copy(p.begin(), p.end(), ss.bias.begin());
    return dot(conv2d_forward(x, ss), r);
  };
  CHECK(grad_check("x", fx, x.values(), g.grad_x.values()).max_rel_error < 1e-6);
  CHECK(grad_check("w", fw, s.weight, g.grad_w).max_rel_error < 1e-6);
  CHECK(grad_check("b", fb, s.bias, g.grad_b).max_rel_error < 1e-6);
}

TEST_CASE("activation and pooling backward passes are adjoint") {
  std::mt19937_64 rng(3);
  Tensor<double> x(2, 3, 8, 5);
  fill_normal(x, rng);
  Tensor<double> gp(2, 3, 4, 5), gm(2, 3, 1, 5);
  fill_normal(gp, rng);
  fill_normal(gm, rng);
  CHECK(dot(pool_freq2_forward(x), gp) == doctest::Approx(dot(x, pool_freq2_backward(x, gp))));
  CHECK(dot(freq_mean_forward(x), gm) == doctest::Approx(dot(x, freq_mean_backward(x, gm))));
  Tensor<double> gs(2, 3, 8, 5);
  fill_normal(gs, rng);
  auto f = [&](std::span<const double> p) {
    Tensor<double> xx = x;
    std::copy(p.begin(), p.end(), xx.values().begin());
    return dot(silu_forward(xx), gs);
  };
  CHECK(grad_check("silu", f, x.values(), silu_backward(x, gs).values()).max_rel_error < 1e-6);
}

TEST_CASE("bilinear sampling values and zero padding") {
  Tensor<double> x(1, 1, 3, 4);
  for (int i = 0; i < 12; ++i) x.values()[i] = i;
  const std::vector<Coord<double>> pts = {{1, 2}, {0.5, 0.5}, {2.0, 3.5}, {-1.0, 0.0}, {1.25, -0.5}, {7, 7}};
  const auto v = bilinear_sample(x, std::span<const Coord<double>>(pts));
  CHECK(v(0, 0, 0, 0) == 6.0);
  CHECK(v(0, 0, 0, 1) == doctest::Approx(2.5));
  CHECK(v(0, 0, 0, 2) == doctest::Approx(0.5 * 11));
  CHECK(v(0, 0, 0, 3) == 0.0);
  CHECK(v(0, 0, 0, 4) == doctest::Approx(0.5 * (0.75 * 4 + 0.25 * 8)));
  CHECK(v(0, 0, 0, 5) == 0.0);
}

TEST_CASE("bilinear sampling gradients match finite differences") {
  std::mt19937_64 rng(4);
  Tensor<double> x(2, 3, 5, 6);
  fill_normal(x, rng);
  std::uniform_real_distribution<double> u(-1.3, 6.3);
  std::vector<Coord<double>> pts(40);
  for (auto& p : pts) p = {u(rng), u(rng)};
  Tensor<double> r(2, 3, 1, 40);
  fill_normal(r, rng);
  const auto g = bilinear_sample_backward(x, std::span<const Coord<double>>(pts), r);
  auto fx = [&](std::span<const double> p) {
    Tensor<double> xx = x;
    std::copy(p.begin(), p.end(), xx.values().begin());
    return dot(bilinear_sample(xx, std::span<const Coord<double>>(pts)), r);
  };
  CHECK(grad_check("x", fx, x.values(), g.grad_x.values()).max_rel_error < 1e-6);
  std::vector<double> flat, gflat;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    flat.insert(flat.end(), {pts[i].y, pts[i].x});
    gflat.insert(gflat.end(), {g.grad_coords[i].y, g.grad_coords[i].x});
  }
  auto fc = [&](std::span<const double> p) {
    std::vector<Coord<double>> q(pts.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = {p[2 * i], p[2 * i + 1]};
    return dot(bilinear_sample(x, std::span<const Coord<double>>(q)), r);
  };
  CHECK(grad_check("coords", fc, flat, gflat).max_rel_error < 1e-6);
}

TEST_CASE("snake positions: rigid along the kernel, centre fixed") {
  Tensor<double> off(1, 9, 2, 3);
  for (auto& v : off.values()) v = 0.5;
  const auto pos = dsc_sample_positions(off, SnakeAxis::Horizontal);
  auto at = [&](int k, int y, int x) { return pos[(static_cast<std::size_t>(k) * 2 + y) * 3 + x]; };
  CHECK(at(4, 1, 2).y == 1.0);
  CHECK(at(4, 1, 2).x == 2.0);
  CHECK(at(8, 0, 0).x == 4.0);
  CHECK(at(8, 0, 0).y == doctest::Approx(2.0));
  CHECK(at(0, 1, 1).x == -3.0);
  CHECK(at(0, 1, 1).y == doctest::Approx(3.0));
  const auto vpos = dsc_sample_positions(off, SnakeAxis::Vertical);
  CHECK(vpos[(5 * 2 + 0) * 3 + 1].y == 1.0);
  CHECK(vpos[(5 * 2 + 0) * 3 + 1].x == doctest::Approx(1.5));
}

TEST_CASE("zero offsets reduce the snake to the axial convolution") {
  std::mt19937_64 rng(5);
  for (auto axis : {SnakeAxis::Horizontal, SnakeAxis::Vertical}) {
    DscSpec<double> s(axis, 3, 4);
    fill_normal(s.main.weight, rng);
    fill_normal(s.main.bias, rng);
    Tensor<double> x(2, 3, 9, 12);
    fill_normal(x, rng);
    const auto a = dsc_forward(x, s), b = conv2d_forward(x, s.main);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-12);

    const auto sf = s.main.cast<float>();
    DscSpec<float> df(axis, 3, 4);
    df.main = sf;
    const auto xf = x.cast<float>();
    const auto af = dsc_forward(xf, df), bf = conv2d_forward(xf, sf);
    for (std::size_t i = 0; i < af.size(); ++i) CHECK(std::abs(af.values()[i] - bf.values()[i]) <= 1e-6f);
  }
}

TEST_CASE("snake convolution matches the definition-level oracle") {
  std::mt19937_64 rng(6);
  for (auto axis : {SnakeAxis::Horizontal, SnakeAxis::Vertical}) {
    DscSpec<double> s(axis, 2, 3);
    fill_normal(s.main.weight, rng);
    fill_normal(s.main.bias, rng);
    fill_normal(s.offset.weight, rng, 0.6);
    fill_normal(s.offset.bias, rng, 0.6);
    Tensor<double> x(2, 2, 7, 10);
    fill_normal(x, rng);
    const auto a = dsc_forward(x, s), b = naive_dsc(x, s);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-11));
  }
}

TEST_CASE("snake gradients match finite differences for all parameter groups") {
  std::mt19937_64 rng(7);
  for (auto axis : {SnakeAxis::Horizontal, SnakeAxis::Vertical}) {
    DscSpec<double> s(axis, 3, 2);
    fill_normal(s.main.weight, rng);
    fill_normal(s.main.bias, rng);
    fill_normal(s.offset.weight, rng, 0.3);
    fill_normal(s.offset.bias, rng, 0.3);
    Tensor<double> x(2, 3, 6, 8), r(2, 2, 6, 8);
    fill_normal(x, rng);
    fill_normal(r, rng);
    DscCache<double> cache;
    dsc_forward(x, s, &cache);
    const auto g = dsc_backward(x, s, cache, r);
    auto with = [&](auto setter) {
      return [&, setter](std::span<const double> p) {
        auto ss = s;
        Tensor<double> xx = x;
        setter(ss, xx, p);
        return dot(dsc_forward(xx, ss), r);
      };
    };
    const auto fx = with([](auto&, auto& xx, auto p) { std::copy(p.begin(), p.end(), xx.values().begin()); });
    const auto fmw = with([](auto& ss, auto&, auto p) { std::copy(p.begin(), p.end(), ss.main.weight.begin()); });
    const auto fmb = with([](auto& ss, auto&, auto p) { std::copy(p.begin(), p.end(), ss.main.bias.begin()); });
    const auto fow = with([](auto& ss, auto&, auto p) { std::copy(p.begin(), p.end(), ss.offset.weight.begin()); });
    const auto fob = with([](auto& ss, auto&, auto p) { std::copy(p.begin(), p.end(), ss.offset.bias.begin()); });
    CHECK(grad_check("x", fx, x.values(), g.grad_x.values()).max_rel_error < 1e-4);
    CHECK(grad_check("main_w", fmw, s.main.weight, g.grad_main_w).max_rel_error < 1e-4);
    CHECK(grad_check("main_b", fmb, s.main.bias, g.grad_main_b).max_rel_error < 1e-4);
    CHECK(grad_check("offset_w", fow, s.offset.weight, g.grad_offset_w).max_rel_error < 1e-4);
    CHECK(grad_check("offset_b", fob, s.offset.bias, g.grad_offset_b).max_rel_error < 1e-4);
  }
}

}  // TEST_SUITE
