#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vitalrr/conv.hpp"

namespace vitalrr {

inline constexpr int kSnakeLength = 9;
inline constexpr int kSnakeCenter = 4;

/// Horizontal kernels run along time (width) and deform in frequency;
/// vertical kernels run along frequency and deform in time.
enum class SnakeAxis { Horizontal, Vertical };

/// Fractional sampling location (row, column).
template <typename T>
struct Coord {
  T y;
  T x;
};

/// Kernel offset c = k - 4 of snake index k.
constexpr int snake_extent(int k) { return k - kSnakeCenter; }

/// Sampling positions of a snake kernel. `offsets` is (N, 9, H, W) with
/// squashed deformations; the result is indexed [((n * 9 + k) * H + y) * W + x].
/// Along the kernel axis positions are rigid (x0 + c); across it each position
/// carries the running sum of the offsets from the centre outward, so the
/// centre never moves and index c deviates by at most c.
template <typename T>
std::vector<Coord<T>> dsc_sample_positions(const Tensor<T>& offsets, SnakeAxis axis) {
  require_shape(offsets, offsets.n(), kSnakeLength, offsets.h(), offsets.w(), "dsc offsets");
  const int H = offsets.h(), W = offsets.w();
  std::vector<Coord<T>> pos(static_cast<std::size_t>(offsets.n()) * kSnakeLength * H * W);
  auto at = [&](int n, int k, int y, int x) -> Coord<T>& {
    return pos[((static_cast<std::size_t>(n) * kSnakeLength + k) * H + y) * W + x];
  };
  for (int n = 0; n < offsets.n(); ++n) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        T fwd = T(0), back = T(0);
        for (int c = 0; c <= kSnakeCenter; ++c) {
          if (c > 0) {
            fwd += offsets(n, kSnakeCenter + c, y, x);
            back += offsets(n, kSnakeCenter - c, y, x);
          }
          for (int side : {+1, -1}) {
            if (c == 0 && side < 0) continue;
            const int k = kSnakeCenter + side * c;
            const T acc = side > 0 ? fwd : back;
            if (axis == SnakeAxis::Horizontal) {
              at(n, k, y, x) = {static_cast<T>(y) + acc, static_cast<T>(x + side * c)};
            } else {
              at(n, k, y, x) = {static_cast<T>(y + side * c), static_cast<T>(x) + acc};
            }
          }
        }
      }
    }
  }
  return pos;
}

/// 4-neighbour bilinear interpolation with zero padding outside the plane.
template <typename T>
struct BilinearTap {
  int y0, x0;
  T wy, wx;

  explicit BilinearTap(Coord<T> c)
      : y0(static_cast<int>(std::floor(c.y))),
        x0(static_cast<int>(std::floor(c.x))),
        wy(c.y - std::floor(c.y)),
        wx(c.x - std::floor(c.x)) {}

  static T fetch(const T* plane, int H, int W, int y, int x) {
    return (y >= 0 && y < H && x >= 0 && x < W) ? plane[static_cast<std::size_t>(y) * W + x] : T(0);
  }

  T value(const T* plane, int H, int W) const {
    const T v00 = fetch(plane, H, W, y0, x0), v01 = fetch(plane, H, W, y0, x0 + 1);
    const T v10 = fetch(plane, H, W, y0 + 1, x0), v11 = fetch(plane, H, W, y0 + 1, x0 + 1);
    return (T(1) - wy) * ((T(1) - wx) * v00 + wx * v01) + wy * ((T(1) - wx) * v10 + wx * v11);
  }

  /// Accumulates g * d(value)/d(plane) into grad_plane and returns
  /// d(value)/d(coord) scaled by g.
  Coord<T> backward(const T* plane, int H, int W, T g, T* grad_plane) const {
    const T v00 = fetch(plane, H, W, y0, x0), v01 = fetch(plane, H, W, y0, x0 + 1);
    const T v10 = fetch(plane, H, W, y0 + 1, x0), v11 = fetch(plane, H, W, y0 + 1, x0 + 1);
    if (grad_plane) {
      auto add = [&](int y, int x, T w) {
        if (y >= 0 && y < H && x >= 0 && x < W) grad_plane[static_cast<std::size_t>(y) * W + x] += g * w;
      };
      add(y0, x0, (T(1) - wy) * (T(1) - wx));
      add(y0, x0 + 1, (T(1) - wy) * wx);
      add(y0 + 1, x0, wy * (T(1) - wx));
      add(y0 + 1, x0 + 1, wy * wx);
    }
    return {g * ((T(1) - wx) * (v10 - v00) + wx * (v11 - v01)),
            g * ((T(1) - wy) * (v01 - v00) + wy * (v11 - v10))};
  }
};

/// Samples every (n, c) plane of x at the given coordinates: result (N, C, 1, P).
template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& x, std::span<const Coord<T>> coords) {
  Tensor<T> out(x.n(), x.c(), 1, static_cast<int>(coords.size()));
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (std::size_t p = 0; p < coords.size(); ++p)
        out(n, c, 0, static_cast<int>(p)) = BilinearTap<T>(coords[p]).value(x.channel(n, c), x.h(), x.w());
  return out;
}

template <typename T>
struct BilinearGrads {
  Tensor<T> grad_x;
  std::vector<Coord<T>> grad_coords;
};

template <typename T>
BilinearGrads<T> bilinear_sample_backward(const Tensor<T>& x, std::span<const Coord<T>> coords,
                                          const Tensor<T>& grad_out) {
  require_shape(grad_out, x.n(), x.c(), 1, static_cast<int>(coords.size()), "bilinear grad_out");
  BilinearGrads<T> g{Tensor<T>(x.n(), x.c(), x.h(), x.w()),
                     std::vector<Coord<T>>(coords.size(), Coord<T>{T(0), T(0)})};
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (std::size_t p = 0; p < coords.size(); ++p) {
        const auto d = BilinearTap<T>(coords[p]).backward(x.channel(n, c), x.h(), x.w(),
                                                          grad_out(n, c, 0, static_cast<int>(p)),
                                                          g.grad_x.channel(n, c));
        g.grad_coords[p].y += d.y;
        g.grad_coords[p].x += d.x;
      }
  return g;
}

/// Dynamic snake convolution layer. `main` holds the (out, in, 1, 9) or
/// (out, in, 9, 1) snake weights; `offset` is a same-size standard conv that
/// emits one raw deformation per snake index (9 channels), squashed by tanh.
template <typename T>
struct DscSpec {
  SnakeAxis axis = SnakeAxis::Horizontal;
  ConvSpec<T> main;
  ConvSpec<T> offset;

  DscSpec() = default;
  DscSpec(SnakeAxis ax, int in, int out)
      : axis(ax),
        main(ax == SnakeAxis::Horizontal ? ConvSpec<T>(in, out, 1, kSnakeLength, 0, kSnakeCenter)
                                         : ConvSpec<T>(in, out, kSnakeLength, 1, kSnakeCenter, 0)),
        offset(in, kSnakeLength, 3, 3, 1, 1) {}

  void check() const {
    main.check();
    offset.check();
    const bool horizontal_ok = main.kh == 1 && main.kw == kSnakeLength;
    const bool vertical_ok = main.kh == kSnakeLength && main.kw == 1;
    if (!(axis == SnakeAxis::Horizontal ? horizontal_ok : vertical_ok)) {
      throw ShapeError("snake kernel must be 1x9 (horizontal) or 9x1 (vertical)");
    }
    if (offset.out_ch != kSnakeLength || offset.in_ch != main.in_ch || offset.kh != 3 ||
        offset.kw != 3 || offset.pad_h != 1 || offset.pad_w != 1 || offset.stride != 1) {
      throw ShapeError("offset conv must be 3x3, same padding, 9 output channels");
    }
  }

  /// Snake weight of output o, input i, index k, independent of orientation.
  T w(int o, int i, int k) const { return main.weight[(static_cast<std::size_t>(o) * main.in_ch + i) * kSnakeLength + k]; }
};

/// Intermediate values kept by dsc_forward for the backward pass.
template <typename T>
struct DscCache {
  Tensor<T> delta;                  // squashed offsets (N, 9, H, W)
  std::vector<Coord<T>> positions;  // see dsc_sample_positions
  Tensor<T> sampled;                // (N, in * 9, H, W)
};

template <typename T>
Tensor<T> dsc_forward(const Tensor<T>& x, const DscSpec<T>& spec, DscCache<T>* cache = nullptr) {
  spec.check();
  if (x.c() != spec.main.in_ch) throw ShapeError("dsc: input channel mismatch");
  const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
  Tensor<T> delta = conv2d_forward(x, spec.offset);
  for (T& v : delta.values()) v = std::tanh(v);
  auto positions = dsc_sample_positions(delta, spec.axis);

  Tensor<T> sampled(N, C * kSnakeLength, H, W);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < kSnakeLength; ++k) {
      const Coord<T>* pk = positions.data() + (static_cast<std::size_t>(n) * kSnakeLength + k) * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        const BilinearTap<T> tap(pk[p]);
        for (int c = 0; c < C; ++c) {
          sampled.channel(n, c * kSnakeLength + k)[p] = tap.value(x.channel(n, c), H, W);
        }
      }
    }
  }
  // The snake sum is a 1x1 convolution over the (in * 9) sampled channels.
  ConvSpec<T> pointwise(C * kSnakeLength, spec.main.out_ch, 1, 1, 0, 0);
  pointwise.weight = spec.main.weight;
  pointwise.bias = spec.main.bias;
  Tensor<T> y = conv2d_forward(sampled, pointwise);
  if (cache) *cache = {std::move(delta), std::move(positions), std::move(sampled)};
  return y;
}

template <typename T>
struct DscGrads {
  Tensor<T> grad_x;
  std::vector<T> grad_main_w, grad_main_b;
  std::vector<T> grad_offset_w, grad_offset_b;
};

template <typename T>
DscGrads<T> dsc_backward(const Tensor<T>& x, const DscSpec<T>& spec, const DscCache<T>& cache,
                         const Tensor<T>& grad_out) {
  spec.check();
  const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
  require_shape(grad_out, N, spec.main.out_ch, H, W, "dsc_backward grad_out");
  ConvSpec<T> pointwise(C * kSnakeLength, spec.main.out_ch, 1, 1, 0, 0);
  pointwise.weight = spec.main.weight;
  pointwise.bias = spec.main.bias;
  auto gp = conv2d_backward(cache.sampled, pointwise, grad_out);

  DscGrads<T> g;
  g.grad_main_w = std::move(gp.grad_w);
  g.grad_main_b = std::move(gp.grad_b);
  g.grad_x = Tensor<T>(N, C, H, W);

  // Gradient w.r.t. the perpendicular coordinate of every sampling position.
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  Tensor<T> grad_pos(N, kSnakeLength, H, W);
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < kSnakeLength; ++k) {
      const Coord<T>* pk = cache.positions.data() + (static_cast<std::size_t>(n) * kSnakeLength + k) * hw;
      T* gk = grad_pos.channel(n, k);
      for (std::size_t p = 0; p < hw; ++p) {
        const BilinearTap<T> tap(pk[p]);
        T acc = T(0);
        for (int c = 0; c < C; ++c) {
          const T go = gp.grad_x.channel(n, c * kSnakeLength + k)[p];
          if (go == T(0)) continue;
          const auto d = tap.backward(x.channel(n, c), H, W, go, g.grad_x.channel(n, c));
          acc += spec.axis == SnakeAxis::Horizontal ? d.y : d.x;
        }
        gk[p] = acc;
      }
    }
  }

  // Position k = 4 + c accumulates offsets 5..4+c (and symmetrically below
  // the centre), so each offset receives the summed gradient of every
  // position further out on its side. Then chain through tanh.
  Tensor<T> grad_raw(N, kSnakeLength, H, W);
  for (int n = 0; n < N; ++n) {
    for (std::size_t p = 0; p < hw; ++p) {
      T fwd = T(0), back = T(0);
      for (int c = kSnakeCenter; c >= 1; --c) {
        fwd += grad_pos.channel(n, kSnakeCenter + c)[p];
        back += grad_pos.channel(n, kSnakeCenter - c)[p];
        for (int k : {kSnakeCenter + c, kSnakeCenter - c}) {
          const T d = cache.delta.channel(n, k)[p];
          grad_raw.channel(n, k)[p] = (k > kSnakeCenter ? fwd : back) * (T(1) - d * d);
        }
      }
    }
  }
  auto go = conv2d_backward(x, spec.offset, grad_raw);
  g.grad_offset_w = std::move(go.grad_w);
  g.grad_offset_b = std::move(go.grad_b);
  for (std::size_t i = 0; i < g.grad_x.size(); ++i) g.grad_x.values()[i] += go.grad_x.values()[i];
  return g;
}

}  // namespace vitalrr
