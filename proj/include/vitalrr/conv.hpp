#pragma once

#include <cmath>
#include <vector>

#include "vitalrr/tensor.hpp"

namespace vitalrr {

/// Standard 2-D convolution layer: weights laid out (out, in, kh, kw).
template <typename T>
struct ConvSpec {
  int in_ch = 1;
  int out_ch = 1;
  int kh = 3;
  int kw = 3;
  int stride = 1;
  int pad_h = 1;
  int pad_w = 1;
  std::vector<T> weight;
  std::vector<T> bias;

  ConvSpec() = default;
  ConvSpec(int in, int out, int kernel_h, int kernel_w, int pad_h_, int pad_w_, int stride_ = 1)
      : in_ch(in), out_ch(out), kh(kernel_h), kw(kernel_w), stride(stride_), pad_h(pad_h_),
        pad_w(pad_w_), weight(static_cast<std::size_t>(out) * in * kernel_h * kernel_w, T(0)),
        bias(static_cast<std::size_t>(out), T(0)) {}

  std::size_t widx(int o, int i, int y, int x) const {
    return ((static_cast<std::size_t>(o) * in_ch + i) * kh + y) * kw + x;
  }
  T& w(int o, int i, int y, int x) { return weight[widx(o, i, y, x)]; }
  T w(int o, int i, int y, int x) const { return weight[widx(o, i, y, x)]; }

  int out_h(int h) const { return (h + 2 * pad_h - kh) / stride + 1; }
  int out_w(int w) const { return (w + 2 * pad_w - kw) / stride + 1; }

  void check() const {
    if (in_ch <= 0 || out_ch <= 0 || kh <= 0 || kw <= 0 || stride <= 0 || pad_h < 0 || pad_w < 0) {
      throw ShapeError("invalid convolution geometry");
    }
    if (weight.size() != static_cast<std::size_t>(out_ch) * in_ch * kh * kw ||
        bias.size() != static_cast<std::size_t>(out_ch)) {
      throw ShapeError("convolution weight count does not match geometry");
    }
  }

  template <typename U>
  ConvSpec<U> cast() const {
    ConvSpec<U> o(in_ch, out_ch, kh, kw, pad_h, pad_w, stride);
    for (std::size_t i = 0; i < weight.size(); ++i) o.weight[i] = static_cast<U>(weight[i]);
    for (std::size_t i = 0; i < bias.size(); ++i) o.bias[i] = static_cast<U>(bias[i]);
    return o;
  }
};

template <typename T>
struct ConvGrads {
  Tensor<T> grad_x;
  std::vector<T> grad_w;
  std::vector<T> grad_b;
};

namespace detail {

// Output columns ox for which ix = ox * stride + kx - pad lies in [0, w).
inline void valid_range(int kx, int pad, int stride, int in, int out, int& lo, int& hi) {
  const int off = kx - pad;
  lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  hi = (in - 1 - off) >= 0 ? std::min(out, (in - 1 - off) / stride + 1) : 0;
  if (hi < lo) hi = lo;
}

}  // namespace detail

/// Y(p0) = sum_pn W(pn) X(p0 + pn) + b, zero padding outside the input.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvSpec<T>& spec) {
  spec.check();
  if (x.c() != spec.in_ch) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) + " channels, expected " +
                     std::to_string(spec.in_ch));
  }
  const int oh = spec.out_h(x.h()), ow = spec.out_w(x.w());
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  Tensor<T> y(x.n(), spec.out_ch, oh, ow);
  const int s = spec.stride;
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < spec.out_ch; ++o) {
      T* yo = y.channel(n, o);
      std::fill(yo, yo + y.plane(), spec.bias[o]);
      for (int i = 0; i < spec.in_ch; ++i) {
        const T* xi = x.channel(n, i);
        for (int ky = 0; ky < spec.kh; ++ky) {
          int ylo, yhi;
          detail::valid_range(ky, spec.pad_h, s, x.h(), oh, ylo, yhi);
          for (int kx = 0; kx < spec.kw; ++kx) {
            const T wv = spec.w(o, i, ky, kx);
            if (wv == T(0)) continue;
            int xlo, xhi;
            detail::valid_range(kx, spec.pad_w, s, x.w(), ow, xlo, xhi);
            for (int oy = ylo; oy < yhi; ++oy) {
              const T* xr = xi + static_cast<std::size_t>(oy * s + ky - spec.pad_h) * x.w();
              T* yr = yo + static_cast<std::size_t>(oy) * ow;
              const int xoff = kx - spec.pad_w;
              if (s == 1) {
                for (int ox = xlo; ox < xhi; ++ox) yr[ox] += wv * xr[ox + xoff];
              } else {
                for (int ox = xlo; ox < xhi; ++ox) yr[ox] += wv * xr[ox * s + xoff];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

/// Exact gradients of conv2d_forward. Set need_grad_x = false to skip the
/// input gradient.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvSpec<T>& spec, const Tensor<T>& grad_out,
                             bool need_grad_x = true) {
  spec.check();
  const int oh = spec.out_h(x.h()), ow = spec.out_w(x.w());
  require_shape(grad_out, x.n(), spec.out_ch, oh, ow, "conv2d_backward grad_out");
  ConvGrads<T> g;
  g.grad_w.assign(spec.weight.size(), T(0));
  g.grad_b.assign(spec.bias.size(), T(0));
  if (need_grad_x) g.grad_x = Tensor<T>(x.n(), x.c(), x.h(), x.w());
  const int s = spec.stride;
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < spec.out_ch; ++o) {
      const T* go = grad_out.channel(n, o);
      T bsum = T(0);
      for (std::size_t p = 0; p < grad_out.plane(); ++p) bsum += go[p];
      g.grad_b[o] += bsum;
      for (int i = 0; i < spec.in_ch; ++i) {
        const T* xi = x.channel(n, i);
        T* gxi = need_grad_x ? g.grad_x.channel(n, i) : nullptr;
        for (int ky = 0; ky < spec.kh; ++ky) {
          int ylo, yhi;
          detail::valid_range(ky, spec.pad_h, s, x.h(), oh, ylo, yhi);
          for (int kx = 0; kx < spec.kw; ++kx) {
            int xlo, xhi;
            detail::valid_range(kx, spec.pad_w, s, x.w(), ow, xlo, xhi);
            const int xoff = kx - spec.pad_w;
            const T wv = spec.w(o, i, ky, kx);
            T acc = T(0);
            for (int oy = ylo; oy < yhi; ++oy) {
              const std::size_t row = static_cast<std::size_t>(oy * s + ky - spec.pad_h) * x.w();
              const T* xr = xi + row;
              const T* gr = go + static_cast<std::size_t>(oy) * ow;
              for (int ox = xlo; ox < xhi; ++ox) acc += gr[ox] * xr[ox * s + xoff];
              if (gxi && wv != T(0)) {
                T* gxr = gxi + row;
                for (int ox = xlo; ox < xhi; ++ox) gxr[ox * s + xoff] += wv * gr[ox];
              }
            }
            g.grad_w[spec.widx(o, i, ky, kx)] += acc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
T silu(T z) {
  return z / (T(1) + std::exp(-z));
}

template <typename T>
T silu_grad(T z) {
  const T s = T(1) / (T(1) + std::exp(-z));
  return s * (T(1) + z * (T(1) - s));
}

template <typename T>
Tensor<T> silu_forward(const Tensor<T>& z) {
  Tensor<T> a = z;
  for (T& v : a.values()) v = silu(v);
  return a;
}

template <typename T>
Tensor<T> silu_backward(const Tensor<T>& z, const Tensor<T>& grad_a) {
  Tensor<T> g = grad_a;
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] *= silu_grad(z.values()[i]);
  return g;
}

/// Average pooling by 2 along the frequency (height) axis.
template <typename T>
Tensor<T> pool_freq2_forward(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), x.h() / 2, x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < x.w(); ++w)
          y(n, c, h, w) = T(0.5) * (x(n, c, 2 * h, w) + x(n, c, 2 * h + 1, w));
  return y;
}

template <typename T>
Tensor<T> pool_freq2_backward(const Tensor<T>& x, const Tensor<T>& grad_y) {
  Tensor<T> g(x.n(), x.c(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < grad_y.h(); ++h)
        for (int w = 0; w < x.w(); ++w) {
          const T v = T(0.5) * grad_y(n, c, h, w);
          g(n, c, 2 * h, w) = v;
          g(n, c, 2 * h + 1, w) = v;
        }
  return g;
}

/// Mean over the frequency axis: (N, C, H, W) -> (N, C, 1, W).
template <typename T>
Tensor<T> freq_mean_forward(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), 1, x.w());
  const T inv = T(1) / static_cast<T>(x.h());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < x.h(); ++h)
        for (int w = 0; w < x.w(); ++w) y(n, c, 0, w) += inv * x(n, c, h, w);
  return y;
}

template <typename T>
Tensor<T> freq_mean_backward(const Tensor<T>& x, const Tensor<T>& grad_y) {
  Tensor<T> g(x.n(), x.c(), x.h(), x.w());
  const T inv = T(1) / static_cast<T>(x.h());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < x.h(); ++h)
        for (int w = 0; w < x.w(); ++w) g(n, c, h, w) = inv * grad_y(n, c, 0, w);
  return g;
}

}  // namespace vitalrr
