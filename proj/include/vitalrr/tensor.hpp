#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vitalrr/error.hpp"

namespace vitalrr {

/// Dense NCHW array. Height is the frequency axis and width the time axis.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : shape_{n, c, h, w}, data_(static_cast<std::size_t>(n) * c * h * w, fill) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw ShapeError("negative tensor dimension");
  }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  T& operator()(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  T operator()(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* channel(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* channel(int n, int c) const { return data_.data() + index(n, c, 0, 0); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  std::string shape_string() const {
    return "(" + std::to_string(shape_[0]) + "," + std::to_string(shape_[1]) + "," +
           std::to_string(shape_[2]) + "," + std::to_string(shape_[3]) + ")";
  }

 private:
  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename T>
void require_shape(const Tensor<T>& t, int n, int c, int h, int w, const char* what) {
  if (t.n() != n || t.c() != c || t.h() != h || t.w() != w) {
    throw ShapeError(std::string(what) + ": got " + t.shape_string() + ", expected (" +
                     std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
                     "," + std::to_string(w) + ")");
  }
}

/// Flat CSV dump: first line "shape,n,c,h,w", then one value per line.
template <typename T>
std::string tensor_csv(const Tensor<T>& t) {
  std::string out = "shape," + std::to_string(t.n()) + "," + std::to_string(t.c()) + "," +
                    std::to_string(t.h()) + "," + std::to_string(t.w()) + "\n";
  for (T v : t.values()) out += std::to_string(static_cast<double>(v)) + "\n";
  return out;
}

}  // namespace vitalrr
