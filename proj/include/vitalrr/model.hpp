#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vitalrr/dsc.hpp"
#include "vitalrr/image.hpp"

namespace vitalrr {

/// Layer geometry of the interval detector.
struct DetectorArch {
  int in_h = 64;   // frequency rows
  int in_w = 256;  // time columns
  int stem1 = 8;
  int stem2 = 8;
  int dsc_out = 4;  // per snake axis; the block emits 2 * dsc_out channels
  std::vector<int> context_scales = {8, 32, 128};
  int hidden = 32;
  int dfl_bins = 16;

  int block_channels() const { return 2 * dsc_out; }
  int context_channels() const {
    return block_channels() * (1 + 2 * static_cast<int>(context_scales.size()));
  }
  int head_outputs() const { return 1 + 2 * dfl_bins; }
  /// Edge distances are expressed in columns over [0, in_w].
  double max_distance() const { return static_cast<double>(in_w); }
  double bin_width() const { return max_distance() / (dfl_bins - 1); }
  void validate() const;
  bool operator==(const DetectorArch&) const = default;
};

/// Conv stem (2 x [3x3 conv, SiLU, frequency pool 2]), DSC block (horizontal
/// and vertical snakes, concatenated, SiLU), mean over frequency, directional
/// multi-scale temporal context, and a per-column pointwise head emitting an
/// objectness logit and two edge-distance distributions.
template <typename T>
struct Network {
  DetectorArch arch;
  ConvSpec<T> stem1;
  ConvSpec<T> stem2;
  DscSpec<T> dsc_h;
  DscSpec<T> dsc_v;
  ConvSpec<T> hidden;
  ConvSpec<T> head;

  Network() = default;
  explicit Network(const DetectorArch& a);

  /// Visits every parameter array in serialization order.
  void for_each_param(const std::function<void(std::vector<T>&)>& fn);
  void for_each_param(const std::function<void(const std::vector<T>&)>& fn) const;
  std::size_t param_count() const;
  std::vector<T> flatten() const;
  void unflatten(std::span<const T> values);

  template <typename U>
  Network<U> cast() const;
};

using DetectorModel = Network<float>;

/// Kaiming-uniform weights from a fixed seed; offset convs and biases start
/// at zero so the snakes begin straight.
DetectorModel make_model(const DetectorArch& arch, std::uint64_t seed);

/// Activations retained for the backward pass.
template <typename T>
struct ForwardPass {
  Tensor<T> input;
  Tensor<T> z1, p1, z2, p2;
  DscCache<T> cache_h, cache_v;
  Tensor<T> zcat, acat;
  Tensor<T> pooled, context, zh, ah;
  Tensor<T> out;  // (N, 1 + 2 * bins, 1, W) logits
};

template <typename T>
ForwardPass<T> network_forward(const Network<T>& net, const Tensor<T>& image);

/// Parameter gradients (flattened, same order as flatten()) for a gradient
/// on the head logits.
template <typename T>
std::vector<T> network_backward(const Network<T>& net, const ForwardPass<T>& pass,
                                const Tensor<T>& grad_out);

/// Directional moving averages: channel block 0 is the input, then for each
/// scale s the mean of the s columns to the left and the s to the right
/// (zero outside the image).
template <typename T>
Tensor<T> context_forward(const Tensor<T>& f, std::span<const int> scales);
template <typename T>
Tensor<T> context_backward(const Tensor<T>& f, std::span<const int> scales, const Tensor<T>& grad);

struct ColumnPrediction {
  double objectness = 0.0;
  double left = 0.0;   // expected distance to interval start, columns
  double right = 0.0;  // expected distance to interval end, columns
};

/// Decodes one batch item of head logits.
template <typename T>
std::vector<ColumnPrediction> decode_predictions(const Tensor<T>& out, const DetectorArch& arch,
                                                 int n = 0);

Tensor<float> image_tensor(const DetectorImage& image);
std::vector<ColumnPrediction> model_forward(const DetectorModel& model, const DetectorImage& image);

// Weights file: "DSCW", u16 version, u16 layer count, then per layer a u16
// type tag, u16 dim count, u32 dims, u32 parameter count and f32 parameters.
inline constexpr std::uint16_t kWeightsVersion = 1;
std::vector<unsigned char> encode_weights(const DetectorModel& model);
DetectorModel decode_weights(std::span<const unsigned char> bytes);
void save_weights(const DetectorModel& model, const std::string& path);
DetectorModel load_weights(const std::string& path);

}  // namespace vitalrr
