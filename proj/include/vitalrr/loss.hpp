#pragma once

#include <vector>

#include "vitalrr/interval.hpp"
#include "vitalrr/model.hpp"

namespace vitalrr {

struct LossWeights {
  double alpha = 0.45;  // interval IoU regression
  double beta = 0.45;   // objectness
  double dfl() const { return 1.0 - alpha - beta; }
  void validate() const;
};

/// Ground-truth interval in continuous column units, [start, end).
struct ColumnSpan {
  double start = 0.0;
  double end = 0.0;
};

struct LossValue {
  double ciou = 0.0;
  double cls = 0.0;
  double dfl = 0.0;
  double total = 0.0;
};

template <typename T>
struct LossResult {
  LossValue value;
  Tensor<T> grad;  // d total / d head logits, same shape as the logits
};

/// Positive columns: centre (c + 0.5) inside a span; earlier spans win.
/// Returns -1 for background, otherwise the span index.
std::vector<int> assign_columns(const std::vector<ColumnSpan>& gt, int cols);

/// Composite loss for a batch of head logits (N, 1 + 2 * bins, 1, W); each
/// batch item's loss is averaged over the batch.
template <typename T>
LossResult<T> detection_loss(const Tensor<T>& logits, const std::vector<std::vector<ColumnSpan>>& gt,
                             const DetectorArch& arch, const LossWeights& w);

/// 1-D CIoU term for one column: 1 - IoU + (centre distance / enclosing span)^2.
/// Optional outputs receive d/d(pred start) and d/d(pred end).
double ciou_1d(double ps, double pe, double gs, double ge, double* d_ps = nullptr,
               double* d_pe = nullptr);

/// Ground-truth spans of an image, clipped to its columns.
std::vector<ColumnSpan> column_spans(const DetectorImage& image,
                                     const std::vector<SliceInterval>& gt);

}  // namespace vitalrr
