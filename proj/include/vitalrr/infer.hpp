#pragma once

#include <vector>

#include "vitalrr/interval.hpp"
#include "vitalrr/model.hpp"

namespace vitalrr {

struct InferConfig {
  double score_threshold = 0.5;
  double nms_iou = 0.5;
};

/// Greedy 1-D NMS: highest score first, drop anything overlapping a kept
/// interval at IoU >= nms_iou. Ties keep the earlier interval.
std::vector<SliceInterval> nms_1d(std::vector<SliceInterval> candidates, double nms_iou);

/// Per-column candidates [u - left, u + right] in seconds, clipped to the image span.
std::vector<SliceInterval> candidate_intervals(const std::vector<ColumnPrediction>& preds,
                                               const DetectorImage& image, double score_threshold);

std::vector<SliceInterval> infer(const DetectorModel& model, const DetectorImage& image,
                                 const InferConfig& cfg = {});
std::vector<SliceInterval> infer(const DetectorModel& model, const Spectrogram& spec,
                                 const InferConfig& cfg = {});

/// Image grid matching the model input.
GridConfig model_grid(const DetectorArch& arch);

}  // namespace vitalrr
