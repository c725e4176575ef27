#include "vitalrr/infer.hpp"

#include <algorithm>

namespace vitalrr {

std::vector<SliceInterval> nms_1d(std::vector<SliceInterval> candidates, double nms_iou) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SliceInterval& a, const SliceInterval& b) { return a.score > b.score; });
  std::vector<SliceInterval> kept;
  for (const auto& c : candidates) {
    bool keep = true;
    for (const auto& k : kept) {
      if (interval_iou(c, k) >= nms_iou) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(c);
  }
  return kept;
}

std::vector<SliceInterval> candidate_intervals(const std::vector<ColumnPrediction>& preds,
                                               const DetectorImage& image, double score_threshold) {
  std::vector<SliceInterval> out;
  const double hi = static_cast<double>(image.cols);
  for (std::size_t c = 0; c < preds.size(); ++c) {
    const auto& p = preds[c];
    if (p.objectness < score_threshold) continue;
    const double u = c + 0.5;
    const double s = std::clamp(u - p.left, 0.0, hi), e = std::clamp(u + p.right, 0.0, hi);
    if (e <= s) continue;
    out.push_back({image.column_to_time(s), image.column_to_time(e), std::clamp(p.objectness, 0.0, 1.0)});
  }
  return out;
}

std::vector<SliceInterval> infer(const DetectorModel& model, const DetectorImage& image,
                                 const InferConfig& cfg) {
  const auto preds = model_forward(model, image);
  auto kept = nms_1d(candidate_intervals(preds, image, cfg.score_threshold), cfg.nms_iou);
  std::sort(kept.begin(), kept.end(),
            [](const SliceInterval& a, const SliceInterval& b) { return a.start_s < b.start_s; });
  return kept;
}

GridConfig model_grid(const DetectorArch& arch) {
  GridConfig g;
  g.out_f_bins = arch.in_h;
  g.out_t_bins = arch.in_w;
  return g;
}

std::vector<SliceInterval> infer(const DetectorModel& model, const Spectrogram& spec,
                                 const InferConfig& cfg) {
  return infer(model, to_detector_grid(spec, model_grid(model.arch)), cfg);
}

}  // namespace vitalrr
