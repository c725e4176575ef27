#pragma once

#include <vector>

#include <json.hpp>

namespace vitalrr {

/// A quasi-stationary time interval with a confidence score in [0, 1].
struct SliceInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double score = 1.0;

  double length() const { return end_s - start_s; }
  double center() const { return 0.5 * (start_s + end_s); }
  bool valid() const { return end_s > start_s && score >= 0.0 && score <= 1.0; }
};

/// |a ∩ b| / |a ∪ b| on the time axis.
double interval_iou(const SliceInterval& a, const SliceInterval& b);

/// IoU between the unions of two interval sets (total covered time).
double set_time_iou(const std::vector<SliceInterval>& a, const std::vector<SliceInterval>& b);

/// {"intervals": [{"start_s", "end_s", "score"}, ...]}
nlohmann::json intervals_to_json(const std::vector<SliceInterval>& intervals);
/// Throws FormatError on missing fields or invalid intervals.
std::vector<SliceInterval> intervals_from_json(const nlohmann::json& j);

}  // namespace vitalrr
