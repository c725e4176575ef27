#include "vitalrr/interval.hpp"

#include <algorithm>

#include "vitalrr/error.hpp"

namespace vitalrr {

double interval_iou(const SliceInterval& a, const SliceInterval& b) {
  const double inter = std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double uni = a.length() + b.length() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

std::vector<SliceInterval> merged(std::vector<SliceInterval> v) {
  std::sort(v.begin(), v.end(),
            [](const SliceInterval& x, const SliceInterval& y) { return x.start_s < y.start_s; });
  std::vector<SliceInterval> out;
  for (const auto& iv : v) {
    if (iv.end_s <= iv.start_s) continue;
    if (!out.empty() && iv.start_s <= out.back().end_s) {
      out.back().end_s = std::max(out.back().end_s, iv.end_s);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

double covered(const std::vector<SliceInterval>& v) {
  double total = 0.0;
  for (const auto& iv : v) total += iv.length();
  return total;
}

}  // namespace

double set_time_iou(const std::vector<SliceInterval>& a, const std::vector<SliceInterval>& b) {
  const auto ma = merged(a);
  const auto mb = merged(b);
  double inter = 0.0;
  for (const auto& x : ma) {
    for (const auto& y : mb) {
      inter += std::max(0.0, std::min(x.end_s, y.end_s) - std::max(x.start_s, y.start_s));
    }
  }
  const double uni = covered(ma) + covered(mb) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

nlohmann::json intervals_to_json(const std::vector<SliceInterval>& intervals) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& iv : intervals) arr.push_back({{"start_s", iv.start_s}, {"end_s", iv.end_s}, {"score", iv.score}});
  return {{"intervals", arr}};
}

std::vector<SliceInterval> intervals_from_json(const nlohmann::json& j) {
  std::vector<SliceInterval> out;
  try {
    for (const auto& e : j.at("intervals")) {
      SliceInterval iv{e.at("start_s").get<double>(), e.at("end_s").get<double>(), e.value("score", 1.0)};
      if (!iv.valid()) throw FormatError("invalid interval in JSON");
      out.push_back(iv);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("interval JSON: ") + ex.what());
  }
  return out;
}

}  // namespace vitalrr
