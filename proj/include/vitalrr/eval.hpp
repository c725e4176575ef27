#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitalrr/classical.hpp"
#include "vitalrr/infer.hpp"
#include "vitalrr/ridge.hpp"
#include "vitalrr/scenario.hpp"

namespace vitalrr {

inline constexpr double kAccurateWithinBpm = 3.0;
inline constexpr double kFailureErrorBpm = 10.0;

std::vector<double> map_thresholds();  // 0.50, 0.55, ..., 0.95

/// All-point interpolated AP at one IoU threshold. Predictions are matched in
/// descending score order to the best-overlapping unmatched ground truth of
/// the same scenario. No ground truth at all gives 0.
double average_precision(const std::vector<std::vector<SliceInterval>>& preds,
                         const std::vector<std::vector<SliceInterval>>& gts, double iou_threshold);

struct MapResult {
  std::vector<double> ap;  // one per threshold of map_thresholds()
  double map50 = 0.0;
  double map5095 = 0.0;
};

MapResult map_metric(const std::vector<std::vector<SliceInterval>>& preds,
                     const std::vector<std::vector<SliceInterval>>& gts);

/// One RR datum; a missing estimate is a failure.
struct RrPair {
  std::optional<double> est_bpm;
  double ref_bpm = 0.0;
};

struct RrMetrics {
  double accuracy_pct = 0.0;
  double mae_bpm = 0.0;
};

/// Accuracy counts |est - ref| <= 3 bpm; failures are inaccurate and enter
/// the MAE at 10 bpm. Throws ConfigError on empty input.
RrMetrics rr_metrics(const std::vector<RrPair>& pairs);

enum class DetectorKind { Classical, Dnn, Oracle };

DetectorKind parse_detector(const std::string& name);
std::string detector_name(DetectorKind kind);

struct PipelineConfig {
  WindowConfig window;
  ClassicalConfig classical;
  RrConfig rr;
  InferConfig infer;
};

struct PipelineItem {
  SliceInterval interval;
  RrEstimate rr;  // rr.valid == false when estimation failed
  std::string error;
};

/// STFT, detection, ridge extraction, truncation and one RR estimate per
/// detected interval. A failing interval reports its error without stopping
/// the others.
std::vector<PipelineItem> run_pipeline(const BeatSignal& beat, DetectorKind kind,
                                       const DetectorModel* model, const GroundTruth* truth,
                                       const PipelineConfig& cfg = {});

/// Estimates for a fixed list of intervals over an existing spectrogram.
std::vector<PipelineItem> estimate_intervals(const Spectrogram& spec,
                                             const std::vector<SliceInterval>& intervals,
                                             const RrConfig& cfg = {});

std::vector<SliceInterval> truth_intervals(const GroundTruth& truth);

struct EvalRow {
  std::string scenario_id;
  std::string detector;
  double interval_iou = 0.0;
  std::optional<double> rr_est_bpm;
  double rr_ref_bpm = 0.0;
  double abs_err_bpm = 0.0;  // failures carry the clamped 10 bpm
};

/// Rows for one scenario: each detection is scored against the ground truth
/// interval it overlaps most (else the nearest one); ground-truth intervals
/// that no detection overlaps add a failure row. Without ground truth no
/// rows are produced.
std::vector<EvalRow> score_items(const std::string& scenario_id, const std::string& detector,
                                 const std::vector<PipelineItem>& items, const GroundTruth& truth);

struct EvalScenario {
  std::string id;
  BeatSignal beat;
  GroundTruth truth;
};

struct DetectorSummary {
  std::string detector;
  MapResult map;
  RrMetrics rr;
  std::size_t rows = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<DetectorSummary> summary;
};

/// Rows for the whole-signal FFT baseline, classical, DSC (when a model is
/// given) and oracle pipelines. Scenarios are processed on up to `jobs`
/// threads; the report does not depend on the thread count.
EvalReport compare_baselines(const std::vector<EvalScenario>& scenarios, const DetectorModel* model,
                             const PipelineConfig& cfg = {}, int jobs = 1);

/// Aggregates recomputed from rows plus detections for mAP.
RrMetrics rr_metrics_from_rows(const std::vector<EvalRow>& rows, const std::string& detector);

std::string report_csv(const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);

}  // namespace vitalrr
