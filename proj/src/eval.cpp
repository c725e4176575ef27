#include "vitalrr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "vitalrr/error.hpp"

namespace vitalrr {

std::vector<double> map_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

double average_precision(const std::vector<std::vector<SliceInterval>>& preds,
                         const std::vector<std::vector<SliceInterval>>& gts, double iou_threshold) {
  if (preds.size() != gts.size()) throw ShapeError("map: predictions and ground truth differ in count");
  std::size_t total_gt = 0;
  for (const auto& g : gts) total_gt += g.size();
  if (total_gt == 0) return 0.0;

  struct Det {
    double score;
    std::size_t scenario, index;
  };
  std::vector<Det> dets;
  for (std::size_t s = 0; s < preds.size(); ++s)
    for (std::size_t i = 0; i < preds[s].size(); ++i) dets.push_back({preds[s][i].score, s, i});
  std::stable_sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) { return a.score > b.score; });

  std::vector<std::vector<char>> used(gts.size());
  for (std::size_t s = 0; s < gts.size(); ++s) used[s].assign(gts[s].size(), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const auto& d : dets) {
    const auto& p = preds[d.scenario][d.index];
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts[d.scenario].size(); ++g) {
      if (used[d.scenario][g]) continue;
      const double iou = interval_iou(p, gts[d.scenario][g]);
      if (iou > best) {
        best = iou;
        best_g = g;
      }
    }
    if (best >= iou_threshold - 1e-12) {
      used[d.scenario][best_g] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / total_gt);
  }
  // all-point interpolation: precision envelope, summed over recall steps
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_r) * precision[i];
    prev_r = recall[i];
  }
  return ap;
}

MapResult map_metric(const std::vector<std::vector<SliceInterval>>& preds,
                     const std::vector<std::vector<SliceInterval>>& gts) {
  MapResult r;
  for (double t : map_thresholds()) r.ap.push_back(average_precision(preds, gts, t));
  r.map50 = r.ap.front();
  double s = 0.0;
  for (double a : r.ap) s += a;
  r.map5095 = s / r.ap.size();
  return r;
}

RrMetrics rr_metrics(const std::vector<RrPair>& pairs) {
  if (pairs.empty()) throw ConfigError("rr_metrics needs at least one pair");
  std::size_t ok = 0;
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double err = p.est_bpm ? std::abs(*p.est_bpm - p.ref_bpm) : kFailureErrorBpm;
    ok += p.est_bpm && err <= kAccurateWithinBpm;
    sum += err;
  }
  return {100.0 * ok / pairs.size(), sum / pairs.size()};
}

DetectorKind parse_detector(const std::string& name) {
  if (name == "classical") return DetectorKind::Classical;
  if (name == "dnn" || name == "dsc") return DetectorKind::Dnn;
  if (name == "oracle") return DetectorKind::Oracle;
  throw ConfigError("unknown detector '" + name + "' (expected classical, dnn or oracle)");
}

std::string detector_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::Classical: return "classical";
    case DetectorKind::Dnn: return "dsc";
    case DetectorKind::Oracle: return "oracle";
  }
  return "?";
}

std::vector<SliceInterval> truth_intervals(const GroundTruth& truth) {
  std::vector<SliceInterval> out;
  for (const auto& g : truth.intervals) out.push_back({g.start_s, g.end_s, 1.0});
  return out;
}

std::vector<PipelineItem> estimate_intervals(const Spectrogram& spec,
                                             const std::vector<SliceInterval>& intervals,
                                             const RrConfig& cfg) {
  const RidgeTrack ridge = extract_ridge(spec);
  std::vector<PipelineItem> out;
  for (const auto& iv : intervals) {
    PipelineItem item;
    item.interval = iv;
    item.rr.interval = iv;
    try {
      const auto segs = truncate_ridge(ridge, {iv});
      if (segs.empty()) throw TooShortError("interval selects no spectrogram column", iv.length());
      item.rr = estimate_rr(segs.front(), cfg);
      item.rr.interval = iv;
    } catch (const Error& e) {
      item.rr.valid = false;
      item.error = e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<PipelineItem> run_pipeline(const BeatSignal& beat, DetectorKind kind,
                                       const DetectorModel* model, const GroundTruth* truth,
                                       const PipelineConfig& cfg) {
  const Spectrogram spec = stft(beat, cfg.window);
  std::vector<SliceInterval> intervals;
  switch (kind) {
    case DetectorKind::Classical:
      intervals = classical_detect(spec, cfg.classical);
      break;
    case DetectorKind::Dnn:
      if (!model) throw ConfigError("dnn detector needs a weights file");
      intervals = infer(*model, spec, cfg.infer);
      break;
    case DetectorKind::Oracle:
      if (!truth) throw ConfigError("oracle detector needs ground truth");
      intervals = truth_intervals(*truth);
      break;
  }
  return estimate_intervals(spec, intervals, cfg.rr);
}

std::vector<EvalRow> score_items(const std::string& scenario_id, const std::string& detector,
                                 const std::vector<PipelineItem>& items, const GroundTruth& truth) {
  std::vector<EvalRow> rows;
  const auto gts = truth_intervals(truth);
  if (gts.empty()) return rows;
  std::vector<char> hit(gts.size(), 0);
  for (const auto& item : items) {
    std::size_t ref = 0;
    double best_overlap = 0.0, best_gap = INFINITY;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double ov = std::min(item.interval.end_s, gts[g].end_s) -
                        std::max(item.interval.start_s, gts[g].start_s);
      if (ov > best_overlap) {
        best_overlap = ov;
        ref = g;
      }
    }
    if (best_overlap <= 0.0) {
      for (std::size_t g = 0; g < gts.size(); ++g) {
        const double gap = std::abs(item.interval.center() - gts[g].center());
        if (gap < best_gap) {
          best_gap = gap;
          ref = g;
        }
      }
    } else {
      hit[ref] = 1;
    }
    EvalRow row;
    row.scenario_id = scenario_id;
    row.detector = detector;
    row.interval_iou = interval_iou(item.interval, gts[ref]);
    row.rr_ref_bpm = truth.intervals[ref].reference_rr_bpm;
    if (item.rr.valid) {
      row.rr_est_bpm = item.rr.rr_bpm;
      row.abs_err_bpm = std::abs(item.rr.rr_bpm - row.rr_ref_bpm);
    } else {
      row.abs_err_bpm = kFailureErrorBpm;
    }
    rows.push_back(row);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (hit[g]) continue;
    EvalRow row;
    row.scenario_id = scenario_id;
    row.detector = detector;
    row.rr_ref_bpm = truth.intervals[g].reference_rr_bpm;
    row.abs_err_bpm = kFailureErrorBpm;
    rows.push_back(row);
  }
  return rows;
}

RrMetrics rr_metrics_from_rows(const std::vector<EvalRow>& rows, const std::string& detector) {
  std::vector<RrPair> pairs;
  for (const auto& r : rows) {
    if (r.detector == detector) pairs.push_back({r.rr_est_bpm, r.rr_ref_bpm});
  }
  if (pairs.empty()) return {};
  return rr_metrics(pairs);
}

namespace {

struct ScenarioOutcome {
  std::vector<std::vector<EvalRow>> rows;               // per detector
  std::vector<std::vector<SliceInterval>> detections;  // per detector
};

}  // namespace

EvalReport compare_baselines(const std::vector<EvalScenario>& scenarios, const DetectorModel* model,
                             const PipelineConfig& cfg, int jobs) {
  std::vector<std::string> names = {"fft", "classical"};
  if (model) names.push_back("dsc");
  names.push_back("oracle");

  std::vector<ScenarioOutcome> outcomes(scenarios.size());
  auto work = [&](std::size_t i) {
    const auto& sc = scenarios[i];
    ScenarioOutcome& out = outcomes[i];
    const double duration = sc.beat.duration_s();
    const Spectrogram spec = stft(sc.beat, cfg.window);
    for (const auto& name : names) {
      std::vector<PipelineItem> items;
      if (name == "fft") {
        PipelineItem item;
        item.interval = {0.0, duration, 1.0};
        try {
          item.rr = estimate_rr_fft_baseline(sc.beat, cfg.rr);
        } catch (const Error& e) {
          item.error = e.what();
        }
        items.push_back(item);
      } else {
        std::vector<SliceInterval> intervals;
        if (name == "classical") intervals = classical_detect(spec, cfg.classical);
        if (name == "dsc") intervals = infer(*model, spec, cfg.infer);
        if (name == "oracle") intervals = truth_intervals(sc.truth);
        items = estimate_intervals(spec, intervals, cfg.rr);
      }
      std::vector<EvalRow> rows = score_items(sc.id, name, items, sc.truth);
      // one FFT datum per scenario, referenced to the longest quasi-stationary interval
      if (name == "fft" && rows.size() > 1) rows.resize(1);
      std::vector<SliceInterval> dets;
      for (const auto& it : items) dets.push_back(it.interval);
      out.rows.push_back(std::move(rows));
      out.detections.push_back(std::move(dets));
    }
  };

  jobs = std::max(1, jobs);
  if (jobs == 1 || scenarios.size() < 2) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        try {
          for (std::size_t i = next++; i < scenarios.size(); i = next++) work(i);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report;
  for (std::size_t d = 0; d < names.size(); ++d) {
    std::vector<std::vector<SliceInterval>> preds, gts;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const auto& rows = outcomes[i].rows[d];
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      preds.push_back(outcomes[i].detections[d]);
      gts.push_back(truth_intervals(scenarios[i].truth));
    }
    DetectorSummary s;
    s.detector = names[d];
    s.map = map_metric(preds, gts);
    s.rr = rr_metrics_from_rows(report.rows, names[d]);
    for (const auto& r : report.rows) s.rows += r.detector == names[d];
    report.summary.push_back(s);
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "scenario_id,detector,interval_iou,rr_est_bpm,rr_ref_bpm,abs_err_bpm\n";
  char buf[256];
  for (const auto& r : report.rows) {
    char est[64] = "";
    if (r.rr_est_bpm) std::snprintf(est, sizeof est, "%.6f", *r.rr_est_bpm);
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%s,%.6f,%.6f\n", r.scenario_id.c_str(), r.detector.c_str(),
                  r.interval_iou, est, r.rr_ref_bpm, r.abs_err_bpm);
    out += buf;
  }
  return out;
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : report.summary) {
    j[s.detector] = {{"map50", s.map.map50},
                     {"map5095", s.map.map5095},
                     {"accuracy_pct", s.rr.accuracy_pct},
                     {"mae_bpm", s.rr.mae_bpm},
                     {"rows", s.rows}};
  }
  return j;
}

}  // namespace vitalrr
