// vitalrr: synthesize, visualize, detect, train, estimate, evaluate, verify.
// Exit codes: 0 ok, 1 runtime / I/O / format failure, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vitalrr/classical.hpp"
#include "vitalrr/dataset.hpp"
#include "vitalrr/error.hpp"
#include "vitalrr/eval.hpp"
#include "vitalrr/gradcheck_suite.hpp"
#include "vitalrr/image.hpp"
#include "vitalrr/infer.hpp"
#include "vitalrr/io.hpp"
#include "vitalrr/model.hpp"
#include "vitalrr/ridge.hpp"
#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/spectrogram.hpp"
#include "vitalrr/synth.hpp"
#include "vitalrr/train.hpp"

using namespace vitalrr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kOutEnv = "VITALRR_OUT_DIR";

std::string default_out_dir() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? env : ".";
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void log_config(const std::string& cmd, const json& cfg) {
  std::cerr << "vitalrr " << cmd << " config " << cfg.dump() << "\n";
}

std::string numbered(const std::string& prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu", i);
  return prefix + buf;
}

json window_json(const WindowConfig& w) {
  return {{"window_len", w.window_len}, {"hop", w.hop}, {"fft_size", w.fft_size}};
}

void add_window_flags(CLI::App* app, WindowConfig& w) {
  app->add_option("--window-len", w.window_len, "STFT window length (samples)")->capture_default_str();
  app->add_option("--hop", w.hop, "STFT hop (samples)")->capture_default_str();
  app->add_option("--fft-size", w.fft_size, "zero-padded FFT length")->capture_default_str();
}

// ---- synth

struct SynthArgs {
  std::string scenario;
  std::string family = "mixed";
  std::uint64_t seed = 1;
  std::size_t count = 1;
  std::string out;
  std::string prefix = "scenario";
  bool csv = false;
};

int cmd_synth(const SynthArgs& a, bool seed_given, bool batch) {
  std::optional<ScenarioConfig> base;
  if (!a.scenario.empty()) {
    base = load_scenario(a.scenario);
    if (seed_given) base->rng_seed = a.seed;
  } else if (a.family != "mixed") {
    parse_family(a.family);
  }
  if (a.count == 0) throw ConfigError("--count must be at least 1");
  log_config("synth", {{"scenario", a.scenario}, {"family", base ? std::string("file") : a.family}, {"seed", a.seed},
                       {"count", a.count}, {"out", a.out}, {"prefix", a.prefix}, {"csv", a.csv}});

  std::vector<ManifestEntry> manifest;
  for (std::size_t i = 0; i < a.count; ++i) {
    ScenarioConfig sc;
    if (base) {
      sc = *base;
      if (batch) sc.rng_seed = scenario_seed(base->rng_seed, i);
    } else {
      const auto fam = a.family == "mixed" ? mixed_family(i) : parse_family(a.family);
      sc = make_scenario(fam, batch ? scenario_seed(a.seed, i) : a.seed);
    }
    const auto res = synthesize_beat(sc);
    const std::string stem = batch ? numbered(a.prefix, i) : a.prefix;
    write_beat(join(a.out, stem + ".beat"), res.beat);
    write_json(join(a.out, stem + ".gt.json"), to_json(res.truth));
    write_json(join(a.out, stem + ".scenario.json"), to_json(sc));
    if (a.csv) write_beat_csv(join(a.out, stem + ".csv"), res.beat);
    manifest.push_back({stem, stem + ".beat", stem + ".gt.json"});
    std::printf("%s: %zu samples, %.1f s, %zu quasi-stationary interval(s)\n", stem.c_str(), res.beat.size(),
                res.beat.duration_s(), res.truth.intervals.size());
  }
  if (batch) write_manifest(join(a.out, a.prefix + "_manifest.json"), manifest);
  return 0;
}

// ---- spectrogram

struct SpecArgs {
  std::string beat;
  std::string out;
  std::string prefix = "spectrogram";
  std::string format = "png";
  WindowConfig window;
  GridConfig grid;
};

int cmd_spectrogram(const SpecArgs& a) {
  a.window.validate();
  log_config("spectrogram", {{"beat", a.beat}, {"out", a.out}, {"prefix", a.prefix}, {"format", a.format},
                             {"window", window_json(a.window)},
                             {"grid", {{"rows", a.grid.out_f_bins}, {"cols", a.grid.out_t_bins}, {"db_floor", a.grid.db_floor}}}});
  const auto beat = read_beat(a.beat);
  const auto spec = stft(beat, a.window);
  const auto img = to_detector_grid(spec, a.grid);
  const auto fmt = a.format == "pgm" ? ImageFormat::Pgm : ImageFormat::Png;
  const std::string image_path = join(a.out, a.prefix + (fmt == ImageFormat::Pgm ? ".pgm" : ".png"));
  export_image(img, image_path, fmt);
  write_spectrogram_csv(join(a.out, a.prefix + ".csv"), spec);
  write_ridge_csv(join(a.out, a.prefix + "_ridge.csv"), extract_ridge(spec));
  std::printf("%d x %d spectrogram (t x f), image %s\n", spec.t_bins(), spec.f_bins(), image_path.c_str());
  return 0;
}

// ---- detect / estimate share detector selection

struct DetectorArgs {
  std::string beat;
  std::string detector = "classical";
  std::string weights;
  std::string truth;
  std::string out;
  std::string prefix;
  PipelineConfig cfg;
};

void add_detector_flags(CLI::App* app, DetectorArgs& a) {
  app->add_option("--beat", a.beat, "beat signal file")->required()->check(CLI::ExistingFile);
  app->add_option("--detector", a.detector, "classical | dnn | oracle")->capture_default_str();
  app->add_option("--weights", a.weights, "DSC weights file (dnn)")->check(CLI::ExistingFile);
  app->add_option("--truth", a.truth, "ground-truth JSON (oracle)")->check(CLI::ExistingFile);
  app->add_option("--threshold", a.cfg.infer.score_threshold, "DSC objectness threshold")->capture_default_str();
  app->add_option("--nms-iou", a.cfg.infer.nms_iou, "DSC NMS IoU")->capture_default_str();
  app->add_option("--classical-threshold", a.cfg.classical.threshold, "periodicity threshold")->capture_default_str();
  add_window_flags(app, a.cfg.window);
}

json detector_json(const DetectorArgs& a) {
  return {{"beat", a.beat}, {"detector", a.detector}, {"weights", a.weights}, {"truth", a.truth},
          {"out", a.out}, {"prefix", a.prefix}, {"window", window_json(a.cfg.window)},
          {"threshold", a.cfg.infer.score_threshold}, {"nms_iou", a.cfg.infer.nms_iou},
          {"classical_threshold", a.cfg.classical.threshold}};
}

struct Loaded {
  DetectorKind kind;
  std::optional<DetectorModel> model;
  std::optional<GroundTruth> truth;
};

Loaded load_detector(const DetectorArgs& a) {
  Loaded l{parse_detector(a.detector), {}, {}};
  if (l.kind == DetectorKind::Dnn) {
    if (a.weights.empty()) throw ConfigError("--detector dnn needs --weights FILE");
    l.model = load_weights(a.weights);
  }
  if (l.kind == DetectorKind::Oracle) {
    if (a.truth.empty()) throw ConfigError("--detector oracle needs --truth FILE");
    l.truth = ground_truth_from_json(read_json(a.truth));
  }
  return l;
}

std::vector<SliceInterval> detect(const Spectrogram& spec, const Loaded& l, const PipelineConfig& cfg) {
  switch (l.kind) {
    case DetectorKind::Classical: return classical_detect(spec, cfg.classical);
    case DetectorKind::Dnn: return infer(*l.model, spec, cfg.infer);
    case DetectorKind::Oracle: return truth_intervals(*l.truth);
  }
  return {};
}

int cmd_detect(const DetectorArgs& a) {
  a.cfg.window.validate();
  log_config("detect", detector_json(a));
  const auto l = load_detector(a);
  const auto spec = stft(read_beat(a.beat), a.cfg.window);
  const auto found = detect(spec, l, a.cfg);
  json j = intervals_to_json(found);
  j["detector"] = detector_name(l.kind);
  write_json(join(a.out, a.prefix + ".intervals.json"), j);
  std::printf("%zu interval(s) [%s]\n", found.size(), detector_name(l.kind).c_str());
  for (const auto& iv : found) std::printf("  %7.2f - %7.2f s  score %.3f\n", iv.start_s, iv.end_s, iv.score);
  return 0;
}

int cmd_estimate(const DetectorArgs& a, const std::string& intervals_path, bool fft_baseline) {
  a.cfg.window.validate();
  json cfg = detector_json(a);
  cfg["intervals"] = intervals_path;
  cfg["fft_baseline"] = fft_baseline;
  log_config("estimate", cfg);
  const auto beat = read_beat(a.beat);
  json items = json::array();
  if (fft_baseline) {
    try {
      const auto est = estimate_rr_fft_baseline(beat, a.cfg.rr);
      items.push_back(to_json(est));
    } catch (const TooShortError& e) {
      items.push_back({{"valid", false}, {"error", e.what()}});
    } catch (const NoPeakError& e) {
      items.push_back({{"valid", false}, {"error", e.what()}});
    }
  } else {
    const auto spec = stft(beat, a.cfg.window);
    std::vector<SliceInterval> ivs;
    if (!intervals_path.empty()) {
      ivs = intervals_from_json(read_json(intervals_path));
    } else {
      ivs = detect(spec, load_detector(a), a.cfg);
    }
    for (const auto& it : estimate_intervals(spec, ivs, a.cfg.rr)) {
      json e = to_json(it.rr);
      e["interval"] = {{"start_s", it.interval.start_s}, {"end_s", it.interval.end_s}, {"score", it.interval.score}};
      if (!it.rr.valid) e["error"] = it.error;
      items.push_back(e);
    }
  }
  write_json(join(a.out, a.prefix + ".rr.json"), {{"estimates", items}});
  for (const auto& e : items) {
    if (e.value("valid", false)) {
      std::printf("  %7.2f - %7.2f s  RR %.2f bpm\n", e["interval"]["start_s"].get<double>(),
                  e["interval"]["end_s"].get<double>(), e["rr_bpm"].get<double>());
    } else {
      std::printf("  no estimate: %s\n", e.value("error", std::string("?")).c_str());
    }
  }
  return 0;
}

// ---- datasets for train / eval

struct DataArgs {
  std::string manifest;
  std::size_t generate = 0;
  std::uint64_t data_seed = 42;
};

void add_data_flags(CLI::App* app, DataArgs& d) {
  auto* m = app->add_option("--manifest", d.manifest, "dataset manifest JSON")->check(CLI::ExistingFile);
  auto* g = app->add_option("--generate", d.generate, "synthesize N mixed scenarios instead of reading a manifest");
  m->excludes(g);
  app->add_option("--data-seed", d.data_seed, "base seed for --generate")->capture_default_str();
}

json data_json(const DataArgs& d) {
  return {{"manifest", d.manifest}, {"generate", d.generate}, {"data_seed", d.data_seed}};
}

std::vector<EvalScenario> load_data(const DataArgs& d) {
  std::vector<EvalScenario> out;
  if (!d.manifest.empty()) {
    for (const auto& e : read_manifest(d.manifest))
      out.push_back({e.id, read_beat(e.beat_path), ground_truth_from_json(read_json(e.truth_path))});
  } else if (d.generate > 0) {
    const auto scen = mixed_scenarios(d.generate, d.data_seed);
    for (std::size_t i = 0; i < scen.size(); ++i) {
      auto r = synthesize_beat(scen[i]);
      out.push_back({numbered("gen", i), std::move(r.beat), std::move(r.truth)});
    }
  } else {
    throw ConfigError("give --manifest FILE or --generate N");
  }
  if (out.empty()) throw ConfigError("dataset is empty");
  return out;
}

// ---- train

struct TrainArgs {
  DataArgs data;
  TrainConfig tc;
  LossWeights lw;
  std::uint64_t init_seed = 7;
  bool no_mirror = false;
  std::string out;
  std::string prefix = "dsc";
};

int cmd_train(TrainArgs a) {
  a.tc.mirror = !a.no_mirror;
  a.tc.validate();
  a.lw.validate();
  const DetectorArch arch;
  log_config("train", {{"data", data_json(a.data)}, {"learning_rate", a.tc.learning_rate},
                       {"momentum", a.tc.momentum}, {"epochs", a.tc.epochs}, {"batch_size", a.tc.batch_size},
                       {"seed", a.tc.seed}, {"init_seed", a.init_seed}, {"mirror", a.tc.mirror},
                       {"alpha", a.lw.alpha}, {"beta", a.lw.beta}, {"out", a.out}, {"prefix", a.prefix}});
  const auto data = load_data(a.data);
  std::vector<TrainExample> set;
  for (const auto& s : data) set.push_back(make_example(s.beat, s.truth, arch));
  auto model = make_model(arch, a.init_seed);
  const auto trace = train(model, set, a.tc, a.lw, [](int e, const LossValue& v) {
    std::printf("epoch %3d  ciou %.4f  cls %.4f  dfl %.4f  total %.4f\n", e, v.ciou, v.cls, v.dfl, v.total);
    std::fflush(stdout);
  });
  save_weights(model, join(a.out, a.prefix + ".dscw"));
  write_text_atomic(join(a.out, a.prefix + "_loss.csv"), trace_csv(trace));
  std::printf("trained on %zu examples; weights %s\n", set.size(), join(a.out, a.prefix + ".dscw").c_str());
  return 0;
}

// ---- eval

struct EvalArgs {
  DataArgs data;
  std::string weights;
  int jobs = 1;
  std::string out;
  std::string prefix = "report";
  PipelineConfig cfg;
};

int cmd_eval(const EvalArgs& a) {
  if (a.jobs < 1) throw ConfigError("--jobs must be at least 1");
  a.cfg.window.validate();
  log_config("eval", {{"data", data_json(a.data)}, {"weights", a.weights}, {"jobs", a.jobs}, {"out", a.out},
                      {"prefix", a.prefix}, {"window", window_json(a.cfg.window)},
                      {"threshold", a.cfg.infer.score_threshold}, {"nms_iou", a.cfg.infer.nms_iou}});
  std::optional<DetectorModel> model;
  if (!a.weights.empty()) model = load_weights(a.weights);
  const auto data = load_data(a.data);
  const auto rep = compare_baselines(data, model ? &*model : nullptr, a.cfg, a.jobs);
  write_text_atomic(join(a.out, a.prefix + ".csv"), report_csv(rep));
  write_json(join(a.out, a.prefix + ".json"), report_json(rep));
  std::printf("%-10s %8s %10s %10s %9s %6s\n", "detector", "mAP@0.5", "mAP50:95", "acc_pct", "mae_bpm", "rows");
  for (const auto& s : rep.summary)
    std::printf("%-10s %8.3f %10.3f %10.1f %9.2f %6zu\n", s.detector.c_str(), s.map.map50, s.map.map5095,
                s.rr.accuracy_pct, s.rr.mae_bpm, s.rows);
  return 0;
}

// ---- gradcheck

int cmd_gradcheck(std::uint64_t seed, const std::string& out) {
  log_config("gradcheck", {{"seed", seed}, {"out", out}});
  const auto entries = run_gradcheck_suite(seed);
  json arr = json::array();
  bool ok = true;
  for (const auto& e : entries) {
    ok = ok && e.pass();
    std::printf("%s  %s tol=%.0e\n", e.pass() ? "PASS" : "FAIL", describe(e.report).c_str(), e.tolerance);
    arr.push_back({{"name", e.report.name}, {"pass", e.pass()}, {"tolerance", e.tolerance},
                   {"checked", e.report.checked}, {"skipped_kinks", e.report.skipped_kinks},
                   {"max_rel_error", e.report.max_rel_error}, {"worst_index", e.report.worst_index},
                   {"worst_analytic", e.report.worst_analytic}, {"worst_numeric", e.report.worst_numeric}});
  }
  write_json(join(out, "gradcheck.json"), {{"pass", ok}, {"checks", arr}});
  std::printf("%s\n", ok ? "all gradient checks passed" : "gradient check FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Respiration-rate estimation from CW radar beat signals"};
  app.require_subcommand(1);
  const std::string out_help = std::string("output directory (default $") + kOutEnv + " or .)";

  SynthArgs sa;
  sa.out = default_out_dir();
  auto* synth = app.add_subcommand("synth", "synthesize beat signals with ground truth");
  synth->add_option("--scenario", sa.scenario, "scenario JSON")->check(CLI::ExistingFile);
  synth->add_option("--family", sa.family, "clean | rbm | pure_rbm | mixed (without --scenario)")->capture_default_str();
  auto* seed_opt = synth->add_option("--seed", sa.seed, "scenario seed (base seed with --count)")->capture_default_str();
  auto* count_opt = synth->add_option("--count", sa.count, "write N numbered scenarios");
  synth->add_option("--out", sa.out, out_help);
  synth->add_option("--prefix", sa.prefix, "file name stem")->capture_default_str();
  synth->add_flag("--csv", sa.csv, "also write the beat as CSV");

  SpecArgs pa;
  pa.out = default_out_dir();
  auto* spec = app.add_subcommand("spectrogram", "STFT image, magnitude CSV and ridge CSV");
  spec->add_option("--beat", pa.beat, "beat signal file")->required()->check(CLI::ExistingFile);
  spec->add_option("--out", pa.out, out_help);
  spec->add_option("--prefix", pa.prefix, "file name stem")->capture_default_str();
  spec->add_option("--format", pa.format, "png | pgm")->check(CLI::IsMember({"png", "pgm"}))->capture_default_str();
  spec->add_option("--rows", pa.grid.out_f_bins, "image rows (frequency)")->capture_default_str();
  spec->add_option("--cols", pa.grid.out_t_bins, "image columns (time)")->capture_default_str();
  add_window_flags(spec, pa.window);

  DetectorArgs da;
  da.out = default_out_dir();
  da.prefix = "detect";
  auto* det = app.add_subcommand("detect", "find quasi-stationary intervals");
  add_detector_flags(det, da);
  det->add_option("--out", da.out, out_help);
  det->add_option("--prefix", da.prefix, "file name stem")->capture_default_str();

  DetectorArgs ea;
  ea.out = default_out_dir();
  ea.prefix = "estimate";
  std::string intervals_path;
  bool fft_baseline = false;
  auto* est = app.add_subcommand("estimate", "respiration rate per interval");
  add_detector_flags(est, ea);
  auto* iv_opt = est->add_option("--intervals", intervals_path, "intervals JSON from detect")->check(CLI::ExistingFile);
  auto* fft_opt = est->add_flag("--fft-baseline", fft_baseline, "whole-signal phase FFT instead of intervals");
  iv_opt->excludes(fft_opt);
  est->add_option("--out", ea.out, out_help);
  est->add_option("--prefix", ea.prefix, "file name stem")->capture_default_str();

  TrainArgs ta;
  ta.out = default_out_dir();
  auto* tr = app.add_subcommand("train", "train the DSC interval detector");
  add_data_flags(tr, ta.data);
  tr->add_option("--epochs", ta.tc.epochs)->capture_default_str();
  tr->add_option("--lr", ta.tc.learning_rate)->capture_default_str();
  tr->add_option("--momentum", ta.tc.momentum)->capture_default_str();
  tr->add_option("--batch", ta.tc.batch_size)->capture_default_str();
  tr->add_option("--seed", ta.tc.seed, "shuffle / augmentation seed")->capture_default_str();
  tr->add_option("--init-seed", ta.init_seed, "weight initialisation seed")->capture_default_str();
  tr->add_option("--alpha", ta.lw.alpha, "CIoU weight")->capture_default_str();
  tr->add_option("--beta", ta.lw.beta, "classification weight")->capture_default_str();
  tr->add_flag("--no-mirror", ta.no_mirror, "disable time-flip augmentation");
  tr->add_option("--out", ta.out, out_help);
  tr->add_option("--prefix", ta.prefix, "file name stem")->capture_default_str();

  EvalArgs va;
  va.out = default_out_dir();
  auto* ev = app.add_subcommand("eval", "compare FFT, classical, DSC and oracle pipelines");
  add_data_flags(ev, va.data);
  ev->add_option("--weights", va.weights, "DSC weights (omit to skip the DSC row)")->check(CLI::ExistingFile);
  ev->add_option("--jobs", va.jobs, "parallel scenarios")->capture_default_str();
  ev->add_option("--threshold", va.cfg.infer.score_threshold)->capture_default_str();
  ev->add_option("--nms-iou", va.cfg.infer.nms_iou)->capture_default_str();
  ev->add_option("--out", va.out, out_help);
  ev->add_option("--prefix", va.prefix, "file name stem")->capture_default_str();
  add_window_flags(ev, va.cfg.window);

  std::uint64_t gc_seed = 7;
  std::string gc_out = default_out_dir();
  auto* gc = app.add_subcommand("gradcheck", "finite-difference verification of all backward passes");
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_option("--out", gc_out, out_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(sa, seed_opt->count() > 0, count_opt->count() > 0);
    if (*spec) return cmd_spectrogram(pa);
    if (*det) return cmd_detect(da);
    if (*est) return cmd_estimate(ea, intervals_path, fft_baseline);
    if (*tr) return cmd_train(ta);
    if (*ev) return cmd_eval(va);
    if (*gc) return cmd_gradcheck(gc_seed, gc_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
