// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vitalrr/classical.hpp"
#include "vitalrr/dataset.hpp"
#include "vitalrr/eval.hpp"
#include "vitalrr/gradcheck_suite.hpp"
#include "vitalrr/image.hpp"
#include "vitalrr/io.hpp"
#include "vitalrr/model.hpp"
#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/spectrogram.hpp"
#include "vitalrr/synth.hpp"
#include "vitalrr/train.hpp"

using namespace vitalrr;
namespace fs = std::filesystem;

namespace {

// 1
constexpr double kDegeneracyTolF32 = 1e-6;
constexpr double kDegeneracyTolF64 = 0.0;
// 2
constexpr double kGradTol = 1e-4;
constexpr double kNetworkGradTol = 1e-3;
// 3
constexpr double kParsevalTol = 1e-6;
// 4
constexpr double kCleanMaeBpm = 0.5;
constexpr double kCleanAccuracyPct = 100.0;
// 5
constexpr int kRbmScenarios = 200;
constexpr double kRbmOracleAccuracyPct = 90.0;
constexpr double kRbmMaeMarginBpm = 0.2;
constexpr double kFftMinInaccuratePct = 15.0;
// 6
constexpr int kClassicalScenarios = 100;
constexpr double kClassicalMedianIou = 0.6;
constexpr int kPureRbmScenarios = 100;
constexpr double kPureRbmEmptyPct = 95.0;
// 7
constexpr std::size_t kTrainCount = 500;
constexpr std::size_t kTestCount = 100;
constexpr std::uint64_t kSplitSeed = 42;
constexpr std::uint64_t kInitSeed = 7;
constexpr int kEpochs = 40;
constexpr int kBatch = 1;
constexpr double kLearningRate = 0.01;
constexpr double kMinMap50 = 0.5;
constexpr double kMaxMaeGapBpm = 0.5;
constexpr int kSmoothWindow = 10;
constexpr double kMaxRuntimeS = 30.0 * 60.0;

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, Clock::time_point t0) {
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("criterion %d %s  %s: %s  (%.1f s)\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str(), s);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <typename T>
void fill(std::vector<T>& v, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  for (auto& x : v) x = static_cast<T>(d(rng));
}

void criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double err64 = 0.0, err32 = 0.0;
  for (auto axis : {SnakeAxis::Horizontal, SnakeAxis::Vertical}) {
    DscSpec<double> s(axis, 4, 5);
    fill(s.main.weight, rng);
    fill(s.main.bias, rng);
    Tensor<double> x(2, 4, 16, 24);
    fill(x.values(), rng);
    const auto a = dsc_forward(x, s), b = conv2d_forward(x, s.main);
    for (std::size_t i = 0; i < a.size(); ++i) err64 = std::max(err64, std::abs(a.values()[i] - b.values()[i]));
    DscSpec<float> sf(axis, 4, 5);
    sf.main = s.main.cast<float>();
    const auto xf = x.cast<float>();
    const auto af = dsc_forward(xf, sf), bf = conv2d_forward(xf, sf.main);
    for (std::size_t i = 0; i < af.size(); ++i)
      err32 = std::max(err32, static_cast<double>(std::abs(af.values()[i] - bf.values()[i])));
  }
  report(1, err64 <= kDegeneracyTolF64 && err32 <= kDegeneracyTolF32, "DSC degeneracy",
         fmt("max|dsc - axial conv| f64=%.3g f32=%.3g", err64, err32), t0);
}

void criterion2() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string worst;
  double worst_err = 0.0;
  for (const auto& e : run_gradcheck_suite()) {
    const double tol = e.report.name == "network" ? kNetworkGradTol : kGradTol;
    ok = ok && e.report.checked > 0 && e.report.max_rel_error < tol;
    if (e.report.name != "network" && e.report.max_rel_error >= worst_err) {
      worst_err = e.report.max_rel_error;
      worst = e.report.name;
    }
  }
  report(2, ok, "gradient suite", fmt("worst %s rel err %.3g (tol %.0e)", worst.c_str(), worst_err, kGradTol), t0);
}

void criterion3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 1.0);
  BeatSignal beat;
  for (int i = 0; i < 600; ++i) beat.samples.emplace_back(d(rng), d(rng));
  const auto spec = stft(beat);
  const auto energy = column_energy(spec);
  const auto w = hann_window(spec.window().window_len);
  double worst = 0.0;
  for (int t = 0; t < spec.t_bins(); ++t) {
    double e = 0.0;
    for (int i = 0; i < spec.window().window_len; ++i)
      e += std::norm(w[i] * beat.samples[t * spec.window().hop + i]);
    worst = std::max(worst, std::abs(energy[t] - e) / e);
  }
  int misplaced = 0, tones = 0;
  const double df = beat.sampling_rate_hz / spec.window().fft_size;
  for (int k0 = -128; k0 < 128; k0 += 5) {
    BeatSignal tone;
    for (int n = 0; n < 300; ++n)
      tone.samples.push_back(std::polar(1.0, 2.0 * std::numbers::pi * k0 * df * n / tone.sampling_rate_hz));
    const auto ts = stft(tone);
    ++tones;
    for (int t = 0; t < ts.t_bins(); ++t) {
      const auto col = ts.column(t);
      if (std::max_element(col.begin(), col.end()) - col.begin() != 128 + k0) {
        ++misplaced;
        break;
      }
    }
  }
  report(3, worst < kParsevalTol && misplaced == 0, "STFT correctness",
         fmt("Parseval worst rel %.3g; %d/%d on-grid tones off-bin", worst, misplaced, tones), t0);
}

void criterion4() {
  const auto t0 = Clock::now();
  std::vector<RrPair> pairs;
  for (int i = 0; i <= 7; ++i) {
    const double fr = 0.15 + 0.05 * i;
    const auto res = synthesize_beat(clean_scenario(fr));
    for (const auto& item : run_pipeline(res.beat, DetectorKind::Oracle, nullptr, &res.truth)) {
      pairs.push_back({item.rr.valid ? std::optional<double>(item.rr.rr_bpm) : std::nullopt, 60.0 * fr});
    }
  }
  const auto m = rr_metrics(pairs);
  report(4, m.mae_bpm <= kCleanMaeBpm && m.accuracy_pct >= kCleanAccuracyPct, "clean RR recovery",
         fmt("%zu rates, MAE %.3f bpm, %.1f%% within 3 bpm", pairs.size(), m.mae_bpm, m.accuracy_pct), t0);
}

std::vector<EvalScenario> family_set(ScenarioFamily fam, int count, std::uint64_t base) {
  std::vector<EvalScenario> out;
  for (int i = 0; i < count; ++i) {
    auto r = synthesize_beat(make_scenario(fam, scenario_seed(base, i)));
    out.push_back({std::to_string(i), std::move(r.beat), std::move(r.truth)});
  }
  return out;
}

const DetectorSummary& summary(const EvalReport& r, const std::string& name) {
  for (const auto& s : r.summary)
    if (s.detector == name) return s;
  throw Error("no summary for " + name);
}

void criterion5() {
  const auto t0 = Clock::now();
  const auto rep = compare_baselines(family_set(ScenarioFamily::Rbm, kRbmScenarios, 5005), nullptr);
  const auto& o = summary(rep, "oracle");
  const auto& f = summary(rep, "fft");
  const bool ok = o.rr.accuracy_pct >= kRbmOracleAccuracyPct && o.rr.mae_bpm <= f.rr.mae_bpm - kRbmMaeMarginBpm &&
                  100.0 - f.rr.accuracy_pct >= kFftMinInaccuratePct;
  report(5, ok, "RBM motivation",
         fmt("truncated/oracle acc %.1f%% MAE %.2f; FFT acc %.1f%% MAE %.2f (%d scenarios)", o.rr.accuracy_pct,
             o.rr.mae_bpm, f.rr.accuracy_pct, f.rr.mae_bpm, kRbmScenarios),
         t0);
}

void criterion6() {
  const auto t0 = Clock::now();
  std::vector<double> ious;
  for (const auto& sc : mixed_scenarios(kClassicalScenarios, 6006)) {
    const auto r = synthesize_beat(sc);
    const auto gt = truth_intervals(r.truth);
    if (gt.empty()) continue;
    ious.push_back(set_time_iou(classical_detect(stft(r.beat)), gt));
  }
  std::sort(ious.begin(), ious.end());
  const double median = ious.size() % 2 ? ious[ious.size() / 2]
                                        : 0.5 * (ious[ious.size() / 2 - 1] + ious[ious.size() / 2]);
  int empty = 0;
  for (const auto& sc : family_set(ScenarioFamily::PureRbm, kPureRbmScenarios, 6106))
    empty += classical_detect(stft(sc.beat)).empty() ? 1 : 0;
  const double empty_pct = 100.0 * empty / kPureRbmScenarios;
  report(6, median >= kClassicalMedianIou && empty_pct >= kPureRbmEmptyPct, "classical detector",
         fmt("median time-IoU %.3f over %zu scenarios; empty on %.0f%% of %d pure-RBM", median, ious.size(),
             empty_pct, kPureRbmScenarios),
         t0);
}

bool smoothed_decrease(const std::vector<double>& v) {
  const auto s = moving_average(v, kSmoothWindow);
  return s.size() >= 2 && s.back() < s.front();
}

void criterion7() {
  const auto t0 = Clock::now();
  const DetectorArch arch;
  const auto scen = mixed_scenarios(kTrainCount + kTestCount, kSplitSeed);
  std::vector<TrainExample> train_set;
  std::vector<EvalScenario> test;
  for (std::size_t i = 0; i < scen.size(); ++i) {
    auto r = synthesize_beat(scen[i]);
    if (i < kTrainCount) {
      train_set.push_back(make_example(r.beat, r.truth, arch));
    } else {
      test.push_back({std::to_string(i), std::move(r.beat), std::move(r.truth)});
    }
  }
  auto model = make_model(arch, kInitSeed);
  TrainConfig tc;
  tc.epochs = kEpochs;
  tc.batch_size = kBatch;
  tc.learning_rate = kLearningRate;
  const auto trace = train(model, train_set, tc, LossWeights{}, [](int e, const LossValue& v) {
    std::printf("  epoch %2d  ciou %.4f  cls %.4f  dfl %.4f  total %.4f\n", e, v.ciou, v.cls, v.dfl, v.total);
    std::fflush(stdout);
  });
  std::vector<double> ciou, cls, dfl;
  for (const auto& v : trace.epochs) {
    ciou.push_back(v.ciou);
    cls.push_back(v.cls);
    dfl.push_back(v.dfl);
  }
  const bool falling = smoothed_decrease(ciou) && smoothed_decrease(cls) && smoothed_decrease(dfl);
  const auto rep = compare_baselines(test, &model);
  const auto& d = summary(rep, "dsc");
  const auto& o = summary(rep, "oracle");
  const double runtime = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool ok = d.map.map50 >= kMinMap50 && d.rr.mae_bpm - o.rr.mae_bpm <= kMaxMaeGapBpm && falling &&
                  runtime <= kMaxRuntimeS;
  report(7, ok, "trained DSC detector",
         fmt("mAP@0.5 %.3f (mAP50:95 %.3f); MAE dsc %.2f vs oracle %.2f bpm (gap %.2f); acc %.1f%%; "
             "smoothed losses %s",
             d.map.map50, d.map.map5095, d.rr.mae_bpm, o.rr.mae_bpm, d.rr.mae_bpm - o.rr.mae_bpm, d.rr.accuracy_pct,
             falling ? "decrease" : "do not all decrease"),
         t0);
}

void criterion8() {
  const auto t0 = Clock::now();
  auto synth_bytes = [] {
    std::vector<unsigned char> out;
    for (const auto& sc : mixed_scenarios(10, 808)) {
      const auto r = synthesize_beat(sc);
      const auto b = encode_beat(r.beat);
      out.insert(out.end(), b.begin(), b.end());
      const auto j = to_json(r.truth).dump();
      out.insert(out.end(), j.begin(), j.end());
    }
    return out;
  };
  const bool synth_same = synth_bytes() == synth_bytes();

  DetectorArch arch;
  std::vector<TrainExample> set;
  std::vector<EvalScenario> scen;
  const auto cfgs = mixed_scenarios(6, 818);
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    auto r = synthesize_beat(cfgs[i]);
    set.push_back(make_example(r.beat, r.truth, arch));
    scen.push_back({std::to_string(i), std::move(r.beat), std::move(r.truth)});
  }
  auto train_bytes = [&] {
    auto m = make_model(arch, 3);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 2;
    const auto trace = train(m, set, tc, LossWeights{});
    auto w = encode_weights(m);
    const auto csv = trace_csv(trace);
    w.insert(w.end(), csv.begin(), csv.end());
    return std::make_pair(w, m);
  };
  const auto [w1, m1] = train_bytes();
  const auto [w2, m2] = train_bytes();
  const bool train_same = w1 == w2;

  auto eval_text = [&](int jobs) {
    const auto rep = compare_baselines(scen, &m1, {}, jobs);
    return report_csv(rep) + report_json(rep).dump();
  };
  const bool eval_same = eval_text(1) == eval_text(1) && eval_text(1) == eval_text(3);
  report(8, synth_same && train_same && eval_same, "determinism",
         fmt("synth %s, train %s, eval %s", synth_same ? "identical" : "DIFFERS", train_same ? "identical" : "DIFFERS",
             eval_same ? "identical (jobs 1 and 3)" : "DIFFERS"),
         t0);
}

void criterion9() {
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "vitalrr_acceptance";
  fs::create_directories(dir);

  const auto model = make_model(DetectorArch{}, 99);
  const auto wpath = (dir / "w.dscw").string();
  save_weights(model, wpath);
  const auto back = load_weights(wpath);
  const auto a = model.flatten(), b = back.flatten();
  const bool weights_ok = back.arch == model.arch && a.size() == b.size() &&
                          std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0 &&
                          encode_weights(back) == read_file(wpath);

  const auto beat = synthesize_beat(make_scenario(ScenarioFamily::Rbm, 9)).beat;
  const auto bpath = (dir / "b.beat").string();
  write_beat(bpath, beat);
  const auto rb = read_beat(bpath);
  bool beat_ok = rb.size() == beat.size() && rb.sampling_rate_hz == beat.sampling_rate_hz &&
                 encode_beat(rb) == read_file(bpath);
  for (std::size_t i = 0; beat_ok && i < beat.size(); ++i) {
    beat_ok = rb.samples[i].real() == static_cast<double>(static_cast<float>(beat.samples[i].real())) &&
              rb.samples[i].imag() == static_cast<double>(static_cast<float>(beat.samples[i].imag()));
  }

  // fixture patterns with hand-written byte references
  struct Fixture {
    int rows, cols;
    std::vector<float> px;
    std::vector<unsigned char> body;
  };
  const std::vector<Fixture> fixtures = {
      {2, 3, {0, 1, 0, 1, 0, 1}, {0, 255, 0, 255, 0, 255}},
      {1, 4, {0.0f, 0.25f, 0.5f, 1.0f}, {0, 64, 128, 255}},
      {3, 1, {-2.0f, 0.75f, 7.0f}, {0, 191, 255}},
  };
  bool pgm_ok = true;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const auto& f = fixtures[i];
    DetectorImage img;
    img.rows = f.rows;
    img.cols = f.cols;
    img.pixels = f.px;
    const std::string header = "P5\n" + std::to_string(f.cols) + " " + std::to_string(f.rows) + "\n255\n";
    std::vector<unsigned char> expect(header.begin(), header.end());
    expect.insert(expect.end(), f.body.begin(), f.body.end());
    const auto path = (dir / ("f" + std::to_string(i) + ".pgm")).string();
    export_image(img, path, ImageFormat::Pgm);
    pgm_ok = pgm_ok && read_file(path) == expect;
  }
  fs::remove_all(dir);
  report(9, weights_ok && beat_ok && pgm_ok, "round trips",
         fmt("weights %s, beat %s, PGM fixtures %s", weights_ok ? "bit-identical" : "DIFFER",
             beat_ok ? "bit-identical" : "DIFFER", pgm_ok ? "byte-exact" : "DIFFER"),
         t0);
}

}  // namespace

int main(int argc, char** argv) {
  // optional list of criterion numbers to run, e.g. `acceptance 1 2 3`
  std::vector<std::function<void()>> all = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9};
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));
  if (pick.empty())
    for (int i = 1; i <= 9; ++i) pick.push_back(i);
  for (int id : pick) {
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "no criterion %d\n", id);
      return 2;
    }
    try {
      all[id - 1]();
    } catch (const std::exception& e) {
      std::printf("criterion %d FAIL  exception: %s\n", id, e.what());
      ++failures;
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, pick.size());
  return failures == 0 ? 0 : 1;
}
