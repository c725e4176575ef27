#include "vitalrr/classical.hpp"

#include <algorithm>
#include <cmath>

#include "vitalrr/error.hpp"

namespace vitalrr {

namespace {

// Pearson correlation of x[0, n-lag) with x[lag, n); 0 for a degenerate overlap.
double lag_correlation(std::span<const double> x, std::size_t lag) {
  if (lag == 0) return 1.0;
  const std::size_t m = x.size() - lag;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ma += x[i];
    mb += x[i + lag];
  }
  ma /= static_cast<double>(m);
  mb /= static_cast<double>(m);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = x[i] - ma;
    const double b = x[i + lag] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double max_normalized_autocorrelation(std::span<const double> x, std::size_t min_lag,
                                      std::size_t max_lag) {
  const std::size_t n = x.size();
  const std::size_t lo = std::max<std::size_t>(min_lag, 1);
  const std::size_t hi = std::min(max_lag, n - 1);
  if (n < 2 || lo > hi) return 0.0;
  // Only local peaks in lag count: a correlation still decaying from lag 0
  // (smooth trends, slow drift) is not periodicity.
  std::vector<double> r(hi - lo + 3);
  for (std::size_t k = lo - 1; k <= hi + 1 && k < n; ++k) r[k - (lo - 1)] = lag_correlation(x, k);
  double best = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double v = r[k - (lo - 1)];
    const bool rising = v >= r[k - lo];
    const bool top = k == hi || v >= r[k - lo + 2];
    if (rising && top) best = std::max(best, v);
  }
  return std::min(best, 1.0);
}

std::vector<WindowScore> classical_window_scores(const RidgeTrack& ridge,
                                                 const ClassicalConfig& cfg) {
  if (!(cfg.win_s > 0.0 && cfg.hop_s > 0.0)) throw ConfigError("window and hop must be > 0");
  const double begin = ridge.t0_s - 0.5 * ridge.dt_s;
  const double end = begin + ridge.duration_s();
  if (ridge.size() == 0 || end - begin < cfg.win_s - 1e-9) {
    throw TooShortError("spectrogram shorter than the detection window", end - begin);
  }
  const double dt = ridge.dt_s;
  const auto min_lag = static_cast<std::size_t>(std::ceil(1.0 / cfg.rr_hi_hz / dt));
  const double bound = cfg.gate_factor * cfg.breathing_doppler_bound_hz;

  std::vector<WindowScore> scores;
  std::vector<double> x;
  for (double ws = begin; ws + cfg.win_s <= end + 1e-9; ws += cfg.hop_s) {
    x.clear();
    for (std::size_t i = 0; i < ridge.size(); ++i) {
      const double t = ridge.time_s(i);
      if (t >= ws && t < ws + cfg.win_s) x.push_back(ridge.frequency_hz[i]);
    }
    WindowScore w{ws, ws + cfg.win_s};
    if (x.size() >= 4) {
      // excursion is measured from 0 Hz: a still chest has no Doppler offset
      double mean = 0.0;
      for (double v : x) {
        mean += v;
        w.excursion_hz = std::max(w.excursion_hz, std::abs(v));
      }
      mean /= static_cast<double>(x.size());
      for (double& v : x) v -= mean;
      const auto overlap = static_cast<std::size_t>(std::ceil(cfg.min_overlap_fraction * x.size()));
      const auto max_lag = std::min(static_cast<std::size_t>(std::floor(1.0 / cfg.rr_lo_hz / dt)),
                                    x.size() - std::max<std::size_t>(overlap, 2));
      w.periodicity = max_normalized_autocorrelation(x, min_lag, max_lag);
      w.score = w.excursion_hz <= bound ? w.periodicity : 0.0;
    }
    scores.push_back(w);
  }
  return scores;
}

std::vector<SliceInterval> classical_detect(const Spectrogram& spec, const ClassicalConfig& cfg) {
  const RidgeTrack ridge = extract_ridge(spec);
  const auto windows = classical_window_scores(ridge, cfg);
  const double span_end = ridge.t0_s - 0.5 * ridge.dt_s + ridge.duration_s();

  std::vector<SliceInterval> out;
  double sum = 0.0;
  int count = 0;
  for (const auto& w : windows) {
    if (w.score < cfg.threshold) continue;
    if (count > 0 && w.start_s <= out.back().end_s + 1e-9) {
      out.back().end_s = std::max(out.back().end_s, w.end_s);
    } else {
      if (count > 0) out.back().score = sum / count;
      out.push_back({w.start_s, w.end_s, 0.0});
      sum = 0.0;
      count = 0;
    }
    sum += w.score;
    ++count;
  }
  if (count > 0) out.back().score = sum / count;
  // windows at either edge stand for the whole covered signal there
  const auto& win = spec.window();
  const double signal_end =
      (static_cast<double>(spec.t_bins() - 1) * win.hop + win.window_len) / spec.sampling_rate_hz();
  for (auto& iv : out) {
    iv.start_s = iv.start_s <= windows.front().start_s + 1e-9 ? 0.0 : std::max(iv.start_s, 0.0);
    iv.end_s = iv.end_s >= windows.back().end_s - 1e-9 ? signal_end : std::min(iv.end_s, span_end);
  }
  return out;
}

}  // namespace vitalrr
