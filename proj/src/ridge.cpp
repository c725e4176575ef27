#include "vitalrr/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "vitalrr/error.hpp"
#include "vitalrr/fft.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

RidgeTrack extract_ridge(const Spectrogram& spec) {
  if (spec.t_bins() == 0) throw ShapeError("empty spectrogram");
  RidgeTrack ridge;
  ridge.t0_s = spec.first_time_s();
  ridge.dt_s = spec.column_step_s();
  ridge.frequency_hz.resize(spec.t_bins());
  ridge.magnitude.resize(spec.t_bins());
  for (int t = 0; t < spec.t_bins(); ++t) {
    const auto col = spec.column(t);
    int best = 0;
    for (int k = 1; k < spec.f_bins(); ++k) {
      if (col[k] > col[best] ||
          (col[k] == col[best] && std::abs(spec.frequency_hz(k)) < std::abs(spec.frequency_hz(best)))) {
        best = k;
      }
    }
    ridge.frequency_hz[t] = spec.frequency_hz(best);
    ridge.magnitude[t] = col[best];
  }
  return ridge;
}

std::vector<RidgeTrack> truncate_ridge(const RidgeTrack& ridge,
                                       const std::vector<SliceInterval>& intervals) {
  std::vector<RidgeTrack> out;
  for (const auto& iv : intervals) {
    RidgeTrack seg;
    seg.dt_s = ridge.dt_s;
    bool first = true;
    for (std::size_t i = 0; i < ridge.size(); ++i) {
      // Tolerance absorbs rounding in t0 + i * dt.
      const double t = ridge.time_s(i);
      const double eps = 1e-9 * std::max(1.0, std::abs(t));
      if (t < iv.start_s - eps || t > iv.end_s + eps) continue;
      if (first) {
        seg.t0_s = t;
        first = false;
      }
      seg.frequency_hz.push_back(ridge.frequency_hz[i]);
      seg.magnitude.push_back(ridge.magnitude[i]);
    }
    if (!seg.frequency_hz.empty()) out.push_back(std::move(seg));
  }
  return out;
}

RrEstimate dominant_rate(std::span<const double> series, double sample_rate_hz,
                         const RrConfig& cfg) {
  const double duration = static_cast<double>(series.size()) / sample_rate_hz;
  if (duration < cfg.min_duration_s) {
    throw TooShortError("segment of " + std::to_string(duration) + " s is shorter than " +
                            std::to_string(cfg.min_duration_s) + " s",
                        duration);
  }
  const std::size_t n = series.size();
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double energy = 0.0;
  for (double v : series) energy += (v - mean) * (v - mean);
  const double floor = 1e-9 * std::max(1.0, std::abs(mean));
  if (energy <= floor * floor * static_cast<double>(n)) {
    throw NoPeakError("series has no oscillation");
  }

  std::size_t nfft = 1;
  while (nfft < std::max<std::size_t>(8 * n, static_cast<std::size_t>(cfg.min_fft_size))) nfft <<= 1;
  const auto taper = hann_window(static_cast<int>(n));
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (series[i] - mean) * taper[i];
  fft_forward(buf);

  const std::size_t half = nfft / 2;
  std::vector<double> power(half + 1);
  for (std::size_t k = 0; k <= half; ++k) power[k] = std::norm(buf[k]);
  const double df = sample_rate_hz / static_cast<double>(nfft);
  const auto lo = static_cast<std::size_t>(std::ceil(cfg.band_lo_hz / df));
  const auto hi = std::min(half, static_cast<std::size_t>(std::floor(cfg.band_hi_hz / df)));
  if (lo > hi) throw NoPeakError("respiration band is narrower than one bin");

  std::size_t peak = lo;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (power[k] > power[peak]) peak = k;
  }
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double ratio = median > 0.0 ? power[peak] / median : INFINITY;
  if (!(power[peak] > 0.0) || ratio < cfg.min_peak_to_median) {
    throw NoPeakError("no spectral peak above the noise criterion in the respiration band");
  }

  double offset = 0.0;
  if (peak > 0 && peak < half) {
    const double a = power[peak - 1], b = power[peak], c = power[peak + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  const double f = std::clamp((static_cast<double>(peak) + offset) * df, cfg.band_lo_hz, cfg.band_hi_hz);

  RrEstimate est;
  est.rr_bpm = 60.0 * f;
  est.confidence = std::isfinite(ratio) ? std::clamp(1.0 - 1.0 / ratio, 0.0, 1.0) : 1.0;
  est.valid = true;
  return est;
}

RrEstimate estimate_rr(const RidgeTrack& segment, const RrConfig& cfg) {
  if (!(segment.dt_s > 0.0)) throw TooShortError("empty ridge segment", 0.0);
  RrEstimate est = dominant_rate(segment.frequency_hz, 1.0 / segment.dt_s, cfg);
  est.interval = {segment.t0_s, segment.time_s(segment.size() - 1), est.confidence};
  return est;
}

std::vector<double> unwrap_phase(const BeatSignal& beat) {
  std::vector<double> phase(beat.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < beat.size(); ++i) {
    const double p = std::arg(beat.samples[i]);
    if (i > 0) {
      const double d = p + offset - phase[i - 1];
      offset -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
    }
    phase[i] = p + offset;
  }
  return phase;
}

RrEstimate estimate_rr_fft_baseline(const BeatSignal& beat, const RrConfig& cfg) {
  auto phase = unwrap_phase(beat);
  const std::size_t n = phase.size();
  if (n >= 2) {
    // Least-squares linear detrend.
    double st = 0.0, sp = 0.0, stt = 0.0, stp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i);
      st += t;
      sp += phase[i];
      stt += t * t;
      stp += t * phase[i];
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * stp - st * sp) / (dn * stt - st * st);
    const double icpt = (sp - slope * st) / dn;
    for (std::size_t i = 0; i < n; ++i) phase[i] -= icpt + slope * static_cast<double>(i);
  }
  RrEstimate est = dominant_rate(phase, beat.sampling_rate_hz, cfg);
  est.interval = {0.0, beat.duration_s(), est.confidence};
  return est;
}

void write_ridge_csv(const std::string& path, const RidgeTrack& ridge) {
  std::string text = "t_s,f_hz,mag\n";
  char line[96];
  for (std::size_t i = 0; i < ridge.size(); ++i) {
    std::snprintf(line, sizeof line, "%.4f,%.6f,%.9g\n", ridge.time_s(i), ridge.frequency_hz[i],
                  ridge.magnitude[i]);
    text += line;
  }
  write_text_atomic(path, text);
}

nlohmann::json to_json(const RrEstimate& est) {
  return {{"interval", {{"start_s", est.interval.start_s}, {"end_s", est.interval.end_s},
                        {"score", est.interval.score}}},
          {"rr_bpm", est.rr_bpm},
          {"confidence", est.confidence},
          {"valid", est.valid}};
}

}  // namespace vitalrr
