#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitalrr/interval.hpp"
#include "vitalrr/spectrogram.hpp"

namespace vitalrr {

/// Per-column argmax frequency of a spectrogram plus the magnitude there.
struct RidgeTrack {
  std::vector<double> frequency_hz;
  std::vector<double> magnitude;
  double t0_s = 0.0;  // time of element 0
  double dt_s = 0.0;  // column spacing

  std::size_t size() const { return frequency_hz.size(); }
  double time_s(std::size_t i) const { return t0_s + static_cast<double>(i) * dt_s; }
  double duration_s() const { return static_cast<double>(size()) * dt_s; }
};

struct RrConfig {
  double band_lo_hz = 0.1;
  double band_hi_hz = 0.7;
  double min_duration_s = 5.0;
  /// Minimum in-band peak power relative to the spectrum median.
  double min_peak_to_median = 4.0;
  /// Minimum periodogram length (zero padding).
  int min_fft_size = 8192;
};

struct RrEstimate {
  double rr_bpm = 0.0;
  double confidence = 0.0;
  bool valid = false;
  SliceInterval interval{};
};

/// Argmax along frequency for every column. Ties go to the smaller |f|, then
/// to the lower row index.
RidgeTrack extract_ridge(const Spectrogram& spec);

/// One sub-track per interval holding the columns whose time lies in
/// [start_s, end_s]; intervals that select no column are dropped.
std::vector<RidgeTrack> truncate_ridge(const RidgeTrack& ridge,
                                       const std::vector<SliceInterval>& intervals);

/// Dominant in-band frequency of a uniformly sampled series: mean removal,
/// Hann taper, zero-padded periodogram, parabolic peak refinement.
/// Throws TooShortError or NoPeakError.
RrEstimate dominant_rate(std::span<const double> series, double sample_rate_hz,
                         const RrConfig& cfg = {});

/// RR from the ridge frequency oscillation of one truncated segment.
RrEstimate estimate_rr(const RidgeTrack& segment, const RrConfig& cfg = {});

/// Whole-signal baseline: periodogram of the unwrapped, detrended beat phase.
RrEstimate estimate_rr_fft_baseline(const BeatSignal& beat, const RrConfig& cfg = {});

std::vector<double> unwrap_phase(const BeatSignal& beat);

void write_ridge_csv(const std::string& path, const RidgeTrack& ridge);
nlohmann::json to_json(const RrEstimate& est);

}  // namespace vitalrr
