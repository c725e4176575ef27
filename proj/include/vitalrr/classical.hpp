#pragma once

#include <span>
#include <vector>

#include "vitalrr/interval.hpp"
#include "vitalrr/ridge.hpp"
#include "vitalrr/spectrogram.hpp"

namespace vitalrr {

struct ClassicalConfig {
  double win_s = 6.0;
  double hop_s = 1.0;
  double threshold = 0.55;
  double rr_lo_hz = 0.1;
  double rr_hi_hz = 0.7;
  /// Peak ridge Doppler of nominal clean breathing (4 mm at 0.25 Hz, 60 GHz).
  double breathing_doppler_bound_hz = 2.5;
  /// Windows whose ridge excursion exceeds this multiple of the bound score 0.
  double gate_factor = 4.0;
  /// Shortest overlap (fraction of the window) used for a lag.
  double min_overlap_fraction = 0.25;
};

/// Maximum Pearson correlation between x[0, n-lag) and x[lag, n) over the
/// local peaks of the lag range (the last lag counts while still rising),
/// clipped at 0. An exact sinusoid scores 1 at its own period.
double max_normalized_autocorrelation(std::span<const double> x, std::size_t min_lag,
                                      std::size_t max_lag);

struct WindowScore {
  double start_s = 0.0;
  double end_s = 0.0;
  double periodicity = 0.0;
  double excursion_hz = 0.0;
  double score = 0.0;
};

/// Per-window periodicity scores over the ridge.
std::vector<WindowScore> classical_window_scores(const RidgeTrack& ridge,
                                                 const ClassicalConfig& cfg = {});

/// Periodicity detector: windows scoring above threshold are merged into
/// maximal intervals scored by their mean window score. Intervals reaching
/// the first or last window extend to the start or end of the signal.
/// Throws TooShortError if the spectrogram is shorter than one window.
std::vector<SliceInterval> classical_detect(const Spectrogram& spec,
                                            const ClassicalConfig& cfg = {});

}  // namespace vitalrr
