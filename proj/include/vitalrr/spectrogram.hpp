#pragma once

#include <span>
#include <string>
#include <vector>

#include "vitalrr/synth.hpp"

namespace vitalrr {

struct WindowConfig {
  int window_len = 64;
  int hop = 2;
  int fft_size = 256;

  /// Throws ConfigError unless 1 <= hop <= window_len <= fft_size.
  void validate() const;
};

/// Symmetric Hann window of length n.
std::vector<double> hann_window(int n);

/// Magnitude STFT with DC centred. Column t covers samples
/// [t*hop, t*hop + window_len) and is stamped with the window-centre time.
/// Row k holds frequency (k - F/2) * fs / F, so row F/2 is DC.
class Spectrogram {
 public:
  Spectrogram(std::vector<double> magnitude, int t_bins, int f_bins, double sampling_rate_hz,
              WindowConfig window);

  int t_bins() const { return t_bins_; }
  int f_bins() const { return f_bins_; }
  double sampling_rate_hz() const { return fs_; }
  const WindowConfig& window() const { return window_; }

  double magnitude(int t, int k) const { return mag_[static_cast<std::size_t>(t) * f_bins_ + k]; }
  std::span<const double> column(int t) const {
    return {mag_.data() + static_cast<std::size_t>(t) * f_bins_, static_cast<std::size_t>(f_bins_)};
  }
  std::span<const double> data() const { return mag_; }
  /// 20 log10 magnitude; -inf for zero.
  double magnitude_db(int t, int k) const;

  double frequency_hz(int k) const { return (k - f_bins_ / 2) * fs_ / f_bins_; }
  double bin_width_hz() const { return fs_ / f_bins_; }
  double time_s(int t) const { return t0_ + t * dt_; }
  double first_time_s() const { return t0_; }
  double column_step_s() const { return dt_; }
  /// Span covered by all columns, [t0 - dt/2, t_last + dt/2].
  double duration_s() const { return t_bins_ * dt_; }

  Spectrogram scaled(double gain) const;

 private:
  std::vector<double> mag_;
  int t_bins_;
  int f_bins_;
  double fs_;
  WindowConfig window_;
  double t0_;
  double dt_;
};

/// Number of STFT columns for n samples: floor((n - M) / hop) + 1.
int stft_column_count(std::size_t n_samples, const WindowConfig& cfg);

/// Throws TooShortError when the beat is shorter than one window.
Spectrogram stft(const BeatSignal& beat, const WindowConfig& cfg = {});

/// Per-column energy sum_k |X|^2 / fft_size (for Parseval checks).
std::vector<double> column_energy(const Spectrogram& spec);

/// CSV: header row of column times, then one row per frequency bin.
void write_spectrogram_csv(const std::string& path, const Spectrogram& spec);

}  // namespace vitalrr
