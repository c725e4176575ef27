#include "vitalrr/spectrogram.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "vitalrr/error.hpp"
#include "vitalrr/fft.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

void WindowConfig::validate() const {
  if (!(hop >= 1 && hop <= window_len && window_len <= fft_size)) {
    throw ConfigError("window config requires 1 <= hop <= window_len <= fft_size");
  }
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n < 2) return w;
  for (int m = 0; m < n; ++m) {
    w[m] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m / (n - 1));
  }
  return w;
}

Spectrogram::Spectrogram(std::vector<double> magnitude, int t_bins, int f_bins,
                         double sampling_rate_hz, WindowConfig window)
    : mag_(std::move(magnitude)),
      t_bins_(t_bins),
      f_bins_(f_bins),
      fs_(sampling_rate_hz),
      window_(window),
      t0_(0.5 * (window.window_len - 1) / sampling_rate_hz),
      dt_(window.hop / sampling_rate_hz) {
  if (mag_.size() != static_cast<std::size_t>(t_bins) * f_bins) {
    throw ShapeError("spectrogram data size does not match dimensions");
  }
}

double Spectrogram::magnitude_db(int t, int k) const {
  return 20.0 * std::log10(magnitude(t, k));
}

Spectrogram Spectrogram::scaled(double gain) const {
  std::vector<double> m = mag_;
  for (double& v : m) v *= gain;
  return Spectrogram(std::move(m), t_bins_, f_bins_, fs_, window_);
}

int stft_column_count(std::size_t n_samples, const WindowConfig& cfg) {
  if (n_samples < static_cast<std::size_t>(cfg.window_len)) return 0;
  return static_cast<int>((n_samples - cfg.window_len) / cfg.hop) + 1;
}

Spectrogram stft(const BeatSignal& beat, const WindowConfig& cfg) {
  cfg.validate();
  if (beat.size() < static_cast<std::size_t>(cfg.window_len)) {
    throw TooShortError("signal shorter than one STFT window", beat.duration_s());
  }
  const int t_bins = stft_column_count(beat.size(), cfg);
  const int f = cfg.fft_size;
  const auto w = hann_window(cfg.window_len);
  std::vector<double> mag(static_cast<std::size_t>(t_bins) * f);
  std::vector<std::complex<double>> buf(f);
  for (int t = 0; t < t_bins; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    const std::size_t offset = static_cast<std::size_t>(t) * cfg.hop;
    for (int m = 0; m < cfg.window_len; ++m) buf[m] = beat.samples[offset + m] * w[m];
    fft_forward(buf);
    double* col = mag.data() + static_cast<std::size_t>(t) * f;
    // fftshift: row k holds DFT bin (k + F/2) mod F.
    for (int k = 0; k < f; ++k) col[k] = std::abs(buf[(k + f / 2) % f]);
  }
  return Spectrogram(std::move(mag), t_bins, f, beat.sampling_rate_hz, cfg);
}

std::vector<double> column_energy(const Spectrogram& spec) {
  std::vector<double> e(spec.t_bins(), 0.0);
  for (int t = 0; t < spec.t_bins(); ++t) {
    for (double m : spec.column(t)) e[t] += m * m;
    e[t] /= spec.window().fft_size;
  }
  return e;
}

void write_spectrogram_csv(const std::string& path, const Spectrogram& spec) {
  std::string text = "freq_hz";
  char cell[48];
  for (int t = 0; t < spec.t_bins(); ++t) {
    std::snprintf(cell, sizeof cell, ",%.4f", spec.time_s(t));
    text += cell;
  }
  text += '\n';
  for (int k = 0; k < spec.f_bins(); ++k) {
    std::snprintf(cell, sizeof cell, "%.6f", spec.frequency_hz(k));
    text += cell;
    for (int t = 0; t < spec.t_bins(); ++t) {
      std::snprintf(cell, sizeof cell, ",%.9g", spec.magnitude(t, k));
      text += cell;
    }
    text += '\n';
  }
  write_text_atomic(path, text);
}

}  // namespace vitalrr
