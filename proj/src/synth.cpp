#include "vitalrr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vitalrr/error.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Gaussian smoothing width giving a -3 dB point near 2 Hz.
constexpr double kRbmSmoothingSigmaS = 0.066;
constexpr double kRbmDominance = 5.0;

enum class Stream : std::uint32_t { Rbm = 1, Noise = 2 };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), index};
  return std::mt19937_64(seq);
}

std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma_samples) {
  if (sigma_samples <= 0.0 || x.size() < 2) return x;
  const int half = static_cast<int>(std::ceil(4.0 * sigma_samples));
  std::vector<double> kernel(2 * half + 1);
  double norm = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double v = std::exp(-0.5 * (k * k) / (sigma_samples * sigma_samples));
    kernel[k + half] = v;
    norm += v;
  }
  for (double& v : kernel) v /= norm;
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      const int j = std::clamp(i + k, 0, n - 1);
      acc += kernel[k + half] * x[j];
    }
    out[i] = acc;
  }
  return out;
}

// Piecewise smoothstep: rises to 1 at u = 0.5 and returns to 0 at u = 1.
double cubic_bump(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double v = u < 0.5 ? 2.0 * u : 2.0 - 2.0 * u;
  return v * v * (3.0 - 2.0 * v);
}

}  // namespace

double breathing_displacement(const QuasiStationary& q, double t) {
  return q.a_r_m * std::sin(kTwoPi * q.f_r_hz * t + q.phase_r_rad) +
         q.a_h_m * std::sin(kTwoPi * q.f_h_hz * t + q.phase_h_rad);
}

std::vector<double> rbm_trajectory(const Rbm& rbm, double duration_s,
                                   std::span<const double> t_rel, std::mt19937_64& rng,
                                   double min_peak_m) {
  std::vector<double> out(t_rel.size(), 0.0);
  if (const auto* rw = std::get_if<RandomWalk>(&rbm.model)) {
    if (!(rw->step_sigma_m >= 0.0)) throw ConfigError("step_sigma_m must be >= 0");
    if (rw->step_sigma_m == 0.0 || out.empty()) return out;
    std::normal_distribution<double> step(0.0, rw->step_sigma_m);
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] + step(rng);
    const double dt = out.size() > 1 ? (t_rel.back() - t_rel.front()) / (out.size() - 1) : 1.0;
    out = gaussian_smooth(out, kRbmSmoothingSigmaS / dt);
    const double origin = out.front();
    for (double& v : out) v -= origin;
  } else {
    const double peak = std::get<PolynomialExcursion>(rbm.model).peak_m;
    if (!(peak > 0.0)) throw ConfigError("peak_m must be > 0");
    if (!(duration_s > 0.0)) throw ConfigError("RBM duration must be > 0");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = peak * cubic_bump(t_rel[i] / duration_s);
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0 && peak < min_peak_m) {
    const double gain = min_peak_m / peak;
    for (double& v : out) v *= gain;
  }
  return out;
}

std::vector<double> chest_displacement(const ScenarioConfig& scenario) {
  validate(scenario);
  const std::size_t n = scenario.sample_count();
  const double fs = scenario.sampling_rate_hz;
  const double min_peak = kRbmDominance * scenario.max_breathing_amplitude_m();
  std::vector<double> r(n, 0.0);

  std::size_t next = 0;
  for (std::size_t s = 0; s < scenario.segments.size() && next < n; ++s) {
    const Segment& seg = scenario.segments[s];
    const bool last = s + 1 == scenario.segments.size();
    const std::size_t begin = next;
    std::size_t end = begin;
    while (end < n && (last || static_cast<double>(end) / fs < seg.end_s)) ++end;
    next = end;
    if (begin == end) continue;

    std::vector<double> raw(end - begin, 0.0);
    if (const auto* q = std::get_if<QuasiStationary>(&seg.kind)) {
      for (std::size_t i = begin; i < end; ++i) raw[i - begin] = breathing_displacement(*q, i / fs);
    } else {
      const auto& rbm = std::get<Rbm>(seg.kind);
      std::vector<double> t_rel(end - begin);
      for (std::size_t i = begin; i < end; ++i) t_rel[i - begin] = i / fs - seg.start_s;
      auto rng = stream_rng(scenario.rng_seed, Stream::Rbm, static_cast<std::uint32_t>(s));
      raw = rbm_trajectory(rbm, seg.duration(), t_rel, rng, min_peak);
      if (rbm.breathing_still_present) {
        for (std::size_t i = begin; i < end; ++i) {
          raw[i - begin] += breathing_displacement(rbm.breathing, i / fs);
        }
      }
    }
    const double offset = begin == 0 ? 0.0 : r[begin - 1] - raw.front();
    for (std::size_t i = begin; i < end; ++i) r[i] = raw[i - begin] + offset;
  }
  return r;
}

SynthResult synthesize_beat(const ScenarioConfig& scenario) {
  SynthResult result;
  result.truth = ground_truth_intervals(scenario);
  result.truth.displacement_m = chest_displacement(scenario);
  const auto& r = result.truth.displacement_m;

  const double lambda = scenario.wavelength_m();
  const double k = 4.0 * std::numbers::pi / lambda;
  auto rng = stream_rng(scenario.rng_seed, Stream::Noise, 0);
  const bool noisy = scenario.noise.enabled;
  const double noise_std = std::sqrt(std::pow(10.0, -scenario.noise.snr_db / 10.0) / 2.0);
  std::normal_distribution<double> awgn(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);

  result.beat.sampling_rate_hz = scenario.sampling_rate_hz;
  result.beat.samples.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    double phase = k * (scenario.standoff_m + r[i]);
    if (scenario.noise.phase_noise_std_rad > 0.0) {
      phase += scenario.noise.phase_noise_std_rad * jitter(rng);
    }
    std::complex<double> s = std::polar(1.0, phase);
    if (noisy) s += std::complex<double>(noise_std * awgn(rng), noise_std * awgn(rng));
    result.beat.samples[i] = s;
  }
  return result;
}

std::vector<unsigned char> encode_beat(const BeatSignal& beat) {
  std::vector<unsigned char> out;
  out.reserve(16 + beat.size() * 8);
  for (char c : {'V', 'R', 'B', 'T'}) out.push_back(static_cast<unsigned char>(c));
  put_u16(out, 1);
  put_u16(out, 0);
  put_f32(out, static_cast<float>(beat.sampling_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(beat.size()));
  for (const auto& s : beat.samples) {
    put_f32(out, static_cast<float>(s.real()));
    put_f32(out, static_cast<float>(s.imag()));
  }
  return out;
}

BeatSignal decode_beat(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  std::array<unsigned char, 4> magic{};
  in.raw(magic);
  if (magic != std::array<unsigned char, 4>{'V', 'R', 'B', 'T'}) {
    throw FormatError("not a beat-signal file (bad magic)");
  }
  const std::uint16_t version = in.u16();
  if (version != 1) {
    throw VersionError("unsupported beat-signal version " + std::to_string(version));
  }
  in.u16();
  BeatSignal beat;
  beat.sampling_rate_hz = in.f32();
  if (!(beat.sampling_rate_hz > 0.0)) throw FormatError("beat-signal sampling rate must be > 0");
  const std::uint32_t n = in.u32();
  if (in.remaining() != static_cast<std::size_t>(n) * 8) {
    throw FormatError("beat-signal payload size does not match header");
  }
  beat.samples.resize(n);
  for (auto& s : beat.samples) {
    const float i = in.f32();
    const float q = in.f32();
    s = {i, q};
  }
  return beat;
}

void write_beat(const std::string& path, const BeatSignal& beat) {
  write_file_atomic(path, encode_beat(beat));
}

BeatSignal read_beat(const std::string& path) { return decode_beat(read_file(path)); }

void write_beat_csv(const std::string& path, const BeatSignal& beat) {
  std::string text = "t_s,i,q\n";
  char line[96];
  for (std::size_t n = 0; n < beat.size(); ++n) {
    std::snprintf(line, sizeof line, "%.6f,%.9g,%.9g\n", n / beat.sampling_rate_hz,
                  beat.samples[n].real(), beat.samples[n].imag());
    text += line;
  }
  write_text_atomic(path, text);
}

}  // namespace vitalrr
