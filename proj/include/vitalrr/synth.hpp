#pragma once

#include <complex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vitalrr/scenario.hpp"

namespace vitalrr {

/// Complex slow-time beat samples.
struct BeatSignal {
  double sampling_rate_hz = 50.0;
  std::vector<std::complex<double>> samples;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sampling_rate_hz;
  }
};

struct SynthResult {
  BeatSignal beat;
  GroundTruth truth;
};

/// Breathing plus heartbeat displacement of one quasi-stationary state at
/// absolute time t.
double breathing_displacement(const QuasiStationary& q, double t_s);

/// Random body movement trajectory on a grid of times relative to the
/// segment start. Starts at zero. If the trajectory is non-zero and its peak
/// magnitude is below `min_peak_m`, it is scaled up to reach it.
std::vector<double> rbm_trajectory(const Rbm& rbm, double duration_s,
                                   std::span<const double> t_rel_s,
                                   std::mt19937_64& rng,
                                   double min_peak_m = 0.0);

/// Chest displacement r(n) at t = n / fs for every sample of the scenario.
/// Each segment after the first is shifted by a constant so the trace is
/// value-continuous at joins.
std::vector<double> chest_displacement(const ScenarioConfig& scenario);

/// Complex beat exp(j(4 pi d(n) / lambda + phi(n))) + w(n), with ground truth.
SynthResult synthesize_beat(const ScenarioConfig& scenario);

// Binary "VRBT" format: 16-byte header then interleaved little-endian f32 I/Q.
std::vector<unsigned char> encode_beat(const BeatSignal& beat);
BeatSignal decode_beat(std::span<const unsigned char> bytes);
void write_beat(const std::string& path, const BeatSignal& beat);
BeatSignal read_beat(const std::string& path);
/// CSV with columns t_s,i,q.
void write_beat_csv(const std::string& path, const BeatSignal& beat);

}  // namespace vitalrr
