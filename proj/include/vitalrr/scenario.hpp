#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vitalrr {

inline constexpr double kSpeedOfLight = 2.99792458e8;

/// Breathing plus heartbeat chest motion without body movement.
struct QuasiStationary {
  double a_r_m = 4e-3;
  double f_r_hz = 0.25;
  double a_h_m = 2e-4;
  double f_h_hz = 1.2;
  double phase_r_rad = 0.0;
  double phase_h_rad = 0.0;
};

struct RandomWalk {
  double step_sigma_m = 1.5e-3;
};

struct PolynomialExcursion {
  double peak_m = 3e-2;
};

/// Random body movement. When breathing is still present, the breathing
/// parameters of `breathing` are superimposed on the movement trajectory.
struct Rbm {
  std::variant<RandomWalk, PolynomialExcursion> model = RandomWalk{};
  bool breathing_still_present = false;
  QuasiStationary breathing{};
};

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::variant<QuasiStationary, Rbm> kind = QuasiStationary{};

  double duration() const { return end_s - start_s; }
  bool is_quasi_stationary() const {
    return std::holds_alternative<QuasiStationary>(kind);
  }
};

struct NoiseConfig {
  double snr_db = 20.0;
  double phase_noise_std_rad = 0.0;
  bool enabled = true;
};

struct ScenarioConfig {
  double carrier_frequency_hz = 6.0e10;
  double standoff_m = 0.8;
  double sampling_rate_hz = 50.0;
  double duration_s = 20.0;
  std::vector<Segment> segments;
  NoiseConfig noise{};
  std::uint64_t rng_seed = 1;

  double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }
  std::size_t sample_count() const;
  /// Largest breathing amplitude in the scenario, or the nominal 4 mm when
  /// no segment breathes.
  double max_breathing_amplitude_m() const;
};

/// Throws ConfigError unless the scenario satisfies every field invariant and
/// the segments tile [0, duration_s] without gaps or overlaps.
void validate(const ScenarioConfig& scenario);

struct GroundTruthInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double reference_rr_bpm = 0.0;
};

struct GroundTruth {
  std::vector<GroundTruthInterval> intervals;
  std::vector<double> displacement_m;
};

/// Reference intervals: exactly the quasi-stationary segments.
GroundTruth ground_truth_intervals(const ScenarioConfig& scenario);

// JSON mirrors of the above.
nlohmann::json to_json(const ScenarioConfig& scenario);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GroundTruth& gt, bool include_trace = false);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

ScenarioConfig load_scenario(const std::string& path);

}  // namespace vitalrr
