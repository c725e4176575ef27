#pragma once

#include <cstdint>

#include "vitalrr/scenario.hpp"

namespace vitalrr {

/// Families of randomized scenarios used for datasets and evaluation.
enum class ScenarioFamily {
  Clean,    // one quasi-stationary segment over the whole duration
  Rbm,      // quasi-stationary segments interleaved with body movement
  PureRbm,  // random-walk body movement only, no breathing
};

ScenarioFamily parse_family(const std::string& name);
std::string family_name(ScenarioFamily family);

/// Deterministic random scenario of the given family (20 s, 50 Hz, 60 GHz).
ScenarioConfig make_scenario(ScenarioFamily family, std::uint64_t seed);

/// Single noiseless quasi-stationary segment with the given breathing rate.
ScenarioConfig clean_scenario(double f_r_hz, double duration_s = 20.0,
                              double a_r_m = 4e-3, double a_h_m = 0.0);

}  // namespace vitalrr
