#include "vitalrr/scenario_gen.hpp"

#include <algorithm>
#include <numbers>
#include <random>

#include "vitalrr/error.hpp"

namespace vitalrr {

namespace {

constexpr double kDuration = 20.0;
// Keeps body-movement Doppler below ~18 Hz at 60 GHz so it stays unaliased
// at 50 Hz slow-time sampling.
constexpr double kMaxRbmSpeed = 0.045;

struct Draw {
  std::mt19937_64 rng;
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
};

QuasiStationary draw_breathing(Draw& d, double f_r_hz) {
  QuasiStationary q;
  q.a_r_m = d.uniform(2.5e-3, 5e-3);
  q.f_r_hz = f_r_hz;
  q.a_h_m = d.uniform(1e-4, 3e-4);
  q.f_h_hz = d.uniform(0.9, 1.6);
  q.phase_r_rad = d.uniform(0.0, 2.0 * std::numbers::pi);
  q.phase_h_rad = d.uniform(0.0, 2.0 * std::numbers::pi);
  return q;
}

Segment draw_rbm(Draw& d, double start, double end, const QuasiStationary& breathing) {
  Rbm rbm;
  const double length = end - start;
  if (d.coin()) {
    rbm.model = RandomWalk{d.uniform(1.5e-3, 3e-3)};
  } else {
    // Cubic bump speed peaks at 3 * peak / length.
    const double ceiling = kMaxRbmSpeed * length / 3.0;
    const double peak = std::min(d.uniform(6.0, 12.0) * breathing.a_r_m, ceiling);
    rbm.model = PolynomialExcursion{peak};
  }
  rbm.breathing_still_present = d.coin();
  rbm.breathing = breathing;
  return {start, end, rbm};
}

}  // namespace

ScenarioFamily parse_family(const std::string& name) {
  if (name == "clean") return ScenarioFamily::Clean;
  if (name == "rbm") return ScenarioFamily::Rbm;
  if (name == "pure_rbm") return ScenarioFamily::PureRbm;
  throw ConfigError("unknown scenario family '" + name + "' (clean|rbm|pure_rbm)");
}

std::string family_name(ScenarioFamily family) {
  switch (family) {
    case ScenarioFamily::Clean: return "clean";
    case ScenarioFamily::Rbm: return "rbm";
    case ScenarioFamily::PureRbm: return "pure_rbm";
  }
  return "unknown";
}

ScenarioConfig make_scenario(ScenarioFamily family, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(family) + 101u};
  Draw d{std::mt19937_64(seq)};
  ScenarioConfig s;
  s.duration_s = kDuration;
  s.rng_seed = seed;
  s.noise.snr_db = d.uniform(10.0, 25.0);

  const QuasiStationary breathing = draw_breathing(d, d.uniform(0.15, 0.5));
  switch (family) {
    case ScenarioFamily::Clean:
      s.segments.push_back({0.0, kDuration, breathing});
      break;
    case ScenarioFamily::PureRbm: {
      Rbm rbm;
      rbm.model = RandomWalk{d.uniform(1.5e-3, 3e-3)};
      s.segments.push_back({0.0, kDuration, rbm});
      break;
    }
    case ScenarioFamily::Rbm: {
      if (d.coin()) {
        // movement | breathing | movement, either movement may be absent
        const double q = d.uniform(8.0, 13.0);
        double lead = d.uniform(0.0, kDuration - q);
        if (lead < 2.0) lead = 0.0;
        if (kDuration - q - lead < 2.0) lead = kDuration - q;
        double cursor = 0.0;
        if (lead > 0.0) {
          s.segments.push_back(draw_rbm(d, 0.0, lead, breathing));
          cursor = lead;
        }
        s.segments.push_back({cursor, cursor + q, breathing});
        cursor += q;
        if (kDuration - cursor > 1e-9) s.segments.push_back(draw_rbm(d, cursor, kDuration, breathing));
        s.segments.back().end_s = kDuration;
      } else {
        // breathing | movement | breathing
        const double r = d.uniform(3.0, 6.0);
        const double q1 = d.uniform(6.0, kDuration - r - 6.0);
        s.segments.push_back({0.0, q1, breathing});
        s.segments.push_back(draw_rbm(d, q1, q1 + r, breathing));
        s.segments.push_back({q1 + r, kDuration, breathing});
      }
      break;
    }
  }
  validate(s);
  return s;
}

ScenarioConfig clean_scenario(double f_r_hz, double duration_s, double a_r_m, double a_h_m) {
  ScenarioConfig s;
  s.duration_s = duration_s;
  s.noise.enabled = false;
  QuasiStationary q;
  q.a_r_m = a_r_m;
  q.f_r_hz = f_r_hz;
  q.a_h_m = a_h_m;
  s.segments.push_back({0.0, duration_s, q});
  validate(s);
  return s;
}

}  // namespace vitalrr
