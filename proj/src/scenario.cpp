#include "vitalrr/scenario.hpp"

#include <cmath>

#include "vitalrr/error.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

namespace {

constexpr double kTilingTolerance = 1e-9;
constexpr double kNominalBreathingAmplitude = 4e-3;

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_breathing(const QuasiStationary& q, std::size_t index) {
  const std::string at = "segment " + std::to_string(index) + ": ";
  check(std::isfinite(q.a_r_m) && q.a_r_m >= 0.0 && q.a_r_m <= 0.1,
        at + "a_r_m must lie in [0, 0.1] m");
  check(std::isfinite(q.a_h_m) && q.a_h_m >= 0.0, at + "a_h_m must be >= 0");
  check(q.f_r_hz >= 0.1 && q.f_r_hz <= 0.7, at + "f_r_hz must lie in [0.1, 0.7] Hz");
  check(q.f_h_hz >= 0.8 && q.f_h_hz <= 3.0, at + "f_h_hz must lie in [0.8, 3.0] Hz");
  check(std::isfinite(q.phase_r_rad) && std::isfinite(q.phase_h_rad),
        at + "phases must be finite");
}

nlohmann::json breathing_json(const QuasiStationary& q) {
  return {{"a_r_m", q.a_r_m},       {"f_r_hz", q.f_r_hz},
          {"a_h_m", q.a_h_m},       {"f_h_hz", q.f_h_hz},
          {"phase_r_rad", q.phase_r_rad}, {"phase_h_rad", q.phase_h_rad}};
}

QuasiStationary breathing_from_json(const nlohmann::json& j) {
  QuasiStationary q;
  q.a_r_m = j.value("a_r_m", q.a_r_m);
  q.f_r_hz = j.value("f_r_hz", q.f_r_hz);
  q.a_h_m = j.value("a_h_m", q.a_h_m);
  q.f_h_hz = j.value("f_h_hz", q.f_h_hz);
  q.phase_r_rad = j.value("phase_r_rad", q.phase_r_rad);
  q.phase_h_rad = j.value("phase_h_rad", q.phase_h_rad);
  return q;
}

}  // namespace

std::size_t ScenarioConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * sampling_rate_hz));
}

double ScenarioConfig::max_breathing_amplitude_m() const {
  double best = 0.0;
  for (const auto& seg : segments) {
    if (const auto* q = std::get_if<QuasiStationary>(&seg.kind)) {
      best = std::max(best, q->a_r_m);
    } else if (const auto* r = std::get_if<Rbm>(&seg.kind);
               r && r->breathing_still_present) {
      best = std::max(best, r->breathing.a_r_m);
    }
  }
  return best > 0.0 ? best : kNominalBreathingAmplitude;
}

void validate(const ScenarioConfig& s) {
  check(std::isfinite(s.carrier_frequency_hz) && s.carrier_frequency_hz > 0.0,
        "carrier_frequency_hz must be > 0");
  check(std::isfinite(s.standoff_m) && s.standoff_m >= 0.0, "standoff_m must be >= 0");
  check(std::isfinite(s.sampling_rate_hz) && s.sampling_rate_hz > 0.0,
        "sampling_rate_hz must be > 0");
  check(std::isfinite(s.duration_s) && s.duration_s > 0.0, "duration_s must be > 0");
  check(std::isfinite(s.noise.snr_db), "snr_db must be finite");
  check(std::isfinite(s.noise.phase_noise_std_rad) && s.noise.phase_noise_std_rad >= 0.0,
        "phase_noise_std_rad must be >= 0");
  check(!s.segments.empty(), "scenario needs at least one segment");

  double cursor = 0.0;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const Segment& seg = s.segments[i];
    const std::string at = "segment " + std::to_string(i) + ": ";
    check(std::isfinite(seg.start_s) && std::isfinite(seg.end_s), at + "bounds must be finite");
    check(seg.end_s > seg.start_s, at + "end_s must exceed start_s");
    check(std::abs(seg.start_s - cursor) <= kTilingTolerance,
          at + (seg.start_s > cursor ? "gap before segment" : "overlaps previous segment"));
    cursor = seg.end_s;
    if (const auto* q = std::get_if<QuasiStationary>(&seg.kind)) {
      validate_breathing(*q, i);
    } else {
      const auto& rbm = std::get<Rbm>(seg.kind);
      if (const auto* rw = std::get_if<RandomWalk>(&rbm.model)) {
        check(std::isfinite(rw->step_sigma_m) && rw->step_sigma_m >= 0.0,
              at + "step_sigma_m must be >= 0");
      } else {
        const double peak = std::get<PolynomialExcursion>(rbm.model).peak_m;
        check(std::isfinite(peak) && peak > 0.0, at + "peak_m must be > 0");
      }
      if (rbm.breathing_still_present) validate_breathing(rbm.breathing, i);
    }
  }
  check(std::abs(cursor - s.duration_s) <= kTilingTolerance,
        "segments must end exactly at duration_s");
}

GroundTruth ground_truth_intervals(const ScenarioConfig& scenario) {
  GroundTruth gt;
  for (const auto& seg : scenario.segments) {
    if (const auto* q = std::get_if<QuasiStationary>(&seg.kind)) {
      gt.intervals.push_back({seg.start_s, seg.end_s, 60.0 * q->f_r_hz});
    }
  }
  return gt;
}

nlohmann::json to_json(const ScenarioConfig& s) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : s.segments) {
    nlohmann::json js = {{"start_s", seg.start_s}, {"end_s", seg.end_s}};
    if (const auto* q = std::get_if<QuasiStationary>(&seg.kind)) {
      js["kind"] = "quasi_stationary";
      js.update(breathing_json(*q));
    } else {
      const auto& rbm = std::get<Rbm>(seg.kind);
      js["kind"] = "rbm";
      if (const auto* rw = std::get_if<RandomWalk>(&rbm.model)) {
        js["model"] = "random_walk";
        js["step_sigma_m"] = rw->step_sigma_m;
      } else {
        js["model"] = "polynomial_excursion";
        js["peak_m"] = std::get<PolynomialExcursion>(rbm.model).peak_m;
      }
      js["breathing_still_present"] = rbm.breathing_still_present;
      if (rbm.breathing_still_present) js["breathing"] = breathing_json(rbm.breathing);
    }
    segs.push_back(std::move(js));
  }
  return {{"carrier_frequency_hz", s.carrier_frequency_hz},
          {"standoff_m", s.standoff_m},
          {"sampling_rate_hz", s.sampling_rate_hz},
          {"duration_s", s.duration_s},
          {"rng_seed", s.rng_seed},
          {"noise",
           {{"snr_db", s.noise.snr_db},
            {"phase_noise_std_rad", s.noise.phase_noise_std_rad},
            {"enabled", s.noise.enabled}}},
          {"segments", std::move(segs)}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioConfig s;
    s.carrier_frequency_hz = j.value("carrier_frequency_hz", s.carrier_frequency_hz);
    s.standoff_m = j.value("standoff_m", s.standoff_m);
    s.sampling_rate_hz = j.value("sampling_rate_hz", s.sampling_rate_hz);
    s.duration_s = j.value("duration_s", s.duration_s);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      s.noise.snr_db = n.value("snr_db", s.noise.snr_db);
      s.noise.phase_noise_std_rad = n.value("phase_noise_std_rad", s.noise.phase_noise_std_rad);
      s.noise.enabled = n.value("enabled", s.noise.enabled);
    }
    for (const auto& js : j.at("segments")) {
      Segment seg;
      seg.start_s = js.at("start_s").get<double>();
      seg.end_s = js.at("end_s").get<double>();
      const std::string kind = js.at("kind").get<std::string>();
      if (kind == "quasi_stationary") {
        seg.kind = breathing_from_json(js);
      } else if (kind == "rbm") {
        Rbm rbm;
        const std::string model = js.at("model").get<std::string>();
        if (model == "random_walk") {
          rbm.model = RandomWalk{js.at("step_sigma_m").get<double>()};
        } else if (model == "polynomial_excursion") {
          rbm.model = PolynomialExcursion{js.at("peak_m").get<double>()};
        } else {
          throw ConfigError("unknown RBM model '" + model + "'");
        }
        rbm.breathing_still_present = js.value("breathing_still_present", false);
        if (js.contains("breathing")) rbm.breathing = breathing_from_json(js.at("breathing"));
        seg.kind = rbm;
      } else {
        throw ConfigError("unknown segment kind '" + kind + "'");
      }
      s.segments.push_back(seg);
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario JSON: ") + e.what());
  }
}

nlohmann::json to_json(const GroundTruth& gt, bool include_trace) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const auto& iv : gt.intervals) {
    intervals.push_back({{"start_s", iv.start_s},
                         {"end_s", iv.end_s},
                         {"reference_rr_bpm", iv.reference_rr_bpm}});
  }
  nlohmann::json j = {{"intervals", std::move(intervals)}};
  if (include_trace) j["displacement_m"] = gt.displacement_m;
  return j;
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth gt;
    for (const auto& iv : j.at("intervals")) {
      gt.intervals.push_back({iv.at("start_s").get<double>(), iv.at("end_s").get<double>(),
                              iv.value("reference_rr_bpm", 0.0)});
    }
    if (j.contains("displacement_m")) {
      gt.displacement_m = j.at("displacement_m").get<std::vector<double>>();
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ground-truth JSON: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  return scenario_from_json(read_json(path));
}

}  // namespace vitalrr
