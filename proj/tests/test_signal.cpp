#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vitalrr/error.hpp"
#include "vitalrr/io.hpp"
#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/synth.hpp"

using namespace vitalrr;

namespace {

ScenarioConfig two_part(double split) {
  ScenarioConfig s;
  s.segments.push_back({0.0, split, QuasiStationary{}});
  Rbm m;
  m.model = RandomWalk{2e-3};
  s.segments.push_back({split, 20.0, m});
  s.noise.enabled = false;
  return s;
}

}  // namespace

TEST_SUITE("signal_synth") {

TEST_CASE("validate rejects gaps, overlaps and out-of-range fields") {
  ScenarioConfig s = two_part(10.0);
  CHECK_NOTHROW(validate(s));

  auto gap = s;
  gap.segments[1].start_s = 10.5;
  CHECK_THROWS_AS(validate(gap), ConfigError);

  auto overlap = s;
  overlap.segments[1].start_s = 9.0;
  CHECK_THROWS_AS(validate(overlap), ConfigError);

  auto slow = s;
  std::get<QuasiStationary>(slow.segments[0].kind).f_r_hz = 0.05;
  CHECK_THROWS_AS(validate(slow), ConfigError);

  auto neg = s;
  std::get<RandomWalk>(std::get<Rbm>(neg.segments[1].kind).model).step_sigma_m = -1e-3;
  CHECK_THROWS_AS(validate(neg), ConfigError);
}

TEST_CASE("ground truth lists the quasi-stationary segments") {
  const auto gt = ground_truth_intervals(two_part(8.0));
  REQUIRE(gt.intervals.size() == 1);
  CHECK(gt.intervals[0].start_s == 0.0);
  CHECK(gt.intervals[0].end_s == 8.0);
  CHECK(gt.intervals[0].reference_rr_bpm == doctest::Approx(15.0));
}

TEST_CASE("scenario JSON round-trips") {
  for (auto fam : {ScenarioFamily::Clean, ScenarioFamily::Rbm, ScenarioFamily::PureRbm}) {
    for (std::uint64_t seed = 1; seed < 6; ++seed) {
      const auto s = make_scenario(fam, seed);
      CHECK_NOTHROW(validate(s));
      const auto j = to_json(s);
      CHECK(to_json(scenario_from_json(j)) == j);
    }
  }
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"segments", "nope"}}), ConfigError);
}

TEST_CASE("noiseless beat has unit modulus and the displacement phase") {
  auto s = clean_scenario(0.3);
  const auto res = synthesize_beat(s);
  const auto r = chest_displacement(s);
  const double k = 4.0 * M_PI / s.wavelength_m();
  REQUIRE(res.beat.size() == 1000);
  for (std::size_t i = 0; i < res.beat.size(); i += 7) {
    CHECK(std::abs(res.beat.samples[i]) == doctest::Approx(1.0).epsilon(1e-12));
    const auto expect = std::polar(1.0, k * (s.standoff_m + r[i]));
    CHECK(std::abs(res.beat.samples[i] - expect) < 1e-9);
  }
}

TEST_CASE("breathing displacement stays within a_r + a_h") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto s = make_scenario(ScenarioFamily::Rbm, seed);
    const auto r = chest_displacement(s);
    for (const auto& seg : s.segments) {
      if (!seg.is_quasi_stationary()) continue;
      const auto& q = std::get<QuasiStationary>(seg.kind);
      const auto b = static_cast<std::size_t>(std::ceil(seg.start_s * s.sampling_rate_hz - 1e-9));
      const auto e = std::min<std::size_t>(r.size(), static_cast<std::size_t>(seg.end_s * s.sampling_rate_hz));
      // segments after the first carry a constant join offset
      const double offset = r[b] - breathing_displacement(q, b / s.sampling_rate_hz);
      for (std::size_t i = b; i < e; ++i) {
        CHECK(std::abs(r[i] - offset) <= q.a_r_m + q.a_h_m + 1e-12);
      }
    }
  }
}

TEST_CASE("displacement is continuous at segment joins") {
  const auto s = two_part(10.0);
  const auto r = chest_displacement(s);
  const std::size_t j = 500;
  // breathing slope bound is 2 pi f a / fs ~ 1.3e-4 per sample; movement steps are smoothed
  CHECK(std::abs(r[j] - r[j - 1]) < 1e-3);
}

TEST_CASE("random walk with zero step is identically zero") {
  Rbm m;
  m.model = RandomWalk{0.0};
  std::vector<double> t(100);
  for (int i = 0; i < 100; ++i) t[i] = i / 50.0;
  std::mt19937_64 rng(1);
  for (double v : rbm_trajectory(m, 2.0, t, rng, 0.02)) CHECK(v == 0.0);
}

TEST_CASE("same seed reproduces, new seed differs") {
  const auto a = synthesize_beat(make_scenario(ScenarioFamily::Rbm, 77));
  const auto b = synthesize_beat(make_scenario(ScenarioFamily::Rbm, 77));
  const auto c = synthesize_beat(make_scenario(ScenarioFamily::Rbm, 78));
  CHECK(encode_beat(a.beat) == encode_beat(b.beat));
  CHECK(encode_beat(a.beat) != encode_beat(c.beat));
}

TEST_CASE("additive noise matches the configured SNR") {
  auto s = clean_scenario(0.25);
  s.noise.enabled = true;
  s.noise.snr_db = 10.0;
  const auto noisy = synthesize_beat(s);
  s.noise.enabled = false;
  const auto clean = synthesize_beat(s);
  double p = 0.0;
  for (std::size_t i = 0; i < clean.beat.size(); ++i) p += std::norm(noisy.beat.samples[i] - clean.beat.samples[i]);
  p /= clean.beat.size();
  CHECK(p == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("VRBT round-trip is bit-exact") {
  const auto res = synthesize_beat(make_scenario(ScenarioFamily::Rbm, 5));
  const auto bytes = encode_beat(res.beat);
  CHECK(bytes.size() == 16 + 8 * res.beat.size());
  const auto back = decode_beat(bytes);
  CHECK(back.sampling_rate_hz == 50.0);
  CHECK(encode_beat(back) == bytes);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.samples[i].real() == static_cast<float>(res.beat.samples[i].real()));
  }

  const auto dir = testing::scratch("vrbt");
  write_beat((dir / "a.vrbt").string(), back);
  CHECK(read_file((dir / "a.vrbt").string()) == bytes);
  CHECK(encode_beat(read_beat((dir / "a.vrbt").string())) == bytes);
}

TEST_CASE("VRBT rejects bad magic, versions and truncation") {
  auto bytes = encode_beat(synthesize_beat(clean_scenario(0.2, 6.0)).beat);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_beat(bad), FormatError);
  auto v2 = bytes;
  v2[4] = 2;
  CHECK_THROWS_AS(decode_beat(v2), VersionError);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(decode_beat(cut), FormatError);
  CHECK_THROWS_AS(read_beat("/nonexistent/x.vrbt"), IoError);
}

TEST_CASE("pure movement scenarios carry no ground truth") {
  const auto s = make_scenario(ScenarioFamily::PureRbm, 3);
  CHECK(ground_truth_intervals(s).intervals.empty());
}

}  // TEST_SUITE
