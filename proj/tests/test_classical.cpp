#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vitalrr/classical.hpp"
#include "vitalrr/error.hpp"
#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/synth.hpp"

using namespace vitalrr;

TEST_SUITE("classical") {

TEST_CASE("autocorrelation of a sinusoid at its own period is one") {
  std::vector<double> x(150);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * M_PI * i / 25.0);
  CHECK(max_normalized_autocorrelation(x, 20, 60) == doctest::Approx(1.0).epsilon(1e-12));
  // anti-phase only lag -> clipped at zero
  CHECK(max_normalized_autocorrelation(x, 12, 13) <= 0.0 + 1e-12);
  const std::vector<double> flat(50, 1.0);
  CHECK(max_normalized_autocorrelation(flat, 1, 10) == 0.0);
}

TEST_CASE("clean breathing yields one interval over the whole signal") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto res = synthesize_beat(make_scenario(ScenarioFamily::Clean, seed));
    const auto det = classical_detect(stft(res.beat));
    REQUIRE(det.size() == 1);
    CHECK(interval_iou(det[0], {0.0, 20.0, 1.0}) >= 0.8);
    CHECK(det[0].valid());
  }
}

TEST_CASE("pure movement yields nothing") {
  int empty = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto res = synthesize_beat(make_scenario(ScenarioFamily::PureRbm, seed));
    empty += classical_detect(stft(res.beat)).empty();
  }
  CHECK(empty >= 19);
}

TEST_CASE("positive scaling of the spectrogram changes nothing") {
  const auto spec = stft(synthesize_beat(make_scenario(ScenarioFamily::Rbm, 8)).beat);
  const auto a = classical_detect(spec);
  const auto b = classical_detect(spec.scaled(0.01));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start_s == b[i].start_s);
    CHECK(a[i].end_s == b[i].end_s);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("intervals are disjoint, ordered and scored in [0, 1]") {
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const auto det = classical_detect(stft(synthesize_beat(make_scenario(ScenarioFamily::Rbm, seed)).beat));
    for (std::size_t i = 0; i < det.size(); ++i) {
      CHECK(det[i].valid());
      CHECK(det[i].start_s >= 0.0);
      CHECK(det[i].end_s <= 20.0 + 1e-9);
      if (i > 0) CHECK(det[i].start_s > det[i - 1].end_s);
    }
  }
}

TEST_CASE("short spectrograms are rejected") {
  const auto res = synthesize_beat(clean_scenario(0.3, 5.0));
  CHECK_THROWS_AS(classical_detect(stft(res.beat)), TooShortError);
  ClassicalConfig cfg;
  cfg.win_s = 3.0;
  CHECK_NOTHROW(classical_detect(stft(res.beat), cfg));
}

}  // TEST_SUITE
