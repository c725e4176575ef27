#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "vitalrr/error.hpp"
#include "vitalrr/image.hpp"
#include "vitalrr/io.hpp"
#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/spectrogram.hpp"
#include "vitalrr/synth.hpp"

using namespace vitalrr;

namespace {

BeatSignal tone(double f_hz, std::size_t n, double fs = 50.0, double amp = 1.0) {
  BeatSignal b;
  b.sampling_rate_hz = fs;
  for (std::size_t i = 0; i < n; ++i) b.samples.push_back(std::polar(amp, 2.0 * M_PI * f_hz * i / fs));
  return b;
}

BeatSignal random_beat(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  BeatSignal b;
  for (std::size_t i = 0; i < n; ++i) b.samples.emplace_back(nd(rng), nd(rng));
  return b;
}

}  // namespace

TEST_SUITE("spectrogram") {

TEST_CASE("hann window is symmetric with zero ends") {
  const auto w = hann_window(64);
  REQUIRE(w.size() == 64);
  CHECK(w.front() == doctest::Approx(0.0));
  CHECK(w.back() == doctest::Approx(0.0));
  for (int i = 0; i < 64; ++i) CHECK(w[i] == doctest::Approx(w[63 - i]));
  const auto odd = hann_window(9);
  CHECK(odd[4] == doctest::Approx(1.0));
}

TEST_CASE("column count and time axis") {
  const WindowConfig cfg;
  CHECK(stft_column_count(1000, cfg) == 469);
  CHECK(stft_column_count(64, cfg) == 1);
  const auto spec = stft(random_beat(1000, 1));
  CHECK(spec.t_bins() == 469);
  CHECK(spec.f_bins() == 256);
  CHECK(spec.time_s(0) == doctest::Approx(31.5 / 50.0));
  CHECK(spec.column_step_s() == doctest::Approx(0.04));
  CHECK(spec.frequency_hz(128) == 0.0);
  CHECK(spec.frequency_hz(0) == doctest::Approx(-25.0));
  CHECK_THROWS_AS(stft(random_beat(63, 1)), TooShortError);
  WindowConfig bad;
  bad.hop = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("matches a direct DFT of the windowed segment") {
  const auto beat = random_beat(300, 2);
  const auto spec = stft(beat);
  const auto w = hann_window(64);
  for (int t : {0, 17, spec.t_bins() - 1}) {
    for (int k = 0; k < 256; k += 5) {
      const int bin = (k + 128) % 256;  // fftshift
      std::complex<double> acc = 0.0;
      for (int i = 0; i < 64; ++i) {
        acc += w[i] * beat.samples[t * 2 + i] * std::polar(1.0, -2.0 * M_PI * bin * i / 256.0);
      }
      CHECK(spec.magnitude(t, k) == doctest::Approx(std::abs(acc)).epsilon(1e-10));
    }
  }
}

TEST_CASE("Parseval holds per column") {
  const auto beat = random_beat(400, 3);
  const auto spec = stft(beat);
  const auto energy = column_energy(spec);
  const auto w = hann_window(64);
  for (int t = 0; t < spec.t_bins(); ++t) {
    double e = 0.0;
    for (int i = 0; i < 64; ++i) e += std::norm(w[i] * beat.samples[t * 2 + i]);
    CHECK(std::abs(energy[t] - e) / e < 1e-6);
  }
}

TEST_CASE("on-grid tones peak exactly at their bin") {
  const double df = 50.0 / 256.0;
  for (int k0 : {-100, -7, 0, 3, 64, 127}) {
    const auto spec = stft(tone(k0 * df, 500));
    for (int t = 0; t < spec.t_bins(); t += 13) {
      int best = 0;
      for (int k = 1; k < spec.f_bins(); ++k) {
        if (spec.magnitude(t, k) > spec.magnitude(t, best)) best = k;
      }
      CHECK(best == 128 + k0);
    }
  }
}

TEST_CASE("scaling the beat scales the magnitudes") {
  const auto a = stft(tone(3.0, 200, 50.0, 1.0));
  const auto b = stft(tone(3.0, 200, 50.0, 2.5));
  const auto c = a.scaled(2.5);
  for (std::size_t i = 0; i < a.data().size(); i += 11) {
    CHECK(b.data()[i] == doctest::Approx(c.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("area resize keeps the mean and handles identity") {
  std::mt19937_64 rng(4);
  std::vector<double> src(30 * 50);
  testing::fill_normal(src, rng);
  double mean = 0.0;
  for (double v : src) mean += v;
  mean /= src.size();
  const auto small = area_resize(src, 30, 50, 7, 13);
  double m2 = 0.0;
  for (double v : small) m2 += v;
  CHECK(m2 / small.size() == doctest::Approx(mean).epsilon(1e-9));
  CHECK(area_resize(src, 30, 50, 30, 50) == src);
  const auto up = area_resize(std::vector<double>{1.0, 2.0}, 1, 2, 1, 4);
  CHECK(up == std::vector<double>{1.0, 1.0, 2.0, 2.0});
}

TEST_CASE("single hot cell maps to the top value at its grid cell") {
  const int T = 128, F = 256;
  std::vector<double> mag(static_cast<std::size_t>(T) * F, 0.0);
  const int t_hot = 40, k_hot = 200;
  mag[static_cast<std::size_t>(t_hot) * F + k_hot] = 3.0;
  const Spectrogram spec(mag, T, F, 50.0, WindowConfig{});
  GridConfig g;
  g.out_f_bins = 64;
  g.out_t_bins = 64;
  const auto img = to_detector_grid(spec, g);
  const int r = (F - 1 - k_hot) / 4, c = t_hot / 2;
  CHECK(img.at(r, c) == 1.0f);
  int ones = 0;
  for (float v : img.pixels) ones += v == 1.0f;
  CHECK(ones == 1);
  CHECK(*std::min_element(img.pixels.begin(), img.pixels.end()) == 0.0f);
}

TEST_CASE("detector grid is scale invariant and degenerate inputs are defined") {
  const auto spec = stft(synthesize_beat(make_scenario(ScenarioFamily::Rbm, 3)).beat);
  const auto a = to_detector_grid(spec);
  const auto b = to_detector_grid(spec.scaled(7.0));
  CHECK(a.rows == 64);
  CHECK(a.cols == 256);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) CHECK(std::abs(a.pixels[i] - b.pixels[i]) < 1e-5f);
  // column centres line up with the spectrogram span
  CHECK(a.column_time_s(0) - 0.5 * a.column_step_s == doctest::Approx(spec.first_time_s() - 0.02));
  CHECK(a.column_to_time(a.cols) == doctest::Approx(spec.first_time_s() - 0.02 + spec.duration_s()));

  const Spectrogram zero(std::vector<double>(64 * 256, 0.0), 64, 256, 50.0, WindowConfig{});
  for (float v : to_detector_grid(zero).pixels) CHECK(v == 0.0f);
  const Spectrogram flat(std::vector<double>(64 * 256, 2.0), 64, 256, 50.0, WindowConfig{});
  for (float v : to_detector_grid(flat).pixels) CHECK(v == 1.0f);
}

TEST_CASE("PGM export of a checkerboard is byte exact") {
  DetectorImage img;
  img.rows = 2;
  img.cols = 3;
  img.pixels = {0.0f, 1.0f, 0.0f, 1.0f, 0.0f, 1.0f};
  const std::vector<unsigned char> expect = {'P', '5', '\n', '3', ' ', '2', '\n', '2', '5', '5', '\n',
                                             0, 255, 0, 255, 0, 255};
  CHECK(encode_pgm(img) == expect);

  img.pixels = {0.5f, -1.0f, 2.0f, 0.25f, 0.75f, 1.0f / 255.0f};
  const std::vector<unsigned char> q = {128, 0, 255, 64, 191, 1};
  CHECK(quantize_image(img) == q);

  const auto dir = testing::scratch("pgm");
  const auto path = (dir / "x.pgm").string();
  export_image(img, path, image_format_for(path));
  CHECK(read_file(path) == encode_pgm(img));
  const auto png = (dir / "x.png").string();
  CHECK(image_format_for(png) == ImageFormat::Png);
  export_image(img, png, ImageFormat::Png);
  const auto bytes = read_file(png);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes[1] == 'P');
  CHECK(bytes[2] == 'N');
  CHECK(bytes[3] == 'G');
}

}  // TEST_SUITE
