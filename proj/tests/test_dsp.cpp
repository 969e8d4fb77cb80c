#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "tabla/dsp.hpp"
#include "tabla/error.hpp"

using namespace tabla;
using namespace testutil;

namespace {

AudioClip constant_clip(double value, std::size_t n, int rate = 16000) {
  AudioClip c;
  c.sample_rate = rate;
  c.samples.assign(n, value);
  return c;
}

Spectrogram spec_of(const AudioClip& clip, const AnalysisConfig& cfg = {}) {
  return magnitude_spectrogram(frame_signal(clip, cfg), cfg, clip.sample_rate);
}

}  // namespace

TEST_CASE("frame_signal frame count and windowing") {
  AnalysisConfig cfg;
  CHECK(cfg.window_length(16000) == 400);
  CHECK(cfg.hop_length(16000) == 80);
  CHECK(cfg.effective_fft_size(16000) == 512);

  const Matrix frames = frame_signal(constant_clip(0.0, 16000), cfg);
  CHECK(frames.rows == 196);  // floor(15600/80)+1
  CHECK(frames.cols == 400);

  CHECK(frame_signal(constant_clip(0.0, 400), cfg).rows == 1);

  // shorter than a window: one zero-padded frame
  const Matrix padded = frame_signal(constant_clip(1.0, 100), cfg);
  REQUIRE(padded.rows == 1);
  const std::vector<double> w = hann_window(400);
  for (std::size_t i = 0; i < 400; ++i)
    CHECK(padded.at(0, i) == doctest::Approx(i < 100 ? w[i] : 0.0));

  // constant signal: every frame equals the window shape
  const Matrix ones = frame_signal(constant_clip(1.0, 1200), cfg);
  for (std::size_t f = 0; f < ones.rows; ++f)
    for (std::size_t i = 0; i < ones.cols; ++i) CHECK(ones.at(f, i) == doctest::Approx(w[i]));
}

TEST_CASE("magnitude_spectrogram basics, tone bin and Parseval") {
  AnalysisConfig cfg;

  const Spectrogram zero = spec_of(constant_clip(0.0, 1600));
  CHECK(zero.n_bins() == 257);
  CHECK(zero.bin_hz == doctest::Approx(31.25));
  for (double m : zero.mags.data) CHECK(m == 0.0);

  const AudioClip clip = tone_clip(1000.0, 0.5, 16000);
  const Spectrogram spec = spec_of(clip);
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const auto row = spec.mags.row(t);
    const auto argmax =
        static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    CHECK(std::abs(static_cast<double>(argmax) - 1000.0 / spec.bin_hz) <= 1.0);
    for (double m : row) REQUIRE(std::isfinite(m));
  }

  // Parseval on the half spectrum against the windowed frame energy
  const Matrix frames = frame_signal(clip, cfg);
  for (std::size_t t = 0; t < 5; ++t) {
    double frame_energy = 0.0;
    for (double v : frames.row(t)) frame_energy += v * v;
    const auto row = spec.mags.row(t);
    double spec_energy = row[0] * row[0] + row[256] * row[256];
    for (std::size_t k = 1; k < 256; ++k) spec_energy += 2.0 * row[k] * row[k];
    spec_energy /= 512.0;
    CHECK(spec_energy == doctest::Approx(frame_energy).epsilon(1e-6));
  }
}

TEST_CASE("parallel spectrogram matches the serial reference bitwise") {
  AnalysisConfig cfg;
  AudioClip clip = tone_clip(700.0, 1.0, 16000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] += 0.2 * std::sin(0.001 * static_cast<double>(i * i % 9973));
  const Matrix frames = frame_signal(clip, cfg);
  const Spectrogram par = magnitude_spectrogram(frames, cfg, 16000);
  const Spectrogram ser = magnitude_spectrogram_serial(frames, cfg, 16000);
  CHECK(par.mags.data == ser.mags.data);
  CHECK(par.frame_times == ser.frame_times);
}

TEST_CASE("band_energy splits tones into the right bands") {
  const Band bass{50.0, 200.0};
  const Band treble{200.0, 2000.0};

  const Spectrogram spec100 = spec_of(tone_clip(100.0, 0.5, 16000));
  const auto bass_e = band_energy(spec100, bass);
  const auto treble_e = band_energy(spec100, treble);
  double bass_total = std::accumulate(bass_e.begin(), bass_e.end(), 0.0);
  double treble_total = std::accumulate(treble_e.begin(), treble_e.end(), 0.0);
  CHECK(db_ratio(treble_total, bass_total) < -30.0);

  const Spectrogram spec300 = spec_of(tone_clip(300.0, 0.5, 16000));
  const auto bass300 = band_energy(spec300, bass);
  const auto treble300 = band_energy(spec300, treble);
  bass_total = std::accumulate(bass300.begin(), bass300.end(), 0.0);
  treble_total = std::accumulate(treble300.begin(), treble300.end(), 0.0);
  CHECK(db_ratio(bass_total, treble_total) < -30.0);

  const Spectrogram zero = spec_of(constant_clip(0.0, 1600));
  for (double e : band_energy(zero, bass)) CHECK(e == 0.0);

  CHECK_THROWS_WITH_AS(band_energy(zero, Band{100.0, 101.0}), doctest::Contains("101"), Error);
}

TEST_CASE("band_energy over a partition sums to the full band") {
  AudioClip clip = tone_clip(500.0, 0.3, 16000, 0.4);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] += 0.1 * std::sin(2.1 * static_cast<double>(i));
  const Spectrogram spec = spec_of(clip);

  const auto full = band_energy(spec, Band{0.0, 8000.0});
  const auto a = band_energy(spec, Band{0.0, 140.0});
  const auto b = band_energy(spec, Band{140.0, 2500.0});
  const auto c = band_energy(spec, Band{2500.0, 8000.0});
  for (std::size_t t = 0; t < full.size(); ++t)
    CHECK(full[t] == doctest::Approx(a[t] + b[t] + c[t]).epsilon(1e-9));
}

TEST_CASE("mfcc of flat mel energies is an impulse at c0") {
  const std::vector<double> flat(40, 2.5);
  const auto coeffs = mfcc_from_mel_energies(flat, 13, 1e-10);
  REQUIRE(coeffs.size() == 13);
  CHECK(coeffs[0] == doctest::Approx(std::sqrt(1.0 / 40.0) * 40.0 * std::log(2.5)));
  for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(coeffs[k]) < 1e-9);
}

TEST_CASE("mfcc of silence is the floor-determined constant vector") {
  const Matrix coeffs = mfcc(spec_of(constant_clip(0.0, 1600)), AnalysisConfig{}, 16000);
  const double c0_expected = std::sqrt(1.0 / 40.0) * 40.0 * std::log(1e-10);
  for (std::size_t t = 0; t < coeffs.rows; ++t) {
    CHECK(coeffs.at(t, 0) == doctest::Approx(c0_expected));
    for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(coeffs.at(t, k)) < 1e-9);
  }
}

TEST_CASE("doubling the signal shifts mfcc c0 only") {
  AnalysisConfig cfg;
  // tone plus a broadband floor so every mel band sits above the log
  // floor for both gains (the invariance is only analytic there)
  AudioClip clip = tone_clip(350.0, 0.3, 16000, 0.3);
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (double& s : clip.samples) s += noise(gen);
  AudioClip loud = clip;
  for (double& s : loud.samples) s *= 2.0;

  const Matrix a = mfcc(spec_of(clip), cfg, 16000);
  const Matrix b = mfcc(spec_of(loud), cfg, 16000);
  REQUIRE(a.rows == b.rows);
  for (std::size_t t = 0; t < a.rows; ++t) {
    CHECK(b.at(t, 0) > a.at(t, 0));
    for (std::size_t k = 1; k < 13; ++k)
      CHECK(b.at(t, k) == doctest::Approx(a.at(t, k)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("spectral_shape moments") {
  // equal mass at 100 and 300 Hz with 100 Hz bins
  std::vector<double> row(64, 0.0);
  row[1] = 1.0;
  row[3] = 1.0;
  SpectralShape s = spectral_shape(row, 100.0);
  CHECK(s.centroid_hz == doctest::Approx(200.0));
  CHECK(s.skewness == doctest::Approx(0.0));
  CHECK(s.kurtosis == doctest::Approx(1.0));  // two-point distribution

  std::fill(row.begin(), row.end(), 0.0);
  row[5] = 3.0;
  s = spectral_shape(row, 100.0);
  CHECK(s.centroid_hz == doctest::Approx(500.0));
  CHECK(s.skewness == 0.0);
  CHECK(s.kurtosis == 0.0);

  std::fill(row.begin(), row.end(), 0.0);
  s = spectral_shape(row, 100.0);
  CHECK(s.centroid_hz == 0.0);
  CHECK(s.skewness == 0.0);
  CHECK(s.kurtosis == 0.0);
}

TEST_CASE("zero_crossing_rate") {
  Matrix frames(1, 8);
  for (std::size_t i = 0; i < 8; ++i) frames.at(0, i) = i % 2 == 0 ? 1.0 : -1.0;
  CHECK(zero_crossing_rate(frames)[0] == doctest::Approx(1.0));

  for (std::size_t i = 0; i < 8; ++i) frames.at(0, i) = 0.7;
  CHECK(zero_crossing_rate(frames)[0] == 0.0);

  // 1 kHz tone at 16 kHz: rate about 2*1000/16000
  AnalysisConfig cfg;
  const AudioClip clip = tone_clip(1000.0, 0.5, 16000);
  const auto zcr = zero_crossing_rate(frame_signal(clip, cfg, /*windowed=*/false));
  for (double r : zcr) CHECK(std::abs(r - 0.125) <= 0.01);
}

TEST_CASE("amplitude_envelope tracks level per hop cell") {
  AnalysisConfig cfg;
  const auto zero_env = amplitude_envelope(constant_clip(0.0, 1600), cfg);
  CHECK(zero_env.size() == 20);
  for (double e : zero_env) CHECK(e == 0.0);

  for (double e : amplitude_envelope(constant_clip(0.5, 1600), cfg))
    CHECK(e == doctest::Approx(0.5));

  // decaying tone: nonincreasing after the peak cell
  AudioClip decay = tone_clip(250.0, 0.5, 16000, 0.8);
  for (std::size_t i = 0; i < decay.samples.size(); ++i)
    decay.samples[i] *= std::exp(-5.0 * static_cast<double>(i) / 16000.0);
  const auto env = amplitude_envelope(decay, cfg);
  const auto peak =
      static_cast<std::size_t>(std::max_element(env.begin(), env.end()) - env.begin());
  for (std::size_t i = peak + 1; i + 1 < env.size(); ++i) CHECK(env[i + 1] <= env[i] * 1.001);
}
