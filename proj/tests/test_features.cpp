#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tabla/error.hpp"
#include "tabla/features.hpp"
#include "tabla/synth.hpp"

using namespace tabla;
using namespace testutil;

namespace {

StrokeSegment segment_of(std::vector<double> samples, int rate = 16000) {
  StrokeSegment seg;
  seg.clip.sample_rate = rate;
  seg.clip.samples = std::move(samples);
  seg.start_s = 0.0;
  seg.end_s = seg.clip.duration_s();
  return seg;
}

// decaying tone with a broadband attack; roughly a resonant stroke
std::vector<double> decaying_tone(double freq, double decay, double dur_s, int rate,
                                  double amp = 0.5) {
  auto x = tone(freq, dur_s, rate, amp);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] *= std::exp(-decay * static_cast<double>(i) / rate);
  return x;
}

}  // namespace

TEST_CASE("feature_names is the canonical 49-entry layout") {
  const auto& names = feature_names();
  CHECK(names.size() == 49);
  CHECK(names[0] == "centroid_mean");
  CHECK(names[6] == "mfcc_mean_0");
  CHECK(names[18] == "mfcc_mean_12");
  CHECK(names[19] == "flux_max_bass");
  CHECK(names[21] == "energy_sum_bass");
  CHECK(names[27] == "log_attack_time");
  CHECK(names[29] == "zcr_mean");
  CHECK(names[31] == "early_slope_bass");
  CHECK(names[48] == "delta_late_slope_treble");
  CHECK(feature_index("energy_sum_treble") == 22);
  CHECK(feature_index("nope") == -1);

  // every name unique and resolvable
  for (int i = 0; i < kNumFeatures; ++i)
    CHECK(feature_index(names[static_cast<std::size_t>(i)]) == i);
}

TEST_CASE("segment_strokes cuts onset-to-onset with a capped tail") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(32000, 0.1);  // 2.0 s

  const auto segs = segment_strokes({0.5, 1.0, 1.5}, clip);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].start_s == 0.5);
  CHECK(segs[0].end_s == 1.0);
  CHECK(segs[1].end_s == 1.5);
  CHECK(segs[2].end_s == 2.0);
  CHECK(segs[0].clip.samples.size() == 8000);

  AudioClip long_clip;
  long_clip.sample_rate = 16000;
  long_clip.samples.assign(80000, 0.1);  // 5 s
  const auto capped = segment_strokes({0.0}, long_clip);
  REQUIRE(capped.size() == 1);
  CHECK(capped[0].end_s == doctest::Approx(2.0));
  CHECK(capped[0].clip.samples.size() == 32000);

  CHECK(segment_strokes({}, clip).empty());

  // 50 ms head segment and the tail are both feature-extractable
  const auto tiny = segment_strokes({0.0, 0.05}, clip);
  REQUIRE(tiny.size() == 2);
  FeatureConfig fcfg;
  FeatureVector prev = extract_features(tiny[0], nullptr, fcfg);
  const FeatureVector next = extract_features(tiny[1], &prev, fcfg);
  for (double v : next.values) CHECK(std::isfinite(v));
}

TEST_CASE("log_energy_envelope of silence sits at the floor") {
  FeatureConfig fcfg;
  const auto env = log_energy_envelope(segment_of(std::vector<double>(4000, 0.0)), fcfg.bass, fcfg);
  for (double v : env) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("log_energy_envelope of an exponential decay is linear") {
  // block-constant DC level halving the log-energy slope test: with
  // window == hop the frames tile the signal exactly, so per-frame band
  // energy is (sum of window * level)^2 and the log series is exactly
  // linear in the block index
  FeatureConfig fcfg;
  fcfg.analysis.window_ms = 5.0;
  fcfg.analysis.hop_ms = 5.0;
  const int block = fcfg.analysis.window_length(16000);
  REQUIRE(block == 80);

  std::vector<double> samples;
  const int n_blocks = 24;
  for (int b = 0; b < n_blocks; ++b)
    samples.insert(samples.end(), static_cast<std::size_t>(block),
                   0.9 * std::exp(-0.5 * b));
  const auto env = log_energy_envelope(segment_of(std::move(samples)), Band{0.0, 50.0}, fcfg);
  REQUIRE(static_cast<int>(env.size()) == n_blocks);
  for (std::size_t i = 1; i < env.size(); ++i) {
    if (env[i] <= std::log(1e-10) + 1e-9) break;  // floor reached
    CHECK(env[i] - env[i - 1] == doctest::Approx(-1.0).epsilon(1e-6));
  }

  // bass envelope of a 100 Hz decaying tone dominates its treble envelope
  const auto seg = segment_of(decaying_tone(100.0, 6.0, 0.4, 16000));
  FeatureConfig def;
  const auto bass_env = log_energy_envelope(seg, def.bass, def);
  const auto treble_env = log_energy_envelope(seg, def.treble, def);
  REQUIRE(bass_env.size() == treble_env.size());
  for (std::size_t i = 0; i < bass_env.size(); ++i) CHECK(bass_env[i] >= treble_env[i]);
}

TEST_CASE("spline_decay_fit recovers an exact two-piece line") {
  const std::vector<double> y = {0, -2, -4, -6, -8, -10, -11, -12, -13, -14};
  const DecayFit fit = spline_decay_fit(y);
  CHECK(fit.knot_index == 5);
  CHECK(fit.early_slope == doctest::Approx(-2.0));
  CHECK(fit.late_slope == doctest::Approx(-1.0));
  CHECK(fit.early_intercept == doctest::Approx(0.0));
  CHECK(fit.late_intercept == doctest::Approx(-5.0));
  CHECK(fit.r2_hmean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(fit.degraded);
}

TEST_CASE("spline_decay_fit handles constants and short inputs") {
  const std::vector<double> flat(12, -3.5);
  const DecayFit fit = spline_decay_fit(flat);
  CHECK(fit.early_slope == doctest::Approx(0.0));
  CHECK(fit.late_slope == doctest::Approx(0.0));
  CHECK(fit.r2_hmean == doctest::Approx(1.0));  // zero-variance rule

  const std::vector<double> short_series = {0.0, -1.0, -2.0, -3.0};
  const DecayFit degraded = spline_decay_fit(short_series);
  CHECK(degraded.degraded);
  CHECK(degraded.early_slope == doctest::Approx(degraded.late_slope));
  CHECK(degraded.early_slope == doctest::Approx(-1.0));
  CHECK(degraded.knot_index == 2);
  CHECK(degraded.r2_hmean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spline_decay_fit recovers noisy generated knots and slopes") {
  std::mt19937 gen(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);

  int knot_ok = 0, slope_ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const int len = 14 + static_cast<int>(unit(gen) * 40);
    const int knot = 4 + static_cast<int>(unit(gen) * (len - 8));
    const double early = -3.0 + 1.5 * unit(gen);        // [-3.0, -1.5]
    const double late = -0.8 + 0.6 * unit(gen);         // [-0.8, -0.2]
    std::vector<double> y(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
      const double base = i <= knot
                              ? early * i
                              : early * knot + late * (i - knot);
      y[static_cast<std::size_t>(i)] = base + noise(gen);
    }
    const DecayFit fit = spline_decay_fit(y);
    if (std::abs(static_cast<int>(fit.knot_index) - knot) <= 1) ++knot_ok;
    if (std::abs(fit.early_slope - early) <= 0.05 * std::abs(early) &&
        std::abs(fit.late_slope - late) <= 0.05 * std::abs(late))
      ++slope_ok;
  }
  CHECK(knot_ok >= 99);
  CHECK(slope_ok >= 99);
}

TEST_CASE("log_attack_time thresholds") {
  const double hop_s = 0.005;

  // linear ramp 0..1 over 100 ms: rise from 20% to 90% takes 70 ms
  std::vector<double> env;
  AnalysisConfig acfg;
  {
    AudioClip ramp;
    ramp.sample_rate = 16000;
    ramp.samples.resize(1600);
    for (std::size_t i = 0; i < 1600; ++i)
      ramp.samples[i] = static_cast<double>(i) / 1599.0;
    env = amplitude_envelope(ramp, acfg);
  }
  CHECK(log_attack_time(env, hop_s) == doctest::Approx(std::log10(0.07)).epsilon(1e-9));

  // instantaneous attack: one-hop rule
  std::vector<double> spike(40, 0.0);
  spike[0] = 1.0;
  CHECK(log_attack_time(spike, hop_s) == doctest::Approx(std::log10(0.005)));

  const std::vector<double> zeros(40, 0.0);
  CHECK(log_attack_time(zeros, hop_s) == doctest::Approx(std::log10(0.005)));
}

TEST_CASE("log_attack_time on a generated attack matches the envelope oracle") {
  // 20 ms exponential attack then decay; oracle thresholds computed on
  // the closed-form amplitude envelope itself
  const int rate = 16000;
  const double tau_attack = 0.020 / 3.0;  // ~95% risen by 20 ms
  const double decay = 4.0;
  const auto n = static_cast<std::size_t>(0.5 * rate);
  std::vector<double> amp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    amp[i] = (1.0 - std::exp(-t / tau_attack)) * std::exp(-decay * t);
  }

  double peak = 0.0;
  for (double v : amp) peak = std::max(peak, v);
  double t20 = -1.0, t90 = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t20 < 0.0 && amp[i] >= 0.2 * peak) t20 = t;
    if (t90 < 0.0 && amp[i] >= 0.9 * peak) t90 = t;
    if (amp[i] >= peak) break;
  }
  const double oracle = std::log10(t90 - t20);

  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples = tone(300.0, 0.5, rate, 1.0);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] *= amp[i];
  AnalysisConfig acfg;
  const auto env = amplitude_envelope(clip, acfg);
  CHECK(std::abs(log_attack_time(env, 0.005) - oracle) <= 0.15);
}

TEST_CASE("temporal_centroid") {
  const double hop_s = 0.005;

  std::vector<double> tri;
  for (int i = 0; i < 10; ++i) tri.push_back(static_cast<double>(i));
  for (int i = 10; i >= 0; --i) tri.push_back(static_cast<double>(i));
  // symmetric over 21 cells: centroid at the middle
  CHECK(temporal_centroid(tri, hop_s) == doctest::Approx(21.0 * hop_s / 2.0));

  std::vector<double> impulse(40, 0.0);
  impulse[0] = 1.0;
  CHECK(temporal_centroid(impulse, hop_s) <= hop_s);  // half a hop from zero

  std::vector<double> decay(40);
  for (std::size_t i = 0; i < 40; ++i) decay[i] = std::exp(-0.2 * static_cast<double>(i));
  CHECK(temporal_centroid(decay, hop_s) < 20.0 * hop_s);

  const std::vector<double> zeros(40, 0.0);
  CHECK(temporal_centroid(zeros, hop_s) == doctest::Approx(20.0 * hop_s));  // midpoint
}

TEST_CASE("extract_features totals and delta rules") {
  FeatureConfig fcfg;

  // silence: finite everywhere, zero energies, sentinel shapes
  const FeatureVector silent =
      extract_features(segment_of(std::vector<double>(4000, 0.0)), nullptr, fcfg);
  for (double v : silent.values) REQUIRE(std::isfinite(v));
  CHECK(silent[feature_index("energy_sum_bass")] == 0.0);
  CHECK(silent[feature_index("energy_sum_treble")] == 0.0);
  CHECK(silent[feature_index("centroid_mean")] == 0.0);

  // first stroke: all delta fields zero
  const FeatureVector first =
      extract_features(segment_of(decaying_tone(300.0, 8.0, 0.3, 16000)), nullptr, fcfg);
  for (const auto& pair : delta_pairs())
    CHECK(first[static_cast<std::size_t>(pair.delta)] == 0.0);

  // second stroke: delta = current - previous on the designated fields
  const FeatureVector second = extract_features(
      segment_of(decaying_tone(100.0, 6.0, 0.35, 16000)), &first, fcfg);
  for (const auto& pair : delta_pairs())
    CHECK(second[static_cast<std::size_t>(pair.delta)] ==
          doctest::Approx(second[static_cast<std::size_t>(pair.source)] -
                          first[static_cast<std::size_t>(pair.source)]));
}

TEST_CASE("a decaying 100 Hz stroke reads as resonant bass") {
  FeatureConfig fcfg;
  // ringing 100 Hz tone plus a contact-noise tail that dies faster than
  // the tone but stays above the tone's spectral leakage (about -47 dB
  // with the 25 ms Hann window) for the whole segment
  std::vector<double> samples = decaying_tone(100.0, 5.0, 0.3, 16000, 0.5);
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> white(-1.0, 1.0);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] += 0.3 * white(gen) * std::exp(-12.0 * static_cast<double>(i) / 16000.0);

  const FeatureVector rb = extract_features(segment_of(std::move(samples)), nullptr, fcfg);
  CHECK(rb[feature_index("energy_sum_bass")] > rb[feature_index("energy_sum_treble")]);
  // the bass keeps ringing while the treble band only has the dying
  // noise tail, so its late decay is much steeper
  CHECK(rb[feature_index("late_slope_bass")] > rb[feature_index("late_slope_treble")]);
}

TEST_CASE("synthetic resonant strokes land in their bands") {
  FeatureConfig fcfg;
  const synth::SetSpec set = synth::default_sets()[0];

  const FeatureVector rt = extract_features(
      segment_of(synth::make_stroke(Stroke::RT, set, 4800, 16000, 6)), nullptr, fcfg);
  CHECK(rt[feature_index("energy_sum_treble")] / rt[feature_index("energy_sum_bass")] >= 10.0);

  const FeatureVector rb = extract_features(
      segment_of(synth::make_stroke(Stroke::RB, set, 4800, 16000, 7)), nullptr, fcfg);
  CHECK(rb[feature_index("energy_sum_bass")] / rb[feature_index("energy_sum_treble")] >= 10.0);
}

TEST_CASE("gain invariance of the analytic features") {
  FeatureConfig fcfg;
  // both bands energized and every mel band above the log floor, where
  // the invariance is analytic
  std::vector<double> samples = decaying_tone(100.0, 5.0, 0.35, 16000, 0.35);
  const auto treble_part = decaying_tone(320.0, 7.0, 0.35, 16000, 0.35);
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> white(-0.02, 0.02);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] += treble_part[i] + white(gen);

  std::vector<double> doubled = samples;
  for (double& s : doubled) s *= 2.0;

  const FeatureVector a = extract_features(segment_of(samples), nullptr, fcfg);
  const FeatureVector b = extract_features(segment_of(doubled), nullptr, fcfg);

  for (int m = 1; m <= 12; ++m) {
    const auto i = static_cast<std::size_t>(feature_index("mfcc_mean_" + std::to_string(m)));
    CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6).scale(1.0));
  }
  for (const char* name : {"zcr_mean", "zcr_std", "knot_loc_bass", "knot_loc_treble",
                           "early_slope_bass", "early_slope_treble", "late_slope_bass",
                           "late_slope_treble"}) {
    const auto i = static_cast<std::size_t>(feature_index(name));
    CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6).scale(1.0));
  }
  for (const char* name : {"energy_sum_bass", "energy_sum_treble", "energy_mean_bass",
                           "energy_mean_treble", "energy_std_bass", "energy_std_treble",
                           "flux_max_bass", "flux_max_treble"}) {
    const auto i = static_cast<std::size_t>(feature_index(name));
    CHECK(b[i] == doctest::Approx(4.0 * a[i]).epsilon(1e-6));
  }
}

TEST_CASE("extract_track_features folds deltas sequentially") {
  FeatureConfig fcfg;
  std::vector<StrokeSegment> segs;
  segs.push_back(segment_of(decaying_tone(250.0, 8.0, 0.3, 16000)));
  segs.push_back(segment_of(decaying_tone(100.0, 6.0, 0.3, 16000)));
  segs.push_back(segment_of(decaying_tone(300.0, 9.0, 0.25, 16000)));

  const auto fvs = extract_track_features(segs, fcfg);
  REQUIRE(fvs.size() == 3);
  for (const auto& pair : delta_pairs()) {
    const auto d = static_cast<std::size_t>(pair.delta);
    const auto s = static_cast<std::size_t>(pair.source);
    CHECK(fvs[0][d] == 0.0);
    CHECK(fvs[1][d] == doctest::Approx(fvs[1][s] - fvs[0][s]));
    CHECK(fvs[2][d] == doctest::Approx(fvs[2][s] - fvs[1][s]));
  }
}
