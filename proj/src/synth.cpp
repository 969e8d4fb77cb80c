#include "tabla/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabla/error.hpp"
#include "tabla/rng.hpp"

namespace tabla::synth {

std::vector<SetSpec> default_sets() {
  return {
      {"set1", 85.0, 250.0, 8.0, 10.0, 1.0},
      {"set2", 95.0, 300.0, 10.0, 12.0, 1.0},
      {"set3", 105.0, 350.0, 12.0, 9.0, 1.0},
  };
}

SetSpec default_test_set() { return {"test_set", 100.0, 275.0, 9.0, 11.0, 1.0}; }

namespace {

void add_partial(std::vector<double>& buf, int sample_rate, double freq, double amp, double decay,
                 double phase) {
  const double w = 2.0 * std::numbers::pi * freq / sample_rate;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    buf[i] += amp * std::exp(-decay * t) * std::sin(w * static_cast<double>(i) + phase);
  }
}

void add_noise_burst(std::vector<double>& buf, int sample_rate, double amp, double decay,
                     Rng& rng) {
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    buf[i] += amp * std::exp(-decay * t) * (2.0 * rng.unit() - 1.0);
  }
}

}  // namespace

std::vector<double> make_stroke(Stroke kind, const SetSpec& set, std::size_t n, int sample_rate,
                                std::uint64_t stroke_seed) {
  Rng rng(stroke_seed);
  std::vector<double> buf(n, 0.0);
  if (n == 0) return buf;

  const double tune = std::pow(2.0, rng.uniform(-0.05, 0.05) / 12.0);  // +/- 5 cents
  const double level = rng.uniform(0.75, 1.0);
  const double decay_jitter = rng.uniform(0.9, 1.1);

  // short broadband click at the onset (drives the detection function)
  add_noise_burst(buf, sample_rate, 0.35 * level, 300.0, rng);

  const bool has_bass = kind == Stroke::RB || kind == Stroke::B;
  const bool has_treble = kind == Stroke::RT || kind == Stroke::B;

  if (kind == Stroke::D) {
    // fast-decaying noise body, no sustained harmonics
    add_noise_burst(buf, sample_rate, 0.45 * level, 60.0 * decay_jitter, rng);
  } else {
    // contact-noise tail; keeps the off-resonance band decaying steadily
    // instead of collapsing to the log floor
    add_noise_burst(buf, sample_rate, 0.25 * level, 18.0 * decay_jitter, rng);
  }
  if (has_bass) {
    const double f0 = set.bass_f0 * tune;
    const double d = set.bass_decay * decay_jitter;
    const double amp = (kind == Stroke::B ? 0.40 : 0.50) * level;
    add_partial(buf, sample_rate, f0, amp, d, rng.uniform(0.0, 6.28));
    add_partial(buf, sample_rate, 1.35 * f0, 0.22 * amp, 2.5 * d, rng.uniform(0.0, 6.28));
  }
  if (has_treble) {
    const double f0 = set.treble_f0 * tune;
    const double d = set.treble_decay * decay_jitter;
    const double amp = (kind == Stroke::B ? 0.40 : 0.50) * level * set.treble_gain;
    add_partial(buf, sample_rate, f0, amp, d, rng.uniform(0.0, 6.28));
    add_partial(buf, sample_rate, 2.0 * f0, 0.45 * amp, 1.3 * d, rng.uniform(0.0, 6.28));
    add_partial(buf, sample_rate, 3.0 * f0, 0.20 * amp, 1.6 * d, rng.uniform(0.0, 6.28));
  }

  // 2 ms fade-in to avoid a hard click before the onset frame
  const auto ramp = std::min<std::size_t>(n, static_cast<std::size_t>(sample_rate / 500));
  for (std::size_t i = 0; i < ramp; ++i)
    buf[i] *= static_cast<double>(i + 1) / static_cast<double>(ramp);
  return buf;
}

Track make_track(const SetSpec& set, const std::vector<Stroke>& sequence, const CorpusConfig& cfg,
                 std::uint64_t track_seed, const std::string& name) {
  if (sequence.empty()) throw Error("make_track: empty stroke sequence");
  Rng rng(track_seed);

  // lead-in, then one gap per stroke; the last stroke rings for a full gap
  std::vector<double> gaps(sequence.size());
  for (auto& g : gaps) g = rng.uniform(cfg.min_gap_s, cfg.max_gap_s);
  const double lead_in = 0.050;

  double total = lead_in;
  for (double g : gaps) total += g;
  const auto n_total = static_cast<std::size_t>(std::llround((total + 0.1) * cfg.sample_rate));

  Track track;
  track.clip.sample_rate = cfg.sample_rate;
  track.clip.samples.assign(n_total, 0.0);
  track.tabla_set = set.name;
  track.name = name;

  double t = lead_in;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto start = static_cast<std::size_t>(std::llround(t * cfg.sample_rate));
    const auto len = static_cast<std::size_t>(std::llround(gaps[i] * cfg.sample_rate));
    const std::vector<double> stroke = make_stroke(
        sequence[i], set, std::min(len, n_total - start), cfg.sample_rate,
        mix64(track_seed, 0x7374726bULL, static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < stroke.size(); ++j) track.clip.samples[start + j] += stroke[j];
    track.onsets.push_back(t);
    track.labels.push_back(sequence[i]);
    t += gaps[i];
  }
  return track;
}

std::vector<Track> make_corpus(const CorpusConfig& cfg) {
  const std::vector<SetSpec> sets = cfg.sets.empty() ? default_sets() : cfg.sets;
  std::vector<Track> tracks;

  for (std::size_t s = 0; s < sets.size(); ++s) {
    // balanced label pool for the whole set, shuffled once
    std::vector<Stroke> pool;
    for (int c = 0; c < kNumClasses; ++c)
      pool.insert(pool.end(), static_cast<std::size_t>(cfg.strokes_per_class),
                  static_cast<Stroke>(c));
    Rng shuffle_rng(mix64(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(s)));
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[shuffle_rng.below(i)]);

    const std::size_t per_track = (pool.size() + static_cast<std::size_t>(cfg.tracks_per_set) - 1) /
                                  static_cast<std::size_t>(cfg.tracks_per_set);
    int track_no = 0;
    for (std::size_t off = 0; off < pool.size(); off += per_track, ++track_no) {
      const std::size_t end = std::min(pool.size(), off + per_track);
      const std::vector<Stroke> seq(pool.begin() + static_cast<long>(off),
                                    pool.begin() + static_cast<long>(end));
      const std::string name = sets[s].name + "_track" + std::to_string(track_no);
      tracks.push_back(make_track(sets[s], seq, cfg,
                                  mix64(cfg.seed, static_cast<std::uint64_t>(s),
                                        static_cast<std::uint64_t>(track_no)),
                                  name));
    }
  }
  return tracks;
}

}  // namespace tabla::synth
