#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabla/audio.hpp"
#include "tabla/labels.hpp"
#include "tabla/onset.hpp"

namespace tabla::synth {

// One synthetic "tabla set": a bass/treble fundamental pair with its own
// decay behavior. treble_gain scales the treble partials only, used to
// reproduce distribution shift across instruments.
struct SetSpec {
  std::string name;
  double bass_f0 = 85.0;
  double treble_f0 = 250.0;
  double bass_decay = 8.0;    // exponential decay rate, 1/s
  double treble_decay = 10.0;
  double treble_gain = 1.0;
};

struct CorpusConfig {
  int sample_rate = 16000;
  int strokes_per_class = 150;
  int tracks_per_set = 5;
  double min_gap_s = 0.150;
  double max_gap_s = 0.400;
  std::uint64_t seed = 7;
  std::vector<SetSpec> sets;  // empty -> default_sets()
};

std::vector<SetSpec> default_sets();

// A held-out instrument with fundamentals between the training ones;
// used as the synthetic counterpart of the paper-style test split.
SetSpec default_test_set();

struct Track {
  AudioClip clip;
  OnsetList onsets;
  std::vector<Stroke> labels;
  std::string tabla_set;
  std::string name;
};

// Single stroke, length n samples, starting at its onset.
std::vector<double> make_stroke(Stroke kind, const SetSpec& set, std::size_t n, int sample_rate,
                                std::uint64_t stroke_seed);

Track make_track(const SetSpec& set, const std::vector<Stroke>& sequence, const CorpusConfig& cfg,
                 std::uint64_t track_seed, const std::string& name);

// Balanced class counts per set, shuffled into tracks_per_set tracks.
std::vector<Track> make_corpus(const CorpusConfig& cfg);

}  // namespace tabla::synth
