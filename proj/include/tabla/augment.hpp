#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabla/audio.hpp"
#include "tabla/features.hpp"
#include "tabla/labels.hpp"

namespace tabla {

// One labeled stroke. The audio slice is kept (shared) so audio-space
// augmentation can re-extract features; parent indices are set on
// SMOTE rows for traceability.
struct StrokeRow {
  FeatureVector features;
  Stroke label = Stroke::D;
  std::string tabla_set;
  std::string track;
  int stroke_index = 0;
  bool synthetic = false;
  std::shared_ptr<const AudioClip> audio;  // null when only features are known
  int parent_a = -1;
  int parent_b = -1;
};

struct StrokeDataset {
  std::vector<StrokeRow> rows;

  std::size_t size() const { return rows.size(); }
  std::vector<int> class_counts() const;  // indexed by Stroke
  std::vector<std::string> tabla_sets() const;  // distinct, sorted
};

enum class AugmentStrategy { None, Oversample, Smote, Pitch, PitchOversample, PitchSmote };

AugmentStrategy parse_strategy(const std::string& s);
std::string to_string(AugmentStrategy s);

struct AugmentConfig {
  std::vector<double> pitch_levels = {-0.5, -0.25, 0.25, 0.5};  // semitones
  std::vector<Stroke> pitch_categories = {Stroke::RT, Stroke::RB, Stroke::B};
  int smote_k = 5;
  AugmentStrategy strategy = AugmentStrategy::None;
};

// Phase-vocoder time stretch followed by resampling back to the input
// length, so duration is preserved and a tone at f lands at f*2^(s/12).
std::vector<double> pitch_shift(const std::vector<double>& samples, int sample_rate,
                                double semitones);

// Appends |pitch_levels| feature rows per resonant stroke, re-extracted
// from the shifted audio. Damped strokes are left alone.
StrokeDataset augment_pitch(const StrokeDataset& ds, const AugmentConfig& cfg,
                            const FeatureConfig& fcfg);

// Cyclic duplication of minority rows until every present class matches
// the majority count.
StrokeDataset oversample_repeat(const StrokeDataset& ds);

// Feature-space interpolation toward same-class nearest neighbors
// (Euclidean on z-scored features) until balance. Classes of size one
// fall back to repetition with a warning on stderr.
StrokeDataset smote(const StrokeDataset& ds, const AugmentConfig& cfg, std::uint64_t seed);

// Dispatch on cfg.strategy; pitch runs before the balancing step in the
// combined strategies.
StrokeDataset apply_augmentation(const StrokeDataset& ds, const AugmentConfig& cfg,
                                 const FeatureConfig& fcfg, std::uint64_t seed);

}  // namespace tabla
