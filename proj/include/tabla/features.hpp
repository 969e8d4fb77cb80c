#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabla/dsp.hpp"
#include "tabla/labels.hpp"
#include "tabla/onset.hpp"

namespace tabla {

// Onset-to-next-onset span of audio, optionally labeled.
struct StrokeSegment {
  AudioClip clip;  // the cut samples, at the working rate
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<Stroke> label;
};

// Two-piece linear least-squares fit to a log-energy decay. Slopes are
// log-energy units per frame; x is the frame index within the decay
// portion, so both intercepts refer to the decay start.
struct DecayFit {
  double early_slope = 0.0;
  double early_intercept = 0.0;
  double late_slope = 0.0;
  double late_intercept = 0.0;
  double r2_hmean = 0.0;
  std::size_t knot_index = 0;  // into the decay portion
  bool degraded = false;       // decay too short for a two-piece fit
};

inline constexpr int kNumFeatures = 49;

// The canonical 49-dimension descriptor. Field order is fixed; see
// feature_names() for the versioned layout.
struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

const std::array<std::string, kNumFeatures>& feature_names();
int feature_index(const std::string& name);  // -1 if unknown

// Indices of the fields that get delta counterparts, paired with the
// delta field that holds current-minus-previous.
struct DeltaPair {
  int source;
  int delta;
};
const std::array<DeltaPair, 6>& delta_pairs();

// Everything the extractor needs: working rate, analysis grid, the two
// resonance bands, and the segmentation cap.
struct FeatureConfig {
  int sample_rate = 16000;
  AnalysisConfig analysis;
  Band bass{50.0, 200.0};
  Band treble{200.0, 2000.0};
  double last_segment_cap_s = 2.0;
  int min_spline_points = 3;  // per side of the knot
};

// N onsets -> N segments; the last one is capped at onset + cap seconds
// or the clip end, whichever is earlier.
std::vector<StrokeSegment> segment_strokes(const OnsetList& onsets, const AudioClip& clip,
                                           double last_segment_cap_s = 2.0);

// Natural log of per-frame band energy, floored at log(1e-10).
std::vector<double> log_energy_envelope(const StrokeSegment& seg, const Band& band,
                                        const FeatureConfig& cfg);

// Exhaustive knot scan maximizing the harmonic mean of the two R^2
// values; falls back to a single line (degraded flag) when the decay
// portion is shorter than 2 * min_seg points.
DecayFit spline_decay_fit(std::span<const double> log_env, int min_seg = 3);

// log10 of the 20%->90% rise time of the amplitude envelope; degenerate
// rises count as one hop.
double log_attack_time(std::span<const double> envelope, double hop_s);

// Envelope-weighted mean time, relative to the segment start.
double temporal_centroid(std::span<const double> envelope, double hop_s);

// All 49 fields. Deltas are current minus previous stroke, zero for the
// first stroke of a track. Total on any finite audio.
FeatureVector extract_features(const StrokeSegment& seg, const FeatureVector* prev,
                               const FeatureConfig& cfg);

// Sequential fold over one track's segments (the delta dependency).
std::vector<FeatureVector> extract_track_features(const std::vector<StrokeSegment>& segments,
                                                  const FeatureConfig& cfg);

}  // namespace tabla
