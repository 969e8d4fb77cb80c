#pragma once

#include <span>
#include <vector>

#include "tabla/dsp.hpp"

namespace tabla {

// Post-processing hyperparameters for the detection function, plus the
// evaluation tolerance (interpreted as +/- tolerance_s around a truth
// onset). The moving average is centered.
struct OnsetConfig {
  double alpha = 0.2;       // peak-picking threshold on the normalized ODF
  int delay = 5;            // moving-average length, frames
  double tolerance_s = 0.050;
};

using OnsetList = std::vector<double>;  // strictly increasing seconds

// High frequency content: ODF[t] = sum_k k * |X_t[k]|^2.
std::vector<double> hfc(const Spectrogram& spec);

// Normalize the ODF to max 1, smooth with a centered moving average of
// length cfg.delay, then emit local maxima strictly above cfg.alpha with
// a 30 ms minimum inter-onset gap (larger peak wins). Times are the
// frame-center times. An all-zero ODF yields no onsets.
OnsetList smooth_and_pick(std::span<const double> odf, std::span<const double> frame_times,
                          const OnsetConfig& cfg);

struct MatchCounts {
  int hits = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

// Maximum-cardinality one-to-one matching between predictions and ground
// truth under |t_pred - t_truth| <= tolerance_s.
MatchCounts match_onsets(const OnsetList& pred, const OnsetList& truth, double tolerance_s);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

Prf onset_prf(int hits, int false_positives, int false_negatives);

// One track prepared for grid tuning: the ODF is computed once, the grid
// only re-runs the cheap post-processing.
struct TuneTrack {
  std::vector<double> odf;
  std::vector<double> frame_times;
  OnsetList truth;
};

TuneTrack make_tune_track(const AudioClip& clip, const OnsetList& truth,
                          const AnalysisConfig& acfg);

struct GridPoint {
  double alpha = 0.0;
  int delay = 0;
  double mean_f = 0.0;
};

struct TuneResult {
  double alpha = 0.0;
  int delay = 0;
  double mean_f = 0.0;
  std::vector<GridPoint> table;  // row-major over (alpha, delay)
};

// Mean-over-tracks f-score per grid point; argmax wins, ties broken by
// higher alpha then smaller delay. OpenMP over grid points; the _serial
// variant is the reference kept for testing.
TuneResult tune_grid(std::span<const TuneTrack> tracks, std::span<const double> alpha_grid,
                     std::span<const int> delay_grid, double tolerance_s);
TuneResult tune_grid_serial(std::span<const TuneTrack> tracks, std::span<const double> alpha_grid,
                            std::span<const int> delay_grid, double tolerance_s);

}  // namespace tabla
