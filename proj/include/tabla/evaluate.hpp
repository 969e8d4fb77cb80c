#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabla/augment.hpp"
#include "tabla/forest.hpp"
#include "tabla/labels.hpp"

namespace tabla {

// Classification metrics over the four stroke categories.
// confusion[truth][pred]; balanced accuracy averages recall over the
// classes present in the truth, macro f averages f over all four.
struct EvalReport {
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};
  int n = 0;
  double accuracy = 0.0;
  double macro_f = 0.0;
  double balanced_accuracy = 0.0;
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
};

EvalReport metrics(std::span<const int> pred, std::span<const int> truth);

struct FoldReport {
  std::string tabla_set;
  EvalReport report;
};

struct LotoResult {
  std::vector<FoldReport> folds;  // keyed by tabla_set, sorted
  double mean_accuracy = 0.0;
  double mean_macro_f = 0.0;
};

// One fold per tabla set: train on the others (augmentation applied to
// the training rows only), evaluate on the held-out originals.
LotoResult loto_cv(const StrokeDataset& ds, const forest::ForestParams& params,
                   const AugmentConfig& aug, const FeatureConfig& fcfg);

// Train a forest on (a feature subset of) a stroke dataset.
forest::ForestModel train_on_dataset(const StrokeDataset& ds, const forest::ForestParams& params,
                                     const std::vector<std::string>& feature_subset = {});

// Predict a dataset with a model whose feature_names may be a subset of
// the canonical 49; returns class indices.
std::vector<int> predict_dataset(const forest::ForestModel& model, const StrokeDataset& ds);

struct RfePoint {
  int n_features = 0;
  double mean_f = 0.0;
  double std_f = 0.0;  // across CV folds
  std::vector<std::string> features;
};

struct RfeResult {
  std::vector<RfePoint> curve;  // descending n_features
  RfePoint best;                // highest mean_f, ties to fewer features
};

// Drop the least-important feature one at a time, scoring mean LOTO-CV
// macro-f at each requested count. Importance ties drop the higher
// canonical index.
RfeResult rfe(const StrokeDataset& ds, std::span<const int> target_counts,
              const forest::ForestParams& params, const AugmentConfig& aug,
              const FeatureConfig& fcfg);

struct SearchSpace {
  std::vector<int> n_trees = {50, 100, 200, 400};
  std::vector<std::optional<int>> max_depth = {std::nullopt, 8, 16, 24};
  std::vector<forest::MaxFeatures> max_features;
  std::vector<bool> bootstrap = {true, false};
  int n_samples = 40;

  SearchSpace();
  std::size_t grid_size() const;
};

struct SearchSample {
  forest::ForestParams params;
  double mean_f = 0.0;
};

struct SearchResult {
  forest::ForestParams best;
  double best_score = 0.0;
  std::vector<SearchSample> samples;  // in evaluation order
};

// Sample n_samples distinct combinations (the whole grid if smaller),
// score each by mean LOTO-CV macro-f; ties keep the earlier sample.
SearchResult random_search(const StrokeDataset& ds, const SearchSpace& space, std::uint64_t seed,
                           const AugmentConfig& aug, const FeatureConfig& fcfg);

}  // namespace tabla
