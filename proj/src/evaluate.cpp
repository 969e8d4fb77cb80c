#include "tabla/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "tabla/error.hpp"
#include "tabla/rng.hpp"

namespace tabla {

EvalReport metrics(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw Error("metrics: prediction/truth lengths differ");
  if (pred.empty()) throw Error("metrics: no samples");

  EvalReport r;
  r.n = static_cast<int>(pred.size());
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= kNumClasses || truth[i] < 0 || truth[i] >= kNumClasses)
      throw Error("metrics: label outside the class set");
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    if (pred[i] == truth[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / r.n;

  double f_sum = 0.0, recall_sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    int truth_count = 0, pred_count = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      truth_count += r.confusion[cs][static_cast<std::size_t>(o)];
      pred_count += r.confusion[static_cast<std::size_t>(o)][cs];
    }
    const int tp = r.confusion[cs][cs];
    r.precision[cs] = pred_count > 0 ? static_cast<double>(tp) / pred_count : 0.0;
    r.recall[cs] = truth_count > 0 ? static_cast<double>(tp) / truth_count : 0.0;
    const double pr = r.precision[cs] + r.recall[cs];
    r.f1[cs] = pr > 0.0 ? 2.0 * r.precision[cs] * r.recall[cs] / pr : 0.0;
    f_sum += r.f1[cs];
    if (truth_count > 0) {
      recall_sum += r.recall[cs];
      ++present;
    }
  }
  r.macro_f = f_sum / kNumClasses;
  r.balanced_accuracy = present > 0 ? recall_sum / present : 0.0;
  return r;
}

forest::ForestModel train_on_dataset(const StrokeDataset& ds, const forest::ForestParams& params,
                                     const std::vector<std::string>& feature_subset) {
  if (ds.rows.empty()) throw Error("train_on_dataset: empty dataset");

  std::vector<int> cols;
  std::vector<std::string> names;
  if (feature_subset.empty()) {
    for (int f = 0; f < kNumFeatures; ++f) cols.push_back(f);
    names.assign(feature_names().begin(), feature_names().end());
  } else {
    for (const auto& name : feature_subset) {
      const int idx = feature_index(name);
      if (idx < 0) throw Error("train_on_dataset: unknown feature '" + name + "'");
      cols.push_back(idx);
    }
    names = feature_subset;
  }

  Matrix x(ds.rows.size(), cols.size());
  std::vector<int> y(ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      x.at(i, j) = ds.rows[i].features[static_cast<std::size_t>(cols[j])];
    y[i] = static_cast<int>(ds.rows[i].label);
  }
  return forest::train_forest(x, y, params, {stroke_names().begin(), stroke_names().end()},
                              std::move(names));
}

std::vector<int> predict_dataset(const forest::ForestModel& model, const StrokeDataset& ds) {
  std::vector<int> cols;
  for (const auto& name : model.feature_names) {
    const int idx = feature_index(name);
    if (idx < 0) throw Error("predict_dataset: model feature '" + name +
                             "' is not produced by this extractor");
    cols.push_back(idx);
  }
  std::vector<int> out(ds.rows.size());
  std::vector<double> x(cols.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      x[j] = ds.rows[i].features[static_cast<std::size_t>(cols[j])];
    out[i] = forest::predict(model, x).label;
  }
  return out;
}

namespace {

LotoResult loto_cv_subset(const StrokeDataset& ds, const forest::ForestParams& params,
                          const AugmentConfig& aug, const FeatureConfig& fcfg,
                          const std::vector<std::string>& feature_subset) {
  const std::vector<std::string> sets = ds.tabla_sets();
  if (sets.size() < 2) throw Error("loto_cv: need at least 2 distinct tabla sets");

  LotoResult result;
  for (const std::string& held_out : sets) {
    StrokeDataset train, eval;
    for (const auto& row : ds.rows)
      (row.tabla_set == held_out ? eval : train).rows.push_back(row);

    const StrokeDataset augmented = apply_augmentation(train, aug, fcfg, params.seed);
    const forest::ForestModel model = train_on_dataset(augmented, params, feature_subset);

    std::vector<int> truth(eval.rows.size());
    for (std::size_t i = 0; i < eval.rows.size(); ++i)
      truth[i] = static_cast<int>(eval.rows[i].label);
    const std::vector<int> pred = predict_dataset(model, eval);

    result.folds.push_back({held_out, metrics(pred, truth)});
  }

  for (const auto& fold : result.folds) {
    result.mean_accuracy += fold.report.accuracy;
    result.mean_macro_f += fold.report.macro_f;
  }
  result.mean_accuracy /= static_cast<double>(result.folds.size());
  result.mean_macro_f /= static_cast<double>(result.folds.size());
  return result;
}

}  // namespace

LotoResult loto_cv(const StrokeDataset& ds, const forest::ForestParams& params,
                   const AugmentConfig& aug, const FeatureConfig& fcfg) {
  return loto_cv_subset(ds, params, aug, fcfg, {});
}

RfeResult rfe(const StrokeDataset& ds, std::span<const int> target_counts,
              const forest::ForestParams& params, const AugmentConfig& aug,
              const FeatureConfig& fcfg) {
  if (target_counts.empty()) throw Error("rfe: no target counts");
  for (int c : target_counts)
    if (c < 1 || c > kNumFeatures)
      throw Error("rfe: target count " + std::to_string(c) + " out of range");

  std::vector<int> wanted(target_counts.begin(), target_counts.end());
  std::sort(wanted.begin(), wanted.end());
  const int min_count = wanted.front();

  std::vector<std::string> current(feature_names().begin(), feature_names().end());
  RfeResult result;

  while (true) {
    const int count = static_cast<int>(current.size());
    if (std::binary_search(wanted.begin(), wanted.end(), count)) {
      const LotoResult cv = loto_cv_subset(ds, params, aug, fcfg, current);
      RfePoint pt;
      pt.n_features = count;
      pt.mean_f = cv.mean_macro_f;
      double var = 0.0;
      for (const auto& fold : cv.folds) {
        const double d = fold.report.macro_f - cv.mean_macro_f;
        var += d * d;
      }
      pt.std_f = std::sqrt(var / static_cast<double>(cv.folds.size()));
      pt.features = current;
      result.curve.push_back(std::move(pt));
    }
    if (count <= min_count) break;

    const forest::ForestModel model = train_on_dataset(ds, params, current);
    // least important; ties drop the higher canonical index (the later
    // entry, since `current` stays in canonical order)
    std::size_t drop = 0;
    for (std::size_t f = 1; f < model.importances.size(); ++f)
      if (model.importances[f] <= model.importances[drop]) drop = f;
    current.erase(current.begin() + static_cast<long>(drop));
  }

  result.best = result.curve.front();
  for (const auto& pt : result.curve)
    if (pt.mean_f > result.best.mean_f ||
        (pt.mean_f == result.best.mean_f && pt.n_features < result.best.n_features))
      result.best = pt;
  return result;
}

SearchSpace::SearchSpace() {
  forest::MaxFeatures sqrt_mf, all_mf;
  sqrt_mf.kind = forest::MaxFeatures::Kind::Sqrt;
  all_mf.kind = forest::MaxFeatures::Kind::All;
  max_features = {sqrt_mf, all_mf};
}

std::size_t SearchSpace::grid_size() const {
  return n_trees.size() * max_depth.size() * max_features.size() * bootstrap.size();
}

SearchResult random_search(const StrokeDataset& ds, const SearchSpace& space, std::uint64_t seed,
                           const AugmentConfig& aug, const FeatureConfig& fcfg) {
  if (space.n_trees.empty() || space.max_depth.empty() || space.max_features.empty() ||
      space.bootstrap.empty())
    throw Error("random_search: empty grid dimension");

  // full grid in canonical nesting order
  std::vector<forest::ForestParams> grid;
  grid.reserve(space.grid_size());
  for (int nt : space.n_trees)
    for (const auto& depth : space.max_depth)
      for (const auto& mf : space.max_features)
        for (bool bs : space.bootstrap) {
          forest::ForestParams p;
          p.n_trees = nt;
          p.max_depth = depth;
          p.max_features = mf;
          p.bootstrap = bs;
          p.seed = seed;
          grid.push_back(p);
        }

  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t take = grid.size();
  if (static_cast<std::size_t>(space.n_samples) < grid.size()) {
    take = static_cast<std::size_t>(space.n_samples);
    Rng rng(mix64(seed, 0x736561726368ULL));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(order.size() - i);
      std::swap(order[i], order[j]);
    }
  }

  SearchResult result;
  for (std::size_t i = 0; i < take; ++i) {
    const forest::ForestParams& params = grid[order[i]];
    const LotoResult cv = loto_cv(ds, params, aug, fcfg);
    result.samples.push_back({params, cv.mean_macro_f});
    if (i == 0 || cv.mean_macro_f > result.best_score) {  // ties keep the earlier sample
      result.best = params;
      result.best_score = cv.mean_macro_f;
    }
  }
  return result;
}

}  // namespace tabla
