#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tabla/matrix.hpp"

namespace tabla::forest {

// Per-node candidate feature count.
struct MaxFeatures {
  enum class Kind { Sqrt, Log2, All, Explicit };
  Kind kind = Kind::Sqrt;
  int k = 0;  // for Explicit

  int resolve(int n_features) const;
  std::string to_string() const;
  static MaxFeatures parse(const std::string& s);
};

struct ForestParams {
  int n_trees = 200;
  std::optional<int> max_depth;  // nullopt = unlimited
  MaxFeatures max_features;
  bool bootstrap = true;
  int min_samples_split = 2;
  std::uint64_t seed = 42;
};

// Flat node storage; feature < 0 marks a leaf holding class counts.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> counts;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  int predict_leaf(std::span<const double> x) const;  // node index of the leaf
  int predict(std::span<const double> x) const;       // argmax class, ties to lowest index
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;
  std::vector<double> importances;  // nonnegative, sums to 1
};

// Greedy Gini CART. Candidate features are a per-node random subset;
// thresholds sit at midpoints of consecutive distinct sorted values.
// Ties break to the lowest feature index, then the lowest threshold.
DecisionTree train_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                        const ForestParams& params, int n_classes, std::uint64_t tree_seed,
                        std::vector<double>* importance_acc = nullptr);

// n_trees trees on bootstrap resamples, each tree seeded from
// (params.seed, tree index) so parallel and serial training agree
// exactly. OpenMP over trees; _serial kept as the reference.
ForestModel train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params,
                         std::vector<std::string> classes,
                         std::vector<std::string> feature_names);
ForestModel train_forest_serial(const Matrix& x, std::span<const int> y,
                                const ForestParams& params, std::vector<std::string> classes,
                                std::vector<std::string> feature_names);

struct Prediction {
  int label = 0;                     // class index
  std::vector<double> vote_share;    // per class, sums to 1
};

// Majority vote; ties break by canonical class order.
Prediction predict(const ForestModel& model, std::span<const double> features);

// Versioned JSON document; doubles carry 17 significant digits so the
// round trip is exact.
void save_model(const ForestModel& model, const std::filesystem::path& path,
                const std::string& extra_json = "");
std::string model_to_json(const ForestModel& model, const std::string& extra_json = "");
ForestModel load_model(const std::filesystem::path& path, std::string* extra_json_out = nullptr);
ForestModel model_from_json(const std::string& text, std::string* extra_json_out = nullptr);

inline constexpr int kModelFormatVersion = 1;

}  // namespace tabla::forest
