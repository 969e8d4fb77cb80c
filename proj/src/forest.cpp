#include "tabla/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tabla/error.hpp"
#include "tabla/fsutil.hpp"
#include "tabla/jsonw.hpp"
#include "tabla/rng.hpp"

namespace tabla::forest {

int MaxFeatures::resolve(int n_features) const {
  switch (kind) {
    case Kind::Sqrt:
      return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));
    case Kind::Log2:
      return std::max(1, static_cast<int>(std::log2(static_cast<double>(n_features))));
    case Kind::All:
      return n_features;
    case Kind::Explicit:
      if (k < 1 || k > n_features)
        throw Error("max_features: explicit k " + std::to_string(k) + " out of range [1, " +
                    std::to_string(n_features) + "]");
      return k;
  }
  return n_features;
}

std::string MaxFeatures::to_string() const {
  switch (kind) {
    case Kind::Sqrt: return "sqrt";
    case Kind::Log2: return "log2";
    case Kind::All: return "all";
    case Kind::Explicit: return std::to_string(k);
  }
  return "sqrt";
}

MaxFeatures MaxFeatures::parse(const std::string& s) {
  MaxFeatures mf;
  if (s == "sqrt") {
    mf.kind = Kind::Sqrt;
  } else if (s == "log2") {
    mf.kind = Kind::Log2;
  } else if (s == "all" || s == "none") {
    mf.kind = Kind::All;
  } else {
    try {
      mf.k = std::stoi(s);
    } catch (const std::exception&) {
      throw Error("max_features: expected sqrt, log2, all or an integer, got '" + s + "'");
    }
    mf.kind = Kind::Explicit;
  }
  return mf;
}

int DecisionTree::predict_leaf(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

int DecisionTree::predict(std::span<const double> x) const {
  const TreeNode& leaf = nodes[static_cast<std::size_t>(predict_leaf(x))];
  int best = 0;
  for (std::size_t c = 1; c < leaf.counts.size(); ++c)
    if (leaf.counts[c] > leaf.counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

namespace {

double gini(std::span<const int> counts, int total) {
  if (total == 0) return 0.0;
  double acc = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    acc += p * p;
  }
  return 1.0 - acc;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double weighted_gini = 0.0;
  double left_gini = 0.0, right_gini = 0.0;
  int n_left = 0;
};

}  // namespace

DecisionTree train_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                        const ForestParams& params, int n_classes, std::uint64_t tree_seed,
                        std::vector<double>* importance_acc) {
  if (rows.empty()) throw Error("train_tree: no samples");
  const int d = static_cast<int>(x.cols);
  const int m_feats = params.max_features.resolve(d);
  Rng rng(tree_seed);

  DecisionTree tree;
  struct Item {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<Item> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});

  std::vector<int> feat_pool(static_cast<std::size_t>(d));
  std::iota(feat_pool.begin(), feat_pool.end(), 0);
  const double n_root = static_cast<double>(rows.size());

  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();
    const auto n = static_cast<int>(item.rows.size());

    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t r : item.rows) ++counts[static_cast<std::size_t>(y[r])];
    const bool pure = std::count(counts.begin(), counts.end(), 0) >= n_classes - 1;
    const bool depth_stop = params.max_depth && item.depth >= *params.max_depth;

    auto make_leaf = [&] { tree.nodes[static_cast<std::size_t>(item.node)].counts = counts; };

    if (pure || depth_stop || n < params.min_samples_split) {
      make_leaf();
      continue;
    }

    // candidate features: random subset, examined in ascending order
    for (int i = 0; i < m_feats; ++i) {
      const auto j = i + static_cast<int>(rng.below(static_cast<std::size_t>(d - i)));
      std::swap(feat_pool[static_cast<std::size_t>(i)], feat_pool[static_cast<std::size_t>(j)]);
    }
    std::vector<int> candidates(feat_pool.begin(), feat_pool.begin() + m_feats);
    std::sort(candidates.begin(), candidates.end());

    SplitChoice best;
    std::vector<std::pair<double, int>> vals(static_cast<std::size_t>(n));  // (value, class)
    std::vector<int> left_counts(static_cast<std::size_t>(n_classes));
    std::vector<int> right_counts(static_cast<std::size_t>(n_classes));
    for (int f : candidates) {
      for (std::size_t i = 0; i < item.rows.size(); ++i)
        vals[i] = {x.at(item.rows[i], static_cast<std::size_t>(f)),
                   y[item.rows[i]]};
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      std::fill(left_counts.begin(), left_counts.end(), 0);
      for (int i = 0; i + 1 < n; ++i) {
        ++left_counts[static_cast<std::size_t>(vals[static_cast<std::size_t>(i)].second)];
        const double a = vals[static_cast<std::size_t>(i)].first;
        const double b = vals[static_cast<std::size_t>(i) + 1].first;
        if (!(a < b)) continue;
        double thr = 0.5 * (a + b);
        if (!(thr < b)) thr = a;  // rounding guard for adjacent doubles

        for (int c = 0; c < n_classes; ++c)
          right_counts[static_cast<std::size_t>(c)] =
              counts[static_cast<std::size_t>(c)] - left_counts[static_cast<std::size_t>(c)];
        const int nl = i + 1, nr = n - nl;
        const double gl = gini(left_counts, nl), gr = gini(right_counts, nr);
        const double wg = (nl * gl + nr * gr) / n;
        if (!best.found || wg < best.weighted_gini) {
          best = {true, f, thr, wg, gl, gr, nl};
        }
      }
    }

    if (!best.found) {  // all candidate features constant here
      make_leaf();
      continue;
    }

    if (importance_acc) {
      const double decrease =
          (n * gini(counts, n) - best.n_left * best.left_gini -
           (n - best.n_left) * best.right_gini) /
          n_root;
      (*importance_acc)[static_cast<std::size_t>(best.feature)] += decrease;
    }

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(static_cast<std::size_t>(best.n_left));
    right_rows.reserve(static_cast<std::size_t>(n - best.n_left));
    for (std::size_t r : item.rows) {
      if (x.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }

    const int left_i = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_i = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(item.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_i;
    node.right = right_i;

    // push right first so the left child is processed (and consumes rng)
    // first: deterministic pre-order traversal
    stack.push_back({right_i, std::move(right_rows), item.depth + 1});
    stack.push_back({left_i, std::move(left_rows), item.depth + 1});
  }
  return tree;
}

namespace {

struct TreeJob {
  DecisionTree tree;
  std::vector<double> importances;
};

TreeJob train_one(const Matrix& x, std::span<const int> y, const ForestParams& params,
                  int n_classes, int tree_index) {
  const std::uint64_t tree_seed = mix64(params.seed, static_cast<std::uint64_t>(tree_index));
  Rng boot_rng(mix64(tree_seed, 0x626f6f74ULL));  // separate stream for the resample

  std::vector<std::size_t> rows(x.rows);
  if (params.bootstrap) {
    for (auto& r : rows) r = boot_rng.below(x.rows);
  } else {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }

  TreeJob job;
  job.importances.assign(x.cols, 0.0);
  job.tree = train_tree(x, y, rows, params, n_classes, tree_seed, &job.importances);

  // normalize per tree before averaging
  const double total = std::accumulate(job.importances.begin(), job.importances.end(), 0.0);
  if (total > 0.0)
    for (double& v : job.importances) v /= total;
  return job;
}

ForestModel assemble(std::vector<TreeJob>&& jobs, const Matrix& x, const ForestParams& params,
                     std::vector<std::string>&& classes, std::vector<std::string>&& feature_names) {
  ForestModel model;
  model.params = params;
  model.classes = std::move(classes);
  model.feature_names = std::move(feature_names);
  model.importances.assign(x.cols, 0.0);
  for (auto& job : jobs) {
    model.trees.push_back(std::move(job.tree));
    for (std::size_t f = 0; f < x.cols; ++f) model.importances[f] += job.importances[f];
  }
  const double total =
      std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
  if (total > 0.0)
    for (double& v : model.importances) v /= total;
  return model;
}

void check_train_args(const Matrix& x, std::span<const int> y,
                      const std::vector<std::string>& classes,
                      const std::vector<std::string>& feature_names, const ForestParams& params) {
  if (x.rows == 0) throw Error("train_forest: empty dataset");
  if (x.rows != y.size()) throw Error("train_forest: feature/label row counts differ");
  if (!feature_names.empty() && feature_names.size() != x.cols)
    throw Error("train_forest: feature_names size does not match feature count");
  if (params.n_trees < 1) throw Error("train_forest: n_trees must be >= 1");
  for (int label : y)
    if (label < 0 || label >= static_cast<int>(classes.size()))
      throw Error("train_forest: label outside the class set");
}

}  // namespace

ForestModel train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params,
                         std::vector<std::string> classes, std::vector<std::string> feature_names) {
  check_train_args(x, y, classes, feature_names, params);
  const int n_classes = static_cast<int>(classes.size());
  std::vector<TreeJob> jobs(static_cast<std::size_t>(params.n_trees));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < params.n_trees; ++t)
    jobs[static_cast<std::size_t>(t)] = train_one(x, y, params, n_classes, t);
  return assemble(std::move(jobs), x, params, std::move(classes), std::move(feature_names));
}

ForestModel train_forest_serial(const Matrix& x, std::span<const int> y,
                                const ForestParams& params, std::vector<std::string> classes,
                                std::vector<std::string> feature_names) {
  check_train_args(x, y, classes, feature_names, params);
  const int n_classes = static_cast<int>(classes.size());
  std::vector<TreeJob> jobs(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t)
    jobs[static_cast<std::size_t>(t)] = train_one(x, y, params, n_classes, t);
  return assemble(std::move(jobs), x, params, std::move(classes), std::move(feature_names));
}

Prediction predict(const ForestModel& model, std::span<const double> features) {
  if (features.size() != model.feature_names.size() && !model.feature_names.empty())
    throw Error("predict: expected " + std::to_string(model.feature_names.size()) +
                " features, got " + std::to_string(features.size()));

  std::vector<int> votes(model.classes.size(), 0);
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.predict(features))];

  Prediction p;
  p.vote_share.resize(votes.size());
  int best = 0;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    p.vote_share[c] = static_cast<double>(votes[c]) / static_cast<double>(model.trees.size());
    if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  p.label = best;
  return p;
}

std::string model_to_json(const ForestModel& model, const std::string& extra_json) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version");
  w.value(kModelFormatVersion);

  w.key("params");
  w.begin_object();
  w.key("n_trees");
  w.value(model.params.n_trees);
  w.key("max_depth");
  if (model.params.max_depth)
    w.value(*model.params.max_depth);
  else
    w.null();
  w.key("max_features");
  w.value(model.params.max_features.to_string());
  w.key("bootstrap");
  w.value(model.params.bootstrap);
  w.key("min_samples_split");
  w.value(model.params.min_samples_split);
  w.key("seed");
  w.value(static_cast<std::size_t>(model.params.seed));
  w.end_object();

  w.key("feature_names");
  w.begin_array();
  for (const auto& n : model.feature_names) w.value(n);
  w.end_array();

  w.key("classes");
  w.begin_array();
  for (const auto& c : model.classes) w.value(c);
  w.end_array();

  w.key("importances");
  w.begin_array();
  for (double v : model.importances) w.value(v);
  w.end_array();

  w.key("trees");
  w.begin_array();
  for (const auto& tree : model.trees) {
    w.begin_object();
    w.key("nodes");
    w.begin_array();
    for (const auto& node : tree.nodes) {
      w.begin_object();
      if (node.feature >= 0) {
        w.key("f");
        w.value(node.feature);
        w.key("t");
        w.value(node.threshold);
        w.key("l");
        w.value(node.left);
        w.key("r");
        w.value(node.right);
      } else {
        w.key("c");
        w.begin_array();
        for (int c : node.counts) w.value(c);
        w.end_array();
      }
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();

  std::string out = w.str();
  if (!extra_json.empty()) {
    // splice the pipeline section in before the closing brace
    out.pop_back();
    out += ",\"pipeline\":" + extra_json + "}";
  }
  return out;
}

void save_model(const ForestModel& model, const std::filesystem::path& path,
                const std::string& extra_json) {
  write_file_atomic(path, model_to_json(model, extra_json));
}

ForestModel model_from_json(const std::string& text, std::string* extra_json_out) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model: malformed JSON: ") + e.what());
  }

  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("model: file has format_version " + std::to_string(version) +
                  " but this build reads version " + std::to_string(kModelFormatVersion));

    ForestModel model;
    const auto& p = doc.at("params");
    model.params.n_trees = p.at("n_trees").get<int>();
    if (!p.at("max_depth").is_null()) model.params.max_depth = p.at("max_depth").get<int>();
    model.params.max_features = MaxFeatures::parse(p.at("max_features").get<std::string>());
    model.params.bootstrap = p.at("bootstrap").get<bool>();
    model.params.min_samples_split = p.at("min_samples_split").get<int>();
    model.params.seed = p.at("seed").get<std::uint64_t>();

    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    model.importances = doc.at("importances").get<std::vector<double>>();

    for (const auto& jtree : doc.at("trees")) {
      DecisionTree tree;
      for (const auto& jnode : jtree.at("nodes")) {
        TreeNode node;
        if (jnode.contains("f")) {
          node.feature = jnode.at("f").get<int>();
          node.threshold = jnode.at("t").get<double>();
          node.left = jnode.at("l").get<int>();
          node.right = jnode.at("r").get<int>();
        } else {
          node.counts = jnode.at("c").get<std::vector<int>>();
        }
        tree.nodes.push_back(std::move(node));
      }
      if (tree.nodes.empty()) throw Error("model: tree with no nodes");
      model.trees.push_back(std::move(tree));
    }

    if (extra_json_out) {
      *extra_json_out = doc.contains("pipeline") ? doc.at("pipeline").dump() : "";
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model: invalid document structure: ") + e.what());
  }
}

ForestModel load_model(const std::filesystem::path& path, std::string* extra_json_out) {
  return model_from_json(read_file(path), extra_json_out);
}

}  // namespace tabla::forest
