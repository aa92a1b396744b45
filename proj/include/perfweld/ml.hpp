#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfweld/dataset.hpp"

namespace perfweld {

// Per-feature shift/scale to zero mean, unit variance (population variance).
// Features with zero variance get scale 1 and transform to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;

  static Standardizer fit(std::span<const double> x, std::size_t n_rows, std::size_t n_cols);
  static Standardizer fit(const Dataset& ds);

  void transform_inplace(std::span<double> x) const;
  std::vector<double> transform(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

struct TreeParams {
  int max_depth = -1;         // -1: unlimited
  int min_samples_leaf = 1;
  int n_trees = 100;
  int max_features = 0;       // 0: max(1, floor(d/3)); -1: all; else explicit count
  std::uint64_t seed = 0;
  bool bootstrap = true;      // bagging/forest resampling; off is a test hook

  int resolve_max_features(std::size_t n_features) const;
  void validate(std::size_t n_features) const;

  nlohmann::json to_json() const;
  static TreeParams from_json(const nlohmann::json& j);
};

// Binary regression tree stored as a flat node array, nodes[0] the root.
// feature < 0 marks a leaf; routing is x[feature] <= threshold -> left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;  // leaf: mean response of the training rows reaching it
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

enum class LearnerKind { cart, random_forest, extra_trees };

std::string to_string(LearnerKind k);
LearnerKind learner_kind_from_string(const std::string& s);

// A fitted set of trees; prediction is the member mean. A single CART is
// an ensemble of one tree.
struct Ensemble {
  LearnerKind kind = LearnerKind::cart;
  TreeParams params;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static Ensemble from_json(const nlohmann::json& j);
};

// Greedy variance-reduction CART. Split candidates are midpoints between
// consecutive distinct sorted feature values; ties break to the lowest
// feature index, then the lowest threshold. Deterministic.
RegressionTree fit_cart(const Dataset& train, const TreeParams& p);

double predict_tree(const RegressionTree& tree, std::span<const double> x);

// n_trees base learners, each fit on a bootstrap resample of size |train|
// (per-member seed derived from p.seed); prediction is the member mean.
Ensemble fit_bagged(const Dataset& train, const TreeParams& p,
                    LearnerKind base = LearnerKind::cart);

// Bagged CART where every split considers a random subset of
// max_features features.
Ensemble fit_random_forest(const Dataset& train, const TreeParams& p);

// n_trees trees on the full training set (no bootstrap); each node draws
// one uniform threshold per sampled feature and keeps the best candidate
// by variance reduction. A feature whose node min equals its max yields no
// candidate; a node with no candidates becomes a leaf.
Ensemble fit_extra_trees(const Dataset& train, const TreeParams& p);

// `jobs` > 1 trains members concurrently; results are identical to
// sequential fitting (per-member seeds, fixed aggregation order).
Ensemble fit_ensemble(LearnerKind kind, const Dataset& train, const TreeParams& p,
                      int jobs = 1);

// Copy of ds with features standardized; responses untouched.
Dataset standardize_features(const Dataset& ds, const Standardizer& st);

}  // namespace perfweld
