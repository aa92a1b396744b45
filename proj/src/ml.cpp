#include "perfweld/ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "perfweld/parallel.hpp"
#include "perfweld/rng.hpp"

using nlohmann::json;

namespace perfweld {

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::fit(std::span<const double> x, std::size_t n_rows,
                               std::size_t n_cols) {
  if (n_rows == 0) throw std::invalid_argument("standardizer: empty dataset");
  if (x.size() != n_rows * n_cols) throw std::invalid_argument("standardizer: bad matrix shape");
  Standardizer st;
  st.mean.assign(n_cols, 0.0);
  st.stdev.assign(n_cols, 0.0);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) st.mean[c] += x[r * n_cols + c];
  for (std::size_t c = 0; c < n_cols; ++c) st.mean[c] /= static_cast<double>(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double d = x[r * n_cols + c] - st.mean[c];
      st.stdev[c] += d * d;
    }
  for (std::size_t c = 0; c < n_cols; ++c) {
    st.stdev[c] = std::sqrt(st.stdev[c] / static_cast<double>(n_rows));
    if (st.stdev[c] == 0.0) st.stdev[c] = 1.0;  // constant feature maps to 0
  }
  return st;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("standardizer: empty dataset");
  const std::size_t d = ds.schema().n_features();
  std::vector<double> flat;
  flat.reserve(ds.size() * d);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto row = ds.row(r);
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return fit(flat, ds.size(), d);
}

void Standardizer::transform_inplace(std::span<double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - mean[c]) / stdev[c];
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  transform_inplace(out);
  return out;
}

std::vector<double> Standardizer::inverse(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = x[c] * stdev[c] + mean[c];
  return out;
}

json Standardizer::to_json() const { return json{{"mean", mean}, {"stdev", stdev}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.stdev = j.at("stdev").get<std::vector<double>>();
  if (st.mean.size() != st.stdev.size())
    throw std::invalid_argument("standardizer: mean/stdev length mismatch");
  return st;
}

Dataset standardize_features(const Dataset& ds, const Standardizer& st) {
  Dataset out(ds.schema());
  std::vector<double> x;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    x.assign(ds.row(r).begin(), ds.row(r).end());
    st.transform_inplace(x);
    out.add_row(x, ds.response(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// TreeParams

int TreeParams::resolve_max_features(std::size_t n_features) const {
  if (max_features == -1) return static_cast<int>(n_features);
  if (max_features == 0)
    return std::max(1, static_cast<int>(n_features / 3));
  return max_features;
}

void TreeParams::validate(std::size_t n_features) const {
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (max_depth < -1 || max_depth == 0)
    throw std::invalid_argument("max_depth must be positive or -1 for unlimited");
  if (max_features < -1) throw std::invalid_argument("max_features must be -1, 0, or positive");
  const int resolved = resolve_max_features(n_features);
  if (resolved < 1 || resolved > static_cast<int>(n_features))
    throw std::invalid_argument("max_features must be between 1 and the feature count");
}

json TreeParams::to_json() const {
  return json{{"max_depth", max_depth},
              {"min_samples_leaf", min_samples_leaf},
              {"n_trees", n_trees},
              {"max_features", max_features},
              {"seed", seed},
              {"bootstrap", bootstrap}};
}

TreeParams TreeParams::from_json(const json& j) {
  TreeParams p;
  p.max_depth = j.value("max_depth", -1);
  p.min_samples_leaf = j.value("min_samples_leaf", 1);
  p.n_trees = j.value("n_trees", 100);
  p.max_features = j.value("max_features", 0);
  p.seed = j.value("seed", std::uint64_t{0});
  p.bootstrap = j.value("bootstrap", true);
  return p;
}

// ---------------------------------------------------------------------------
// Tree growing

double RegressionTree::predict(std::span<const double> x) const {
  int n = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(n)];
    if (node.feature < 0) return node.value;
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
}

double predict_tree(const RegressionTree& tree, std::span<const double> x) {
  return tree.predict(x);
}

namespace {

enum class SplitMode { exhaustive, subset_exhaustive, random_threshold };

struct Candidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
  std::size_t n_left = 0;
};

struct TreeBuilder {
  const Dataset& ds;
  const TreeParams& params;
  SplitMode mode;
  int n_candidate_features;
  Rng rng;

  std::vector<std::size_t> rows;          // partitioned in place during growth
  std::vector<TreeNode> nodes;
  std::vector<std::pair<double, double>> scratch;  // (feature value, response)
  std::vector<int> feature_pool;

  TreeBuilder(const Dataset& d, const TreeParams& p, SplitMode m, std::uint64_t seed)
      : ds(d), params(p), mode(m),
        n_candidate_features(p.resolve_max_features(d.schema().n_features())),
        rng(seed) {
    feature_pool.resize(ds.schema().n_features());
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  // features examined at this node, ascending (ascending order fixes the
  // lowest-feature-index tie break)
  std::span<const int> pick_features() {
    const std::size_t d = feature_pool.size();
    if (mode == SplitMode::exhaustive || n_candidate_features == static_cast<int>(d)) {
      std::sort(feature_pool.begin(), feature_pool.end());
      return {feature_pool.data(), d};
    }
    for (int i = 0; i < n_candidate_features; ++i)
      std::swap(feature_pool[static_cast<std::size_t>(i)],
                feature_pool[static_cast<std::size_t>(i) + rng.next_index(d - static_cast<std::size_t>(i))]);
    std::sort(feature_pool.begin(), feature_pool.begin() + n_candidate_features);
    return {feature_pool.data(), static_cast<std::size_t>(n_candidate_features)};
  }

  // Exhaustive scan over midpoints between consecutive distinct values.
  void scan_feature(int f, std::size_t begin, std::size_t end, Candidate& best) {
    const std::size_t n = end - begin;
    scratch.clear();
    scratch.reserve(n);
    for (std::size_t r = begin; r < end; ++r)
      scratch.emplace_back(ds.feature(rows[r], static_cast<std::size_t>(f)),
                           ds.response(rows[r]));
    std::sort(scratch.begin(), scratch.end());  // (value, response) total order

    const std::size_t msl = static_cast<std::size_t>(params.min_samples_leaf);
    double sum_total = 0.0;
    for (const auto& [x, y] : scratch) sum_total += y;

    double sum_left = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      sum_left += scratch[i].second;
      const double a = scratch[i].first;
      const double b = scratch[i + 1].first;
      if (a == b) continue;
      const double thr = a + (b - a) / 2.0;
      if (!(thr >= a && thr < b)) continue;  // adjacent representables; skip
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < msl || n_right < msl) continue;
      const double sum_right = sum_total - sum_left;
      const double score = sum_left * sum_left / static_cast<double>(n_left) +
                           sum_right * sum_right / static_cast<double>(n_right);
      if (score > best.score) {
        best = {true, f, thr, score, n_left};
      }
    }
  }

  // Extra-trees: one uniform threshold per candidate feature.
  void draw_random_split(int f, std::size_t begin, std::size_t end, Candidate& best) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t r = begin; r < end; ++r) {
      const double v = ds.feature(rows[r], static_cast<std::size_t>(f));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi)) return;  // constant feature: no candidate
    const double thr = rng.next_uniform(lo, hi);
    if (!(thr >= lo && thr < hi)) return;

    const std::size_t msl = static_cast<std::size_t>(params.min_samples_leaf);
    double sum_left = 0.0, sum_right = 0.0;
    std::size_t n_left = 0;
    for (std::size_t r = begin; r < end; ++r) {
      const double y = ds.response(rows[r]);
      if (ds.feature(rows[r], static_cast<std::size_t>(f)) <= thr) {
        sum_left += y;
        ++n_left;
      } else {
        sum_right += y;
      }
    }
    const std::size_t n_right = end - begin - n_left;
    if (n_left < msl || n_right < msl) return;
    const double score = sum_left * sum_left / static_cast<double>(n_left) +
                         sum_right * sum_right / static_cast<double>(n_right);
    if (score > best.score) {
      best = {true, f, thr, score, n_left};
    }
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (std::size_t r = begin; r < end; ++r) {
      const double y = ds.response(rows[r]);
      sum += y;
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    const double mean = sum / static_cast<double>(n);

    const bool depth_stop = params.max_depth >= 0 && depth >= params.max_depth;
    const bool size_stop = n < 2 * static_cast<std::size_t>(params.min_samples_leaf);
    Candidate best;
    if (!depth_stop && !size_stop && ymin != ymax) {
      for (int f : pick_features()) {
        if (mode == SplitMode::random_threshold) {
          draw_random_split(f, begin, end, best);
        } else {
          scan_feature(f, begin, end, best);
        }
      }
    }

    const int node_index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (!best.valid) {
      nodes[static_cast<std::size_t>(node_index)].value = mean;
      return node_index;
    }

    const auto f = static_cast<std::size_t>(best.feature);
    const double thr = best.threshold;
    std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                          rows.begin() + static_cast<std::ptrdiff_t>(end),
                          [&](std::size_t r) { return ds.feature(r, f) <= thr; });

    const std::size_t mid = begin + best.n_left;
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(node_index)];
    node.feature = best.feature;
    node.threshold = thr;
    node.left = left;
    node.right = right;
    node.value = mean;
    return node_index;
  }
};

RegressionTree grow_tree(const Dataset& ds, const TreeParams& p, SplitMode mode,
                         std::uint64_t seed, std::vector<std::size_t> rows) {
  TreeBuilder builder(ds, p, mode, seed);
  builder.rows = std::move(rows);
  builder.nodes.reserve(2 * builder.rows.size());
  builder.grow(0, builder.rows.size(), 0);
  RegressionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

std::vector<std::size_t> identity_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.next_index(n);
  return rows;
}

void check_train(const Dataset& train, const TreeParams& p) {
  if (train.empty()) throw std::invalid_argument("cannot fit on an empty dataset");
  p.validate(train.schema().n_features());
}

}  // namespace

RegressionTree fit_cart(const Dataset& train, const TreeParams& p) {
  check_train(train, p);
  return grow_tree(train, p, SplitMode::exhaustive, p.seed, identity_rows(train.size()));
}

double Ensemble::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(x);
  return sum / static_cast<double>(trees.size());
}

namespace {

Ensemble fit_members(const Dataset& train, const TreeParams& p, LearnerKind kind,
                     SplitMode mode, bool use_bootstrap, int jobs) {
  check_train(train, p);
  Ensemble ens;
  ens.kind = kind;
  ens.params = p;
  ens.trees.resize(static_cast<std::size_t>(p.n_trees));
  parallel_for(static_cast<std::size_t>(p.n_trees), jobs, [&](std::size_t m) {
    const std::uint64_t member_seed = mix_seed(p.seed, m);
    auto rows = use_bootstrap ? bootstrap_rows(train.size(), mix_seed(member_seed, 0x0b00))
                              : identity_rows(train.size());
    ens.trees[m] = grow_tree(train, p, mode, member_seed, std::move(rows));
  });
  return ens;
}

}  // namespace

Ensemble fit_bagged(const Dataset& train, const TreeParams& p, LearnerKind base) {
  const SplitMode mode = base == LearnerKind::extra_trees ? SplitMode::random_threshold
                                                          : SplitMode::exhaustive;
  return fit_members(train, p, base == LearnerKind::extra_trees ? LearnerKind::extra_trees
                                                                : LearnerKind::cart,
                     mode, p.bootstrap, 1);
}

Ensemble fit_random_forest(const Dataset& train, const TreeParams& p) {
  return fit_members(train, p, LearnerKind::random_forest, SplitMode::subset_exhaustive,
                     p.bootstrap, 1);
}

Ensemble fit_extra_trees(const Dataset& train, const TreeParams& p) {
  return fit_members(train, p, LearnerKind::extra_trees, SplitMode::random_threshold,
                     /*use_bootstrap=*/false, 1);
}

Ensemble fit_ensemble(LearnerKind kind, const Dataset& train, const TreeParams& p, int jobs) {
  switch (kind) {
    case LearnerKind::cart: {
      TreeParams single = p;
      single.n_trees = 1;
      Ensemble ens;
      ens.kind = LearnerKind::cart;
      ens.params = single;
      ens.trees.push_back(fit_cart(train, single));
      return ens;
    }
    case LearnerKind::random_forest:
      return fit_members(train, p, LearnerKind::random_forest, SplitMode::subset_exhaustive,
                         p.bootstrap, jobs);
    case LearnerKind::extra_trees:
      return fit_members(train, p, LearnerKind::extra_trees, SplitMode::random_threshold,
                         false, jobs);
  }
  throw std::logic_error("unreachable learner kind");
}

// ---------------------------------------------------------------------------
// Names and serialization

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::cart: return "cart";
    case LearnerKind::random_forest: return "random-forest";
    case LearnerKind::extra_trees: return "extra-trees";
  }
  throw std::logic_error("unreachable learner kind");
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "cart") return LearnerKind::cart;
  if (s == "random-forest" || s == "rf") return LearnerKind::random_forest;
  if (s == "extra-trees" || s == "extra") return LearnerKind::extra_trees;
  throw std::invalid_argument("unknown learner kind: " + s);
}

json Ensemble::to_json() const {
  json trees_j = json::array();
  for (const auto& tree : trees) {
    json nodes_j = json::array();
    for (const auto& n : tree.nodes)
      nodes_j.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    trees_j.push_back(std::move(nodes_j));
  }
  return json{{"learner", to_string(kind)}, {"params", params.to_json()},
              {"trees", std::move(trees_j)}};
}

Ensemble Ensemble::from_json(const json& j) {
  Ensemble ens;
  ens.kind = learner_kind_from_string(j.at("learner").get<std::string>());
  ens.params = TreeParams::from_json(j.at("params"));
  for (const auto& tree_j : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : tree_j) {
      TreeNode node;
      node.feature = n.at(0).get<int>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<int>();
      node.right = n.at(3).get<int>();
      node.value = n.at(4).get<double>();
      tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw std::invalid_argument("model file has an empty tree");
    ens.trees.push_back(std::move(tree));
  }
  if (ens.trees.empty()) throw std::invalid_argument("model file has no trees");
  return ens;
}

}  // namespace perfweld
