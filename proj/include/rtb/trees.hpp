#pragma once

// Binary decision trees over one-hot features and gradient boosting with
// second-order leaf weights. Fitted trees can also be bagged or turned into
// leaf-index features for a downstream linear model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/numeric.hpp"
#include "rtb/random.hpp"

namespace rtb {

struct TreeNode {
  int feature = -1;       // -1 marks a leaf
  int present_child = -1; // taken when the feature is active
  int absent_child = -1;
  double weight = 0.0;    // leaf output
  int leaf_index = -1;    // dense 0-based id among leaves

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0
  int num_leaves = 0;

  static Tree single_leaf(double weight) {
    Tree t;
    t.nodes.push_back({-1, -1, -1, weight, 0});
    t.num_leaves = 1;
    return t;
  }

  [[nodiscard]] const TreeNode& leaf_for(const FeatureVector& x) const {
    if (nodes.empty()) throw Error("Tree: empty tree");
    int at = 0;
    for (std::size_t guard = 0; guard <= nodes.size(); ++guard) {
      const TreeNode& n = nodes[static_cast<std::size_t>(at)];
      if (n.is_leaf()) return n;
      at = x.contains(static_cast<std::uint32_t>(n.feature)) ? n.present_child : n.absent_child;
      if (at < 0 || static_cast<std::size_t>(at) >= nodes.size()) throw Error("Tree: dangling child");
    }
    throw Error("Tree: cycle detected");
  }

  /// Re-numbers leaves densely in depth-first order (present branch first).
  void renumber_leaves() {
    num_leaves = 0;
    std::vector<int> stack = {0};
    while (!stack.empty()) {
      const int at = stack.back();
      stack.pop_back();
      TreeNode& n = nodes[static_cast<std::size_t>(at)];
      if (n.is_leaf()) {
        n.leaf_index = num_leaves++;
      } else {
        stack.push_back(n.absent_child);
        stack.push_back(n.present_child);
      }
    }
  }
};

inline double tree_predict(const Tree& t, const FeatureVector& x) { return t.leaf_for(x).weight; }

enum class BoostLoss { squared, logistic };

struct GbdtParams {
  int num_trees = 10;
  int max_depth = 3;
  double lambda = 1.0;  // L2 on leaf weights
  double gamma = 0.0;   // penalty per leaf
  double learning_rate = 1.0;
  double base_score = 0.0;
  BoostLoss loss = BoostLoss::squared;
};

struct GbdtModel {
  GbdtParams params;
  std::vector<Tree> trees;

  [[nodiscard]] double raw_score(const FeatureVector& x) const {
    double s = params.base_score;
    for (const auto& t : trees) s += params.learning_rate * tree_predict(t, x);
    return s;
  }
  /// Regression output for squared loss, probability for logistic loss.
  [[nodiscard]] double predict(const FeatureVector& x) const {
    const double s = raw_score(x);
    return params.loss == BoostLoss::logistic ? num::sigmoid(s) : s;
  }
};

struct GbdtExample {
  FeatureVector x;
  double y = 0.0;
};

/// First and second derivatives of the loss at the current raw score.
///   squared:  L = (y - s)^2, g = -2 (y - s), h = 2
///   logistic: L = logloss(y, sigmoid(s)), g = p - y, h = p (1 - p)
inline std::pair<double, double> boost_gradients(BoostLoss loss, double y, double score) {
  if (loss == BoostLoss::squared) return {-2.0 * (y - score), 2.0};
  const double p = num::sigmoid(score);
  return {p - y, p * (1.0 - p)};
}

inline double boost_loss(BoostLoss loss, double y, double score) {
  if (loss == BoostLoss::squared) return (y - score) * (y - score);
  const double p = std::clamp(num::sigmoid(score), 1e-15, 1.0 - 1e-15);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

/// Optimal leaf weight -G/(H+lambda).
inline double leaf_weight(double g_sum, double h_sum, double lambda) {
  const double denom = h_sum + lambda;
  return denom > 0.0 ? -g_sum / denom : 0.0;
}

/// Structure score of one leaf: -1/2 G^2/(H+lambda) + gamma.
inline double leaf_objective(double g_sum, double h_sum, double lambda, double gamma) {
  const double denom = h_sum + lambda;
  return (denom > 0.0 ? -0.5 * g_sum * g_sum / denom : 0.0) + gamma;
}

struct SplitChoice {
  int feature = -1;
  double gain = 0.0;
};

/// Best presence/absence split of `rows`. Gain is the reduction of the
/// structure score; ties keep the lowest feature id. Returns feature -1 when
/// no split has positive gain with both children non-empty.
inline SplitChoice best_split(std::span<const GbdtExample> data, std::span<const std::size_t> rows,
                              std::span<const double> g, std::span<const double> h, double lambda, double gamma,
                              std::span<const std::uint32_t> allowed_features = {}) {
  double G = 0.0;
  double H = 0.0;
  for (std::size_t r : rows) {
    G += g[r];
    H += h[r];
  }
  // Per-feature sums over rows where the feature is present.
  std::vector<std::pair<std::uint32_t, std::size_t>> hits;
  for (std::size_t r : rows)
    for (auto f : data[r].x.indices()) hits.emplace_back(f, r);
  std::sort(hits.begin(), hits.end());
  const double parent = leaf_objective(G, H, lambda, gamma);
  SplitChoice best;
  std::size_t k = 0;
  while (k < hits.size()) {
    const std::uint32_t f = hits[k].first;
    double gp = 0.0;
    double hp = 0.0;
    std::size_t cnt = 0;
    while (k < hits.size() && hits[k].first == f) {
      gp += g[hits[k].second];
      hp += h[hits[k].second];
      ++cnt;
      ++k;
    }
    if (!allowed_features.empty() &&
        !std::binary_search(allowed_features.begin(), allowed_features.end(), f))
      continue;
    if (cnt == 0 || cnt == rows.size()) continue;
    const double children =
        leaf_objective(gp, hp, lambda, gamma) + leaf_objective(G - gp, H - hp, lambda, gamma);
    const double gain = parent - children;
    if (gain > best.gain + 1e-12) {
      best.gain = gain;
      best.feature = static_cast<int>(f);
    }
  }
  return best;
}

namespace detail {
inline int grow(Tree& tree, std::span<const GbdtExample> data, std::vector<std::size_t> rows,
                std::span<const double> g, std::span<const double> h, const GbdtParams& p, int depth,
                std::span<const std::uint32_t> allowed) {
  double G = 0.0;
  double H = 0.0;
  for (std::size_t r : rows) {
    G += g[r];
    H += h[r];
  }
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({-1, -1, -1, leaf_weight(G, H, p.lambda), -1});
  if (depth >= p.max_depth || rows.size() < 2) return id;
  const SplitChoice s = best_split(data, rows, g, h, p.lambda, p.gamma, allowed);
  if (s.feature < 0) return id;
  std::vector<std::size_t> present;
  std::vector<std::size_t> absent;
  for (std::size_t r : rows) (data[r].x.contains(static_cast<std::uint32_t>(s.feature)) ? present : absent).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  const int pc = grow(tree, data, std::move(present), g, h, p, depth + 1, allowed);
  const int ac = grow(tree, data, std::move(absent), g, h, p, depth + 1, allowed);
  TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  n.feature = s.feature;
  n.present_child = pc;
  n.absent_child = ac;
  n.weight = 0.0;
  return id;
}
}  // namespace detail

/// Fits one tree to per-row gradients by greedy recursive splitting.
inline Tree fit_tree(std::span<const GbdtExample> data, std::span<const double> g, std::span<const double> h,
                     const GbdtParams& p, std::span<const std::uint32_t> allowed_features = {}) {
  Tree t;
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  detail::grow(t, data, std::move(rows), g, h, p, 0, allowed_features);
  t.renumber_leaves();
  return t;
}

struct GbdtTrace {
  std::vector<double> training_loss;  // mean loss after each round, starting with the base score
};

/// Forward stagewise boosting: each tree is fitted to the gradients of the
/// running prediction.
inline GbdtModel gbdt_fit(std::span<const GbdtExample> data, const GbdtParams& p, GbdtTrace* trace = nullptr) {
  if (data.empty()) throw Error("gbdt_fit: no data");
  if (p.num_trees < 1) throw Error("gbdt_fit: need at least one tree");
  if (p.max_depth < 0 || p.lambda < 0.0 || p.gamma < 0.0 || !(p.learning_rate > 0.0))
    throw Error("gbdt_fit: invalid hyper-parameters");
  if (p.loss == BoostLoss::logistic)
    for (const auto& e : data)
      if (e.y != 0.0 && e.y != 1.0) throw Error("gbdt_fit: logistic loss needs 0/1 labels");
  GbdtModel m;
  m.params = p;
  std::vector<double> score(data.size(), p.base_score);
  std::vector<double> g(data.size());
  std::vector<double> h(data.size());
  auto mean_loss = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += boost_loss(p.loss, data[i].y, score[i]);
    return s / static_cast<double>(data.size());
  };
  if (trace) trace->training_loss.push_back(mean_loss());
  for (int k = 0; k < p.num_trees; ++k) {
    for (std::size_t i = 0; i < data.size(); ++i) std::tie(g[i], h[i]) = boost_gradients(p.loss, data[i].y, score[i]);
    m.trees.push_back(fit_tree(data, g, h, p));
    for (std::size_t i = 0; i < data.size(); ++i) score[i] += p.learning_rate * tree_predict(m.trees.back(), data[i].x);
    if (trace) trace->training_loss.push_back(mean_loss());
  }
  return m;
}

/// Mean of the member predictions.
inline double bagging_predict(std::span<const std::function<double(const FeatureVector&)>> members,
                              const FeatureVector& x) {
  if (members.empty()) throw Error("bagging_predict: no members");
  double s = 0.0;
  for (const auto& f : members) s += f(x);
  return s / static_cast<double>(members.size());
}

inline double bagging_predict(std::span<const GbdtModel> members, const FeatureVector& x) {
  if (members.empty()) throw Error("bagging_predict: no members");
  double s = 0.0;
  for (const auto& m : members) s += m.predict(x);
  return s / static_cast<double>(members.size());
}

/// n row indices drawn uniformly with replacement.
inline std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& r : out) r = static_cast<std::size_t>(rng.uniform_int(n));
  return out;
}

/// Sorted random subset of `count` distinct ids from [0, dimension).
inline std::vector<std::uint32_t> random_feature_subset(std::size_t dimension, std::size_t count, Rng& rng) {
  if (count > dimension) throw Error("random_feature_subset: count exceeds dimension");
  std::vector<std::uint32_t> all(dimension);
  std::iota(all.begin(), all.end(), 0u);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(dimension - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

struct BaggingParams {
  int bags = 10;
  double feature_fraction = 1.0;  // random subspace share of the feature dimension
};

/// Bagged single trees (or boosted ensembles when gbdt.num_trees > 1), each
/// trained on a bootstrap sample and an optional random feature subset.
inline std::vector<GbdtModel> bagging_fit(std::span<const GbdtExample> data, std::size_t dimension,
                                          const GbdtParams& gbdt, const BaggingParams& bp, Rng& rng) {
  if (data.empty()) throw Error("bagging_fit: no data");
  if (bp.bags < 1 || !(bp.feature_fraction > 0.0) || bp.feature_fraction > 1.0)
    throw Error("bagging_fit: invalid parameters");
  std::vector<GbdtModel> out;
  for (int b = 0; b < bp.bags; ++b) {
    const auto rows = bootstrap_rows(data.size(), rng);
    std::vector<GbdtExample> sample;
    sample.reserve(rows.size());
    for (auto r : rows) sample.push_back(data[r]);
    std::vector<std::uint32_t> feats;
    if (bp.feature_fraction < 1.0) {
      const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(bp.feature_fraction * dimension)));
      feats = random_feature_subset(dimension, count, rng);
    }
    GbdtModel m;
    m.params = gbdt;
    std::vector<double> score(sample.size(), gbdt.base_score);
    std::vector<double> g(sample.size());
    std::vector<double> h(sample.size());
    for (int k = 0; k < gbdt.num_trees; ++k) {
      for (std::size_t i = 0; i < sample.size(); ++i)
        std::tie(g[i], h[i]) = boost_gradients(gbdt.loss, sample[i].y, score[i]);
      m.trees.push_back(fit_tree(sample, g, h, gbdt, feats));
      for (std::size_t i = 0; i < sample.size(); ++i)
        score[i] += gbdt.learning_rate * tree_predict(m.trees.back(), sample[i].x);
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Leaf-index encoding: tree k's leaf j maps to offset_k + j, where offset_k
/// is the total leaf count of trees 0..k-1.
struct LeafEncoding {
  std::vector<std::size_t> offsets;
  std::size_t dimension = 0;

  explicit LeafEncoding(const GbdtModel& m) {
    for (const auto& t : m.trees) {
      offsets.push_back(dimension);
      dimension += static_cast<std::size_t>(t.num_leaves);
    }
  }

  [[nodiscard]] std::uint32_t encode(std::size_t tree, int leaf) const {
    return static_cast<std::uint32_t>(offsets.at(tree) + static_cast<std::size_t>(leaf));
  }

  [[nodiscard]] std::pair<std::size_t, int> decode(std::uint32_t index) const {
    if (index >= dimension) throw Error("LeafEncoding: index out of range");
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), static_cast<std::size_t>(index));
    const std::size_t tree = static_cast<std::size_t>(it - offsets.begin()) - 1;
    return {tree, static_cast<int>(index - offsets[tree])};
  }
};

inline FeatureVector gbdt_lr_features(const GbdtModel& m, const FeatureVector& x) {
  const LeafEncoding enc(m);
  std::vector<std::uint32_t> idx;
  idx.reserve(m.trees.size());
  for (std::size_t k = 0; k < m.trees.size(); ++k) idx.push_back(enc.encode(k, m.trees[k].leaf_for(x).leaf_index));
  return FeatureVector(std::move(idx), enc.dimension);
}

}  // namespace rtb
