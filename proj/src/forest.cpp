#include "bnblab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bnblab/rng.hpp"
#include "json.hpp"

namespace bnblab {

using json = nlohmann::json;

namespace {

struct Builder {
  std::span<const FeatureVector> x;
  std::span<const double> y;
  const Hyperparams& hp;
  std::uint64_t tree_seed;
  Tree tree;
  std::vector<int> features;

  int add_leaf(std::span<const int> idx) {
    double lo = y[idx[0]], hi = lo, sum = 0.0;
    for (int i : idx) {
      lo = std::min(lo, y[i]);
      hi = std::max(hi, y[i]);
      sum += y[i];
    }
    const double v = lo == hi ? lo : std::clamp(sum / static_cast<double>(idx.size()), lo, hi);
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(v);
    return static_cast<int>(tree.size()) - 1;
  }

  // Sum of squared deviations, from sum and sum of squares.
  static double sse(double s, double s2, double n) { return std::max(0.0, s2 - s * s / n); }

  // path is the heap index of the node (root 1, children 2p and 2p+1); its
  // random stream depends only on that path, so trees grown with a larger
  // max_depth refine the leaves of shallower ones.
  int grow(std::span<int> idx, int depth, std::uint64_t path) {
    const auto n = idx.size();
    bool constant = true;
    for (int i : idx) constant = constant && y[i] == y[idx[0]];
    if (static_cast<int>(n) < hp.min_split || depth >= hp.max_depth || constant)
      return add_leaf(idx);

    double tot = 0.0, tot2 = 0.0;
    for (int i : idx) {
      tot += y[i];
      tot2 += y[i] * y[i];
    }
    const double parent_sse = sse(tot, tot2, static_cast<double>(n));
    Rng rng(derive_seed(tree_seed, "node", path));

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = -1.0;
    int drawn = 0;
    std::iota(features.begin(), features.end(), 0);
    for (int k = 0; k < kNumFeatures && drawn < hp.k_features; ++k) {
      // Partial Fisher-Yates over a fresh 0..15 order.
      const int pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(kNumFeatures - k)));
      std::swap(features[k], features[pick]);
      const int f = features[k];
      double lo = x[idx[0]][f], hi = lo;
      for (int i : idx) {
        lo = std::min(lo, x[i][f]);
        hi = std::max(hi, x[i][f]);
      }
      if (!(lo < hi)) continue;
      ++drawn;
      double thr = lo + (hi - lo) * rng.uniform_open();
      if (thr >= hi) thr = std::nextafter(hi, lo);
      double ls = 0.0, ls2 = 0.0;
      double nl = 0.0;
      for (int i : idx) {
        if (x[i][f] <= thr) {
          ls += y[i];
          ls2 += y[i] * y[i];
          nl += 1.0;
        }
      }
      const double nr = static_cast<double>(n) - nl;
      const double gain = parent_sse - sse(ls, ls2, nl) - sse(tot - ls, tot2 - ls2, nr);
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = f;
        best_threshold = thr;
      }
    }
    if (best_feature < 0) return add_leaf(idx);

    auto mid = std::stable_partition(idx.begin(), idx.end(), [&](int i) {
      return x[i][best_feature] <= best_threshold;
    });
    const auto nl = static_cast<std::size_t>(mid - idx.begin());

    const int self = static_cast<int>(tree.size());
    tree.feature.push_back(best_feature);
    tree.threshold.push_back(best_threshold);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(0.0);
    const int l = grow(idx.subspan(0, nl), depth + 1, 2 * path);
    const int r = grow(idx.subspan(nl), depth + 1, 2 * path + 1);
    tree.left[self] = l;
    tree.right[self] = r;
    return self;
  }
};

}  // namespace

double Tree::predict(const FeatureVector& x) const {
  int i = 0;
  while (feature[i] >= 0) i = x[feature[i]] <= threshold[i] ? left[i] : right[i];
  return value[i];
}

int Tree::depth() const {
  if (feature.empty()) return 0;
  std::vector<int> d(feature.size(), 0);
  int deepest = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < feature.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (feature[i] >= 0) d[left[i]] = d[right[i]] = d[i] + 1;
  }
  return deepest;
}

Forest Forest::fit(std::span<const FeatureVector> x, std::span<const double> y,
                   const Hyperparams& hp, std::uint64_t seed) {
  if (x.empty()) throw ForestError("cannot fit a forest on an empty sample set");
  if (x.size() != y.size()) throw ForestError("feature and target counts differ");
  if (hp.n_trees < 1 || hp.k_features < 1 || hp.max_depth < 0)
    throw ForestError("invalid forest hyperparameters");
  for (double v : y)
    if (!std::isfinite(v)) throw ForestError("non-finite training target");

  Forest forest;
  forest.hp_ = hp;
  forest.seed_ = seed;
  forest.num_samples_ = static_cast<long>(x.size());
  forest.trees_.reserve(hp.n_trees);
  std::vector<int> idx(x.size());
  for (int t = 0; t < hp.n_trees; ++t) {
    std::iota(idx.begin(), idx.end(), 0);
    Builder b{x, y, hp, derive_seed(seed, "tree", static_cast<std::uint64_t>(t)), {}, {}};
    b.features.resize(kNumFeatures);
    std::iota(b.features.begin(), b.features.end(), 0);
    b.grow(idx, 0, 1);
    forest.trees_.push_back(std::move(b.tree));
  }
  return forest;
}

double Forest::predict(const FeatureVector& x) const {
  if (trees_.empty()) throw ForestError("predict on an empty forest");
  double buf[64];
  std::vector<double> heap;
  double* v = buf;
  if (trees_.size() > 64) {
    heap.resize(trees_.size());
    v = heap.data();
  }
  const std::size_t n = trees_.size();
  for (std::size_t t = 0; t < n; ++t) v[t] = trees_[t].predict(x);
  std::sort(v, v + n);
  if (v[0] == v[n - 1]) return v[0];
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) sum += v[t];
  return std::clamp(sum / static_cast<double>(n), v[0], v[n - 1]);
}

std::string Forest::to_json() const {
  json doc;
  doc["format"] = "bnblab-forest-1";
  doc["feature_layout_version"] = layout_;
  doc["seed"] = seed_;
  doc["num_samples"] = num_samples_;
  doc["hyperparams"] = {{"n_trees", hp_.n_trees},
                        {"min_split", hp_.min_split},
                        {"max_depth", hp_.max_depth},
                        {"k_features", hp_.k_features}};
  json trees = json::array();
  for (const Tree& t : trees_) {
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"value", t.value}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

Forest Forest::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ForestError(std::string("model parse error: ") + e.what());
  }
  try {
    if (doc.at("format") != "bnblab-forest-1") throw ForestError("unknown model format");
    const auto layout = doc.at("feature_layout_version").get<std::string>();
    if (layout != kFeatureLayoutVersion)
      throw ForestError("feature layout mismatch: model has \"" + layout + "\", expected \"" +
                        std::string(kFeatureLayoutVersion) + "\"");
    Forest f;
    f.layout_ = layout;
    f.seed_ = doc.at("seed").get<std::uint64_t>();
    f.num_samples_ = doc.at("num_samples").get<long>();
    const json& hp = doc.at("hyperparams");
    f.hp_ = {hp.at("n_trees").get<int>(), hp.at("min_split").get<int>(),
             hp.at("max_depth").get<int>(), hp.at("k_features").get<int>()};
    for (const json& jt : doc.at("trees")) {
      Tree t;
      jt.at("feature").get_to(t.feature);
      jt.at("threshold").get_to(t.threshold);
      jt.at("left").get_to(t.left);
      jt.at("right").get_to(t.right);
      jt.at("value").get_to(t.value);
      const auto n = t.feature.size();
      if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
          t.value.size() != n)
        throw ForestError("corrupt tree arrays");
      for (std::size_t i = 0; i < n; ++i) {
        if (t.feature[i] >= kNumFeatures) throw ForestError("corrupt tree: feature index");
        if (t.feature[i] < 0) continue;
        const auto ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
        if (!ok(t.left[i]) || !ok(t.right[i])) throw ForestError("corrupt tree: child index");
      }
      f.trees_.push_back(std::move(t));
    }
    if (f.trees_.empty()) throw ForestError("model has no trees");
    return f;
  } catch (const json::exception& e) {
    throw ForestError(std::string("corrupt model: ") + e.what());
  }
}

void save_model(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ForestError("cannot write model file " + path.string());
  out << forest.to_json();
  if (!out) throw ForestError("write failed: " + path.string());
}

Forest load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ForestError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return Forest::from_json(buf.str());
  } catch (const ForestError& e) {
    throw ForestError(path.string() + ": " + e.what());
  }
}

double mean_squared_error(const Forest& forest, std::span<const FeatureVector> x,
                          std::span<const double> y) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = forest.predict(x[i]) - y[i];
    s += e * e;
  }
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> y) {
  if (y.empty()) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double s = 0.0;
  for (double v : y) s += (v - mean) * (v - mean);
  return s / static_cast<double>(y.size());
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ForestError("cross-validation needs at least 2 folds");
  if (n < static_cast<std::size_t>(folds))
    throw ForestError("cross-validation needs at least as many samples as folds (" +
                      std::to_string(n) + " < " + std::to_string(folds) + ")");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "cv-shuffle"));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<int> fold(n);
  for (std::size_t p = 0; p < n; ++p) fold[order[p]] = static_cast<int>(p % folds);
  return fold;
}

std::vector<double> cross_validate(std::span<const FeatureVector> x, std::span<const double> y,
                                   const Hyperparams& hp, int folds, std::uint64_t seed) {
  const auto fold = fold_assignment(x.size(), folds, seed);
  std::vector<double> mse;
  for (int k = 0; k < folds; ++k) {
    std::vector<FeatureVector> tx, vx;
    std::vector<double> ty, vy;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold[i] == k) {
        vx.push_back(x[i]);
        vy.push_back(y[i]);
      } else {
        tx.push_back(x[i]);
        ty.push_back(y[i]);
      }
    }
    const Forest f = Forest::fit(tx, ty, hp, derive_seed(seed, "cv-fold", k));
    mse.push_back(mean_squared_error(f, vx, vy));
  }
  return mse;
}

}  // namespace bnblab
