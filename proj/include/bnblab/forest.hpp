#pragma once

// Extremely randomized trees regressor. No bootstrap: every tree sees all
// samples, split features are drawn at random and each gets one uniformly
// random threshold; the best of those candidates by variance reduction wins.
//
// Tree t of a forest fitted with seed s derives its stream from
// derive_seed(s, "tree", t), and each tree node from that plus its path, so a
// forest is bit-reproducible and trees could be grown in any order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnblab/features.hpp"

namespace bnblab {

class ForestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Hyperparams {
  int n_trees = 25;
  int min_split = 10;
  int max_depth = 25;
  int k_features = 4;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Flattened binary tree. feature[i] < 0 marks a leaf carrying value[i];
/// otherwise samples with x[feature] <= threshold go to left[i].
struct Tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  std::size_t size() const { return feature.size(); }
  double predict(const FeatureVector& x) const;
  int depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

class Forest {
 public:
  Forest() = default;

  static Forest fit(std::span<const FeatureVector> x, std::span<const double> y,
                    const Hyperparams& hp, std::uint64_t seed);

  /// Mean of the per-tree leaf values, summed in sorted order so the result
  /// does not depend on tree order.
  double predict(const FeatureVector& x) const;

  const std::vector<Tree>& trees() const { return trees_; }
  std::vector<Tree>& mutable_trees() { return trees_; }
  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& layout_version() const { return layout_; }
  /// Number of samples the forest was fitted on.
  long num_samples() const { return num_samples_; }

  std::string to_json() const;
  static Forest from_json(std::string_view text);

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<Tree> trees_;
  Hyperparams hp_;
  std::uint64_t seed_ = 0;
  std::string layout_{kFeatureLayoutVersion};
  long num_samples_ = 0;
};

void save_model(const Forest& forest, const std::filesystem::path& path);
Forest load_model(const std::filesystem::path& path);

double mean_squared_error(const Forest& forest, std::span<const FeatureVector> x,
                          std::span<const double> y);

/// Population variance of y (the MSE of the constant mean predictor).
double variance(std::span<const double> y);

/// Fold assignment used by every cross-validation in the library: a seeded
/// shuffle, then position p goes to fold p mod folds.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

/// Held-out MSE of each fold.
std::vector<double> cross_validate(std::span<const FeatureVector> x, std::span<const double> y,
                                   const Hyperparams& hp, int folds, std::uint64_t seed);

}  // namespace bnblab
