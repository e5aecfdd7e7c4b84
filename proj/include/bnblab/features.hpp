#pragma once

// Candidate feature vector used both when collecting strong-branching labels
// and when scoring candidates with a trained model. Both paths call
// compute_features; the layout is versioned and checked on every model and
// training-file load.
//
// Slots (0-based):
//   0  sign(c_i)                                   [-1, 1]
//   1  |c_i| / max_j |c_j|                          [0, 1]
//   2  fraction of rows containing i               [0, 1]
//   3  min over rows of |a_ji| / sum_k |a_jk|      [0, 1]
//   4  mean of the same ratio                      [0, 1]
//   5  max of the same ratio                       [0, 1]
//   6  fractionality min(f, 1 - f)                 [0, 0.5]
//   7  f = x_i - floor(x_i)                        [0, 1]
//   8  x_i                                         unbounded
//   9  up pseudocost unit gain                     [0, inf)
//  10  down pseudocost unit gain                   [0, inf)
//  11  probes of i / (total probes + 1)            [0, 1]
//  12  depth / (1 + max depth seen)                [0, 1]
//  13  (node obj - root obj) / (1 + |root obj|)     unbounded
//  14  fractional candidates / binaries            [0, 1]
//  15  1 if i was branched on above this node      [0, 1]

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "bnblab/model.hpp"
#include "bnblab/search.hpp"

namespace bnblab {

inline constexpr int kNumFeatures = 16;
inline constexpr std::string_view kFeatureLayoutVersion = "phi16-v1";

using FeatureVector = std::array<double, kNumFeatures>;

struct FeatureRange {
  double lower;
  double upper;
};

/// Declared range of every slot (infinite where unbounded).
std::span<const FeatureRange, kNumFeatures> feature_ranges();

/// Slots 0-5, which depend on the instance only.
class StaticFeatures {
 public:
  explicit StaticFeatures(const MILPInstance& instance);
  std::span<const double, 6> of(int var) const {
    return std::span<const double, 6>(values_.data() + 6 * static_cast<std::size_t>(var), 6);
  }
  int num_binaries() const { return num_binaries_; }

 private:
  std::vector<double> values_;
  int num_binaries_ = 0;
};

/// What feature extraction needs to know about the node being branched.
struct NodeView {
  const BoundSet* bounds = nullptr;
  int depth = 0;
  double objective = 0.0;
  int num_candidates = 0;
};

FeatureVector compute_features(const StaticFeatures& statics, const NodeView& node,
                               std::span<const double> x, int var,
                               const PseudocostTable& pseudocosts, const TreeStats& tree);

/// Convenience form that derives the static slots from the instance.
FeatureVector compute_features(const MILPInstance& instance, const NodeView& node,
                               std::span<const double> x, int var,
                               const PseudocostTable& pseudocosts, const TreeStats& tree);

}  // namespace bnblab
