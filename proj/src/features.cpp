#include "bnblab/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bnblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<FeatureRange, kNumFeatures> kRanges{{
    {-1, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 0.5}, {0, 1},
    {-kInf, kInf}, {0, kInf}, {0, kInf}, {0, 1}, {0, 1}, {-kInf, kInf}, {0, 1}, {0, 1},
}};

}  // namespace

std::span<const FeatureRange, kNumFeatures> feature_ranges() { return kRanges; }

StaticFeatures::StaticFeatures(const MILPInstance& instance)
    : values_(6 * instance.variables.size(), 0.0), num_binaries_(instance.num_binaries()) {
  const int n = instance.num_variables();
  const int m = instance.num_constraints();

  double max_abs_cost = 0.0;
  for (const auto& v : instance.variables) max_abs_cost = std::max(max_abs_cost, std::abs(v.obj));

  std::vector<int> rows_with(n, 0);
  std::vector<double> ratio_min(n, kInf), ratio_sum(n, 0.0), ratio_max(n, 0.0);
  for (const auto& c : instance.constraints) {
    double row_norm = 0.0;
    for (const auto& t : c.terms) row_norm += std::abs(t.coeff);
    for (const auto& t : c.terms) {
      const double r = row_norm > 0.0 ? std::abs(t.coeff) / row_norm : 0.0;
      ++rows_with[t.var];
      ratio_min[t.var] = std::min(ratio_min[t.var], r);
      ratio_sum[t.var] += r;
      ratio_max[t.var] = std::max(ratio_max[t.var], r);
    }
  }

  for (int j = 0; j < n; ++j) {
    double* s = values_.data() + 6 * static_cast<std::size_t>(j);
    const double c = instance.variables[j].obj;
    s[0] = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
    s[1] = max_abs_cost > 0.0 ? std::abs(c) / max_abs_cost : 0.0;
    s[2] = m > 0 ? static_cast<double>(rows_with[j]) / m : 0.0;
    if (rows_with[j] > 0) {
      s[3] = ratio_min[j];
      s[4] = ratio_sum[j] / rows_with[j];
      s[5] = ratio_max[j];
    }
  }
}

FeatureVector compute_features(const StaticFeatures& statics, const NodeView& node,
                               std::span<const double> x, int var,
                               const PseudocostTable& pseudocosts, const TreeStats& tree) {
  FeatureVector phi{};
  const auto s = statics.of(var);
  std::copy(s.begin(), s.end(), phi.begin());

  const double xi = x[var];
  const double f = xi - std::floor(xi);
  phi[6] = std::min(f, 1.0 - f);
  phi[7] = f;
  phi[8] = xi;
  phi[9] = pseudocosts.unit_gain(var, BranchDirection::up);
  phi[10] = pseudocosts.unit_gain(var, BranchDirection::down);
  phi[11] = static_cast<double>(pseudocosts.probes(var)) /
            (static_cast<double>(pseudocosts.total_probes()) + 1.0);
  phi[12] = static_cast<double>(node.depth) / (1.0 + std::max(tree.max_depth_seen, node.depth));
  phi[13] = (node.objective - tree.root_objective) / (1.0 + std::abs(tree.root_objective));
  phi[14] = statics.num_binaries() > 0
                ? static_cast<double>(node.num_candidates) / statics.num_binaries()
                : 0.0;
  phi[15] = node.bounds && node.bounds->contains(var) ? 1.0 : 0.0;
  return phi;
}

FeatureVector compute_features(const MILPInstance& instance, const NodeView& node,
                               std::span<const double> x, int var,
                               const PseudocostTable& pseudocosts, const TreeStats& tree) {
  return compute_features(StaticFeatures(instance), node, x, var, pseudocosts, tree);
}

}  // namespace bnblab
