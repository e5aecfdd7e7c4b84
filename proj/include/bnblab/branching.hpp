#pragma once

// Variable-selection rules: most-infeasible (MIB), reliability branching
// RB:lambda:eta (strong branching is RB:inf:inf) and ML-scored branching.
//
// Rules are immutable and may be shared across concurrent solves; all
// per-solve state (pseudocosts, counters, the LP engine) comes in through
// BranchContext.

#include <climits>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bnblab/features.hpp"
#include "bnblab/grouping.hpp"
#include "bnblab/lp.hpp"
#include "bnblab/search.hpp"

namespace bnblab {

inline constexpr double kScoreEpsilon = 1e-6;
inline constexpr int kUnlimited = INT_MAX;

double score_mib(double frac_value);
double score_product(double delta_down, double delta_up, double eps = kScoreEpsilon);

enum class ScoreSource { mib, probe, pseudocost, ml };
std::string_view to_string(ScoreSource source);

struct ScoreRecord {
  int var = -1;
  double delta_down = 0.0;
  double delta_up = 0.0;
  double score = 0.0;
  ScoreSource source = ScoreSource::pseudocost;
};

/// A fractional binary at the current node. fraction = x - floor(x).
struct Candidate {
  int var = -1;
  double value = 0.0;
  double fraction = 0.0;
};

/// One strong-branching probe, reported before the pseudocost update.
struct ProbeRecord {
  int node_id = 0;
  int var = -1;
  FeatureVector features{};
  double delta_down = 0.0;
  double delta_up = 0.0;
  bool down_infeasible = false;
  bool up_infeasible = false;
};

using ProbeObserver = std::function<void(const ProbeRecord&)>;

struct BranchContext {
  const MILPInstance* instance = nullptr;
  const StaticFeatures* statics = nullptr;
  /// Holds the optimal LP of the node; probes leave it unchanged.
  SimplexEngine* engine = nullptr;
  const Node* node = nullptr;
  double node_objective = 0.0;
  std::span<const double> x;
  /// Sorted by variable index, nonempty.
  std::span<const Candidate> candidates;
  PseudocostTable* pseudocosts = nullptr;
  const TreeStats* tree = nullptr;
  BranchingStats* stats = nullptr;
  /// Delta assigned to an infeasible probe child.
  double big = 1e6;
  double epsilon = kScoreEpsilon;
  /// Called for every probe; features are only computed when set.
  ProbeObserver on_probe;

  NodeView view() const;
};

struct BranchDecision {
  int var = -1;
  std::vector<ScoreRecord> scores;
  /// Child LP objectives of var when it was probed (infinite when infeasible).
  std::optional<double> down_objective;
  std::optional<double> up_objective;
};

class BranchingRule {
 public:
  virtual ~BranchingRule() = default;
  virtual std::string name() const = 0;
  virtual BranchDecision select(BranchContext& ctx) const = 0;
};

class MibRule final : public BranchingRule {
 public:
  std::string name() const override { return "mib"; }
  BranchDecision select(BranchContext& ctx) const override;
};

class ReliabilityRule final : public BranchingRule {
 public:
  /// lambda and eta may be kUnlimited.
  ReliabilityRule(int lambda, int eta);
  std::string name() const override;
  BranchDecision select(BranchContext& ctx) const override;

  int lambda() const { return lambda_; }
  int eta() const { return eta_; }

 private:
  int lambda_;
  int eta_;
};

class MlRule final : public BranchingRule {
 public:
  explicit MlRule(std::shared_ptr<const ModelStore> store);
  std::string name() const override;
  BranchDecision select(BranchContext& ctx) const override;
  const ModelStore& store() const { return *store_; }

 private:
  std::shared_ptr<const ModelStore> store_;
};

class RuleSyntaxError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RuleSpec {
  enum class Kind { mib, rb, ml };
  Kind kind = Kind::mib;
  int lambda = kUnlimited;
  int eta = kUnlimited;
  GroupingScheme scheme = GroupingScheme::et;

  /// Canonical CLI text, e.g. "rb:100:inf".
  std::string text() const;
};

/// Parses "mib", "rb:LAMBDA:ETA" (either may be "inf") or "ml:SCHEME".
RuleSpec parse_rule(std::string_view text);

/// store is required for ML rules and ignored otherwise.
std::unique_ptr<BranchingRule> make_rule(const RuleSpec& spec,
                                         std::shared_ptr<const ModelStore> store = nullptr);

}  // namespace bnblab
