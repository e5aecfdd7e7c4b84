#pragma once

// Branch and bound with best-bound node selection plus plunging. No cuts, no
// heuristics, no presolve: the only primal information is an optional hint
// and integral LP solutions found in the tree.
//
// Termination checks run before each node is selected, in the order gap,
// node count, time. The gap is 100 * (primal - dual) / max(|primal|, 1e-10),
// clamped at zero, where dual is the smallest parent bound over open nodes.

#include <functional>
#include <map>
#include <set>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bnblab/branching.hpp"

namespace bnblab {

enum class Termination { gap_limit, node_limit, time_limit, tree_exhausted, error };
std::string_view to_string(Termination t);

struct SolveLimits {
  /// Maximum number of nodes whose LP gets solved; negative means none.
  long node_limit = -1;
  double time_limit_s = std::numeric_limits<double>::infinity();
  /// Stop once the relative gap is at or below this; negative disables.
  double gap_limit_percent = -1.0;
};

/// State handed to SolveOptions::on_node after the rule picked a variable.
struct NodeEvent {
  const Node* node = nullptr;
  double objective = 0.0;
  std::span<const double> x;
  std::span<const Candidate> candidates;
  const BranchDecision* decision = nullptr;
  const PseudocostTable* pseudocosts = nullptr;
};

struct SolveOptions {
  SolveLimits limits;
  std::optional<double> primal_hint;
  LpOptions lp;
  double epsilon = kScoreEpsilon;
  std::function<void(const NodeEvent&)> on_node;
  ProbeObserver on_probe;
  /// Keep a log of every pseudocost observation in the report.
  bool keep_pseudocost_log = false;
};

struct SolveReport {
  std::string instance;
  std::string rule;
  long nodes_processed = 0;
  long nodes_created = 0;
  double best_dual_bound = -std::numeric_limits<double>::infinity();
  double primal_bound = std::numeric_limits<double>::infinity();
  double relative_gap_percent = std::numeric_limits<double>::infinity();
  Termination termination = Termination::tree_exhausted;
  std::string error;
  BranchingStats branching;
  double root_objective = 0.0;
  int max_depth = 0;
  long lp_iterations = 0;
  bool primal_hint_used = false;
  /// Incumbent improvements found in the tree (with a hint: strictly better ones).
  long incumbent_updates = 0;
  std::vector<double> incumbent;
  /// Dual bound observed before each node selection (monotone nondecreasing).
  std::vector<double> dual_trace;
  std::vector<PseudocostTable::Observation> pseudocost_log;
  double seconds = 0.0;

  std::string to_json() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

double relative_gap(double primal, double dual);

SolveReport solve(const MILPInstance& instance, const BranchingRule& rule,
                  const SolveOptions& options = {});

/// Open-node pool with the library's selection rule.
class OpenNodes {
 public:
  void push(Node node);
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  /// Smallest parent_objective over open nodes, +inf when empty.
  double min_bound() const;
  bool contains(int id) const;
  const Node& get(int id) const;

  /// Plunge: among last_children still open with parent_objective below
  /// cutoff, the one with the smallest estimate (ties to the smaller id).
  /// Otherwise the open node with the smallest parent_objective, ties by id.
  Node pop_next(std::span<const int> last_children, double cutoff);

 private:
  std::map<int, Node> nodes_;
  std::set<std::pair<double, int>> by_bound_;
};

}  // namespace bnblab
