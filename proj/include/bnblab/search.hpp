#pragma once

// State shared between the branch-and-bound driver, the branching rules and
// feature extraction.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "bnblab/lp.hpp"

namespace bnblab {

/// An LP hit its iteration limit or returned an impossible status mid-search.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  int id = 0;
  int parent_id = -1;
  int depth = 0;
  BoundSet bounds;
  /// LP bound inherited from the parent (-inf at the root).
  double parent_objective = 0.0;
  /// Plunge key: parent bound plus the probed degradation when known.
  double estimate = 0.0;
  std::shared_ptr<const Basis> warm;
  int branch_var = -1;
  BranchDirection direction = BranchDirection::down;
  /// Fractional part of branch_var in the parent LP.
  double branch_fraction = 0.0;
};

struct TreeStats {
  double root_objective = 0.0;
  int max_depth_seen = 0;
};

/// Counters kept by the branching rules for one solve.
struct BranchingStats {
  long probes = 0;
  long ml_evaluations = 0;
  long ml_fallbacks = 0;

  double fallback_rate_percent() const {
    return ml_evaluations == 0 ? 0.0 : 100.0 * static_cast<double>(ml_fallbacks) /
                                           static_cast<double>(ml_evaluations);
  }
};

/// Per-variable objective gain per unit of fractionality, by direction.
class PseudocostTable {
 public:
  struct Observation {
    int var;
    BranchDirection direction;
    double unit_gain;
  };

  explicit PseudocostTable(int num_variables, bool keep_log = false);

  void record(int var, BranchDirection direction, double unit_gain);
  void record_probe(int var);

  /// Mean of var's observations; the global mean of that direction when var
  /// has none; 1.0 before any observation exists.
  double unit_gain(int var, BranchDirection direction) const;
  bool has_observation(int var, BranchDirection direction) const;
  long count(int var, BranchDirection direction) const;
  double sum(int var, BranchDirection direction) const;
  double global_mean(BranchDirection direction) const;

  int probes(int var) const { return probes_[var]; }
  long total_probes() const { return total_probes_; }

  const std::vector<Observation>& log() const { return log_; }

 private:
  static int slot(BranchDirection d) { return d == BranchDirection::down ? 0 : 1; }

  std::vector<double> sum_[2];
  std::vector<long> count_[2];
  double global_sum_[2] = {0.0, 0.0};
  long global_count_[2] = {0, 0};
  std::vector<int> probes_;
  long total_probes_ = 0;
  bool keep_log_;
  std::vector<Observation> log_;
};

}  // namespace bnblab
