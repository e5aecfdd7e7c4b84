#pragma once

// Bounded-variable dual simplex for node relaxations and strong-branching
// probes.
//
// The LP is put in computational form  A x - r = 0  with one logical r_i per
// row whose bounds encode the row sense. The basis is kept as a sparse LU
// factorization (bnblab/sparse_lu.hpp) plus a product-form eta file,
// refactored every LpOptions::refactor_interval pivots. Dense vector loops go through the
// kernels in bnblab/simd.hpp.
//
// Pricing is dual Devex (largest squared infeasibility over reference weight)
// with a Harris two-pass ratio test; after LpOptions::bland_after consecutive degenerate pivots the
// engine switches to smallest-index selection for the rest of the solve.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bnblab/model.hpp"
#include "bnblab/sparse_lu.hpp"

namespace bnblab {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };
std::string_view to_string(LpStatus status);

enum class BranchDirection { down, up };

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Node-local bound overrides, sorted by variable index.
class BoundSet {
 public:
  struct Entry {
    int var = 0;
    double lower = 0.0;
    double upper = 0.0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Replaces any existing override for var. Throws std::invalid_argument if lower > upper.
  void set(int var, double lower, double upper);
  std::optional<Interval> find(int var) const;
  bool contains(int var) const { return find(var).has_value(); }
  std::span<const Entry> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Effective bounds of every instance variable with the overrides applied.
  void apply(const MILPInstance& instance, std::vector<double>& lower,
             std::vector<double>& upper) const;

  friend bool operator==(const BoundSet&, const BoundSet&) = default;

 private:
  std::vector<Entry> entries_;
};

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper };

/// Basis snapshot over structurals followed by row logicals.
struct Basis {
  std::vector<VarStatus> status;
};

struct LpOptions {
  long iteration_limit = 50000;
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  int bland_after = 1000;
};

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> primal;
  long iterations = 0;
  std::shared_ptr<const Basis> basis;
};

/// Column and row copies of the constraint matrix plus row-logical bounds.
class LpModel {
 public:
  explicit LpModel(const MILPInstance& instance);

  int num_rows() const { return m_; }
  int num_structurals() const { return n_; }
  int num_columns() const { return n_ + m_; }

  const MILPInstance& instance() const { return *instance_; }

  // CSC over structurals.
  std::span<const int> col_start() const { return col_start_; }
  std::span<const int> col_row() const { return col_row_; }
  std::span<const double> col_val() const { return col_val_; }
  // CSR over structurals.
  std::span<const int> row_start() const { return row_start_; }
  std::span<const int> row_col() const { return row_col_; }
  std::span<const double> row_val() const { return row_val_; }

  std::span<const double> cost() const { return cost_; }
  std::span<const double> row_lower() const { return row_lower_; }
  std::span<const double> row_upper() const { return row_upper_; }

 private:
  const MILPInstance* instance_;
  int n_ = 0;
  int m_ = 0;
  std::vector<int> col_start_, col_row_, row_start_, row_col_;
  std::vector<double> col_val_, row_val_;
  std::vector<double> cost_, row_lower_, row_upper_;
};

/// Stateful dual simplex workspace bound to one LpModel. Not thread-safe;
/// use one engine per thread.
class SimplexEngine {
 public:
  explicit SimplexEngine(const LpModel& model, LpOptions options = {});

  /// Installs structural bounds and a starting basis (slack basis when warm is
  /// null or unusable), then factorizes.
  void load(std::span<const double> lower, std::span<const double> upper, const Basis* warm);

  /// Changes one structural's bounds in place, keeping the factorization.
  void set_bounds(int var, double lower, double upper);

  /// Runs the dual simplex from the current state.
  LpStatus solve();

  struct ProbeResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    long iterations = 0;
  };

  /// Solves with var's bounds replaced by [lower, upper], then restores the
  /// engine to its state before the call.
  ProbeResult probe(int var, double lower, double upper);

  LpStatus status() const { return status_; }
  double objective() const;
  std::vector<double> primal() const;
  double value(int var) const;
  Basis basis() const;
  LpResult result() const;
  long total_iterations() const { return total_iterations_; }
  long last_iterations() const { return last_iterations_; }

  const LpModel& model() const { return *model_; }
  const LpOptions& options() const { return options_; }

 private:
  struct Eta {
    int row;
    double pivot;
    std::size_t begin;
    std::size_t end;
  };

  struct Snapshot;
  struct Stash {
    bool valid = false;
    SparseLu lu;
    std::vector<Eta> etas;
    std::vector<int> eta_index;
    std::vector<double> eta_value;
    std::uint64_t generation = 0;
  };

  bool refactor();
  void slack_basis();
  void compute_primal();
  void compute_duals();
  void refresh_sign(int j);
  void ftran(int j, std::vector<double>& out);
  void btran(int r, std::vector<double>& out);
  void pivot_row(const std::vector<double>& rho);
  bool repair_dual_feasibility();
  LpStatus run();

  const LpModel* model_;
  LpOptions options_;
  int n_ = 0;
  int m_ = 0;

  std::vector<double> lower_, upper_, cost_;
  std::vector<VarStatus> status_of_;
  std::vector<std::uint8_t> artificial_;
  std::vector<int> head_, pos_;
  std::vector<double> x_basic_, lower_basic_, upper_basic_;
  std::vector<double> x_, d_, sgn_;
  std::vector<double> weight_;  // dual Devex weights by basis position
  std::vector<double> alpha_, rho_, column_, work_;

  SparseLu lu_;
  std::vector<int> basis_start_, basis_row_;
  std::vector<double> basis_val_;
  std::vector<double> rhs_;
  std::vector<Eta> etas_;
  std::vector<int> eta_index_;
  std::vector<double> eta_value_;
  std::uint64_t factor_generation_ = 0;
  Stash stash_;
  Stash* probe_stash_ = nullptr;  // set while a probe runs

  LpStatus status_ = LpStatus::infeasible;
  long total_iterations_ = 0;
  long last_iterations_ = 0;
};

/// Solves the LP relaxation of instance under bounds. warm may be null.
LpResult solve_lp(const MILPInstance& instance, const BoundSet& bounds,
                  const Basis* warm = nullptr, const LpOptions& options = {});

/// Re-solves with var rounded down (upper := floor) or up (lower := ceil).
/// Throws std::invalid_argument unless parent is optimal and var's value is at
/// least 1e-6 away from the nearest integer.
LpResult probe_bound_change(const MILPInstance& instance, const BoundSet& bounds,
                            const LpResult& parent, int var, BranchDirection direction,
                            const LpOptions& options = {});

}  // namespace bnblab
