#pragma once

// Desk-scale unit-commitment instance families.
//
// For each generator g and hour t the instance has binaries is_on[g,t],
// switch_on[g,t], switch_off[g,t], startup[g,t,s] (s < S) and a continuous
// output p[g,t]. Rows per (g,t): output limits, commitment logic, min-up and
// min-down windows, startup-category selection and S-1 category windows; one
// demand row per hour. Variations of a family share every sparsity pattern
// and differ only in demand, costs and capacity coefficients.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bnblab/model.hpp"

namespace bnblab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UCConfig {
  int generators = 12;
  int hours = 24;
  int startup_categories = 3;
  std::uint64_t seed = 1;
  int variations = 50;
  /// Leading share of variations used for training.
  double train_fraction = 0.8;

  // Demand profile.
  double peak_trough_ratio = 1.6;
  double peak_fraction = 0.7;  // peak demand / fleet capacity
  double demand_noise = 0.03;
  int peak_hour = 18;

  // Generator parameter ranges.
  double pmax_min = 60.0, pmax_max = 300.0;
  double pmin_fraction_min = 0.25, pmin_fraction_max = 0.55;
  double marginal_cost_min = 15.0, marginal_cost_max = 60.0;
  double no_load_cost_min = 150.0, no_load_cost_max = 900.0;
  double startup_cost_min = 300.0, startup_cost_max = 2500.0;
  /// Cost of category s is the base startup cost times (1 + step * s).
  double startup_category_step = 0.6;
  int min_up_min = 1, min_up_max = 6;
  int min_down_min = 1, min_down_max = 6;
  /// Category s covers off-times in [1 + s * lag, 1 + (s + 1) * lag).
  int startup_lag_hours = 3;
  double initial_on_fraction = 0.5;

  // Variation rule.
  double demand_jitter = 0.1;    // U[1 - j, 1 + j] per hour
  double cost_jitter = 0.05;     // U[1 - j, 1 + j] per generator
  double capacity_jitter = 0.02; // U[1 - j, 1 + j] per generator

  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

struct GeneratorSpec {
  double pmax = 0.0;
  double pmin = 0.0;
  double marginal_cost = 0.0;
  double no_load_cost = 0.0;
  double startup_cost = 0.0;
  int min_up = 1;
  int min_down = 1;
  bool initially_on = false;
};

struct UCFamily {
  UCConfig config;
  std::vector<GeneratorSpec> generators;
  std::vector<double> base_demand;
  MILPInstance base;
  std::vector<MILPInstance> variations;
  std::vector<std::uint64_t> variation_seeds;

  int num_train() const;
};

UCFamily generate_family(const UCConfig& config);

/// Builds one instance; the multipliers are per hour (demand) and per
/// generator (cost, capacity).
MILPInstance build_uc_instance(const UCConfig& config, const std::vector<GeneratorSpec>& gens,
                               const std::vector<double>& demand, const std::string& name);

struct OptimalValue {
  double value = 0.0;
  /// False when the search stopped on its node budget before closing the gap.
  bool proven = true;
  std::string method;
};

/// True optimum by enumeration of binary assignments (at most 20 binaries) or
/// by B&B otherwise. node_budget < 0 means no budget. Throws ModelError when
/// the instance is infeasible.
OptimalValue optimal_value_oracle(const MILPInstance& instance, long node_budget = -1);

/// Enumeration path only; exposed so tests can compare both paths.
double enumerate_optimum(const MILPInstance& instance);

}  // namespace bnblab
