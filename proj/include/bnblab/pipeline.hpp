#pragma once

// Experiment pipeline: strong-branching sample collection, per-group model
// training, rule evaluation and cross-validation.
//
// Everything here is deterministic given its seed. Work that runs in
// parallel (one instance per task) is merged back in instance order, so
// --jobs never changes an output byte.

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnblab/bnb.hpp"
#include "bnblab/forest.hpp"
#include "bnblab/grouping.hpp"

namespace bnblab {

/// Malformed or incompatible data file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Groups with fewer training samples than this get no model of their own.
inline constexpr long kMinGroupSamples = 10;

struct TrainingSample {
  std::string instance;
  int node_id = 0;
  VariableKey key;
  FeatureVector features{};
  double delta_down = 0.0;
  double delta_up = 0.0;
  /// Either probe child was infeasible, so one delta is the BIG constant.
  bool infeasible = false;
  /// ln(score_product(delta_down, delta_up)).
  double label = 0.0;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

double sample_label(double delta_down, double delta_up, double eps = kScoreEpsilon);

/// First line of every training CSV; carries the feature layout version.
std::string training_csv_preamble();
std::string training_csv_header();
std::string to_csv_row(const TrainingSample& sample);

void write_training_csv(const std::filesystem::path& path, std::span<const TrainingSample> samples);
/// Throws DataError on a layout mismatch or malformed row (naming the line).
std::vector<TrainingSample> read_training_csv(const std::filesystem::path& path);

/// Splits one CSV record, honouring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Runs fn(i) for i in [0, n) on up to jobs threads. Exceptions are rethrown
/// for the smallest failing index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Collection

struct CollectOptions {
  SolveLimits limits{1000, std::numeric_limits<double>::infinity(), 0.01};
  int jobs = 1;
  double epsilon = kScoreEpsilon;
};

struct CollectRun {
  SolveReport report;
  std::vector<TrainingSample> samples;
  /// Set when the instance aborted on an LP failure.
  std::string error;
};

/// One run per instance with the given probing rule; samples are those of
/// every probe the rule performed. hints may be empty or one per instance.
std::vector<CollectRun> collect(std::span<const MILPInstance> instances, const ReliabilityRule& rule,
                                const CollectOptions& options,
                                std::span<const std::optional<double>> hints = {});

// ---------------------------------------------------------------------------
// Training

struct GroupFit {
  std::string group;
  long samples = 0;
  bool trained = false;
  double train_mse = 0.0;
  double target_variance = 0.0;
};

struct TrainResult {
  ModelStore store;
  /// General model first, then every group in key order.
  std::vector<GroupFit> fits;
};

/// General forest on all samples with ET hyperparameters; for other schemes a
/// forest per group with at least kMinGroupSamples samples.
TrainResult train_store(std::span<const TrainingSample> samples, GroupingScheme scheme,
                        std::uint64_t seed);

/// Theoretical number of groups of a scheme over the binaries of an instance
/// (the general bucket counts once for ET only).
std::size_t group_count(const MILPInstance& instance, GroupingScheme scheme);

// ---------------------------------------------------------------------------
// Evaluation

struct RuleUnderTest {
  RuleSpec spec;
  std::shared_ptr<const ModelStore> store;  // ML rules only
};

struct EvalCell {
  std::string instance;
  std::string rule;
  SolveReport report;
  std::string error;
};

struct EvalTable {
  std::vector<std::string> instances;
  std::vector<std::string> rules;
  /// Row-major: cells[i * rules.size() + r].
  std::vector<EvalCell> cells;

  const EvalCell& at(std::size_t instance, std::size_t rule) const {
    return cells[instance * rules.size() + rule];
  }
  /// Arithmetic mean over instances of the final gap (inf if any is inf).
  double mean_gap(std::size_t rule) const;
  double mean_nodes(std::size_t rule) const;
  /// Pooled fallback rate: total fallbacks over total ML evaluations.
  double fallback_rate(std::size_t rule) const;
  /// Index of the ML rule with the smallest mean gap, -1 without ML rules.
  int best_ml_rule() const;

  std::string to_csv() const;
  /// Aligned gap table with a mean row; the best ML rule is starred.
  std::string to_text() const;
};

EvalTable evaluate(std::span<const MILPInstance> instances, std::span<const RuleUnderTest> rules,
                   const SolveLimits& limits, std::span<const std::optional<double>> hints,
                   int jobs = 1);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvGroupRow {
  std::string group;
  long samples = 0;
  long fallback_predictions = 0;
  double mse = 0.0;
};

struct CvPoint {
  std::size_t sample = 0;
  int fold = 0;
  double actual = 0.0;
  double predicted = 0.0;
  bool fallback = false;
};

struct CvSchemeReport {
  GroupingScheme scheme = GroupingScheme::et;
  double pooled_mse = 0.0;
  long fallback_predictions = 0;
  std::vector<CvGroupRow> groups;
  std::vector<CvPoint> points;  // in sample order
};

/// Every scheme sees the same fold split. Inside each training split a group
/// gets a model only with at least kMinGroupSamples samples; other held-out
/// samples are predicted by that fold's general model and flagged.
std::vector<CvSchemeReport> crossval_report(std::span<const TrainingSample> samples,
                                            std::span<const GroupingScheme> schemes, int folds,
                                            std::uint64_t seed, int jobs = 1);

std::string cv_summary_csv(std::span<const CvSchemeReport> reports);
std::string cv_groups_csv(std::span<const CvSchemeReport> reports);
std::string cv_scatter_csv(std::span<const CvSchemeReport> reports,
                           std::span<const TrainingSample> samples);
std::string cv_text(std::span<const CvSchemeReport> reports);

}  // namespace bnblab
