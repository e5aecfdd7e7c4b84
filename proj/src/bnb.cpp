#include "bnblab/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "bnblab/format.hpp"
#include "json.hpp"

namespace bnblab {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntegralityTol = 1e-6;

double cutoff_of(double primal) {
  return std::isfinite(primal) ? primal - 1e-9 * (1.0 + std::abs(primal)) : kInf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::gap_limit: return "gap_limit";
    case Termination::node_limit: return "node_limit";
    case Termination::time_limit: return "time_limit";
    case Termination::tree_exhausted: return "tree_exhausted";
    case Termination::error: return "error";
  }
  return "?";
}

double relative_gap(double primal, double dual) {
  if (!std::isfinite(primal) || !std::isfinite(dual)) return kInf;
  return std::max(0.0, 100.0 * (primal - dual) / std::max(std::abs(primal), 1e-10));
}

// ---------------------------------------------------------------------------
// OpenNodes

void OpenNodes::push(Node node) {
  by_bound_.emplace(node.parent_objective, node.id);
  const int id = node.id;
  nodes_.emplace(id, std::move(node));
}

double OpenNodes::min_bound() const { return by_bound_.empty() ? kInf : by_bound_.begin()->first; }

bool OpenNodes::contains(int id) const { return nodes_.count(id) > 0; }

const Node& OpenNodes::get(int id) const { return nodes_.at(id); }

Node OpenNodes::pop_next(std::span<const int> last_children, double cutoff) {
  int pick = -1;
  for (int id : last_children) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || !(it->second.parent_objective < cutoff)) continue;
    if (pick < 0) {
      pick = id;
      continue;
    }
    const Node& a = it->second;
    const Node& b = nodes_.at(pick);
    if (a.estimate < b.estimate || (a.estimate == b.estimate && a.id < b.id)) pick = id;
  }
  if (pick < 0) pick = by_bound_.begin()->second;
  auto it = nodes_.find(pick);
  Node node = std::move(it->second);
  nodes_.erase(it);
  by_bound_.erase({node.parent_objective, node.id});
  return node;
}

// ---------------------------------------------------------------------------
// Report serialization

std::string SolveReport::to_json() const {
  json j;
  j["instance"] = instance;
  j["rule"] = rule;
  j["termination"] = to_string(termination);
  if (!error.empty()) j["error"] = error;
  j["nodes_processed"] = nodes_processed;
  j["nodes_created"] = nodes_created;
  j["best_dual_bound"] = finite_or_null(best_dual_bound);
  j["primal_bound"] = finite_or_null(primal_bound);
  j["relative_gap_percent"] = finite_or_null(relative_gap_percent);
  j["root_objective"] = root_objective;
  j["max_depth"] = max_depth;
  j["lp_iterations"] = lp_iterations;
  j["primal_hint_used"] = primal_hint_used;
  j["incumbent_updates"] = incumbent_updates;
  j["branching_stats"] = {{"probes", branching.probes},
                          {"ml_evaluations", branching.ml_evaluations},
                          {"ml_fallbacks", branching.ml_fallbacks},
                          {"fallback_rate_percent", branching.fallback_rate_percent()}};
  return j.dump(2) + "\n";
}

std::string SolveReport::csv_header() {
  return "instance,rule,termination,nodes_processed,best_dual_bound,primal_bound,"
         "relative_gap_percent,probes,ml_evaluations,ml_fallbacks,fallback_rate_percent,"
         "incumbent_updates,lp_iterations";
}

std::string SolveReport::to_csv_row() const {
  std::string row = csv_field(instance) + "," + csv_field(rule) + "," +
                    std::string(to_string(termination)) + "," + std::to_string(nodes_processed);
  for (double v : {best_dual_bound, primal_bound, relative_gap_percent}) row += "," + format_double(v);
  row += "," + std::to_string(branching.probes) + "," + std::to_string(branching.ml_evaluations) +
         "," + std::to_string(branching.ml_fallbacks) + "," +
         format_double(branching.fallback_rate_percent()) + "," +
         std::to_string(incumbent_updates) + "," + std::to_string(lp_iterations);
  return row;
}

// ---------------------------------------------------------------------------
// Search

SolveReport solve(const MILPInstance& instance, const BranchingRule& rule,
                  const SolveOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  SolveReport report;
  report.instance = instance.name;
  report.rule = rule.name();

  const int n = instance.num_variables();
  const LpModel model(instance);
  SimplexEngine engine(model, options.lp);
  const StaticFeatures statics(instance);
  PseudocostTable pseudocosts(n, options.keep_pseudocost_log);
  TreeStats tree;
  const auto& limits = options.limits;

  double primal = kInf;
  if (options.primal_hint) {
    primal = *options.primal_hint;
    report.primal_hint_used = true;
  }

  std::vector<double> base_lo(n), base_hi(n);
  for (int j = 0; j < n; ++j) {
    base_lo[j] = instance.variables[j].lower;
    base_hi[j] = instance.variables[j].upper;
  }

  OpenNodes open;
  {
    Node root;
    root.parent_objective = -kInf;
    root.estimate = -kInf;
    open.push(std::move(root));
  }
  int next_id = 1;
  std::vector<int> last_children;
  int engine_node = -1;  // node whose optimal LP the engine currently holds
  BoundSet engine_bounds;
  std::vector<double> lo, hi, x;
  std::vector<Candidate> candidates;
  double big = 1e6;

  try {
    while (true) {
      if (open.empty()) {
        report.termination = Termination::tree_exhausted;
        break;
      }
      const double dual = std::min(open.min_bound(), primal);
      report.dual_trace.push_back(dual);
      if (limits.gap_limit_percent >= 0.0 && std::isfinite(primal) &&
          relative_gap(primal, dual) <= limits.gap_limit_percent) {
        report.termination = Termination::gap_limit;
        break;
      }
      if (limits.node_limit >= 0 && report.nodes_processed >= limits.node_limit) {
        report.termination = Termination::node_limit;
        break;
      }
      if (elapsed() >= limits.time_limit_s) {
        report.termination = Termination::time_limit;
        break;
      }

      const double cutoff = cutoff_of(primal);
      Node node = open.pop_next(last_children, cutoff);
      last_children.clear();
      if (node.parent_objective >= cutoff) continue;

      // Bring the engine to this node's bounds.
      if (engine_node >= 0 && node.parent_id == engine_node) {
        for (const auto& e : engine_bounds.entries())
          if (!node.bounds.contains(e.var)) engine.set_bounds(e.var, base_lo[e.var], base_hi[e.var]);
        for (const auto& e : node.bounds.entries()) {
          const auto old = engine_bounds.find(e.var);
          if (!old || old->lower != e.lower || old->upper != e.upper)
            engine.set_bounds(e.var, e.lower, e.upper);
        }
      } else {
        node.bounds.apply(instance, lo, hi);
        engine.load(lo, hi, node.warm.get());
      }
      engine_bounds = node.bounds;
      engine_node = node.id;

      const LpStatus status = engine.solve();
      ++report.nodes_processed;
      report.lp_iterations += engine.last_iterations();
      if (status == LpStatus::iteration_limit)
        throw NumericalError("node " + std::to_string(node.id) + ": LP iteration limit reached");
      if (status == LpStatus::unbounded)
        throw NumericalError("node " + std::to_string(node.id) + ": LP relaxation is unbounded");
      if (status == LpStatus::infeasible) continue;

      const double obj = engine.objective();
      if (node.id == 0) {
        tree.root_objective = obj;
        report.root_objective = obj;
        big = 1e6 * (1.0 + std::abs(obj));
      }
      tree.max_depth_seen = std::max(tree.max_depth_seen, node.depth);

      if (node.branch_var >= 0) {
        const bool down = node.direction == BranchDirection::down;
        const double gain = std::max(0.0, obj - node.parent_objective);
        const double dist = down ? node.branch_fraction : 1.0 - node.branch_fraction;
        pseudocosts.record(node.branch_var, node.direction, gain / dist);
      }

      const double bound = std::max(obj, node.parent_objective);
      if (bound >= cutoff) continue;

      x = engine.primal();
      candidates.clear();
      for (int j = 0; j < n; ++j) {
        if (!instance.variables[j].is_binary()) continue;
        const double f = x[j] - std::floor(x[j]);
        if (std::min(f, 1.0 - f) > kIntegralityTol) candidates.push_back({j, x[j], f});
      }

      if (candidates.empty()) {
        if (obj < cutoff) {
          primal = obj;
          report.incumbent = x;
          ++report.incumbent_updates;
        }
        continue;
      }

      BranchContext ctx;
      ctx.instance = &instance;
      ctx.statics = &statics;
      ctx.engine = &engine;
      ctx.node = &node;
      ctx.node_objective = obj;
      ctx.x = x;
      ctx.candidates = candidates;
      ctx.pseudocosts = &pseudocosts;
      ctx.tree = &tree;
      ctx.stats = &report.branching;
      ctx.big = big;
      ctx.epsilon = options.epsilon;
      ctx.on_probe = options.on_probe;
      const BranchDecision decision = rule.select(ctx);

      if (options.on_node)
        options.on_node({&node, obj, x, candidates, &decision, &pseudocosts});

      const int var = decision.var;
      const double v = x[var];
      const auto cur = node.bounds.find(var).value_or(
          Interval{instance.variables[var].lower, instance.variables[var].upper});
      auto warm = std::make_shared<const Basis>(engine.basis());

      Node down, up;
      for (Node* child : {&down, &up}) {
        child->id = next_id++;
        child->parent_id = node.id;
        child->depth = node.depth + 1;
        child->bounds = node.bounds;
        child->parent_objective = bound;
        child->warm = warm;
        child->branch_var = var;
        child->branch_fraction = v - std::floor(v);
      }
      down.direction = BranchDirection::down;
      down.bounds.set(var, cur.lower, std::floor(v));
      up.direction = BranchDirection::up;
      up.bounds.set(var, std::ceil(v), cur.upper);
      down.estimate = decision.down_objective ? std::max(bound, *decision.down_objective) : bound;
      up.estimate = decision.up_objective ? std::max(bound, *decision.up_objective) : bound;
      last_children = {down.id, up.id};
      open.push(std::move(down));
      open.push(std::move(up));
      report.nodes_created += 2;
    }
  } catch (const NumericalError& e) {
    report.termination = Termination::error;
    report.error = e.what();
  }

  report.primal_bound = primal;
  if (report.termination == Termination::tree_exhausted) report.best_dual_bound = primal;
  else report.best_dual_bound = std::min(open.min_bound(), primal);
  report.relative_gap_percent =
      std::isfinite(primal) ? relative_gap(primal, report.best_dual_bound) : kInf;
  report.max_depth = tree.max_depth_seen;
  if (options.keep_pseudocost_log) report.pseudocost_log = pseudocosts.log();
  report.seconds = elapsed();
  return report;
}

}  // namespace bnblab
