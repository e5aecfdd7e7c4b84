#include <cmath>

#include "bnblab/bnb.hpp"
#include "bnblab/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bnblab;

namespace {

MILPInstance knapsack(const std::vector<double>& v, const std::vector<double>& w, double cap) {
  MILPInstance inst;
  Constraint row;
  row.sense = Sense::le;
  row.rhs = cap;
  for (std::size_t j = 0; j < v.size(); ++j) {
    inst.variables.push_back({parse_variable_key("x" + std::to_string(j)), VarKind::binary, 0, 1, -v[j]});
    row.terms.push_back({static_cast<int>(j), w[j]});
  }
  inst.constraints.push_back(row);
  return inst;
}

MILPInstance random_mixed(Rng& rng) {
  MILPInstance inst;
  const int nb = rng.range(2, 6), nc = rng.range(0, 2);
  for (int j = 0; j < nb; ++j)
    inst.variables.push_back(
        {parse_variable_key("b" + std::to_string(j)), VarKind::binary, 0, 1, rng.uniform(-10, 3)});
  for (int j = 0; j < nc; ++j)
    inst.variables.push_back(
        {parse_variable_key("c" + std::to_string(j)), VarKind::continuous, 0, rng.uniform(1, 4), rng.uniform(-2, 2)});
  const int rows = rng.range(1, 3);
  for (int i = 0; i < rows; ++i) {
    Constraint c;
    c.sense = rng.uniform() < 0.7 ? Sense::le : Sense::ge;
    double total = 0;
    for (int j = 0; j < inst.num_variables(); ++j) {
      if (rng.uniform() < 0.2) continue;
      const double a = rng.uniform(0.5, 5);
      c.terms.push_back({j, a});
      total += a;
    }
    if (c.terms.empty()) c.terms.push_back({0, 1.0});
    c.rhs = c.sense == Sense::le ? total * rng.uniform(0.3, 0.7) : total * rng.uniform(0.1, 0.3);
    inst.constraints.push_back(c);
  }
  return inst;
}

}  // namespace

TEST_CASE("gap formula") {
  CHECK(relative_gap(100, 90) == doctest::Approx(10));
  CHECK(relative_gap(-100, -110) == doctest::Approx(10));
  CHECK(relative_gap(0, -1e-12) == doctest::Approx(100 * 1e-12 / 1e-10));
  CHECK(relative_gap(5, 6) == 0.0);
  CHECK(std::isinf(relative_gap(std::numeric_limits<double>::infinity(), 1)));
}

TEST_CASE("3-variable knapsack equals brute force") {
  const auto inst = knapsack({5, 4, 3}, {4, 3, 2}, 6);
  double best = 0;
  for (int m = 0; m < 8; ++m) {
    double v = 0, w = 0;
    const double vals[] = {5, 4, 3}, ws[] = {4, 3, 2};
    for (int j = 0; j < 3; ++j)
      if (m >> j & 1) {
        v += vals[j];
        w += ws[j];
      }
    if (w <= 6) best = std::max(best, v);
  }
  for (const char* r : {"mib", "rb:inf:inf", "rb:1:1", "rb:0:0"}) {
    const auto rep = solve(inst, *make_rule(parse_rule(r)));
    CHECK(rep.primal_bound == doctest::Approx(-best));
    CHECK(rep.termination == Termination::tree_exhausted);
    CHECK(rep.relative_gap_percent == doctest::Approx(0.0));
  }
}

TEST_CASE("random mixed instances match the enumeration oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_mixed(rng);
    const auto truth = oracle::brute_force_milp(inst);
    for (const char* r : {"mib", "rb:inf:inf", "rb:2:1"}) {
      const auto rep = solve(inst, *make_rule(parse_rule(r)));
      if (!truth) {
        CHECK(std::isinf(rep.primal_bound));
        continue;
      }
      CHECK(rep.primal_bound == doctest::Approx(*truth).epsilon(1e-7));
      REQUIRE(rep.incumbent.size() == static_cast<std::size_t>(inst.num_variables()));
      CHECK(inst.objective(rep.incumbent) == doctest::Approx(rep.primal_bound));
      for (std::size_t i = 1; i < rep.dual_trace.size(); ++i)
        CHECK(rep.dual_trace[i] >= rep.dual_trace[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("integral root is solved in one node") {
  const auto inst = knapsack({5, 4}, {1, 1}, 2);
  const auto rep = solve(inst, MibRule());
  CHECK(rep.nodes_processed == 1);
  CHECK(rep.relative_gap_percent == 0.0);
  CHECK(rep.termination == Termination::tree_exhausted);
  CHECK(rep.primal_bound == -9.0);
}

TEST_CASE("node_limit = 1 on a fractional instance") {
  const auto inst = knapsack({5, 4, 3}, {4, 3, 2}, 6);
  SolveOptions o;
  o.limits.node_limit = 1;
  o.primal_hint = -7.0;
  const auto rep = solve(inst, MibRule(), o);
  CHECK(rep.nodes_processed == 1);
  CHECK(rep.termination == Termination::node_limit);
  CHECK(rep.relative_gap_percent > 0.0);
  CHECK(rep.primal_hint_used);
}

TEST_CASE("primal hint prunes and later improvements are recorded") {
  const auto inst = knapsack({5, 4, 3}, {4, 3, 2}, 6);
  SolveOptions o;
  o.primal_hint = -5.0;  // feasible but not optimal
  const auto rep = solve(inst, MibRule(), o);
  CHECK(rep.primal_bound == doctest::Approx(-8.0));
  CHECK(rep.incumbent_updates >= 1);
  o.primal_hint = -8.0;
  const auto exact = solve(inst, MibRule(), o);
  CHECK(exact.primal_bound == -8.0);
  CHECK(exact.incumbent_updates == 0);
}

TEST_CASE("gap limit stops the search") {
  const auto inst = knapsack({5, 4, 3}, {4, 3, 2}, 6);
  SolveOptions o;
  o.limits.gap_limit_percent = 50;
  o.primal_hint = -7.0;
  const auto rep = solve(inst, MibRule(), o);
  CHECK(rep.termination == Termination::gap_limit);
  CHECK(rep.nodes_processed == 1);
  CHECK(rep.relative_gap_percent <= 50);
}

TEST_CASE("solves are deterministic") {
  Rng rng(9);
  const auto inst = random_mixed(rng);
  const auto a = solve(inst, *make_rule(parse_rule("rb:inf:inf")));
  const auto b = solve(inst, *make_rule(parse_rule("rb:inf:inf")));
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_csv_row() == b.to_csv_row());
}

TEST_CASE("open-node selection") {
  OpenNodes open;
  auto node = [](int id, double bound, double est) {
    Node n;
    n.id = id;
    n.parent_objective = bound;
    n.estimate = est;
    return n;
  };
  open.push(node(1, 5.0, 5.0));
  open.push(node(2, 3.0, 3.0));
  open.push(node(3, 3.0, 4.0));
  open.push(node(4, 7.0, 7.0));
  CHECK(open.min_bound() == 3.0);
  // Plunge into the cheaper of the last children below the cutoff.
  const std::vector<int> kids{4, 1};
  CHECK(open.pop_next(kids, 10.0).id == 1);
  // Children at or above the cutoff are not plunged into: best bound, ties by id.
  const std::vector<int> high{4};
  CHECK(open.pop_next(high, 6.0).id == 2);
  CHECK(open.pop_next({}, 10.0).id == 3);
  CHECK(open.pop_next({}, 10.0).id == 4);
  CHECK(open.empty());
  CHECK(std::isinf(open.min_bound()));
}

TEST_CASE("report serialisation") {
  const auto inst = knapsack({5, 4, 3}, {4, 3, 2}, 6);
  const auto rep = solve(inst, MibRule());
  const auto header = SolveReport::csv_header();
  const auto row = rep.to_csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(rep.to_json().find("\"termination\": \"tree_exhausted\"") != std::string::npos);
}
