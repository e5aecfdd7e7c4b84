#include <cmath>

#include "bnblab/branching.hpp"
#include "bnblab/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bnblab;

namespace {

// Root node of an instance, with the engine holding its optimal LP.
struct RootFixture {
  explicit RootFixture(const MILPInstance& inst)
      : instance(inst), model(inst), engine(model), statics(inst), pc(inst.num_variables()) {
    std::vector<double> lo, hi;
    node.bounds.apply(inst, lo, hi);
    engine.load(lo, hi, nullptr);
    REQUIRE(engine.solve() == LpStatus::optimal);
    x = engine.primal();
    for (int j = 0; j < inst.num_variables(); ++j) {
      if (!inst.variables[j].is_binary()) continue;
      const double f = x[j] - std::floor(x[j]);
      if (f > 1e-6 && f < 1 - 1e-6) candidates.push_back({j, x[j], f});
    }
    tree.root_objective = engine.objective();
  }

  BranchContext context() {
    BranchContext ctx;
    ctx.instance = &instance;
    ctx.statics = &statics;
    ctx.engine = &engine;
    ctx.node = &node;
    ctx.node_objective = engine.objective();
    ctx.x = x;
    ctx.candidates = candidates;
    ctx.pseudocosts = &pc;
    ctx.tree = &tree;
    ctx.stats = &stats;
    ctx.big = 1e6;
    return ctx;
  }

  const MILPInstance& instance;
  LpModel model;
  SimplexEngine engine;
  StaticFeatures statics;
  Node node;
  std::vector<double> x;
  std::vector<Candidate> candidates;
  PseudocostTable pc;
  TreeStats tree;
  BranchingStats stats;
};

// max sum v_j x_j subject to sum w_j x_j <= cap, written as a minimisation.
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

// Two knapsack rows so the root LP has two fractional binaries.
MILPInstance random_two_row(Rng& rng, int n) {
  MILPInstance inst;
  Constraint a, b;
  a.sense = b.sense = Sense::le;
  double wa = 0, wb = 0;
  for (int j = 0; j < n; ++j) {
    inst.variables.push_back(
        {parse_variable_key("x" + std::to_string(j)), VarKind::binary, 0, 1, -rng.uniform(1, 10)});
    const double ca = rng.uniform(1, 6), cb = rng.uniform(1, 6);
    a.terms.push_back({j, ca});
    b.terms.push_back({j, cb});
    wa += ca;
    wb += cb;
  }
  a.rhs = wa * rng.uniform(0.3, 0.6);
  b.rhs = wb * rng.uniform(0.3, 0.6);
  inst.constraints = {a, b};
  return inst;
}

// Child objective from vertex enumeration; +inf when infeasible.
double oracle_child(const MILPInstance& inst, int var, double lo, double hi) {
  auto lp = oracle::relaxation(inst);
  lp.lower[var] = lo;
  lp.upper[var] = hi;
  const auto opt = oracle::vertex_enumeration(lp);
  return opt ? opt->objective : std::numeric_limits<double>::infinity();
}

}  // namespace

TEST_CASE("score_mib properties") {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const double f = rng.uniform();
    const double s = score_mib(f);
    CHECK(s >= 0.0);
    CHECK(s <= 0.5);
    CHECK(s == doctest::Approx(score_mib(1.0 - f)));
    CHECK(s <= score_mib(0.5));
  }
  CHECK(score_mib(0.0) == 0.0);
  CHECK(score_mib(0.5) == 0.5);
}

TEST_CASE("score_product properties") {
  Rng rng(2);
  for (int k = 0; k < 10000; ++k) {
    const double a = rng.uniform(-1, 10), b = rng.uniform(-1, 10), t = rng.uniform(0, 5);
    const double s = score_product(a, b);
    CHECK(s >= kScoreEpsilon * kScoreEpsilon);
    CHECK(s == score_product(b, a));
    CHECK(score_product(a + t, b) >= s);
    CHECK(score_product(a, b + t) >= s);
    CHECK(s == std::max(a, kScoreEpsilon) * std::max(b, kScoreEpsilon));
  }
  CHECK(score_product(0, 5) == 5 * kScoreEpsilon);
}

TEST_CASE("rule parsing") {
  CHECK(parse_rule("mib").kind == RuleSpec::Kind::mib);
  const auto rb = parse_rule("rb:100:inf");
  CHECK(rb.kind == RuleSpec::Kind::rb);
  CHECK(rb.lambda == 100);
  CHECK(rb.eta == kUnlimited);
  CHECK(rb.text() == "rb:100:inf");
  CHECK(parse_rule("RB:Inf:4").text() == "rb:inf:4");
  CHECK(parse_rule("ml:pv").scheme == GroupingScheme::pv);
  for (const char* bad : {"", "mib:1", "rb:1", "rb:-1:2", "rb:x:2", "ml:zz", "ml", "foo"})
    CHECK_THROWS_AS(parse_rule(bad), RuleSyntaxError);
  CHECK_THROWS(make_rule(parse_rule("ml:et")));
  CHECK(make_rule(parse_rule("rb:inf:inf"))->name() == "rb:inf:inf");
}

TEST_CASE("MIB picks the most fractional candidate, ties to the smaller index") {
  // 3 x0 + 3 x1 + 2 x2 <= 4 with equal values per weight.
  const auto inst = knapsack({3, 3, 2}, {3, 3, 2}, 4);
  RootFixture f(inst);
  auto ctx = f.context();
  const auto d = MibRule().select(ctx);
  double best = -1;
  int expect = -1;
  for (const auto& c : f.candidates)
    if (score_mib(c.fraction) > best) {
      best = score_mib(c.fraction);
      expect = c.var;
    }
  CHECK(d.var == expect);
}

TEST_CASE("full strong branching matches independently solved children") {
  Rng rng(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_two_row(rng, rng.range(3, 5));
    RootFixture f(inst);
    if (f.candidates.empty()) continue;
    auto ctx = f.context();
    const double z = ctx.node_objective;
    std::vector<ProbeRecord> seen;
    ctx.on_probe = [&](const ProbeRecord& r) { seen.push_back(r); };
    const auto d = ReliabilityRule(kUnlimited, kUnlimited).select(ctx);
    REQUIRE(seen.size() == f.candidates.size());
    CHECK(f.stats.probes == static_cast<long>(f.candidates.size()));

    int expect = -1;
    double best = -1;
    for (std::size_t i = 0; i < f.candidates.size(); ++i) {
      const auto& c = f.candidates[i];
      const double down = oracle_child(inst, c.var, 0, 0);
      const double up = oracle_child(inst, c.var, 1, 1);
      const double dd = std::isinf(down) ? 1e6 : std::max(0.0, down - z);
      const double du = std::isinf(up) ? 1e6 : std::max(0.0, up - z);
      const double s = std::max(dd, 1e-6) * std::max(du, 1e-6);
      if (s > best * (1 + 1e-9)) {
        best = s;
        expect = c.var;
      }
      const auto it = std::find_if(seen.begin(), seen.end(), [&](auto& r) { return r.var == c.var; });
      REQUIRE(it != seen.end());
      CHECK(it->delta_down == doctest::Approx(dd).epsilon(1e-7));
      CHECK(it->delta_up == doctest::Approx(du).epsilon(1e-7));
      CHECK(it->down_infeasible == std::isinf(down));
    }
    CHECK(d.var == expect);
    // The node LP is untouched by probing.
    CHECK(f.engine.objective() == doctest::Approx(z));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("lambda = 0 and eta = 0 fall back to pseudocosts") {
  Rng rng(4);
  const auto inst = random_two_row(rng, 5);
  RootFixture f(inst);
  REQUIRE(!f.candidates.empty());
  f.pc.record(f.candidates.back().var, BranchDirection::up, 50.0);
  auto c1 = f.context();
  const auto a = ReliabilityRule(0, kUnlimited).select(c1);
  auto c2 = f.context();
  const auto b = ReliabilityRule(kUnlimited, 0).select(c2);
  CHECK(f.stats.probes == 0);
  CHECK(a.var == b.var);
  CHECK(a.var == f.candidates.back().var);
  for (const auto& s : a.scores) CHECK(s.source == ScoreSource::pseudocost);
}

TEST_CASE("lambda caps probes per node and eta skips reliable variables") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_two_row(rng, 5);
    RootFixture f(inst);
    if (f.candidates.size() < 2) continue;
    auto ctx = f.context();
    int probes = 0;
    ctx.on_probe = [&](const ProbeRecord&) { ++probes; };
    ReliabilityRule(1, kUnlimited).select(ctx);
    CHECK(probes == 1);
    // Every candidate probed once is reliable at eta = 1; nothing is probed again.
    ReliabilityRule(kUnlimited, kUnlimited).select(ctx);
    probes = 0;
    ReliabilityRule(kUnlimited, 1).select(ctx);
    CHECK(probes == 0);
    return;
  }
  FAIL("no instance with two fractional candidates");
}

TEST_CASE("ML rule scores with the model and counts fallbacks") {
  Rng rng(6);
  const auto inst = random_two_row(rng, 5);
  RootFixture f(inst);
  REQUIRE(!f.candidates.empty());
  std::vector<FeatureVector> x(4);
  for (int i = 0; i < 4; ++i) x[i].fill(i);
  std::vector<double> y(4, 1.0);
  auto store = std::make_shared<ModelStore>(GroupingScheme::pv, Forest::fit(x, y, {}, 1));
  auto ctx = f.context();
  const auto d = MlRule(store).select(ctx);
  // Constant model: every score ties, the smallest index wins.
  CHECK(d.var == f.candidates.front().var);
  CHECK(f.stats.ml_evaluations == static_cast<long>(f.candidates.size()));
  CHECK(f.stats.ml_fallbacks == f.stats.ml_evaluations);

  auto et = std::make_shared<ModelStore>(GroupingScheme::et, Forest::fit(x, y, {}, 1));
  BranchingStats fresh;
  ctx.stats = &fresh;
  MlRule(et).select(ctx);
  CHECK(fresh.ml_fallbacks == 0);
  CHECK(fresh.fallback_rate_percent() == 0.0);
}
