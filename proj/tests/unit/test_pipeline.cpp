#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "bnblab/pipeline.hpp"
#include "bnblab/rng.hpp"
#include "bnblab/scuc.hpp"
#include "doctest.h"

using namespace bnblab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bnblab-test-pipeline-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// n independent binaries, each capped at 1/2 by its own row: every root
// value is fractional and every up child is infeasible.
MILPInstance halves(int n) {
  MILPInstance inst;
  inst.name = "halves";
  for (int j = 0; j < n; ++j)
    inst.variables.push_back({parse_variable_key("x" + std::to_string(j)), VarKind::binary, 0, 1, -1.0});
  for (int j = 0; j < n; ++j) {
    Constraint c;
    c.sense = Sense::le;
    c.rhs = 1;
    c.terms.push_back({j, 2.0});
    inst.constraints.push_back(c);
  }
  return inst;
}

MILPInstance knapsack(const std::vector<double>& v, const std::vector<double>& w, double cap) {
  MILPInstance inst;
  inst.name = "knap";
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

TrainingSample synthetic(const std::string& var, Rng& rng, double label) {
  TrainingSample s;
  s.instance = "synthetic";
  s.key = parse_variable_key(var);
  for (auto& f : s.features) f = rng.uniform();
  s.label = label;
  return s;
}

std::string var_name(int g, int t) {
  return "is_on[" + std::to_string(g) + "," + std::to_string(t) + "]";
}

}  // namespace

TEST_CASE("sample label is the log of the product score") {
  CHECK(sample_label(2, 3) == doctest::Approx(std::log(6.0)));
  CHECK(sample_label(0, 3) == doctest::Approx(std::log(kScoreEpsilon * 3)));
  CHECK(sample_label(0, 0) == doctest::Approx(2 * std::log(kScoreEpsilon)));
}

TEST_CASE("training CSV round trip") {
  const fs::path dir = scratch("csv");
  Rng rng(5);
  std::vector<TrainingSample> in;
  for (const char* v : {"is_on[3,7]", "startup[1,2,0]", "odd,name \"quoted\"", "switch_off[0,23]"}) {
    auto s = synthetic(v, rng, rng.uniform(-5, 5));
    s.node_id = static_cast<int>(in.size()) * 3;
    s.delta_down = rng.uniform(0, 10);
    s.delta_up = 1e-17 * rng.uniform();
    s.infeasible = in.size() % 2 == 1;
    in.push_back(s);
  }
  write_training_csv(dir / "s.csv", in);
  const auto out = read_training_csv(dir / "s.csv");
  REQUIRE(out.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);

  std::ifstream f(dir / "s.csv");
  std::string first, header;
  std::getline(f, first);
  std::getline(f, header);
  CHECK(first.find(std::string(kFeatureLayoutVersion)) != std::string::npos);
  CHECK(header ==
        "instance,node_id,var_name,base,generator,time,startup_category,f1,f2,f3,f4,f5,f6,f7,f8,"
        "f9,f10,f11,f12,f13,f14,f15,f16,delta_down,delta_up,infeasible_flag,label");
}

TEST_CASE("training CSV rejects foreign layouts and broken rows") {
  const fs::path dir = scratch("csvbad");
  Rng rng(1);
  std::vector<TrainingSample> one{synthetic("is_on[0,0]", rng, 1.0)};
  write_training_csv(dir / "ok.csv", one);
  std::ifstream f(dir / "ok.csv");
  std::string pre, header, row;
  std::getline(f, pre);
  std::getline(f, header);
  std::getline(f, row);

  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream o(dir / name);
    o << text;
    return dir / name;
  };
  CHECK_THROWS_AS(read_training_csv(write("layout.csv", "# bnblab training samples; feature_layout=phi15-v0\n" +
                                                         header + "\n" + row + "\n")),
                  DataError);
  CHECK_THROWS_AS(read_training_csv(write("short.csv", pre + "\n" + header + "\n" + row.substr(0, 40) + "\n")),
                  DataError);
  CHECK_THROWS_AS(read_training_csv(write("hdr.csv", pre + "\ninstance,node\n" + row + "\n")), DataError);
  CHECK_THROWS_AS(read_training_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("collect records one sample per probe") {
  SUBCASE("node limit 1 with lambda 2 probes two of three candidates") {
    const std::vector<MILPInstance> inst{halves(3)};
    CollectOptions opt;
    opt.limits.node_limit = 1;
    const auto runs = collect(inst, ReliabilityRule(2, kUnlimited), opt);
    REQUIRE(runs.size() == 1);
    const auto& s = runs[0].samples;
    REQUIRE(s.size() == 2);
    for (const auto& x : s) {
      CHECK(x.node_id == 0);
      // Down child loses half a unit; up child violates 2x <= 1.
      CHECK(x.delta_down == doctest::Approx(0.5));
      CHECK(x.infeasible);
      CHECK(x.label == doctest::Approx(sample_label(x.delta_down, x.delta_up)));
    }
    CHECK(s[0].key.raw != s[1].key.raw);
  }
  SUBCASE("integral root gives no samples") {
    const std::vector<MILPInstance> inst{knapsack({3, 2, 1}, {1, 1, 1}, 3)};
    const auto runs = collect(inst, ReliabilityRule(kUnlimited, kUnlimited), {});
    CHECK(runs[0].samples.empty());
    CHECK(runs[0].report.termination == Termination::tree_exhausted);
  }
  SUBCASE("lambda 0 is refused") {
    const std::vector<MILPInstance> inst{halves(2)};
    CHECK_THROWS(collect(inst, ReliabilityRule(0, kUnlimited), {}));
  }
}

TEST_CASE("collect output does not depend on jobs") {
  UCConfig c;
  c.generators = 3;
  c.hours = 6;
  c.variations = 4;
  c.seed = 11;
  const auto fam = generate_family(c);
  CollectOptions opt;
  opt.limits.node_limit = 8;
  const ReliabilityRule rule(4, kUnlimited);
  const auto a = collect(fam.variations, rule, opt);
  opt.jobs = 3;
  const auto b = collect(fam.variations, rule, opt);
  REQUIRE(a.size() == b.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].samples == b[i].samples);
    CHECK(a[i].report.to_csv_row().substr(0, 40) == b[i].report.to_csv_row().substr(0, 40));
    total += a[i].samples.size();
    for (const auto& s : a[i].samples) CHECK(s.instance == fam.variations[i].name);
  }
  CHECK(total > 0);
}

TEST_CASE("parallel_for rethrows the first failing index") {
  for (int jobs : {1, 4}) {
    try {
      parallel_for(20, jobs, [](std::size_t i) {
        if (i == 7 || i == 13) throw std::runtime_error("boom " + std::to_string(i));
      });
      FAIL("no exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 7");
    }
  }
}

TEST_CASE("train_store group models") {
  Rng rng(3);
  std::vector<TrainingSample> samples;
  // Variable (0,0) has 9 samples, the others 12.
  for (int g = 0; g < 2; ++g)
    for (int t = 0; t < 3; ++t) {
      const int n = g == 0 && t == 0 ? 9 : 12;
      for (int k = 0; k < n; ++k) samples.push_back(synthetic(var_name(g, t), rng, rng.uniform(0, 4)));
    }

  SUBCASE("ET keeps a single general model") {
    const auto r = train_store(samples, GroupingScheme::et, 1);
    CHECK(r.store.model_count() == 1);
    CHECK(r.fits.size() == 1);
  }
  SUBCASE("PV skips the variable below the sample minimum") {
    const auto r = train_store(samples, GroupingScheme::pv, 1);
    CHECK(r.store.model_count() == 1 + 5);
    std::set<std::string> trained;
    for (const auto& f : r.fits)
      if (f.trained && f.group != "general") trained.insert(f.group);
    CHECK(trained.size() == 5);
    bool saw_small = false;
    for (const auto& f : r.fits)
      if (f.samples == 9) {
        saw_small = true;
        CHECK_FALSE(f.trained);
      }
    CHECK(saw_small);
  }
  SUBCASE("PTI pools generators per hour") {
    const auto r = train_store(samples, GroupingScheme::pti, 1);
    CHECK(r.store.model_count() == 1 + 3);
  }
  SUBCASE("fits never exceed the target variance") {
    for (auto s : {GroupingScheme::et, GroupingScheme::pna, GroupingScheme::pti, GroupingScheme::pge,
                   GroupingScheme::pv}) {
      const auto r = train_store(samples, s, 9);
      for (const auto& f : r.fits)
        if (f.trained) CHECK(f.train_mse <= f.target_variance + 1e-12);
    }
  }
  SUBCASE("constant targets are reproduced exactly") {
    auto c = samples;
    for (auto& s : c) s.label = 2.75;
    const auto r = train_store(c, GroupingScheme::pv, 1);
    for (const auto& f : r.fits)
      if (f.trained) CHECK(f.train_mse == 0.0);
    for (const auto& s : c) CHECK(r.store.general().predict(s.features) == 2.75);
  }
  SUBCASE("same seed, same store") {
    const auto a = train_store(samples, GroupingScheme::pge, 42);
    const auto b = train_store(samples, GroupingScheme::pge, 42);
    CHECK(a.store.general().to_json() == b.store.general().to_json());
    REQUIRE(a.store.groups().size() == b.store.groups().size());
    for (auto i = a.store.groups().begin(), j = b.store.groups().begin(); i != a.store.groups().end(); ++i, ++j)
      CHECK(i->second.to_json() == j->second.to_json());
  }
  CHECK_THROWS_AS(train_store({}, GroupingScheme::et, 1), DataError);
}

TEST_CASE("cross-validation") {
  Rng rng(8);
  std::vector<TrainingSample> samples;
  // Labels depend only on the variable, so per-variable models win.
  for (int g = 0; g < 4; ++g)
    for (int t = 0; t < 4; ++t) {
      const double level = static_cast<double>(fnv1a64(var_name(g, t)) % 1000) / 100.0;
      for (int k = 0; k < 30; ++k) samples.push_back(synthetic(var_name(g, t), rng, level));
    }
  const std::vector<GroupingScheme> all{GroupingScheme::et, GroupingScheme::pna, GroupingScheme::pti,
                                        GroupingScheme::pge, GroupingScheme::pv};
  const auto reps = crossval_report(samples, all, 5, 17);
  REQUIRE(reps.size() == 5);
  CHECK(reps[4].pooled_mse < reps[0].pooled_mse);
  CHECK(reps[0].fallback_predictions == 0);

  for (const auto& r : reps) {
    double sse = 0;
    long fallbacks = 0;
    for (const auto& p : r.points) {
      sse += (p.predicted - p.actual) * (p.predicted - p.actual);
      fallbacks += p.fallback;
      CHECK(p.actual == samples[p.sample].label);
    }
    CHECK(r.pooled_mse == doctest::Approx(sse / samples.size()));
    CHECK(r.fallback_predictions == fallbacks);
    long n = 0;
    for (const auto& g : r.groups) n += g.samples;
    CHECK(n == static_cast<long>(samples.size()));
  }

  SUBCASE("constant labels have zero error") {
    auto c = samples;
    for (auto& s : c) s.label = -1.5;
    for (const auto& r : crossval_report(c, all, 5, 17)) CHECK(r.pooled_mse == 0.0);
  }
  SUBCASE("same seed, same report") {
    const auto again = crossval_report(samples, all, 5, 17, 3);
    CHECK(cv_summary_csv(again) == cv_summary_csv(reps));
    CHECK(cv_scatter_csv(again, samples) == cv_scatter_csv(reps, samples));
  }
  SUBCASE("fewer samples than folds") {
    std::vector<TrainingSample> few(samples.begin(), samples.begin() + 3);
    CHECK_THROWS_AS(crossval_report(few, all, 5, 1), ForestError);
  }
}

TEST_CASE("evaluation table aggregates") {
  const std::vector<MILPInstance> inst{knapsack({5, 4, 3}, {4, 3, 2}, 6), knapsack({6, 5, 4, 3}, {5, 4, 3, 2}, 8)};
  std::vector<RuleUnderTest> rules(2);
  rules[0].spec = parse_rule("mib");
  rules[1].spec = parse_rule("rb:inf:inf");
  const auto t = evaluate(inst, rules, {}, {}, 1);
  REQUIRE(t.cells.size() == 4);
  for (std::size_t r = 0; r < 2; ++r) {
    double nodes = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(t.at(i, r).report.relative_gap_percent == 0.0);
      nodes += t.at(i, r).report.nodes_processed;
    }
    CHECK(t.mean_gap(r) == 0.0);
    CHECK(t.mean_nodes(r) == doctest::Approx(nodes / 2));
  }
  CHECK(t.best_ml_rule() == -1);
  CHECK(t.to_text().find("mean") != std::string::npos);
  CHECK(t.to_csv().find("rb:inf:inf") != std::string::npos);

  // Node limit 1 leaves a gap on the harder knapsack.
  SolveLimits one;
  one.node_limit = 1;
  const auto u = evaluate(inst, rules, one, {}, 2);
  for (std::size_t r = 0; r < 2; ++r) {
    const double expect = (u.at(0, r).report.relative_gap_percent + u.at(1, r).report.relative_gap_percent) / 2;
    if (std::isfinite(expect))
      CHECK(u.mean_gap(r) == doctest::Approx(expect));
    else
      CHECK(std::isinf(u.mean_gap(r)));
  }
}
