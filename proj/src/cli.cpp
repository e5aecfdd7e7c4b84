#include "bnblab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bnblab/format.hpp"
#include "bnblab/pipeline.hpp"
#include "bnblab/rng.hpp"
#include "bnblab/scuc.hpp"
#include "json.hpp"

namespace bnblab::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kModelFormat = "bnblab-forest-1";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 1;
  int jobs = 1;
  long node_limit = 1000;
  std::string time_limit = "inf";
  double gap_limit = -1.0;
  std::string out;

  SolveLimits limits() const {
    SolveLimits l;
    l.node_limit = node_limit;
    l.gap_limit_percent = gap_limit;
    if (time_limit == "inf" || time_limit == "none") {
      l.time_limit_s = std::numeric_limits<double>::infinity();
    } else {
      try {
        std::size_t used = 0;
        l.time_limit_s = std::stod(time_limit, &used);
        if (used != time_limit.size() || !(l.time_limit_s > 0)) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw UsageError("--time-limit expects seconds > 0 or \"inf\", got \"" + time_limit + "\"");
      }
    }
    return l;
  }

  json echo() const {
    return {{"seed", seed},
            {"jobs", jobs},
            {"node_limit", node_limit},
            {"time_limit", time_limit},
            {"gap_limit", gap_limit},
            {"out", out}};
  }
};

void add_common(CLI::App* cmd, Common& c, long default_node_limit, double default_gap) {
  c.node_limit = default_node_limit;
  c.gap_limit = default_gap;
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--node-limit", c.node_limit, "Node limit per solve (negative: none)")
      ->capture_default_str();
  cmd->add_option("--time-limit", c.time_limit, "Seconds per solve, or inf")->capture_default_str();
  cmd->add_option("--gap-limit", c.gap_limit, "Relative gap limit in percent (negative: none)")
      ->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory")->required();
}

/// Collects the run manifest as the command proceeds.
struct Manifest {
  json doc;
  std::vector<std::string> artifacts;

  Manifest(const std::string& command, const std::vector<std::string>& args) {
    doc["command"] = command;
    doc["argv"] = args;
    doc["cwd"] = fs::current_path().string();
    doc["started_at"] = utc_now();
    doc["versions"] = {{"tool", kToolVersion},
                       {"feature_layout", std::string(kFeatureLayoutVersion)},
                       {"model_format", kModelFormat}};
  }

  void write(const fs::path& dir) {
    doc["artifacts"] = artifacts;
    doc["finished_at"] = utc_now();
    write_file(dir / "manifest.json", doc.dump(2) + "\n");
  }
};

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + out);
  return dir;
}

json config_to_json(const UCConfig& c) {
  return {{"generators", c.generators},
          {"hours", c.hours},
          {"startup_categories", c.startup_categories},
          {"seed", c.seed},
          {"variations", c.variations},
          {"train_fraction", c.train_fraction},
          {"peak_trough_ratio", c.peak_trough_ratio},
          {"peak_fraction", c.peak_fraction},
          {"demand_noise", c.demand_noise},
          {"peak_hour", c.peak_hour},
          {"pmax", {c.pmax_min, c.pmax_max}},
          {"pmin_fraction", {c.pmin_fraction_min, c.pmin_fraction_max}},
          {"marginal_cost", {c.marginal_cost_min, c.marginal_cost_max}},
          {"no_load_cost", {c.no_load_cost_min, c.no_load_cost_max}},
          {"startup_cost", {c.startup_cost_min, c.startup_cost_max}},
          {"startup_category_step", c.startup_category_step},
          {"min_up", {c.min_up_min, c.min_up_max}},
          {"min_down", {c.min_down_min, c.min_down_max}},
          {"startup_lag_hours", c.startup_lag_hours},
          {"initial_on_fraction", c.initial_on_fraction},
          {"demand_jitter", c.demand_jitter},
          {"cost_jitter", c.cost_jitter},
          {"capacity_jitter", c.capacity_jitter}};
}

// Instances named on the command line or drawn from a family directory split.
struct InstanceSource {
  std::string family;
  std::string split = "train";
  std::vector<std::string> files;

  void add(CLI::App* cmd, const std::string& default_split) {
    split = default_split;
    cmd->add_option("--family", family, "Family directory written by generate");
    cmd->add_option("--split", split, "Family split: train, test or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"train", "test", "all"}));
    cmd->add_option("--instance", files, "Instance JSON file (repeatable)");
  }

  std::vector<fs::path> paths() const {
    if (family.empty() == files.empty())
      throw UsageError("give either --family or --instance");
    std::vector<fs::path> out;
    if (!files.empty()) {
      for (const auto& f : files) out.emplace_back(f);
      return out;
    }
    const fs::path dir(family);
    const json m = read_json(dir / "manifest.json");
    if (!m.contains("family"))
      throw DataError(family + " is not a family directory (manifest has no family section)");
    const json& fam = m["family"];
    const auto& names = split == "all" ? fam.at("files") : fam.at("split").at(split);
    for (const auto& n : names) out.push_back(dir / n.get<std::string>());
    if (out.empty()) throw DataError("family split \"" + split + "\" is empty");
    return out;
  }

  std::vector<MILPInstance> load() const {
    std::vector<MILPInstance> out;
    for (const auto& p : paths()) out.push_back(load_instance(p));
    return out;
  }

  json echo() const { return {{"family", family}, {"split", split}, {"instances", files}}; }
};

// "none", "oracle" or a hints CSV (instance,optimal_value,...).
std::vector<std::optional<double>> resolve_hints(const std::string& mode,
                                                 const std::vector<MILPInstance>& instances,
                                                 int jobs, const fs::path& out_dir,
                                                 Manifest& manifest, std::ostream& log) {
  std::vector<std::optional<double>> hints(instances.size());
  if (mode == "none") return {};
  if (mode == "oracle") {
    std::vector<OptimalValue> values(instances.size());
    log << "computing optimal values for " << instances.size() << " instance(s)\n";
    parallel_for(instances.size(), jobs,
                 [&](std::size_t i) { values[i] = optimal_value_oracle(instances[i]); });
    std::string csv = "instance,optimal_value,proven,method\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
      hints[i] = values[i].value;
      csv += csv_field(instances[i].name) + "," + format_double(values[i].value) + "," +
             (values[i].proven ? "1" : "0") + "," + values[i].method + "\n";
    }
    write_file(out_dir / "hints.csv", csv);
    manifest.artifacts.push_back("hints.csv");
    return hints;
  }
  std::ifstream in(mode, std::ios::binary);
  if (!in) throw DataError("cannot open hints file " + mode + " (expected none, oracle or a CSV path)");
  std::map<std::string, double> by_name;
  std::string line;
  std::getline(in, line);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 2) throw DataError(mode + ":" + std::to_string(lineno) + ": expected instance,value");
    try {
      by_name[f[0]] = std::stod(f[1]);
    } catch (const std::exception&) {
      throw DataError(mode + ":" + std::to_string(lineno) + ": bad value \"" + f[1] + "\"");
    }
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = by_name.find(instances[i].name);
    if (it == by_name.end()) throw DataError(mode + " has no hint for instance " + instances[i].name);
    hints[i] = it->second;
  }
  return hints;
}

std::vector<GroupingScheme> parse_schemes(const std::string& text) {
  if (text == "all")
    return {GroupingScheme::et, GroupingScheme::pna, GroupingScheme::pti, GroupingScheme::pge,
            GroupingScheme::pv};
  std::vector<GroupingScheme> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto s = parse_scheme(part);
    if (!s) throw UsageError("unknown grouping scheme \"" + part + "\" (expected et, pna, pti, pge, pv or all)");
    if (std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
  }
  if (out.empty()) throw UsageError("no grouping scheme given");
  return out;
}

std::vector<TrainingSample> load_samples(const std::vector<std::string>& files, bool exclude_infeasible) {
  std::vector<TrainingSample> all;
  for (const auto& f : files) {
    auto part = read_training_csv(f);
    for (auto& s : part)
      if (!exclude_infeasible || !s.infeasible) all.push_back(std::move(s));
  }
  if (all.empty()) throw DataError("no training samples in the given data files");
  return all;
}

std::shared_ptr<const ModelStore> load_store_for(const RuleSpec& spec, const std::string& models) {
  const std::string scheme(to_string(spec.scheme));
  const fs::path dir = fs::path(models) / scheme;
  if (models.empty() || !fs::exists(dir / "store.json"))
    throw DataError("rule " + spec.text() + " needs a trained " + scheme + " model store" +
                    (models.empty() ? std::string(" (pass --models DIR)") : " under " + dir.string()) +
                    "; create one with: bnblab train --data <samples.csv> --scheme " + scheme +
                    " --out " + (models.empty() ? std::string("<DIR>") : models));
  return std::make_shared<const ModelStore>(ModelStore::load(dir));
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenerateArgs {
  Common common;
  UCConfig config;
};

int do_generate(const GenerateArgs& a, Manifest& m, std::ostream& out) {
  UCConfig config = a.config;
  config.seed = a.common.seed;
  const UCFamily fam = generate_family(config);
  const fs::path dir = prepare_out(a.common.out);

  json files = json::array(), train = json::array(), test = json::array();
  for (std::size_t i = 0; i < fam.variations.size(); ++i) {
    const auto& inst = fam.variations[i];
    const std::string file = inst.name + ".json";
    save_instance(inst, dir / file);
    files.push_back(file);
    (static_cast<int>(i) < fam.num_train() ? train : test).push_back(file);
    m.artifacts.push_back(file);
  }
  m.doc["config"] = config_to_json(config);
  m.doc["config"]["common"] = a.common.echo();
  m.doc["seeds"] = {{"master", config.seed}, {"variations", fam.variation_seeds}};
  m.doc["family"] = {{"config", config_to_json(config)},
                     {"variation_seeds", fam.variation_seeds},
                     {"files", files},
                     {"split", {{"train", train}, {"test", test}}}};

  const auto& inst = fam.variations.front();
  out << "generated " << fam.variations.size() << " instances (" << fam.num_train() << " train, "
      << fam.variations.size() - fam.num_train() << " test) in " << dir.string() << "\n"
      << "  generators " << config.generators << ", hours " << config.hours
      << ", startup categories " << config.startup_categories << "\n"
      << "  variables " << inst.num_variables() << ", rows " << inst.num_constraints()
      << ", binaries " << inst.num_binaries() << ", continuous " << inst.num_continuous() << "\n";
  m.write(dir);
  return kOk;
}

struct CollectArgs {
  Common common;
  InstanceSource source;
  std::string rule = "rb:100:inf";
  std::string hints = "none";
};

int do_collect(const CollectArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  const RuleSpec spec = parse_rule(a.rule);
  if (spec.kind != RuleSpec::Kind::rb || spec.lambda < 1)
    throw UsageError("collect needs a probing rule rb:LAMBDA:ETA with LAMBDA >= 1, got " + a.rule);
  const auto instances = a.source.load();
  const fs::path dir = prepare_out(a.common.out);
  const auto hints = resolve_hints(a.hints, instances, a.common.jobs, dir, m, err);

  CollectOptions opt;
  opt.limits = a.common.limits();
  opt.jobs = a.common.jobs;
  const ReliabilityRule rule(spec.lambda, spec.eta);
  const auto runs = collect(instances, rule, opt, hints);

  std::vector<TrainingSample> samples;
  std::string runs_csv = SolveReport::csv_header() + ",samples\n";
  int failures = 0;
  for (const auto& r : runs) {
    samples.insert(samples.end(), r.samples.begin(), r.samples.end());
    runs_csv += r.report.to_csv_row() + "," + std::to_string(r.samples.size()) + "\n";
    if (!r.error.empty()) {
      ++failures;
      err << "warning: " << r.report.instance << " aborted: " << r.error << "\n";
    }
  }
  write_training_csv(dir / "samples.csv", samples);
  write_file(dir / "runs.csv", runs_csv);
  m.artifacts = {"samples.csv", "runs.csv"};
  if (a.hints == "oracle") m.artifacts.push_back("hints.csv");
  m.doc["config"] = {{"common", a.common.echo()},
                     {"source", a.source.echo()},
                     {"rule", spec.text()},
                     {"hints", a.hints}};
  m.doc["seeds"] = {{"master", a.common.seed}};
  m.doc["samples"] = samples.size();
  m.write(dir);
  out << "collected " << samples.size() << " samples from " << runs.size() << " instance(s)";
  if (failures) out << ", " << failures << " aborted";
  out << " -> " << (dir / "samples.csv").string() << "\n";
  return kOk;
}

struct TrainArgs {
  Common common;
  std::vector<std::string> data;
  std::string schemes = "all";
  bool exclude_infeasible = false;
};

int do_train(const TrainArgs& a, Manifest& m, std::ostream& out) {
  const auto schemes = parse_schemes(a.schemes);
  const auto samples = load_samples(a.data, a.exclude_infeasible);
  const fs::path dir = prepare_out(a.common.out);

  std::string fits = "scheme,group,samples,trained,train_mse,target_variance\n";
  json counts = json::object();
  for (GroupingScheme scheme : schemes) {
    const std::string name(to_string(scheme));
    const auto result = train_store(samples, scheme, derive_seed(a.common.seed, "train", static_cast<int>(scheme)));
    const fs::path sdir = dir / name;
    if (fs::exists(sdir)) {
      if (!fs::exists(sdir / "store.json"))
        throw DataError(sdir.string() + " exists and is not a model store; refusing to overwrite");
      fs::remove_all(sdir);
    }
    result.store.save(sdir);
    for (const auto& f : result.fits)
      fits += name + "," + csv_field(f.group) + "," + std::to_string(f.samples) + "," +
              (f.trained ? "1" : "0") + "," + format_double(f.train_mse) + "," +
              format_double(f.target_variance) + "\n";
    json entry;
    entry["models"] = result.store.model_count();
    entry["groups_seen"] = result.fits.size() - 1;
    counts[name] = entry;
    m.artifacts.push_back(name + "/");
    out << "  " << name << ": " << result.store.model_count() << " model(s) from "
        << samples.size() << " samples\n";
  }
  write_file(dir / "fits.csv", fits);
  m.artifacts.push_back("fits.csv");
  m.doc["config"] = {{"common", a.common.echo()},
                     {"data", a.data},
                     {"schemes", a.schemes},
                     {"exclude_infeasible", a.exclude_infeasible},
                     {"min_group_samples", kMinGroupSamples}};
  m.doc["seeds"] = {{"master", a.common.seed}};
  m.doc["training"] = {{"samples", samples.size()}, {"stores", counts}};
  m.write(dir);
  out << "trained stores in " << dir.string() << "\n";
  return kOk;
}

struct SolveArgs {
  Common common;
  std::string instance;
  std::string rule = "rb:100:inf";
  std::string models;
  std::string hint = "none";
};

int do_solve(const SolveArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  const RuleSpec spec = parse_rule(a.rule);
  std::shared_ptr<const ModelStore> store;
  if (spec.kind == RuleSpec::Kind::ml) store = load_store_for(spec, a.models);
  const MILPInstance inst = load_instance(a.instance);
  const fs::path dir = prepare_out(a.common.out);

  SolveOptions so;
  so.limits = a.common.limits();
  if (a.hint == "oracle") {
    std::vector<MILPInstance> one{inst};
    so.primal_hint = resolve_hints("oracle", one, 1, dir, m, err)[0];
  } else if (a.hint != "none") {
    try {
      std::size_t used = 0;
      so.primal_hint = std::stod(a.hint, &used);
      if (used != a.hint.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError("--hint expects a number, \"oracle\" or \"none\", got \"" + a.hint + "\"");
    }
  }
  const auto rule = make_rule(spec, store);
  const SolveReport rep = solve(inst, *rule, so);
  write_file(dir / "report.json", rep.to_json());
  write_file(dir / "report.csv", SolveReport::csv_header() + "\n" + rep.to_csv_row() + "\n");
  m.artifacts.insert(m.artifacts.end(), {"report.json", "report.csv"});
  m.doc["config"] = {{"common", a.common.echo()},
                     {"instance", a.instance},
                     {"rule", spec.text()},
                     {"models", a.models},
                     {"hint", a.hint}};
  m.doc["seeds"] = {{"master", a.common.seed}};
  m.write(dir);

  out << inst.name << " " << spec.text() << ": " << to_string(rep.termination) << " after "
      << rep.nodes_processed << " nodes, primal " << format_double(rep.primal_bound) << ", dual "
      << format_double(rep.best_dual_bound) << ", gap "
      << format_fixed(rep.relative_gap_percent, 4) << "%\n";
  if (rep.termination == Termination::error) {
    err << "numerical failure: " << rep.error << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

struct EvaluateArgs {
  Common common;
  InstanceSource source;
  std::string rules = "mib,rb:100:inf,ml:et,ml:pv";
  std::string models;
  std::string hints = "oracle";
};

int do_evaluate(const EvaluateArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  std::vector<RuleUnderTest> rules;
  {
    std::stringstream ss(a.rules);
    std::string part;
    while (std::getline(ss, part, ',')) {
      RuleUnderTest r;
      r.spec = parse_rule(part);
      if (r.spec.kind == RuleSpec::Kind::ml) r.store = load_store_for(r.spec, a.models);
      rules.push_back(std::move(r));
    }
  }
  if (rules.empty()) throw UsageError("no rules given");
  const auto instances = a.source.load();
  const fs::path dir = prepare_out(a.common.out);
  const auto hints = resolve_hints(a.hints, instances, a.common.jobs, dir, m, err);

  const EvalTable table = evaluate(instances, rules, a.common.limits(), hints, a.common.jobs);
  std::string reports_csv = SolveReport::csv_header() + "\n";
  std::string reports_jsonl;
  int errors = 0;
  for (const auto& c : table.cells) {
    reports_csv += c.report.to_csv_row() + "\n";
    json j = json::parse(c.report.to_json());
    reports_jsonl += j.dump() + "\n";
    if (!c.error.empty()) {
      ++errors;
      err << "error: " << c.instance << " / " << c.rule << ": " << c.error << "\n";
    }
  }
  write_file(dir / "results.csv", table.to_csv());
  write_file(dir / "table.txt", table.to_text());
  write_file(dir / "reports.csv", reports_csv);
  write_file(dir / "reports.jsonl", reports_jsonl);
  m.artifacts.insert(m.artifacts.end(), {"results.csv", "table.txt", "reports.csv", "reports.jsonl"});
  m.doc["config"] = {{"common", a.common.echo()},
                     {"source", a.source.echo()},
                     {"rules", a.rules},
                     {"models", a.models},
                     {"hints", a.hints}};
  m.doc["seeds"] = {{"master", a.common.seed}};
  m.write(dir);
  out << table.to_text();
  return errors ? kNumericalFailure : kOk;
}

struct CrossvalArgs {
  Common common;
  std::vector<std::string> data;
  std::string schemes = "all";
  int folds = 5;
  bool scatter = false;
  bool exclude_infeasible = false;
};

int do_crossval(const CrossvalArgs& a, Manifest& m, std::ostream& out) {
  const auto schemes = parse_schemes(a.schemes);
  const auto samples = load_samples(a.data, a.exclude_infeasible);
  const fs::path dir = prepare_out(a.common.out);
  const auto reports = crossval_report(samples, schemes, a.folds, derive_seed(a.common.seed, "crossval"),
                                       a.common.jobs);
  write_file(dir / "cv_summary.csv", cv_summary_csv(reports));
  write_file(dir / "cv_groups.csv", cv_groups_csv(reports));
  write_file(dir / "cv.txt", cv_text(reports));
  m.artifacts.insert(m.artifacts.end(), {"cv_summary.csv", "cv_groups.csv", "cv.txt"});
  if (a.scatter) {
    write_file(dir / "scatter.csv", cv_scatter_csv(reports, samples));
    m.artifacts.push_back("scatter.csv");
  }
  m.doc["config"] = {{"common", a.common.echo()},
                     {"data", a.data},
                     {"schemes", a.schemes},
                     {"folds", a.folds},
                     {"scatter", a.scatter},
                     {"exclude_infeasible", a.exclude_infeasible}};
  m.doc["seeds"] = {{"master", a.common.seed}};
  m.write(dir);
  out << cv_text(reports);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bnblab: branch-and-bound lab for learned variable selection"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a unit-commitment instance family");
  add_common(g, gen.common, 1000, -1.0);
  g->add_option("--generators", gen.config.generators)->capture_default_str();
  g->add_option("--hours", gen.config.hours)->capture_default_str();
  g->add_option("--categories", gen.config.startup_categories, "Startup categories")->capture_default_str();
  g->add_option("--variations", gen.config.variations)->capture_default_str();
  g->add_option("--train-fraction", gen.config.train_fraction)->capture_default_str();
  g->add_option("--peak-fraction", gen.config.peak_fraction, "Peak demand over fleet capacity")
      ->capture_default_str();

  CollectArgs col;
  auto* c = app.add_subcommand("collect", "Record strong-branching samples");
  add_common(c, col.common, 1000, 0.01);
  col.source.add(c, "train");
  c->add_option("--rule", col.rule, "Probing rule")->capture_default_str();
  c->add_option("--hints", col.hints, "none, oracle or a hints CSV")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit model stores from samples");
  add_common(t, tr.common, 1000, -1.0);
  t->add_option("--data", tr.data, "Training CSV (repeatable)")->required();
  t->add_option("--scheme", tr.schemes, "et, pna, pti, pge, pv, a comma list, or all")->capture_default_str();
  t->add_flag("--exclude-infeasible", tr.exclude_infeasible, "Drop samples with an infeasible probe child");

  SolveArgs so;
  auto* s = app.add_subcommand("solve", "Solve one instance");
  add_common(s, so.common, -1, -1.0);
  s->add_option("--instance", so.instance, "Instance JSON file")->required();
  s->add_option("--rule", so.rule)->capture_default_str();
  s->add_option("--models", so.models, "Directory written by train");
  s->add_option("--hint", so.hint, "Primal hint: a value, oracle or none")->capture_default_str();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compare rules on test instances");
  add_common(e, ev.common, 1000, -1.0);
  ev.source.add(e, "test");
  e->add_option("--rules", ev.rules, "Comma-separated rules")->capture_default_str();
  e->add_option("--models", ev.models, "Directory written by train");
  e->add_option("--hints", ev.hints, "none, oracle or a hints CSV")->capture_default_str();

  CrossvalArgs cv;
  auto* x = app.add_subcommand("crossval", "Cross-validated MSE per grouping scheme");
  add_common(x, cv.common, 1000, -1.0);
  x->add_option("--data", cv.data, "Training CSV (repeatable)")->required();
  x->add_option("--schemes", cv.schemes)->capture_default_str();
  x->add_option("--folds", cv.folds)->capture_default_str()->check(CLI::Range(2, 1000));
  x->add_flag("--scatter", cv.scatter, "Write actual vs predicted rows");
  x->add_flag("--exclude-infeasible", cv.exclude_infeasible);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  Manifest manifest(name, args);
  try {
    if (name == "generate") return do_generate(gen, manifest, out);
    if (name == "collect") return do_collect(col, manifest, out, err);
    if (name == "train") return do_train(tr, manifest, out);
    if (name == "solve") return do_solve(so, manifest, out, err);
    if (name == "evaluate") return do_evaluate(ev, manifest, out, err);
    if (name == "crossval") return do_crossval(cv, manifest, out);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const RuleSyntaxError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& ex) {
    // ConfigError, ModelError, DataError, ForestError, I/O and JSON errors.
    err << "error: " << ex.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace bnblab::cli
