#include "bnblab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bnblab/format.hpp"
#include "bnblab/rng.hpp"

namespace bnblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::string_view kPreambleTag = "# bnblab training samples; feature_layout=";

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

double parse_number(const std::string& s, const std::string& where) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError(where + ": bad number \"" + s + "\"");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError(where + ": bad integer \"" + s + "\"");
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Forest fit_indices(std::span<const TrainingSample> samples, const std::vector<std::size_t>& idx,
                   const Hyperparams& hp, std::uint64_t seed) {
  std::vector<FeatureVector> x;
  std::vector<double> y;
  x.reserve(idx.size());
  y.reserve(idx.size());
  for (std::size_t i : idx) {
    x.push_back(samples[i].features);
    y.push_back(samples[i].label);
  }
  return Forest::fit(x, y, hp, seed);
}

std::uint64_t group_seed(std::uint64_t seed, const std::string& id) {
  return derive_seed(seed, "group:" + id);
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}
std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

double sample_label(double delta_down, double delta_up, double eps) {
  return std::log(score_product(delta_down, delta_up, eps));
}

// ---------------------------------------------------------------------------
// CSV

std::string training_csv_preamble() { return std::string(kPreambleTag) + std::string(kFeatureLayoutVersion); }

std::string training_csv_header() {
  std::string h = "instance,node_id,var_name,base,generator,time,startup_category";
  for (int k = 1; k <= kNumFeatures; ++k) h += ",f" + std::to_string(k);
  return h + ",delta_down,delta_up,infeasible_flag,label";
}

std::string to_csv_row(const TrainingSample& s) {
  std::string row = csv_field(s.instance) + "," + std::to_string(s.node_id) + "," +
                    csv_field(s.key.raw) + "," + csv_field(s.key.base) + "," +
                    opt_int(s.key.generator) + "," + opt_int(s.key.time) + "," +
                    opt_int(s.key.startup_category);
  for (double f : s.features) row += "," + format_double(f);
  row += "," + format_double(s.delta_down) + "," + format_double(s.delta_up) + "," +
         (s.infeasible ? "1" : "0") + "," + format_double(s.label);
  return row;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

void write_training_csv(const std::filesystem::path& path, std::span<const TrainingSample> samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << training_csv_preamble() << '\n' << training_csv_header() << '\n';
  for (const auto& s : samples) out << to_csv_row(s) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<TrainingSample> read_training_csv(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  const std::string name = path.string();
  if (!std::getline(in, line) || line.rfind(kPreambleTag, 0) != 0)
    throw DataError(name + ": not a training CSV (missing layout line)");
  const std::string layout = line.substr(kPreambleTag.size());
  if (layout != kFeatureLayoutVersion)
    throw DataError(name + ": feature layout " + layout + " does not match this build (" +
                    std::string(kFeatureLayoutVersion) + "); re-run collect");
  if (!std::getline(in, line) || line != training_csv_header())
    throw DataError(name + ": unexpected column header");

  constexpr std::size_t kColumns = 7 + kNumFeatures + 4;
  std::vector<TrainingSample> samples;
  long lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != kColumns)
      throw DataError(where + ": expected " + std::to_string(kColumns) + " fields, got " +
                      std::to_string(f.size()));
    TrainingSample s;
    s.instance = f[0];
    s.node_id = parse_int(f[1], where);
    s.key = parse_variable_key(f[2]);
    if (s.key.base != f[3] || opt_int(s.key.generator) != f[4] || opt_int(s.key.time) != f[5] ||
        opt_int(s.key.startup_category) != f[6])
      throw DataError(where + ": key columns disagree with var_name " + f[2]);
    for (int k = 0; k < kNumFeatures; ++k) s.features[k] = parse_number(f[7 + k], where);
    s.delta_down = parse_number(f[7 + kNumFeatures], where);
    s.delta_up = parse_number(f[8 + kNumFeatures], where);
    const std::string& flag = f[9 + kNumFeatures];
    if (flag != "0" && flag != "1") throw DataError(where + ": infeasible_flag must be 0 or 1");
    s.infeasible = flag == "1";
    s.label = parse_number(f[10 + kNumFeatures], where);
    if (!std::isfinite(s.label)) throw DataError(where + ": non-finite label");
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Parallel helper

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Collection

std::vector<CollectRun> collect(std::span<const MILPInstance> instances, const ReliabilityRule& rule,
                                const CollectOptions& options,
                                std::span<const std::optional<double>> hints) {
  if (rule.lambda() < 1) throw std::invalid_argument("collect: the probing rule needs lambda >= 1");
  if (!hints.empty() && hints.size() != instances.size())
    throw std::invalid_argument("collect: one hint per instance expected");
  std::vector<CollectRun> runs(instances.size());
  parallel_for(instances.size(), options.jobs, [&](std::size_t i) {
    const MILPInstance& inst = instances[i];
    CollectRun& run = runs[i];
    SolveOptions so;
    so.limits = options.limits;
    so.epsilon = options.epsilon;
    if (!hints.empty()) so.primal_hint = hints[i];
    so.on_probe = [&](const ProbeRecord& p) {
      TrainingSample s;
      s.instance = inst.name;
      s.node_id = p.node_id;
      s.key = inst.variables[p.var].key;
      s.features = p.features;
      s.delta_down = p.delta_down;
      s.delta_up = p.delta_up;
      s.infeasible = p.down_infeasible || p.up_infeasible;
      s.label = sample_label(p.delta_down, p.delta_up, options.epsilon);
      run.samples.push_back(std::move(s));
    };
    run.report = solve(inst, rule, so);
    if (run.report.termination == Termination::error) {
      // The instance is abandoned as a whole.
      run.error = run.report.error;
      run.samples.clear();
    }
  });
  return runs;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train_store(std::span<const TrainingSample> samples, GroupingScheme scheme,
                        std::uint64_t seed) {
  if (samples.empty()) throw DataError("train: no training samples");
  TrainResult out;
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto summarize = [&](const std::string& id, const std::vector<std::size_t>& idx, const Forest* f) {
    GroupFit g;
    g.group = id;
    g.samples = static_cast<long>(idx.size());
    g.trained = f != nullptr;
    std::vector<double> y;
    y.reserve(idx.size());
    for (std::size_t i : idx) y.push_back(samples[i].label);
    g.target_variance = variance(y);
    if (f) {
      std::vector<FeatureVector> x;
      x.reserve(idx.size());
      for (std::size_t i : idx) x.push_back(samples[i].features);
      g.train_mse = mean_squared_error(*f, x, y);
    }
    return g;
  };

  Forest general = fit_indices(samples, all, hyperparams_for(GroupingScheme::et),
                               derive_seed(seed, "general"));
  out.fits.push_back(summarize("general", all, &general));
  out.store = ModelStore(scheme, std::move(general));
  if (scheme == GroupingScheme::et) {
    out.store.set_sample_count("et", static_cast<long>(samples.size()));
    return out;
  }

  std::map<GroupKey, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const GroupKey g = group_of(scheme, samples[i].key);
    if (g.is_general()) continue;
    members[g].push_back(i);
  }
  const Hyperparams hp = hyperparams_for(scheme);
  for (const auto& [key, idx] : members) {
    const std::string id = key.id();
    out.store.set_sample_count(id, static_cast<long>(idx.size()));
    if (static_cast<long>(idx.size()) < kMinGroupSamples) {
      out.fits.push_back(summarize(id, idx, nullptr));
      continue;
    }
    Forest f = fit_indices(samples, idx, hp, group_seed(seed, id));
    out.fits.push_back(summarize(id, idx, &f));
    out.store.add_group(key, std::move(f));
  }
  return out;
}

std::size_t group_count(const MILPInstance& instance, GroupingScheme scheme) {
  std::set<std::string> ids;
  for (const auto& v : instance.variables) {
    if (!v.is_binary()) continue;
    const GroupKey g = group_of(scheme, v.key);
    if (g.is_general() && scheme != GroupingScheme::et) continue;
    ids.insert(g.id());
  }
  return ids.size();
}

// ---------------------------------------------------------------------------
// Evaluation

EvalTable evaluate(std::span<const MILPInstance> instances, std::span<const RuleUnderTest> rules,
                   const SolveLimits& limits, std::span<const std::optional<double>> hints,
                   int jobs) {
  if (!hints.empty() && hints.size() != instances.size())
    throw std::invalid_argument("evaluate: one hint per instance expected");
  EvalTable table;
  std::vector<std::unique_ptr<BranchingRule>> made;
  for (const auto& r : rules) {
    table.rules.push_back(r.spec.text());
    made.push_back(make_rule(r.spec, r.store));
  }
  for (const auto& inst : instances) table.instances.push_back(inst.name);
  table.cells.resize(instances.size() * rules.size());

  parallel_for(table.cells.size(), jobs, [&](std::size_t c) {
    const std::size_t i = c / rules.size();
    const std::size_t r = c % rules.size();
    EvalCell& cell = table.cells[c];
    cell.instance = instances[i].name;
    cell.rule = table.rules[r];
    SolveOptions so;
    so.limits = limits;
    if (!hints.empty()) so.primal_hint = hints[i];
    try {
      cell.report = solve(instances[i], *made[r], so);
      if (cell.report.termination == Termination::error) cell.error = cell.report.error;
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.report.instance = cell.instance;
      cell.report.rule = cell.rule;
      cell.report.termination = Termination::error;
    }
  });
  return table;
}

double EvalTable::mean_gap(std::size_t rule) const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& c = at(i, rule);
    if (!c.error.empty()) continue;
    sum += c.report.relative_gap_percent;
    ++n;
  }
  return n ? sum / n : kInf;
}

double EvalTable::mean_nodes(std::size_t rule) const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& c = at(i, rule);
    if (!c.error.empty()) continue;
    sum += static_cast<double>(c.report.nodes_processed);
    ++n;
  }
  return n ? sum / n : 0.0;
}

double EvalTable::fallback_rate(std::size_t rule) const {
  long evals = 0, falls = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    evals += at(i, rule).report.branching.ml_evaluations;
    falls += at(i, rule).report.branching.ml_fallbacks;
  }
  return evals == 0 ? 0.0 : 100.0 * static_cast<double>(falls) / static_cast<double>(evals);
}

int EvalTable::best_ml_rule() const {
  int best = -1;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (rules[r].rfind("ml:", 0) != 0) continue;
    if (best < 0 || mean_gap(r) < mean_gap(best)) best = static_cast<int>(r);
  }
  return best;
}

std::string EvalTable::to_csv() const {
  std::string out =
      "instance,rule,gap_percent,nodes,termination,primal_bound,dual_bound,probes,ml_evaluations,"
      "ml_fallbacks,fallback_rate_percent,error\n";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& c = at(i, r);
      const auto& b = c.report.branching;
      out += csv_field(c.instance) + "," + c.rule + "," + format_double(c.report.relative_gap_percent) +
             "," + std::to_string(c.report.nodes_processed) + "," +
             std::string(to_string(c.report.termination)) + "," +
             format_double(c.report.primal_bound) + "," + format_double(c.report.best_dual_bound) +
             "," + std::to_string(b.probes) + "," + std::to_string(b.ml_evaluations) + "," +
             std::to_string(b.ml_fallbacks) + "," + format_double(b.fallback_rate_percent()) + "," +
             csv_field(c.error) + "\n";
    }
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    out += "mean," + rules[r] + "," + format_double(mean_gap(r)) + "," +
           format_double(mean_nodes(r)) + ",,,,,,," + format_double(fallback_rate(r)) + ",\n";
  }
  return out;
}

std::string EvalTable::to_text() const {
  const int best = best_ml_rule();
  std::vector<std::string> heads;
  for (std::size_t r = 0; r < rules.size(); ++r)
    heads.push_back(rules[r] + (static_cast<int>(r) == best ? "*" : ""));
  std::size_t first = std::string("fallback rate %").size();
  for (const auto& s : instances) first = std::max(first, s.size());
  std::vector<std::size_t> width(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) width[r] = std::max<std::size_t>(heads[r].size(), 9);

  auto line = [&](const std::string& label, const std::vector<std::string>& cells) {
    std::string s = pad_right(label, first);
    for (std::size_t r = 0; r < cells.size(); ++r) s += "  " + pad_left(cells[r], width[r]);
    return s + "\n";
  };

  std::string out = "relative gap (%)\n" + line("instance", heads);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::vector<std::string> cells;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& c = at(i, r);
      cells.push_back(c.error.empty() ? format_fixed(c.report.relative_gap_percent, 4) : "error");
    }
    out += line(instances[i], cells);
  }
  std::vector<std::string> mean, nodes, fb;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    mean.push_back(format_fixed(mean_gap(r), 4));
    nodes.push_back(format_fixed(mean_nodes(r), 1));
    fb.push_back(rules[r].rfind("ml:", 0) == 0 ? format_fixed(fallback_rate(r), 2) : "-");
  }
  out += line("mean", mean) + line("mean nodes", nodes) + line("fallback rate %", fb);
  if (best >= 0) out += "* best ML rule by mean gap\n";
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<CvSchemeReport> crossval_report(std::span<const TrainingSample> samples,
                                            std::span<const GroupingScheme> schemes, int folds,
                                            std::uint64_t seed, int jobs) {
  if (samples.empty()) throw ForestError("cross-validation needs samples");
  if (folds < 2) throw ForestError("cross-validation needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > samples.size())
    throw ForestError("cross-validation: " + std::to_string(folds) + " folds but only " +
                      std::to_string(samples.size()) + " samples");

  const auto fold = fold_assignment(samples.size(), folds, seed);
  std::vector<std::vector<std::size_t>> train(folds), test(folds);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    test[fold[i]].push_back(i);
    for (int k = 0; k < folds; ++k)
      if (k != fold[i]) train[k].push_back(i);
  }

  // The general model of a fold is shared by every scheme.
  std::vector<Forest> general(folds);
  parallel_for(folds, jobs, [&](std::size_t k) {
    general[k] = fit_indices(samples, train[k], hyperparams_for(GroupingScheme::et),
                             derive_seed(derive_seed(seed, "cv-fold", k), "general"));
  });

  std::vector<CvSchemeReport> reports;
  for (GroupingScheme scheme : schemes) {
    CvSchemeReport rep;
    rep.scheme = scheme;
    rep.points.resize(samples.size());
    std::vector<GroupKey> key_of(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) key_of[i] = group_of(scheme, samples[i].key);

    parallel_for(folds, jobs, [&](std::size_t k) {
      std::map<GroupKey, std::vector<std::size_t>> members;
      if (scheme != GroupingScheme::et)
        for (std::size_t i : train[k])
          if (!key_of[i].is_general()) members[key_of[i]].push_back(i);
      std::map<GroupKey, Forest> models;
      const std::uint64_t fold_seed = derive_seed(seed, "cv-fold", k);
      for (const auto& [key, idx] : members)
        if (static_cast<long>(idx.size()) >= kMinGroupSamples)
          models.emplace(key, fit_indices(samples, idx, hyperparams_for(scheme),
                                          group_seed(fold_seed, key.id())));
      for (std::size_t i : test[k]) {
        CvPoint& p = rep.points[i];
        p.sample = i;
        p.fold = static_cast<int>(k);
        p.actual = samples[i].label;
        const auto it = models.find(key_of[i]);
        // ET never falls back: the general model is its only model.
        p.fallback = scheme != GroupingScheme::et && it == models.end();
        p.predicted = (it == models.end() ? general[k] : it->second).predict(samples[i].features);
      }
    });

    std::map<std::string, CvGroupRow> rows;
    long double total = 0;
    for (const CvPoint& p : rep.points) {
      const double e = (p.predicted - p.actual) * (p.predicted - p.actual);
      total += e;
      CvGroupRow& g = rows[key_of[p.sample].id()];
      g.group = key_of[p.sample].id();
      ++g.samples;
      g.mse += e;
      if (p.fallback) {
        ++g.fallback_predictions;
        ++rep.fallback_predictions;
      }
    }
    rep.pooled_mse = static_cast<double>(total / static_cast<long double>(samples.size()));
    for (auto& [id, g] : rows) {
      g.mse /= static_cast<double>(g.samples);
      rep.groups.push_back(g);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::string cv_summary_csv(std::span<const CvSchemeReport> reports) {
  std::string out = "scheme,pooled_mse,samples,fallback_predictions,groups\n";
  for (const auto& r : reports)
    out += std::string(to_string(r.scheme)) + "," + format_double(r.pooled_mse) + "," +
           std::to_string(r.points.size()) + "," + std::to_string(r.fallback_predictions) + "," +
           std::to_string(r.groups.size()) + "\n";
  return out;
}

std::string cv_groups_csv(std::span<const CvSchemeReport> reports) {
  std::string out = "scheme,group,samples,fallback_predictions,mse\n";
  for (const auto& r : reports)
    for (const auto& g : r.groups)
      out += std::string(to_string(r.scheme)) + "," + csv_field(g.group) + "," +
             std::to_string(g.samples) + "," + std::to_string(g.fallback_predictions) + "," +
             format_double(g.mse) + "\n";
  return out;
}

std::string cv_scatter_csv(std::span<const CvSchemeReport> reports,
                           std::span<const TrainingSample> samples) {
  std::string out = "scheme,instance,node_id,var_name,fold,actual,predicted,fallback\n";
  for (const auto& r : reports)
    for (const auto& p : r.points) {
      const auto& s = samples[p.sample];
      out += std::string(to_string(r.scheme)) + "," + csv_field(s.instance) + "," +
             std::to_string(s.node_id) + "," + csv_field(s.key.raw) + "," + std::to_string(p.fold) +
             "," + format_double(p.actual) + "," + format_double(p.predicted) + "," +
             (p.fallback ? "1" : "0") + "\n";
    }
  return out;
}

std::string cv_text(std::span<const CvSchemeReport> reports) {
  std::string out = "scheme  pooled MSE  fallback %  groups\n";
  for (const auto& r : reports) {
    const double fb = r.points.empty() ? 0.0
                                       : 100.0 * static_cast<double>(r.fallback_predictions) /
                                             static_cast<double>(r.points.size());
    out += pad_right(std::string(to_string(r.scheme)), 6) + "  " +
           pad_left(format_fixed(r.pooled_mse, 6), 10) + "  " + pad_left(format_fixed(fb, 2), 10) +
           "  " + pad_left(std::to_string(r.groups.size()), 6) + "\n";
  }
  return out;
}

}  // namespace bnblab
