#include "bnblab/scuc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bnblab/bnb.hpp"
#include "bnblab/rng.hpp"

namespace bnblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string idx(int g, int t) { return "[" + std::to_string(g) + "," + std::to_string(t) + "]"; }

}  // namespace

void UCConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("UC config: " + what); };
  if (generators < 1) fail("generators must be >= 1");
  if (hours < 1) fail("hours must be >= 1");
  if (startup_categories < 1) fail("startup_categories must be >= 1");
  if (variations < 1) fail("variations must be >= 1");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) fail("train_fraction must be in [0, 1]");
  if (!(peak_trough_ratio >= 1.0)) fail("peak_trough_ratio must be >= 1");
  if (!(peak_fraction > 0.0)) fail("peak_fraction must be > 0");
  if (!(demand_noise >= 0.0 && demand_noise < 1.0)) fail("demand_noise must be in [0, 1)");
  if (!(pmax_min > 0.0 && pmax_min <= pmax_max)) fail("need 0 < pmax_min <= pmax_max");
  if (!(pmin_fraction_min >= 0.0 && pmin_fraction_min <= pmin_fraction_max &&
        pmin_fraction_max <= 1.0))
    fail("need 0 <= pmin_fraction_min <= pmin_fraction_max <= 1 (min power <= max power)");
  if (!(marginal_cost_min <= marginal_cost_max)) fail("marginal cost range is empty");
  if (!(no_load_cost_min <= no_load_cost_max)) fail("no-load cost range is empty");
  if (!(startup_cost_min <= startup_cost_max)) fail("startup cost range is empty");
  if (startup_category_step < 0.0) fail("startup_category_step must be >= 0");
  if (min_up_min < 1 || min_up_min > min_up_max) fail("need 1 <= min_up_min <= min_up_max");
  if (min_down_min < 1 || min_down_min > min_down_max)
    fail("need 1 <= min_down_min <= min_down_max");
  if (min_up_max > hours || min_down_max > hours) fail("min up/down times must not exceed hours");
  if (startup_lag_hours < 1) fail("startup_lag_hours must be >= 1");
  if (!(initial_on_fraction >= 0.0 && initial_on_fraction <= 1.0))
    fail("initial_on_fraction must be in [0, 1]");
  for (double j : {demand_jitter, cost_jitter, capacity_jitter})
    if (!(j >= 0.0 && j < 1.0)) fail("jitter values must be in [0, 1)");
}

int UCFamily::num_train() const {
  return static_cast<int>(std::floor(config.train_fraction * config.variations + 1e-9));
}

MILPInstance build_uc_instance(const UCConfig& config, const std::vector<GeneratorSpec>& gens,
                               const std::vector<double>& demand, const std::string& name) {
  const int G = static_cast<int>(gens.size());
  const int T = config.hours;
  const int S = config.startup_categories;
  const int L = config.startup_lag_hours;

  MILPInstance inst;
  inst.name = name;
  // Column layout per (g, t): is_on, switch_on, switch_off, startup[0..S), p.
  const int per = 4 + S;
  auto col = [&](int g, int t, int k) { return (g * T + t) * per + k; };
  const int ON = 0, SON = 1, SOFF = 2, ST = 3, P = 3 + S;

  auto bin = [](std::string n, double obj) {
    return Variable{parse_variable_key(n), VarKind::binary, 0.0, 1.0, obj};
  };
  for (int g = 0; g < G; ++g) {
    const GeneratorSpec& s = gens[g];
    for (int t = 0; t < T; ++t) {
      inst.variables.push_back(bin("is_on" + idx(g, t), s.no_load_cost));
      inst.variables.push_back(bin("switch_on" + idx(g, t), 0.0));
      inst.variables.push_back(bin("switch_off" + idx(g, t), 0.0));
      for (int c = 0; c < S; ++c) {
        const std::string n = "startup[" + std::to_string(g) + "," + std::to_string(t) + "," +
                              std::to_string(c) + "]";
        inst.variables.push_back(bin(n, s.startup_cost * (1.0 + config.startup_category_step * c)));
      }
      // Upper bound covers the largest capacity any variation can draw.
      inst.variables.push_back({parse_variable_key("p" + idx(g, t)), VarKind::continuous, 0.0,
                                (1.0 + config.capacity_jitter) * gens[g].pmax,
                                s.marginal_cost});
    }
  }

  auto row = [&](std::vector<Term> terms, Sense sense, double rhs) {
    inst.constraints.push_back({std::move(terms), sense, rhs});
  };
  for (int g = 0; g < G; ++g) {
    const GeneratorSpec& s = gens[g];
    for (int t = 0; t < T; ++t) {
      row({{col(g, t, P), 1.0}, {col(g, t, ON), -s.pmax}}, Sense::le, 0.0);
      row({{col(g, t, P), 1.0}, {col(g, t, ON), -s.pmin}}, Sense::ge, 0.0);

      std::vector<Term> logic{{col(g, t, ON), 1.0}};
      if (t > 0) logic.push_back({col(g, t - 1, ON), -1.0});
      logic.push_back({col(g, t, SON), -1.0});
      logic.push_back({col(g, t, SOFF), 1.0});
      row(std::move(logic), Sense::eq, t == 0 && s.initially_on ? 1.0 : 0.0);

      std::vector<Term> up;
      for (int u = std::max(0, t - s.min_up + 1); u <= t; ++u) up.push_back({col(g, u, SON), 1.0});
      up.push_back({col(g, t, ON), -1.0});
      row(std::move(up), Sense::le, 0.0);

      std::vector<Term> down;
      for (int u = std::max(0, t - s.min_down + 1); u <= t; ++u)
        down.push_back({col(g, u, SOFF), 1.0});
      down.push_back({col(g, t, ON), 1.0});
      row(std::move(down), Sense::le, 1.0);

      std::vector<Term> select{{col(g, t, SON), 1.0}};
      for (int c = 0; c < S; ++c) select.push_back({col(g, t, ST + c), -1.0});
      row(std::move(select), Sense::eq, 0.0);

      // Category c < S-1 needs a shutdown between 1 + c*L and (c+1)*L hours ago.
      for (int c = 0; c + 1 < S; ++c) {
        std::vector<Term> window{{col(g, t, ST + c), 1.0}};
        for (int u = t - (c + 1) * L; u <= t - 1 - c * L; ++u)
          if (u >= 0) window.push_back({col(g, u, SOFF), -1.0});
        row(std::move(window), Sense::le, 0.0);
      }
    }
  }
  for (int t = 0; t < T; ++t) {
    std::vector<Term> balance;
    for (int g = 0; g < G; ++g) balance.push_back({col(g, t, P), 1.0});
    row(std::move(balance), Sense::ge, demand[t]);
  }
  inst.validate();
  return inst;
}

UCFamily generate_family(const UCConfig& config) {
  config.validate();
  UCFamily fam;
  fam.config = config;
  const int G = config.generators;
  const int T = config.hours;

  Rng rng(derive_seed(config.seed, "uc-base"));
  double capacity = 0.0;
  for (int g = 0; g < G; ++g) {
    GeneratorSpec s;
    s.pmax = rng.uniform(config.pmax_min, config.pmax_max);
    s.pmin = s.pmax * rng.uniform(config.pmin_fraction_min, config.pmin_fraction_max);
    // Large units are cheaper per MWh but cost more to run and to start.
    const double size = config.pmax_max > config.pmax_min
                            ? (s.pmax - config.pmax_min) / (config.pmax_max - config.pmax_min)
                            : 0.5;
    const double mix = std::clamp(0.75 * size + 0.25 * rng.uniform(), 0.0, 1.0);
    s.marginal_cost = config.marginal_cost_max - mix * (config.marginal_cost_max - config.marginal_cost_min);
    s.no_load_cost = config.no_load_cost_min + mix * (config.no_load_cost_max - config.no_load_cost_min);
    s.startup_cost = config.startup_cost_min + mix * (config.startup_cost_max - config.startup_cost_min);
    s.min_up = rng.range(config.min_up_min, config.min_up_max);
    s.min_down = rng.range(config.min_down_min, config.min_down_max);
    s.initially_on = rng.uniform() < config.initial_on_fraction;
    capacity += s.pmax;
    fam.generators.push_back(s);
  }

  const double peak = config.peak_fraction * capacity;
  const double trough = peak / config.peak_trough_ratio;
  fam.base_demand.resize(T);
  for (int t = 0; t < T; ++t) {
    const double phase = 2.0 * std::numbers::pi * (t - config.peak_hour) / 24.0;
    const double shape = 0.5 * (1.0 + std::cos(phase));
    const double noise = 1.0 + config.demand_noise * (2.0 * rng.uniform() - 1.0);
    fam.base_demand[t] = (trough + (peak - trough) * shape) * noise;
  }

  const std::string family = "uc-g" + std::to_string(G) + "-t" + std::to_string(T) + "-s" +
                             std::to_string(config.startup_categories) + "-seed" +
                             std::to_string(config.seed);

  auto check_capacity = [&](const std::vector<GeneratorSpec>& gens,
                            const std::vector<double>& demand, const std::string& what) {
    double cap = 0.0;
    for (const auto& s : gens) cap += s.pmax;
    const double top = *std::max_element(demand.begin(), demand.end());
    if (top > cap)
      throw ConfigError(what + ": peak demand " + std::to_string(top) + " exceeds capacity " +
                        std::to_string(cap));
  };
  check_capacity(fam.generators, fam.base_demand, family);
  fam.base = build_uc_instance(config, fam.generators, fam.base_demand, family + "-base");

  for (int v = 0; v < config.variations; ++v) {
    const std::uint64_t vseed = derive_seed(config.seed, "uc-variation", static_cast<std::uint64_t>(v));
    fam.variation_seeds.push_back(vseed);
    Rng vr(vseed);
    std::vector<double> demand = fam.base_demand;
    for (double& d : demand) d *= vr.uniform(1.0 - config.demand_jitter, 1.0 + config.demand_jitter);
    std::vector<GeneratorSpec> gens = fam.generators;
    for (auto& s : gens) {
      const double cu = vr.uniform(1.0 - config.cost_jitter, 1.0 + config.cost_jitter);
      s.marginal_cost *= cu;
      s.no_load_cost *= cu;
      s.startup_cost *= cu;
      s.pmax *= vr.uniform(1.0 - config.capacity_jitter, 1.0 + config.capacity_jitter);
    }
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-v%03d", v);
    check_capacity(gens, demand, family + suffix);
    // Output bounds come from the unperturbed fleet so every variation shares them.
    MILPInstance inst = build_uc_instance(config, gens, demand, family + suffix);
    for (int g = 0; g < G; ++g)
      for (int t = 0; t < T; ++t) {
        auto& p = inst.variables[(g * T + t) * (4 + config.startup_categories) + 3 +
                                 config.startup_categories];
        p.upper = (1.0 + config.capacity_jitter) * fam.generators[g].pmax;
      }
    fam.variations.push_back(std::move(inst));
  }
  return fam;
}

double enumerate_optimum(const MILPInstance& instance) {
  std::vector<int> bins;
  for (int j = 0; j < instance.num_variables(); ++j)
    if (instance.variables[j].is_binary()) bins.push_back(j);
  if (bins.size() > 20) throw ModelError("enumeration limited to 20 binaries");

  const LpModel model(instance);
  SimplexEngine engine(model);
  std::vector<double> lo(instance.num_variables()), hi(instance.num_variables());
  for (int j = 0; j < instance.num_variables(); ++j) {
    lo[j] = instance.variables[j].lower;
    hi[j] = instance.variables[j].upper;
  }
  double best = kInf;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bins.size()); ++mask) {
    for (std::size_t k = 0; k < bins.size(); ++k) lo[bins[k]] = hi[bins[k]] = (mask >> k) & 1;
    engine.load(lo, hi, nullptr);
    const LpStatus st = engine.solve();
    if (st == LpStatus::optimal) best = std::min(best, engine.objective());
    else if (st != LpStatus::infeasible)
      throw NumericalError("enumeration LP ended with status " + std::string(to_string(st)));
  }
  if (!std::isfinite(best)) throw ModelError(instance.name + ": instance is infeasible");
  return best;
}

OptimalValue optimal_value_oracle(const MILPInstance& instance, long node_budget) {
  if (instance.num_binaries() <= 20) return {enumerate_optimum(instance), true, "enumeration"};
  ReliabilityRule rule(8, 4);
  SolveOptions opt;
  opt.limits.node_limit = node_budget;
  opt.limits.gap_limit_percent = 1e-6;
  const SolveReport r = solve(instance, rule, opt);
  if (r.termination == Termination::error)
    throw NumericalError(instance.name + ": " + r.error);
  if (!std::isfinite(r.primal_bound)) {
    if (r.termination == Termination::tree_exhausted)
      throw ModelError(instance.name + ": instance is infeasible");
    throw ModelError(instance.name + ": no integer solution within the node budget");
  }
  const bool proven = r.termination == Termination::tree_exhausted ||
                      r.termination == Termination::gap_limit;
  return {r.primal_bound, proven, "branch-and-bound"};
}

}  // namespace bnblab
