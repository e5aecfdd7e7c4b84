#include "bnblab/branching.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace bnblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Index of the best score; the candidate list is sorted by variable, so a
// strict comparison keeps the smallest index on ties.
int argmax(const std::vector<ScoreRecord>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].score > scores[best].score ||
        (scores[i].score == scores[best].score && scores[i].var < scores[best].var))
      best = i;
  }
  return static_cast<int>(best);
}

Interval current_bounds(const BranchContext& ctx, int var) {
  if (auto b = ctx.node->bounds.find(var)) return *b;
  const Variable& v = ctx.instance->variables[var];
  return {v.lower, v.upper};
}

}  // namespace

// ---------------------------------------------------------------------------
// PseudocostTable

PseudocostTable::PseudocostTable(int num_variables, bool keep_log)
    : probes_(num_variables, 0), keep_log_(keep_log) {
  for (int d = 0; d < 2; ++d) {
    sum_[d].assign(num_variables, 0.0);
    count_[d].assign(num_variables, 0);
  }
}

void PseudocostTable::record(int var, BranchDirection direction, double unit_gain) {
  if (!std::isfinite(unit_gain) || unit_gain < 0.0) return;
  const int d = slot(direction);
  sum_[d][var] += unit_gain;
  ++count_[d][var];
  global_sum_[d] += unit_gain;
  ++global_count_[d];
  if (keep_log_) log_.push_back({var, direction, unit_gain});
}

void PseudocostTable::record_probe(int var) {
  ++probes_[var];
  ++total_probes_;
}

double PseudocostTable::unit_gain(int var, BranchDirection direction) const {
  const int d = slot(direction);
  if (count_[d][var] > 0) return sum_[d][var] / static_cast<double>(count_[d][var]);
  return global_mean(direction);
}

bool PseudocostTable::has_observation(int var, BranchDirection direction) const {
  return count_[slot(direction)][var] > 0;
}

long PseudocostTable::count(int var, BranchDirection direction) const {
  return count_[slot(direction)][var];
}

double PseudocostTable::sum(int var, BranchDirection direction) const {
  return sum_[slot(direction)][var];
}

double PseudocostTable::global_mean(BranchDirection direction) const {
  const int d = slot(direction);
  return global_count_[d] > 0 ? global_sum_[d] / static_cast<double>(global_count_[d]) : 1.0;
}

// ---------------------------------------------------------------------------
// Scores

double score_mib(double frac_value) { return std::min(frac_value, 1.0 - frac_value); }

double score_product(double delta_down, double delta_up, double eps) {
  return std::max(delta_down, eps) * std::max(delta_up, eps);
}

std::string_view to_string(ScoreSource source) {
  switch (source) {
    case ScoreSource::mib: return "mib";
    case ScoreSource::probe: return "probe";
    case ScoreSource::pseudocost: return "pseudocost";
    case ScoreSource::ml: return "ml";
  }
  return "?";
}

NodeView BranchContext::view() const {
  return {&node->bounds, node->depth, node_objective, static_cast<int>(candidates.size())};
}

// ---------------------------------------------------------------------------
// Rules

BranchDecision MibRule::select(BranchContext& ctx) const {
  BranchDecision out;
  out.scores.reserve(ctx.candidates.size());
  for (const Candidate& c : ctx.candidates)
    out.scores.push_back({c.var, 0.0, 0.0, score_mib(c.fraction), ScoreSource::mib});
  out.var = out.scores[argmax(out.scores)].var;
  return out;
}

ReliabilityRule::ReliabilityRule(int lambda, int eta) : lambda_(lambda), eta_(eta) {
  if (lambda < 0 || eta < 0) throw std::invalid_argument("RB: lambda and eta must be >= 0");
}

std::string ReliabilityRule::name() const {
  auto num = [](int v) { return v == kUnlimited ? std::string("inf") : std::to_string(v); };
  return "rb:" + num(lambda_) + ":" + num(eta_);
}

BranchDecision ReliabilityRule::select(BranchContext& ctx) const {
  PseudocostTable& pc = *ctx.pseudocosts;
  const auto& cands = ctx.candidates;
  const std::size_t n = cands.size();

  BranchDecision out;
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Candidate& c = cands[i];
    const double dd = pc.unit_gain(c.var, BranchDirection::down) * c.fraction;
    const double du = pc.unit_gain(c.var, BranchDirection::up) * (1.0 - c.fraction);
    out.scores[i] = {c.var, dd, du, score_product(dd, du, ctx.epsilon), ScoreSource::pseudocost};
  }

  // Probe list, fixed before any probing: unreliable candidates in order of
  // decreasing estimated score, at most lambda of them.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.scores[a].score > out.scores[b].score;
  });
  std::vector<std::size_t> probe_list;
  for (std::size_t i : order) {
    if (static_cast<int>(probe_list.size()) >= lambda_) break;
    if (eta_ == kUnlimited || pc.probes(cands[i].var) < eta_) probe_list.push_back(i);
  }

  std::vector<FeatureVector> features;
  if (ctx.on_probe) {
    const NodeView view = ctx.view();
    for (std::size_t i : probe_list)
      features.push_back(
          compute_features(*ctx.statics, view, ctx.x, cands[i].var, pc, *ctx.tree));
  }

  std::vector<double> down_obj(n, kInf), up_obj(n, kInf);
  for (std::size_t k = 0; k < probe_list.size(); ++k) {
    const std::size_t i = probe_list[k];
    const Candidate& c = cands[i];
    const Interval b = current_bounds(ctx, c.var);
    const auto down = ctx.engine->probe(c.var, b.lower, std::floor(c.value));
    const auto up = ctx.engine->probe(c.var, std::ceil(c.value), b.upper);
    for (const auto* r : {&down, &up}) {
      if (r->status == LpStatus::iteration_limit)
        throw NumericalError("probe of " + ctx.instance->variables[c.var].key.raw +
                             " hit the LP iteration limit");
      if (r->status == LpStatus::unbounded)
        throw NumericalError("probe of " + ctx.instance->variables[c.var].key.raw +
                             " reported an unbounded child of a bounded node");
    }
    ++ctx.stats->probes;

    ProbeRecord rec;
    rec.node_id = ctx.node->id;
    rec.var = c.var;
    rec.down_infeasible = down.status == LpStatus::infeasible;
    rec.up_infeasible = up.status == LpStatus::infeasible;
    rec.delta_down = rec.down_infeasible ? ctx.big : std::max(0.0, down.objective - ctx.node_objective);
    rec.delta_up = rec.up_infeasible ? ctx.big : std::max(0.0, up.objective - ctx.node_objective);
    if (!rec.down_infeasible) down_obj[i] = down.objective;
    if (!rec.up_infeasible) up_obj[i] = up.objective;

    if (ctx.on_probe) {
      rec.features = features[k];
      ctx.on_probe(rec);
    }

    pc.record_probe(c.var);
    if (!rec.down_infeasible) pc.record(c.var, BranchDirection::down, rec.delta_down / c.fraction);
    if (!rec.up_infeasible)
      pc.record(c.var, BranchDirection::up, rec.delta_up / (1.0 - c.fraction));

    out.scores[i] = {c.var, rec.delta_down, rec.delta_up,
                     score_product(rec.delta_down, rec.delta_up, ctx.epsilon), ScoreSource::probe};
  }

  const int best = argmax(out.scores);
  out.var = out.scores[best].var;
  if (out.scores[best].source == ScoreSource::probe) {
    out.down_objective = down_obj[best];
    out.up_objective = up_obj[best];
  }
  return out;
}

MlRule::MlRule(std::shared_ptr<const ModelStore> store) : store_(std::move(store)) {
  if (!store_) throw std::invalid_argument("ML rule needs a model store");
}

std::string MlRule::name() const { return "ml:" + std::string(to_string(store_->scheme())); }

BranchDecision MlRule::select(BranchContext& ctx) const {
  BranchDecision out;
  out.scores.reserve(ctx.candidates.size());
  const NodeView view = ctx.view();
  for (const Candidate& c : ctx.candidates) {
    const FeatureVector phi =
        compute_features(*ctx.statics, view, ctx.x, c.var, *ctx.pseudocosts, *ctx.tree);
    const ResolvedModel m = resolve_model(*store_, ctx.instance->variables[c.var].key);
    ++ctx.stats->ml_evaluations;
    if (m.used_fallback) ++ctx.stats->ml_fallbacks;
    out.scores.push_back({c.var, 0.0, 0.0, m.forest->predict(phi), ScoreSource::ml});
  }
  out.var = out.scores[argmax(out.scores)].var;
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

std::string RuleSpec::text() const {
  auto num = [](int v) { return v == kUnlimited ? std::string("inf") : std::to_string(v); };
  switch (kind) {
    case Kind::mib: return "mib";
    case Kind::rb: return "rb:" + num(lambda) + ":" + num(eta);
    case Kind::ml: return "ml:" + std::string(to_string(scheme));
  }
  return "?";
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto p = text.find(sep, start);
    parts.emplace_back(text.substr(start, p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

int parse_limit(const std::string& s, std::string_view rule) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower == "inf") return kUnlimited;
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0)
    throw RuleSyntaxError("bad number \"" + s + "\" in rule \"" + std::string(rule) + "\"");
  return v;
}

}  // namespace

RuleSpec parse_rule(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  const auto parts = split(lower, ':');
  RuleSpec spec;
  if (parts[0] == "mib" && parts.size() == 1) {
    spec.kind = RuleSpec::Kind::mib;
  } else if (parts[0] == "rb" && parts.size() == 3) {
    spec.kind = RuleSpec::Kind::rb;
    spec.lambda = parse_limit(parts[1], text);
    spec.eta = parse_limit(parts[2], text);
  } else if (parts[0] == "ml" && parts.size() == 2) {
    spec.kind = RuleSpec::Kind::ml;
    const auto scheme = parse_scheme(parts[1]);
    if (!scheme)
      throw RuleSyntaxError("unknown grouping scheme \"" + parts[1] +
                            "\" (expected et, pna, pti, pge or pv)");
    spec.scheme = *scheme;
  } else {
    throw RuleSyntaxError("bad rule \"" + std::string(text) +
                          "\" (expected mib, rb:LAMBDA:ETA or ml:SCHEME)");
  }
  return spec;
}

std::unique_ptr<BranchingRule> make_rule(const RuleSpec& spec,
                                         std::shared_ptr<const ModelStore> store) {
  switch (spec.kind) {
    case RuleSpec::Kind::mib: return std::make_unique<MibRule>();
    case RuleSpec::Kind::rb: return std::make_unique<ReliabilityRule>(spec.lambda, spec.eta);
    case RuleSpec::Kind::ml:
      if (!store) throw std::invalid_argument("rule " + spec.text() + " needs a model store");
      if (store->scheme() != spec.scheme)
        throw std::invalid_argument("rule " + spec.text() + " given a " +
                                    std::string(to_string(store->scheme())) + " model store");
      return std::make_unique<MlRule>(std::move(store));
  }
  return nullptr;
}

}  // namespace bnblab
