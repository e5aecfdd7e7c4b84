#include "bnblab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bnblab/simd.hpp"

namespace bnblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Placement value for a nonbasic column whose dual-feasible side is unbounded.
constexpr double kArtificialBound = 1e7;

}  // namespace

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// BoundSet

void BoundSet::set(int var, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("BoundSet: lower bound exceeds upper bound");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), var,
                             [](const Entry& e, int v) { return e.var < v; });
  if (it != entries_.end() && it->var == var) {
    it->lower = lower;
    it->upper = upper;
  } else {
    entries_.insert(it, Entry{var, lower, upper});
  }
}

std::optional<Interval> BoundSet::find(int var) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), var,
                             [](const Entry& e, int v) { return e.var < v; });
  if (it == entries_.end() || it->var != var) return std::nullopt;
  return Interval{it->lower, it->upper};
}

void BoundSet::apply(const MILPInstance& instance, std::vector<double>& lower,
                     std::vector<double>& upper) const {
  const int n = instance.num_variables();
  lower.resize(n);
  upper.resize(n);
  for (int j = 0; j < n; ++j) {
    lower[j] = instance.variables[j].lower;
    upper[j] = instance.variables[j].upper;
  }
  for (const Entry& e : entries_) {
    lower[e.var] = e.lower;
    upper[e.var] = e.upper;
  }
}

// ---------------------------------------------------------------------------
// LpModel

LpModel::LpModel(const MILPInstance& instance)
    : instance_(&instance), n_(instance.num_variables()), m_(instance.num_constraints()) {
  col_start_.assign(n_ + 1, 0);
  row_start_.assign(m_ + 1, 0);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : instance.constraints[i].terms) {
      ++col_start_[t.var + 1];
      ++row_start_[i + 1];
    }
  }
  for (int j = 0; j < n_; ++j) col_start_[j + 1] += col_start_[j];
  for (int i = 0; i < m_; ++i) row_start_[i + 1] += row_start_[i];

  const auto nnz = static_cast<std::size_t>(row_start_[m_]);
  col_row_.resize(nnz);
  col_val_.resize(nnz);
  row_col_.resize(nnz);
  row_val_.resize(nnz);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    int k = row_start_[i];
    for (const Term& t : instance.constraints[i].terms) {
      row_col_[k] = t.var;
      row_val_[k] = t.coeff;
      ++k;
      col_row_[fill[t.var]] = i;
      col_val_[fill[t.var]] = t.coeff;
      ++fill[t.var];
    }
  }

  cost_.resize(n_);
  for (int j = 0; j < n_; ++j) cost_[j] = instance.variables[j].obj;
  row_lower_.resize(m_);
  row_upper_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    const Constraint& c = instance.constraints[i];
    row_lower_[i] = c.sense == Sense::le ? -kInf : c.rhs;
    row_upper_[i] = c.sense == Sense::ge ? kInf : c.rhs;
  }
}

// ---------------------------------------------------------------------------
// SimplexEngine

struct SimplexEngine::Snapshot {
  double lower, upper;
  std::vector<VarStatus> status_of;
  std::vector<std::uint8_t> artificial;
  std::vector<int> head, pos;
  std::vector<double> x_basic, lower_basic, upper_basic, x, d, sgn, weight;
  std::size_t eta_count, eta_entries;
  std::uint64_t generation;
  LpStatus status;
};

SimplexEngine::SimplexEngine(const LpModel& model, LpOptions options)
    : model_(&model), options_(options), n_(model.num_structurals()), m_(model.num_rows()) {
  const int total = n_ + m_;
  lower_.assign(total, 0.0);
  upper_.assign(total, 0.0);
  cost_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) cost_[j] = model.cost()[j];
  for (int i = 0; i < m_; ++i) {
    lower_[n_ + i] = model.row_lower()[i];
    upper_[n_ + i] = model.row_upper()[i];
  }
  status_of_.assign(total, VarStatus::at_lower);
  artificial_.assign(total, 0);
  head_.assign(m_, 0);
  pos_.assign(total, -1);
  x_basic_.assign(m_, 0.0);
  weight_.assign(m_, 1.0);
  lower_basic_.assign(m_, 0.0);
  upper_basic_.assign(m_, 0.0);
  x_.assign(total, 0.0);
  d_.assign(total, 0.0);
  sgn_.assign(total, 0.0);
  alpha_.assign(total, 0.0);
  rho_.assign(m_, 0.0);
  column_.assign(m_, 0.0);
  work_.assign(m_, 0.0);
  rhs_.assign(m_, 0.0);

  std::vector<double> lo(n_), hi(n_);
  for (int j = 0; j < n_; ++j) {
    lo[j] = model.instance().variables[j].lower;
    hi[j] = model.instance().variables[j].upper;
  }
  load(lo, hi, nullptr);
}

void SimplexEngine::refresh_sign(int j) {
  if (status_of_[j] == VarStatus::basic || lower_[j] == upper_[j]) sgn_[j] = 0.0;
  else sgn_[j] = status_of_[j] == VarStatus::at_lower ? 1.0 : -1.0;
}

bool SimplexEngine::refactor() {
  if (probe_stash_ && !probe_stash_->valid) {
    // First refactor inside a probe: keep the node's factors for the restore.
    Stash& st = *probe_stash_;
    st.valid = true;
    std::swap(st.lu, lu_);
    std::swap(st.etas, etas_);
    std::swap(st.eta_index, eta_index_);
    std::swap(st.eta_value, eta_value_);
    st.generation = factor_generation_;
  }
  etas_.clear();
  eta_index_.clear();
  eta_value_.clear();
  ++factor_generation_;
  if (m_ == 0) return true;

  const auto cs = model_->col_start();
  const auto cr = model_->col_row();
  const auto cv = model_->col_val();
  basis_start_.assign(1, 0);
  basis_row_.clear();
  basis_val_.clear();
  for (int k = 0; k < m_; ++k) {
    const int j = head_[k];
    if (j < n_) {
      for (int p = cs[j]; p < cs[j + 1]; ++p) {
        basis_row_.push_back(cr[p]);
        basis_val_.push_back(cv[p]);
      }
    } else {
      basis_row_.push_back(j - n_);
      basis_val_.push_back(-1.0);
    }
    basis_start_.push_back(static_cast<int>(basis_row_.size()));
  }
  return lu_.factorize(m_, basis_start_, basis_row_, basis_val_);
}

void SimplexEngine::slack_basis() {
  std::fill(weight_.begin(), weight_.end(), 1.0);
  for (int j = 0; j < n_; ++j) {
    const double c = cost_[j];
    const double lo = lower_[j];
    const double hi = upper_[j];
    bool at_upper = c < 0.0;
    if (c == 0.0) at_upper = !std::isfinite(lo) && std::isfinite(hi);
    status_of_[j] = at_upper ? VarStatus::at_upper : VarStatus::at_lower;
    const double bound = at_upper ? hi : lo;
    artificial_[j] = !std::isfinite(bound);
    if (artificial_[j]) x_[j] = (c == 0.0) ? 0.0 : (at_upper ? kArtificialBound : -kArtificialBound);
    else x_[j] = bound;
    pos_[j] = -1;
  }
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    status_of_[j] = VarStatus::basic;
    artificial_[j] = 0;
    head_[i] = j;
    pos_[j] = i;
    lower_basic_[i] = lower_[j];
    upper_basic_[i] = upper_[j];
  }
  for (int j = 0; j < n_ + m_; ++j) refresh_sign(j);
  refactor();
  compute_primal();
  compute_duals();
}

void SimplexEngine::load(std::span<const double> lower, std::span<const double> upper,
                         const Basis* warm) {
  std::fill(weight_.begin(), weight_.end(), 1.0);
  for (int j = 0; j < n_; ++j) {
    lower_[j] = lower[j];
    upper_[j] = upper[j];
  }
  status_ = LpStatus::iteration_limit;

  const int total = n_ + m_;
  bool usable = warm && static_cast<int>(warm->status.size()) == total &&
                std::count(warm->status.begin(), warm->status.end(), VarStatus::basic) == m_;
  if (!usable) {
    slack_basis();
    return;
  }

  int k = 0;
  for (int j = 0; j < total; ++j) {
    VarStatus s = warm->status[j];
    status_of_[j] = s;
    artificial_[j] = 0;
    if (s == VarStatus::basic) {
      head_[k] = j;
      pos_[j] = k;
      lower_basic_[k] = lower_[j];
      upper_basic_[k] = upper_[j];
      ++k;
      continue;
    }
    pos_[j] = -1;
    if (s == VarStatus::at_lower && !std::isfinite(lower_[j]) && std::isfinite(upper_[j]))
      s = VarStatus::at_upper;
    if (s == VarStatus::at_upper && !std::isfinite(upper_[j]) && std::isfinite(lower_[j]))
      s = VarStatus::at_lower;
    status_of_[j] = s;
    const double bound = s == VarStatus::at_lower ? lower_[j] : upper_[j];
    if (std::isfinite(bound)) {
      x_[j] = bound;
    } else {
      artificial_[j] = 1;
      x_[j] = s == VarStatus::at_lower ? -kArtificialBound : kArtificialBound;
    }
  }
  for (int j = 0; j < total; ++j) refresh_sign(j);
  if (!refactor()) {
    slack_basis();
    return;
  }
  compute_primal();
  compute_duals();
  if (!repair_dual_feasibility()) slack_basis();
}

void SimplexEngine::compute_primal() {
  if (m_ == 0) return;
  std::fill(rhs_.begin(), rhs_.end(), 0.0);
  const auto cs = model_->col_start();
  const auto cr = model_->col_row();
  const auto cv = model_->col_val();
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_of_[j] == VarStatus::basic) continue;
    const double v = x_[j];
    if (v == 0.0) continue;
    if (j < n_) {
      for (int p = cs[j]; p < cs[j + 1]; ++p) rhs_[cr[p]] -= cv[p] * v;
    } else {
      rhs_[j - n_] += v;
    }
  }
  lu_.solve(rhs_);
  for (int i = 0; i < m_; ++i) x_basic_[i] = rhs_[i];
  for (const Eta& e : etas_) {
    const double xr = x_basic_[e.row] / e.pivot;
    x_basic_[e.row] = xr;
    if (xr == 0.0) continue;
    for (std::size_t p = e.begin; p < e.end; ++p) x_basic_[eta_index_[p]] -= eta_value_[p] * xr;
  }
}

void SimplexEngine::compute_duals() {
  const int total = n_ + m_;
  if (m_ == 0) {
    for (int j = 0; j < total; ++j) d_[j] = cost_[j];
    return;
  }
  for (int k = 0; k < m_; ++k) work_[k] = cost_[head_[k]];
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = work_[it->row];
    for (std::size_t p = it->begin; p < it->end; ++p) s -= eta_value_[p] * work_[eta_index_[p]];
    work_[it->row] = s / it->pivot;
  }
  for (int k = 0; k < m_; ++k) rhs_[k] = work_[k];
  lu_.solve_transpose(rhs_);
  const std::vector<double>& y = rhs_;

  const auto cs = model_->col_start();
  const auto cr = model_->col_row();
  const auto cv = model_->col_val();
  for (int j = 0; j < n_; ++j) {
    double s = cost_[j];
    for (int p = cs[j]; p < cs[j + 1]; ++p) s -= y[cr[p]] * cv[p];
    d_[j] = s;
  }
  for (int i = 0; i < m_; ++i) d_[n_ + i] = y[i];
  for (int k = 0; k < m_; ++k) d_[head_[k]] = 0.0;
}

void SimplexEngine::ftran(int j, std::vector<double>& out) {
  std::fill(rhs_.begin(), rhs_.end(), 0.0);
  if (j < n_) {
    const auto cs = model_->col_start();
    const auto cr = model_->col_row();
    const auto cv = model_->col_val();
    for (int p = cs[j]; p < cs[j + 1]; ++p) rhs_[cr[p]] = cv[p];
  } else {
    rhs_[j - n_] = -1.0;
  }
  lu_.solve(rhs_);
  for (int i = 0; i < m_; ++i) out[i] = rhs_[i];
  for (const Eta& e : etas_) {
    const double xr = out[e.row] / e.pivot;
    out[e.row] = xr;
    if (xr == 0.0) continue;
    for (std::size_t p = e.begin; p < e.end; ++p) out[eta_index_[p]] -= eta_value_[p] * xr;
  }
}

void SimplexEngine::btran(int r, std::vector<double>& out) {
  std::fill(work_.begin(), work_.end(), 0.0);
  work_[r] = 1.0;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = work_[it->row];
    for (std::size_t p = it->begin; p < it->end; ++p) s -= eta_value_[p] * work_[eta_index_[p]];
    work_[it->row] = s / it->pivot;
  }
  for (int k = 0; k < m_; ++k) rhs_[k] = work_[k];
  lu_.solve_transpose(rhs_);
  for (int i = 0; i < m_; ++i) out[i] = rhs_[i];
}

void SimplexEngine::pivot_row(const std::vector<double>& rho) {
  std::fill(alpha_.begin(), alpha_.end(), 0.0);
  const auto rs = model_->row_start();
  const auto rc = model_->row_col();
  const auto rv = model_->row_val();
  for (int i = 0; i < m_; ++i) {
    const double ri = rho[i];
    if (ri == 0.0) continue;
    for (int p = rs[i]; p < rs[i + 1]; ++p) alpha_[rc[p]] += ri * rv[p];
    alpha_[n_ + i] = -ri;
  }
}

bool SimplexEngine::repair_dual_feasibility() {
  bool flipped = false;
  for (int j = 0; j < n_ + m_; ++j) {
    if (sgn_[j] == 0.0 || sgn_[j] * d_[j] >= -options_.dual_tol) continue;
    const bool boxed = std::isfinite(lower_[j]) && std::isfinite(upper_[j]);
    if (!boxed) {
      if (sgn_[j] * d_[j] >= -100.0 * options_.dual_tol) continue;
      return false;
    }
    const bool to_upper = status_of_[j] == VarStatus::at_lower;
    status_of_[j] = to_upper ? VarStatus::at_upper : VarStatus::at_lower;
    x_[j] = to_upper ? upper_[j] : lower_[j];
    artificial_[j] = 0;
    refresh_sign(j);
    flipped = true;
  }
  if (flipped) compute_primal();
  return true;
}

void SimplexEngine::set_bounds(int var, double lower, double upper) {
  lower_[var] = lower;
  upper_[var] = upper;
  status_ = LpStatus::iteration_limit;
  if (status_of_[var] == VarStatus::basic) {
    lower_basic_[pos_[var]] = lower;
    upper_basic_[pos_[var]] = upper;
    return;
  }
  // A column that was fixed may sit on the wrong side for its reduced cost;
  // pick the bound that keeps the basis dual feasible.
  if (lower != upper && std::isfinite(lower) && std::isfinite(upper)) {
    if (d_[var] > options_.dual_tol) status_of_[var] = VarStatus::at_lower;
    else if (d_[var] < -options_.dual_tol) status_of_[var] = VarStatus::at_upper;
  }
  double target = x_[var];
  if (status_of_[var] == VarStatus::at_lower && std::isfinite(lower)) target = lower;
  if (status_of_[var] == VarStatus::at_upper && std::isfinite(upper)) target = upper;
  if (std::isfinite(target) && (target == lower || target == upper)) artificial_[var] = 0;
  const double delta = target - x_[var];
  if (delta != 0.0) {
    if (m_ > 0) {
      ftran(var, column_);
      simd::active().axpy(-delta, column_.data(), x_basic_.data(), m_);
    }
    x_[var] = target;
  }
  refresh_sign(var);
}

double SimplexEngine::value(int var) const {
  return status_of_[var] == VarStatus::basic ? x_basic_[pos_[var]] : x_[var];
}

double SimplexEngine::objective() const {
  double total = 0.0;
  for (int j = 0; j < n_; ++j) total += cost_[j] * value(j);
  return total;
}

std::vector<double> SimplexEngine::primal() const {
  std::vector<double> x(n_);
  for (int j = 0; j < n_; ++j) x[j] = value(j);
  return x;
}

Basis SimplexEngine::basis() const { return Basis{status_of_}; }

LpResult SimplexEngine::result() const {
  LpResult r;
  r.status = status_;
  r.objective = objective();
  r.primal = primal();
  r.iterations = last_iterations_;
  r.basis = std::make_shared<const Basis>(basis());
  return r;
}

LpStatus SimplexEngine::solve() {
  status_ = run();
  return status_;
}

LpStatus SimplexEngine::run() {
  const simd::KernelTable& k = simd::active();
  const int total = n_ + m_;
  last_iterations_ = 0;
  int degenerate = 0;
  bool bland = false;
  bool confirmed = false;

  while (true) {
    if (last_iterations_ >= options_.iteration_limit) return LpStatus::iteration_limit;

    // Leaving row.
    int r = -1;
    if (m_ > 0) {
      if (!bland) {
        r = static_cast<int>(k.max_weighted_violation(x_basic_.data(), lower_basic_.data(),
                                                      upper_basic_.data(), weight_.data(),
                                                      options_.primal_tol, m_)
                                 .index);
      } else {
        for (int i = 0; i < m_; ++i) {
          const double v = std::max(lower_basic_[i] - x_basic_[i], x_basic_[i] - upper_basic_[i]);
          if (v > options_.primal_tol && (r < 0 || head_[i] < head_[r])) r = i;
        }
      }
    }

    if (r < 0) {
      if (!etas_.empty() && !confirmed) {
        // Recompute the basic values from scratch before declaring optimality;
        // drift in the incrementally updated values shows up as infeasibility.
        confirmed = true;
        compute_primal();
        continue;
      }
      for (int j = 0; j < total; ++j) {
        if (artificial_[j] && status_of_[j] != VarStatus::basic &&
            std::abs(d_[j]) > options_.dual_tol)
          return LpStatus::unbounded;
      }
      return LpStatus::optimal;
    }

    const int leaving = head_[r];
    const bool to_upper = x_basic_[r] > upper_basic_[r];
    const double target = to_upper ? upper_basic_[r] : lower_basic_[r];
    const double dir = to_upper ? 1.0 : -1.0;

    btran(r, rho_);
    pivot_row(rho_);

    // Entering column.
    int q = -1;
    if (!bland) {
      const double bound = k.harris_bound(d_.data(), alpha_.data(), sgn_.data(), dir,
                                          options_.dual_tol, options_.pivot_tol, total);
      if (std::isfinite(bound))
        q = static_cast<int>(k.harris_select(d_.data(), alpha_.data(), sgn_.data(), dir, bound,
                                             options_.pivot_tol, total)
                                 .index);
    } else {
      double best = kInf;
      for (int j = 0; j < total; ++j) {
        const double sa = (sgn_[j] * dir) * alpha_[j];
        if (!(sa > options_.pivot_tol)) continue;
        const double ratio = std::max(0.0, sgn_[j] * d_[j]) / sa;
        if (ratio < best) {
          best = ratio;
          q = j;
        }
      }
    }

    if (q < 0) {
      if (!etas_.empty()) {
        if (!refactor()) slack_basis();
        else {
          compute_primal();
          compute_duals();
          if (!repair_dual_feasibility()) slack_basis();
        }
        continue;
      }
      return LpStatus::infeasible;
    }

    ftran(q, column_);
    const double alpha_q = alpha_[q];
    const double pivot = column_[r];
    if (std::abs(pivot - alpha_q) > 1e-7 * (1.0 + std::abs(alpha_q)) || std::abs(pivot) < 1e-11) {
      if (!etas_.empty()) {
        if (!refactor()) slack_basis();
        else {
          compute_primal();
          compute_duals();
          if (!repair_dual_feasibility()) slack_basis();
        }
        continue;
      }
    }

    // Dual step; a slightly infeasible entering reduced cost gives a zero step.
    double theta_d = d_[q] / alpha_q;
    if (dir * theta_d < 0.0) theta_d = 0.0;
    if (theta_d != 0.0) k.axpy(-theta_d, alpha_.data(), d_.data(), total);

    // Primal step.
    const double theta_p = (x_basic_[r] - target) / pivot;
    k.axpy(-theta_p, column_.data(), x_basic_.data(), m_);
    const double entering_value = x_[q] + theta_p;

    // Record the eta column of this pivot.
    {
      Eta e{r, pivot, eta_index_.size(), 0};
      for (int i = 0; i < m_; ++i) {
        if (i == r || column_[i] == 0.0) continue;
        eta_index_.push_back(i);
        eta_value_.push_back(column_[i]);
      }
      e.end = eta_index_.size();
      etas_.push_back(e);
    }

    // Dual Devex reference weights.
    {
      const double wr = weight_[r];
      for (int i = 0; i < m_; ++i) {
        if (i == r || column_[i] == 0.0) continue;
        const double ratio = column_[i] / pivot;
        weight_[i] = std::max(weight_[i], ratio * ratio * wr);
      }
      weight_[r] = std::max(wr / (pivot * pivot), 1.0);
    }

    // Basis change.
    status_of_[leaving] = to_upper ? VarStatus::at_upper : VarStatus::at_lower;
    x_[leaving] = target;
    artificial_[leaving] = 0;
    pos_[leaving] = -1;
    status_of_[q] = VarStatus::basic;
    artificial_[q] = 0;
    head_[r] = q;
    pos_[q] = r;
    x_basic_[r] = entering_value;
    lower_basic_[r] = lower_[q];
    upper_basic_[r] = upper_[q];
    for (int i = 0; i < m_; ++i) d_[head_[i]] = 0.0;
    d_[leaving] = -theta_d;
    refresh_sign(leaving);
    refresh_sign(q);

    ++last_iterations_;
    ++total_iterations_;
    confirmed = false;
    degenerate = std::abs(theta_d) <= 1e-12 ? degenerate + 1 : 0;
    if (degenerate >= options_.bland_after) bland = true;

    if (static_cast<int>(etas_.size()) >= options_.refactor_interval) {
      if (!refactor()) {
        slack_basis();
        continue;
      }
      compute_primal();
      compute_duals();
      if (!repair_dual_feasibility()) slack_basis();
    }
  }
}

SimplexEngine::ProbeResult SimplexEngine::probe(int var, double lower, double upper) {
  // Start every probe of a node from fresh factors; the restore below then
  // keeps them, so the node pays for one refactor instead of one per probe.
  if (!etas_.empty() && !refactor()) {
    slack_basis();
    run();
  }
  Snapshot s{lower_[var], upper_[var], status_of_, artificial_, head_, pos_, x_basic_,
             lower_basic_, upper_basic_, x_, d_, sgn_, weight_, etas_.size(),
             eta_index_.size(), factor_generation_, status_};

  stash_.valid = false;
  probe_stash_ = &stash_;
  set_bounds(var, lower, upper);
  ProbeResult out;
  out.status = run();
  out.objective = objective();
  out.iterations = last_iterations_;

  lower_[var] = s.lower;
  upper_[var] = s.upper;
  status_of_ = std::move(s.status_of);
  artificial_ = std::move(s.artificial);
  head_ = std::move(s.head);
  pos_ = std::move(s.pos);
  x_basic_ = std::move(s.x_basic);
  lower_basic_ = std::move(s.lower_basic);
  upper_basic_ = std::move(s.upper_basic);
  x_ = std::move(s.x);
  d_ = std::move(s.d);
  sgn_ = std::move(s.sgn);
  weight_ = std::move(s.weight);
  status_ = s.status;
  if (factor_generation_ != s.generation) {
    Stash& st = *probe_stash_;
    std::swap(st.lu, lu_);
    std::swap(st.etas, etas_);
    std::swap(st.eta_index, eta_index_);
    std::swap(st.eta_value, eta_value_);
    factor_generation_ = st.generation;
    st.valid = false;
  }
  probe_stash_ = nullptr;
  etas_.resize(s.eta_count);
  eta_index_.resize(s.eta_entries);
  eta_value_.resize(s.eta_entries);
  return out;
}

// ---------------------------------------------------------------------------
// Free functions

LpResult solve_lp(const MILPInstance& instance, const BoundSet& bounds, const Basis* warm,
                  const LpOptions& options) {
  LpModel model(instance);
  SimplexEngine engine(model, options);
  std::vector<double> lo, hi;
  bounds.apply(instance, lo, hi);
  engine.load(lo, hi, warm);
  engine.solve();
  return engine.result();
}

LpResult probe_bound_change(const MILPInstance& instance, const BoundSet& bounds,
                            const LpResult& parent, int var, BranchDirection direction,
                            const LpOptions& options) {
  if (parent.status != LpStatus::optimal)
    throw std::invalid_argument("probe_bound_change: parent LP is not optimal");
  if (var < 0 || var >= instance.num_variables())
    throw std::invalid_argument("probe_bound_change: variable index out of range");
  const double v = parent.primal.at(var);
  const double f = v - std::floor(v);
  if (f < 1e-6 || 1.0 - f < 1e-6)
    throw std::invalid_argument("probe_bound_change: variable value is integral");

  BoundSet child = bounds;
  const auto cur = bounds.find(var);
  const double lo = cur ? cur->lower : instance.variables[var].lower;
  const double hi = cur ? cur->upper : instance.variables[var].upper;
  if (direction == BranchDirection::down) child.set(var, lo, std::floor(v));
  else child.set(var, std::ceil(v), hi);
  return solve_lp(instance, child, parent.basis.get(), options);
}

}  // namespace bnblab
