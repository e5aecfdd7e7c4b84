#include "bnblab/sparse_lu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bnblab {

namespace {

constexpr double kThreshold = 0.01;  // relative pivot threshold
constexpr double kSingular = 1e-11;
constexpr int kSearchColumns = 4;

struct Entry {
  int col;
  double value;
};

}  // namespace

bool SparseLu::factorize(int m, std::span<const int> col_start, std::span<const int> row_index,
                         std::span<const double> value) {
  m_ = m;
  pivot_row_.assign(m, -1);
  pivot_col_.assign(m, -1);
  pivot_.assign(m, 0.0);
  l_start_.assign(1, 0);
  l_index_.clear();
  l_value_.clear();
  u_row_start_.assign(1, 0);
  u_row_index_.clear();
  u_row_value_.clear();
  work_.assign(m, 0.0);

  // Active submatrix: values by row, patterns by column.
  std::vector<std::vector<Entry>> rows(m);
  std::vector<std::vector<int>> cols(m);
  for (int c = 0; c < m; ++c) {
    for (int p = col_start[c]; p < col_start[c + 1]; ++p) {
      if (value[p] == 0.0) continue;
      rows[row_index[p]].push_back({c, value[p]});
      cols[c].push_back(row_index[p]);
    }
  }
  std::vector<char> row_done(m, 0), col_done(m, 0);
  std::vector<int> slot(m, -1);  // position of a column inside the row being updated

  auto value_at = [&](int r, int c) {
    for (const Entry& e : rows[r])
      if (e.col == c) return e.value;
    return 0.0;
  };
  auto col_max = [&](int c) {
    double mx = 0.0;
    for (int r : cols[c]) mx = std::max(mx, std::abs(value_at(r, c)));
    return mx;
  };
  auto erase_from_col = [&](int c, int r) {
    auto& v = cols[c];
    auto it = std::find(v.begin(), v.end(), r);
    if (it != v.end()) {
      *it = v.back();
      v.pop_back();
    }
  };

  std::vector<int> col_singletons, row_singletons;
  for (int c = 0; c < m; ++c)
    if (cols[c].size() == 1) col_singletons.push_back(c);
  for (int r = 0; r < m; ++r)
    if (rows[r].size() == 1) row_singletons.push_back(r);

  for (int step = 0; step < m; ++step) {
    int pr = -1, pc = -1;

    while (pr < 0 && !col_singletons.empty()) {
      const int c = col_singletons.back();
      col_singletons.pop_back();
      if (col_done[c] || cols[c].size() != 1) continue;
      const int r = cols[c][0];
      if (std::abs(value_at(r, c)) > kSingular) {
        pr = r;
        pc = c;
      }
    }
    while (pr < 0 && !row_singletons.empty()) {
      const int r = row_singletons.back();
      row_singletons.pop_back();
      if (row_done[r] || rows[r].size() != 1) continue;
      const int c = rows[r][0].col;
      const double a = std::abs(rows[r][0].value);
      if (a > kSingular && a >= kThreshold * col_max(c)) {
        pr = r;
        pc = c;
      }
    }
    if (pr < 0) {
      // Markowitz search over the sparsest few columns.
      std::vector<int> order;
      for (int c = 0; c < m; ++c)
        if (!col_done[c]) order.push_back(c);
      std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(kSearchColumns, order.size()),
                        order.end(), [&](int a, int b) {
                          return cols[a].size() < cols[b].size() ||
                                 (cols[a].size() == cols[b].size() && a < b);
                        });
      long best_cost = std::numeric_limits<long>::max();
      double best_abs = 0.0;
      for (std::size_t k = 0; k < order.size() && k < static_cast<std::size_t>(kSearchColumns); ++k) {
        const int c = order[k];
        const double mx = col_max(c);
        if (mx <= kSingular) continue;
        for (int r : cols[c]) {
          const double a = std::abs(value_at(r, c));
          if (a < kThreshold * mx) continue;
          const long cost = static_cast<long>(rows[r].size() - 1) * static_cast<long>(cols[c].size() - 1);
          if (cost < best_cost || (cost == best_cost && a > best_abs)) {
            best_cost = cost;
            best_abs = a;
            pr = r;
            pc = c;
          }
        }
      }
      if (pr < 0) return false;
    }

    const double piv = value_at(pr, pc);
    pivot_row_[step] = pr;
    pivot_col_[step] = pc;
    pivot_[step] = piv;

    // U row: the pivot row without its pivot entry.
    for (const Entry& e : rows[pr]) {
      if (e.col == pc) continue;
      u_row_index_.push_back(e.col);
      u_row_value_.push_back(e.value);
    }
    u_row_start_.push_back(static_cast<int>(u_row_index_.size()));

    // Take the pivot row out of the active column patterns.
    for (const Entry& e : rows[pr]) {
      if (e.col == pc) continue;
      erase_from_col(e.col, pr);
    }

    // Eliminate column pc from the other rows.
    for (int r : cols[pc]) {
      if (r == pr) continue;
      auto& row = rows[r];
      double a = 0.0;
      for (std::size_t p = 0; p < row.size(); ++p) {
        if (row[p].col == pc) {
          a = row[p].value;
          row[p] = row.back();
          row.pop_back();
          break;
        }
      }
      const double l = a / piv;
      l_index_.push_back(r);
      l_value_.push_back(l);
      if (rows[pr].size() > 1) {
        for (std::size_t p = 0; p < row.size(); ++p) slot[row[p].col] = static_cast<int>(p);
        for (const Entry& e : rows[pr]) {
          if (e.col == pc) continue;
          if (slot[e.col] >= 0) {
            row[slot[e.col]].value -= l * e.value;
          } else {
            slot[e.col] = static_cast<int>(row.size());
            row.push_back({e.col, -l * e.value});
            cols[e.col].push_back(r);
          }
        }
        for (const Entry& e : row) slot[e.col] = -1;
      }
      if (row.size() == 1) row_singletons.push_back(r);
    }
    l_start_.push_back(static_cast<int>(l_index_.size()));

    for (const Entry& e : rows[pr])
      if (e.col != pc && cols[e.col].size() == 1) col_singletons.push_back(e.col);
    row_done[pr] = 1;
    col_done[pc] = 1;
    rows[pr].clear();
    cols[pc].clear();
  }

  // Column-wise copy of U, indexed by step.
  std::vector<int> step_of_col(m);
  for (int k = 0; k < m; ++k) step_of_col[pivot_col_[k]] = k;
  std::vector<int> count(m + 1, 0);
  for (int c : u_row_index_) ++count[step_of_col[c] + 1];
  u_col_start_.assign(m + 1, 0);
  for (int k = 0; k < m; ++k) u_col_start_[k + 1] = u_col_start_[k] + count[k + 1];
  u_col_index_.assign(u_row_index_.size(), 0);
  u_col_value_.assign(u_row_index_.size(), 0.0);
  std::vector<int> next(u_col_start_.begin(), u_col_start_.end() - 1);
  for (int k = 0; k < m; ++k) {
    for (int p = u_row_start_[k]; p < u_row_start_[k + 1]; ++p) {
      const int q = next[step_of_col[u_row_index_[p]]]++;
      u_col_index_[q] = pivot_row_[k];
      u_col_value_[q] = u_row_value_[p];
    }
  }
  return true;
}

void SparseLu::solve(std::vector<double>& x) const {
  for (int k = 0; k < m_; ++k) {
    const double v = x[pivot_row_[k]];
    if (v == 0.0) continue;
    for (int p = l_start_[k]; p < l_start_[k + 1]; ++p) x[l_index_[p]] -= l_value_[p] * v;
  }
  for (int k = m_ - 1; k >= 0; --k) {
    const double y = x[pivot_row_[k]] / pivot_[k];
    work_[pivot_col_[k]] = y;
    if (y == 0.0) continue;
    for (int p = u_col_start_[k]; p < u_col_start_[k + 1]; ++p) x[u_col_index_[p]] -= u_col_value_[p] * y;
  }
  x.swap(work_);
}

void SparseLu::solve_transpose(std::vector<double>& x) const {
  for (int k = 0; k < m_; ++k) {
    const double w = x[pivot_col_[k]] / pivot_[k];
    work_[pivot_row_[k]] = w;
    if (w == 0.0) continue;
    for (int p = u_row_start_[k]; p < u_row_start_[k + 1]; ++p) x[u_row_index_[p]] -= u_row_value_[p] * w;
  }
  for (int k = m_ - 1; k >= 0; --k) {
    double s = work_[pivot_row_[k]];
    for (int p = l_start_[k]; p < l_start_[k + 1]; ++p) s -= l_value_[p] * work_[l_index_[p]];
    work_[pivot_row_[k]] = s;
  }
  x.swap(work_);
}

}  // namespace bnblab
