#pragma once

// Sparse LU of a square matrix for the simplex basis.
//
// Right-looking Gaussian elimination with Markowitz pivot choice and a
// relative threshold. Column and row singletons are taken first, which
// handles the slack-heavy bases of unit-commitment LPs without fill. The
// factors are stored per pivot step so both solves can skip zero entries.

#include <span>
#include <vector>

namespace bnblab {

class SparseLu {
 public:
  /// Factorizes the m x m matrix given in compressed-column form. Returns
  /// false if the matrix is numerically singular.
  bool factorize(int m, std::span<const int> col_start, std::span<const int> row_index,
                 std::span<const double> value);

  /// x := B^-1 x. Input indexed by row, output by column.
  void solve(std::vector<double>& x) const;
  /// x := B^-T x. Input indexed by column, output by row.
  void solve_transpose(std::vector<double>& x) const;

  int size() const { return m_; }
  /// Nonzeros in L and U, pivots included.
  std::size_t fill() const { return l_index_.size() + u_row_index_.size() + m_; }

 private:
  int m_ = 0;
  // Step k pivots on (pivot_row_[k], pivot_col_[k]).
  std::vector<int> pivot_row_, pivot_col_;
  std::vector<double> pivot_;
  // L: multipliers of step k eliminate rows l_index_ using the pivot row.
  std::vector<int> l_start_, l_index_;
  std::vector<double> l_value_;
  // U by step row: columns pivoted after k and their values.
  std::vector<int> u_row_start_, u_row_index_;
  std::vector<double> u_row_value_;
  // U by step column: earlier pivot rows holding an entry in column k.
  std::vector<int> u_col_start_, u_col_index_;
  std::vector<double> u_col_value_;
  mutable std::vector<double> work_;
};

}  // namespace bnblab
