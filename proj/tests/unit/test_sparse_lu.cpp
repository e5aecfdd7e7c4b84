#include <cmath>

#include "bnblab/rng.hpp"
#include "bnblab/sparse_lu.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bnblab;

namespace {

struct Csc {
  std::vector<int> start{0}, row;
  std::vector<double> val;
};

Csc to_csc(const std::vector<std::vector<double>>& a) {
  Csc c;
  const int m = static_cast<int>(a.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i)
      if (a[i][j] != 0.0) {
        c.row.push_back(i);
        c.val.push_back(a[i][j]);
      }
    c.start.push_back(static_cast<int>(c.row.size()));
  }
  return c;
}

// Sparse random matrix with a unit-ish diagonal mixed in so most draws are
// nonsingular; columns of -1 slacks mimic simplex bases.
std::vector<std::vector<double>> random_basis(Rng& rng, int m) {
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  for (int j = 0; j < m; ++j) {
    if (rng.uniform() < 0.3) {
      a[j][j] = -1.0;
      continue;
    }
    a[rng.range(0, m - 1)][j] = rng.uniform(-4, 4);
    for (int i = 0; i < m; ++i)
      if (rng.uniform() < 0.25) a[i][j] = rng.range(-3, 3);
  }
  return a;
}

}  // namespace

TEST_CASE("solves agree with dense elimination") {
  Rng rng(31);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = rng.range(1, 12);
    const auto a = random_basis(rng, m);
    std::vector<double> b(m);
    for (auto& v : b) v = rng.uniform() < 0.4 ? 0.0 : rng.uniform(-5, 5);

    std::vector<double> dense_x;
    const bool dense_ok = oracle::solve_square(a, b, dense_x);
    const Csc c = to_csc(a);
    SparseLu lu;
    const bool ok = lu.factorize(m, c.start, c.row, c.val);
    if (!dense_ok || !ok) continue;
    ++solved;

    std::vector<double> x = b;
    lu.solve(x);
    for (int i = 0; i < m; ++i) CHECK(x[i] == doctest::Approx(dense_x[i]).epsilon(1e-8));

    // Transpose: A^T y = b.
    std::vector<std::vector<double>> at(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) at[i][j] = a[j][i];
    std::vector<double> dense_y;
    REQUIRE(oracle::solve_square(at, b, dense_y));
    std::vector<double> y = b;
    lu.solve_transpose(y);
    for (int i = 0; i < m; ++i) CHECK(y[i] == doctest::Approx(dense_y[i]).epsilon(1e-8));
  }
  CHECK(solved > 100);
}

TEST_CASE("singular matrices are reported") {
  std::vector<std::vector<double>> a{{1, 2}, {2, 4}};
  const Csc c = to_csc(a);
  SparseLu lu;
  CHECK_FALSE(lu.factorize(2, c.start, c.row, c.val));
  std::vector<std::vector<double>> z{{0, 0}, {0, 1}};
  const Csc cz = to_csc(z);
  CHECK_FALSE(lu.factorize(2, cz.start, cz.row, cz.val));
}
