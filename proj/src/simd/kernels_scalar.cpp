#include "bnblab/simd.hpp"

#include <limits>

namespace bnblab::simd {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    s[0] = s[0] + x[i] * y[i];
    s[1] = s[1] + x[i + 1] * y[i + 1];
    s[2] = s[2] + x[i + 2] * y[i + 2];
    s[3] = s[3] + x[i + 3] * y[i + 3];
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (std::size_t i = n4; i < n; ++i) total = total + x[i] * y[i];
  return total;
}

IndexedValue max_violation_scalar(const double* x, const double* lo, const double* hi, double tol,
                                  std::size_t n) {
  IndexedValue best{-1, tol};
  for (std::size_t i = 0; i < n; ++i) {
    const double below = lo[i] - x[i];
    const double above = x[i] - hi[i];
    const double v = below > above ? below : above;
    if (v > best.value) best = {static_cast<std::ptrdiff_t>(i), v};
  }
  return best;
}

IndexedValue max_weighted_violation_scalar(const double* x, const double* lo, const double* hi,
                                           const double* w, double tol, std::size_t n) {
  IndexedValue best{-1, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double below = lo[i] - x[i];
    const double above = x[i] - hi[i];
    const double v = below > above ? below : above;
    if (!(v > tol)) continue;
    const double score = v * v / w[i];
    if (score > best.value) best = {static_cast<std::ptrdiff_t>(i), score};
  }
  return best;
}

double harris_bound_scalar(const double* d, const double* alpha, const double* sgn, double dir,
                           double tol, double piv_tol, std::size_t n) {
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double sa = (sgn[j] * dir) * alpha[j];
    if (!(sa > piv_tol)) continue;
    const double r = (sgn[j] * d[j] + tol) / sa;
    if (r < bound) bound = r;
  }
  return bound;
}

IndexedValue harris_select_scalar(const double* d, const double* alpha, const double* sgn,
                                  double dir, double bound, double piv_tol, std::size_t n) {
  IndexedValue best{-1, 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    const double sa = (sgn[j] * dir) * alpha[j];
    if (!(sa > piv_tol)) continue;
    const double r = (sgn[j] * d[j]) / sa;
    if (r <= bound && sa > best.value) best = {static_cast<std::ptrdiff_t>(j), sa};
  }
  return best;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",           axpy_scalar,         dot_scalar,
                                 max_violation_scalar, max_weighted_violation_scalar,
                                 harris_bound_scalar, harris_select_scalar};
  return table;
}

}  // namespace bnblab::simd
