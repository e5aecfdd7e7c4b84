#pragma once

// Dense vector kernels used by the simplex inner loops.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variants are bit-identical to the reference: elementwise
// kernels use the same operation order without FMA contraction, reductions
// use four interleaved partial sums combined as (s0 + s1) + (s2 + s3), and
// argmin/argmax kernels break ties towards the smallest index.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace bnblab::simd {

/// Result of an index-returning scan. index == -1 when nothing qualified.
struct IndexedValue {
  std::ptrdiff_t index = -1;
  double value = 0.0;
};

/// Function table for one instruction-set level.
struct KernelTable {
  std::string_view name;

  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  /// Four-lane blocked dot product.
  double (*dot)(const double* x, const double* y, std::size_t n);

  /// max over i of max(lo[i] - x[i], x[i] - hi[i]) restricted to values > tol.
  /// Returns the first index attaining the maximum.
  IndexedValue (*max_violation)(const double* x, const double* lo, const double* hi,
                                double tol, std::size_t n);

  /// Pricing form of max_violation: among i with violation v > tol, the first
  /// maximizing v * v / w[i]. value = that ratio.
  IndexedValue (*max_weighted_violation)(const double* x, const double* lo, const double* hi,
                                         const double* w, double tol, std::size_t n);

  /// Harris pass one of the bounded dual ratio test.
  ///   eligible(j)  : sgn[j] * dir * alpha[j] > piv_tol
  ///   bound        : min over eligible of (sgn[j] * d[j] + tol) / (sgn[j] * dir * alpha[j])
  /// sgn[j] is +1 (nonbasic at lower), -1 (at upper) or 0 (ineligible).
  /// Returns +inf when no column is eligible.
  double (*harris_bound)(const double* d, const double* alpha, const double* sgn, double dir,
                         double tol, double piv_tol, std::size_t n);

  /// Harris pass two: among eligible columns with ratio
  /// (sgn[j] * d[j]) / (sgn[j] * dir * alpha[j]) <= bound, the one with the
  /// largest |alpha[j]|; ties to the smallest index. value = |alpha|.
  IndexedValue (*harris_select)(const double* d, const double* alpha, const double* sgn,
                                double dir, double bound, double piv_tol, std::size_t n);
};

const KernelTable& scalar_kernels();

#if defined(BNBLAB_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool cpu_has_avx2();

/// Table selected at first use: AVX2 when the CPU supports it, unless the
/// environment variable BNBLAB_SIMD=scalar forces the reference path.
const KernelTable& active();

// Convenience wrappers over active().
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

}  // namespace bnblab::simd
