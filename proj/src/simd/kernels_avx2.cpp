#include "bnblab/simd.hpp"

#include <immintrin.h>

#include <limits>

namespace bnblab::simd {
namespace {

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (std::size_t i = n4; i < n; ++i) total = total + x[i] * y[i];
  return total;
}

// Reduce per-lane (value, index) candidates: largest value, ties to the
// smallest index. Lanes with index -1 hold nothing.
IndexedValue reduce_lanes(__m256d vbest, __m256d vidx, IndexedValue init) {
  alignas(32) double val[4];
  alignas(32) double idx[4];
  _mm256_store_pd(val, vbest);
  _mm256_store_pd(idx, vidx);
  IndexedValue best = init;
  for (int l = 0; l < 4; ++l) {
    if (idx[l] < 0) continue;
    const auto li = static_cast<std::ptrdiff_t>(idx[l]);
    if (best.index < 0 || val[l] > best.value || (val[l] == best.value && li < best.index))
      best = {li, val[l]};
  }
  return best;
}

IndexedValue max_violation_avx2(const double* x, const double* lo, const double* hi, double tol,
                                std::size_t n) {
  __m256d vbest = _mm256_set1_pd(tol);
  __m256d vidx = _mm256_set1_pd(-1.0);
  __m256d vcur = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d below = _mm256_sub_pd(_mm256_loadu_pd(lo + i), vx);
    const __m256d above = _mm256_sub_pd(vx, _mm256_loadu_pd(hi + i));
    // below > above ? below : above
    const __m256d v = _mm256_blendv_pd(above, below, _mm256_cmp_pd(below, above, _CMP_GT_OQ));
    const __m256d better = _mm256_cmp_pd(v, vbest, _CMP_GT_OQ);
    vbest = _mm256_blendv_pd(vbest, v, better);
    vidx = _mm256_blendv_pd(vidx, vcur, better);
    vcur = _mm256_add_pd(vcur, four);
  }
  IndexedValue best = reduce_lanes(vbest, vidx, {-1, tol});
  for (; i < n; ++i) {
    const double below = lo[i] - x[i];
    const double above = x[i] - hi[i];
    const double v = below > above ? below : above;
    if (v > best.value) best = {static_cast<std::ptrdiff_t>(i), v};
  }
  return best;
}

IndexedValue max_weighted_violation_avx2(const double* x, const double* lo, const double* hi,
                                         const double* w, double tol, std::size_t n) {
  __m256d vbest = _mm256_setzero_pd();
  __m256d vidx = _mm256_set1_pd(-1.0);
  __m256d vcur = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d vtol = _mm256_set1_pd(tol);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d below = _mm256_sub_pd(_mm256_loadu_pd(lo + i), vx);
    const __m256d above = _mm256_sub_pd(vx, _mm256_loadu_pd(hi + i));
    const __m256d v = _mm256_blendv_pd(above, below, _mm256_cmp_pd(below, above, _CMP_GT_OQ));
    const __m256d ok = _mm256_cmp_pd(v, vtol, _CMP_GT_OQ);
    const __m256d score = _mm256_div_pd(_mm256_mul_pd(v, v), _mm256_loadu_pd(w + i));
    const __m256d better = _mm256_and_pd(ok, _mm256_cmp_pd(score, vbest, _CMP_GT_OQ));
    vbest = _mm256_blendv_pd(vbest, score, better);
    vidx = _mm256_blendv_pd(vidx, vcur, better);
    vcur = _mm256_add_pd(vcur, four);
  }
  IndexedValue best = reduce_lanes(vbest, vidx, {-1, 0.0});
  for (; i < n; ++i) {
    const double below = lo[i] - x[i];
    const double above = x[i] - hi[i];
    const double v = below > above ? below : above;
    if (!(v > tol)) continue;
    const double score = v * v / w[i];
    if (score > best.value) best = {static_cast<std::ptrdiff_t>(i), score};
  }
  return best;
}

double harris_bound_avx2(const double* d, const double* alpha, const double* sgn, double dir,
                         double tol, double piv_tol, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  const __m256d vdir = _mm256_set1_pd(dir);
  const __m256d vtol = _mm256_set1_pd(tol);
  const __m256d vpiv = _mm256_set1_pd(piv_tol);
  const __m256d vinf = _mm256_set1_pd(inf);
  __m256d vbound = vinf;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vs = _mm256_loadu_pd(sgn + j);
    const __m256d sa = _mm256_mul_pd(_mm256_mul_pd(vs, vdir), _mm256_loadu_pd(alpha + j));
    const __m256d ok = _mm256_cmp_pd(sa, vpiv, _CMP_GT_OQ);
    const __m256d num = _mm256_add_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(d + j)), vtol);
    const __m256d r = _mm256_blendv_pd(vinf, _mm256_div_pd(num, sa), ok);
    vbound = _mm256_min_pd(vbound, r);
  }
  alignas(32) double b[4];
  _mm256_store_pd(b, vbound);
  double bound = inf;
  for (double v : b)
    if (v < bound) bound = v;
  for (; j < n; ++j) {
    const double sa = (sgn[j] * dir) * alpha[j];
    if (!(sa > piv_tol)) continue;
    const double r = (sgn[j] * d[j] + tol) / sa;
    if (r < bound) bound = r;
  }
  return bound;
}

IndexedValue harris_select_avx2(const double* d, const double* alpha, const double* sgn,
                                double dir, double bound, double piv_tol, std::size_t n) {
  const __m256d vdir = _mm256_set1_pd(dir);
  const __m256d vpiv = _mm256_set1_pd(piv_tol);
  const __m256d vbound = _mm256_set1_pd(bound);
  __m256d vbest = _mm256_setzero_pd();
  __m256d vidx = _mm256_set1_pd(-1.0);
  __m256d vcur = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vs = _mm256_loadu_pd(sgn + j);
    const __m256d sa = _mm256_mul_pd(_mm256_mul_pd(vs, vdir), _mm256_loadu_pd(alpha + j));
    const __m256d ok = _mm256_cmp_pd(sa, vpiv, _CMP_GT_OQ);
    const __m256d r = _mm256_div_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(d + j)), sa);
    const __m256d within = _mm256_cmp_pd(r, vbound, _CMP_LE_OQ);
    const __m256d larger = _mm256_cmp_pd(sa, vbest, _CMP_GT_OQ);
    const __m256d take = _mm256_and_pd(_mm256_and_pd(ok, within), larger);
    vbest = _mm256_blendv_pd(vbest, sa, take);
    vidx = _mm256_blendv_pd(vidx, vcur, take);
    vcur = _mm256_add_pd(vcur, four);
  }
  IndexedValue best = reduce_lanes(vbest, vidx, {-1, 0.0});
  for (; j < n; ++j) {
    const double sa = (sgn[j] * dir) * alpha[j];
    if (!(sa > piv_tol)) continue;
    const double r = (sgn[j] * d[j]) / sa;
    if (r <= bound && sa > best.value) best = {static_cast<std::ptrdiff_t>(j), sa};
  }
  return best;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2",           axpy_avx2,         dot_avx2,
                                 max_violation_avx2, max_weighted_violation_avx2,
                                 harris_bound_avx2, harris_select_avx2};
  return table;
}

}  // namespace bnblab::simd
