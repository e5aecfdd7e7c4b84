#include <bit>
#include <cstring>
#include <limits>
#include <vector>

#include "bnblab/rng.hpp"
#include "bnblab/simd.hpp"
#include "doctest.h"

using namespace bnblab;

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// Values drawn from a small grid so ties and exact zeros are common.
std::vector<double> grid(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) {
    const double u = rng.uniform();
    x = u < 0.3 ? scale * static_cast<double>(rng.range(-3, 3)) : scale * rng.uniform(-1.0, 1.0);
  }
  return v;
}

std::vector<double> signs(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.range(-1, 1));
  return v;
}

std::vector<const simd::KernelTable*> variants() {
  std::vector<const simd::KernelTable*> out{&simd::scalar_kernels()};
#if defined(BNBLAB_HAVE_AVX2)
  if (simd::cpu_has_avx2()) out.push_back(&simd::avx2_kernels());
#endif
  return out;
}

}  // namespace

TEST_CASE("scalar kernels compute the documented quantities") {
  const auto& k = simd::scalar_kernels();
  std::vector<double> x{1, 2, 3, 4, 5}, y{1, 1, 1, 1, 1};
  k.axpy(2.0, x.data(), y.data(), x.size());
  CHECK(y == std::vector<double>{3, 5, 7, 9, 11});
  CHECK(k.dot(x.data(), x.data(), 5) == 55.0);

  std::vector<double> v{0.5, -1.0, 2.0, 2.0}, lo{0, 0, 0, 0}, hi{1, 1, 1.5, 1.5};
  auto mv = k.max_violation(v.data(), lo.data(), hi.data(), 1e-9, 4);
  CHECK(mv.index == 1);  // lo - x = 1.0 beats x - hi = 0.5
  CHECK(mv.value == 1.0);
  std::vector<double> ok{0.5, 0.5};
  CHECK(k.max_violation(ok.data(), lo.data(), hi.data(), 1e-9, 2).index == -1);

  // Harris: columns at lower (+1) need dir*alpha > 0.
  std::vector<double> d{1.0, 2.0, 0.5}, alpha{1.0, 1.0, -1.0}, sgn{1.0, 1.0, 1.0};
  CHECK(k.harris_bound(d.data(), alpha.data(), sgn.data(), 1.0, 0.0, 1e-9, 3) == 1.0);
  auto sel = k.harris_select(d.data(), alpha.data(), sgn.data(), 1.0, 1.0, 1e-9, 3);
  CHECK(sel.index == 0);
  CHECK(k.harris_bound(d.data(), alpha.data(), sgn.data(), -1.0, 0.0, 1e-9, 3) == 0.5);
  std::vector<double> none{0.0, 0.0, 0.0};
  CHECK(k.harris_bound(d.data(), alpha.data(), none.data(), 1.0, 0.0, 1e-9, 3) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("vector kernels are bit-identical to the scalar reference") {
  const auto all = variants();
  MESSAGE("kernel variants under test: " << all.size() << ", active = " << simd::active().name);
  Rng rng(20240611);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.range(0, 67));
    const auto x = grid(rng, n, 3.0);
    const auto y0 = grid(rng, n, 5.0);
    const auto lo = grid(rng, n, 1.0);
    auto hi = grid(rng, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) hi[i] = std::max(hi[i], lo[i]);
    const auto d = grid(rng, n, 2.0);
    const auto alpha = grid(rng, n, 2.0);
    const auto sg = signs(rng, n);
    const double a = rng.uniform(-2.0, 2.0);
    const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;

    const auto& ref = *all.front();
    std::vector<double> y_ref = y0;
    ref.axpy(a, x.data(), y_ref.data(), n);
    const double dot_ref = ref.dot(x.data(), y0.data(), n);
    const auto mv_ref = ref.max_violation(x.data(), lo.data(), hi.data(), 1e-7, n);
    std::vector<double> w(n);
    for (auto& v : w) v = rng.uniform() < 0.3 ? 1.0 : rng.uniform(0.5, 4.0);
    const auto mw_ref = ref.max_weighted_violation(x.data(), lo.data(), hi.data(), w.data(), 1e-7, n);
    const double hb_ref = ref.harris_bound(d.data(), alpha.data(), sg.data(), dir, 1e-7, 1e-9, n);
    const auto hs_ref = ref.harris_select(d.data(), alpha.data(), sg.data(), dir, hb_ref, 1e-9, n);

    for (const auto* table : all) {
      CAPTURE(table->name);
      CAPTURE(n);
      std::vector<double> y = y0;
      table->axpy(a, x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(same_bits(y[i], y_ref[i]));
      REQUIRE(same_bits(table->dot(x.data(), y0.data(), n), dot_ref));
      const auto mv = table->max_violation(x.data(), lo.data(), hi.data(), 1e-7, n);
      REQUIRE(mv.index == mv_ref.index);
      REQUIRE(same_bits(mv.value, mv_ref.value));
      const auto mw = table->max_weighted_violation(x.data(), lo.data(), hi.data(), w.data(), 1e-7, n);
      REQUIRE(mw.index == mw_ref.index);
      REQUIRE(same_bits(mw.value, mw_ref.value));
      REQUIRE(same_bits(table->harris_bound(d.data(), alpha.data(), sg.data(), dir, 1e-7, 1e-9, n),
                        hb_ref));
      const auto hs = table->harris_select(d.data(), alpha.data(), sg.data(), dir, hb_ref, 1e-9, n);
      REQUIRE(hs.index == hs_ref.index);
      REQUIRE(same_bits(hs.value, hs_ref.value));
    }
  }
}

TEST_CASE("argmax kernels break ties toward the smallest index") {
  for (const auto* table : variants()) {
    CAPTURE(table->name);
    std::vector<double> x(13, 2.0), lo(13, 0.0), hi(13, 1.0);
    CHECK(table->max_violation(x.data(), lo.data(), hi.data(), 1e-9, 13).index == 0);
    x[9] = 3.0;
    x[5] = 3.0;
    CHECK(table->max_violation(x.data(), lo.data(), hi.data(), 1e-9, 13).index == 5);
    std::vector<double> w(13, 1.0);
    CHECK(table->max_weighted_violation(x.data(), lo.data(), hi.data(), w.data(), 1e-9, 13).index == 5);
    w[5] = 2.0;
    CHECK(table->max_weighted_violation(x.data(), lo.data(), hi.data(), w.data(), 1e-9, 13).index == 9);

    std::vector<double> d(11, 0.0), alpha(11, 1.0), sg(11, 1.0);
    alpha[7] = 4.0;
    alpha[3] = 4.0;
    CHECK(table->harris_select(d.data(), alpha.data(), sg.data(), 1.0, 0.0, 1e-9, 11).index == 3);
  }
}
