#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bnblab/forest.hpp"
#include "bnblab/rng.hpp"
#include "doctest.h"

using namespace bnblab;

namespace {

struct Data {
  std::vector<FeatureVector> x;
  std::vector<double> y;
};

Data make_data(std::uint64_t seed, int n, auto target) {
  Rng rng(seed);
  Data d;
  for (int i = 0; i < n; ++i) {
    FeatureVector f;
    for (double& v : f) v = rng.uniform();
    d.x.push_back(f);
    d.y.push_back(target(f, rng));
  }
  return d;
}

// Mean squared error of predicting the sample mean, computed independently.
double mean_predictor_mse(const std::vector<double>& y) {
  long double m = 0;
  for (double v : y) m += v;
  m /= y.size();
  long double s = 0;
  for (double v : y) s += (v - m) * (v - m);
  return static_cast<double>(s / y.size());
}

int count_samples_reaching(const Tree& t, int node, const std::vector<FeatureVector>& x) {
  int c = 0;
  for (const auto& f : x) {
    int i = 0;
    while (true) {
      if (i == node) {
        ++c;
        break;
      }
      if (t.feature[i] < 0) break;
      i = f[t.feature[i]] <= t.threshold[i] ? t.left[i] : t.right[i];
    }
  }
  return c;
}

}  // namespace

TEST_CASE("constant targets give the constant exactly") {
  auto d = make_data(1, 60, [](const FeatureVector&, Rng&) { return 3.7; });
  const Forest f = Forest::fit(d.x, d.y, {}, 9);
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    FeatureVector q;
    for (double& v : q) v = rng.uniform(-5, 5);
    CHECK(f.predict(q) == 3.7);
  }
}

TEST_CASE("single sample gives single-leaf trees") {
  std::vector<FeatureVector> x(1);
  x[0].fill(0.25);
  std::vector<double> y{-1.5};
  const Forest f = Forest::fit(x, y, {}, 3);
  for (const Tree& t : f.trees()) CHECK(t.size() == 1);
  CHECK(f.predict(x[0]) == -1.5);
}

TEST_CASE("empty sample set is rejected") {
  std::vector<FeatureVector> x;
  std::vector<double> y;
  CHECK_THROWS_AS(Forest::fit(x, y, {}, 1), ForestError);
}

TEST_CASE("fractionality signal is learned better than the mean") {
  auto d = make_data(4, 200, [](const FeatureVector& f, Rng&) { return f[7]; });
  Hyperparams hp;
  hp.max_depth = 12;
  const Forest f = Forest::fit(d.x, d.y, hp, 17);
  CHECK(mean_squared_error(f, d.x, d.y) < mean_predictor_mse(d.y));
}

TEST_CASE("structure invariants") {
  auto d = make_data(5, 300, [](const FeatureVector& f, Rng& r) { return f[2] * 3 + r.uniform(); });
  Hyperparams hp{10, 7, 6, 4};
  const Forest f = Forest::fit(d.x, d.y, hp, 8);
  REQUIRE(f.trees().size() == 10);
  const double lo = *std::min_element(d.y.begin(), d.y.end());
  const double hi = *std::max_element(d.y.begin(), d.y.end());
  for (const Tree& t : f.trees()) {
    CHECK(t.depth() <= hp.max_depth);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.feature[i] < 0) {
        // Leaf value is the mean of the targets routed to it.
        long double s = 0;
        int c = 0;
        for (std::size_t k = 0; k < d.x.size(); ++k) {
          int n = 0;
          while (t.feature[n] >= 0) n = d.x[k][t.feature[n]] <= t.threshold[n] ? t.left[n] : t.right[n];
          if (n == static_cast<int>(i)) {
            s += d.y[k];
            ++c;
          }
        }
        REQUIRE(c > 0);
        CHECK(t.value[i] == doctest::Approx(static_cast<double>(s / c)).epsilon(1e-12));
        continue;
      }
      CHECK(t.left[i] > static_cast<int>(i));
      CHECK(t.right[i] > static_cast<int>(i));
      CHECK(count_samples_reaching(t, static_cast<int>(i), d.x) >= hp.min_split);
    }
  }
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    FeatureVector q;
    for (double& v : q) v = rng.uniform(-1, 2);
    const double p = f.predict(q);
    CHECK(p >= lo);
    CHECK(p <= hi);
  }
}

TEST_CASE("variance reduction at every split is non-negative") {
  auto d = make_data(6, 250, [](const FeatureVector& f, Rng& r) { return f[0] - f[3] + 0.1 * r.uniform(); });
  const Forest f = Forest::fit(d.x, d.y, {5, 5, 10, 4}, 2);
  for (const Tree& t : f.trees()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.feature[i] < 0) continue;
      std::vector<double> all, left, right;
      for (std::size_t k = 0; k < d.x.size(); ++k) {
        int n = 0;
        bool reached = false;
        while (true) {
          if (n == static_cast<int>(i)) {
            reached = true;
            break;
          }
          if (t.feature[n] < 0) break;
          n = d.x[k][t.feature[n]] <= t.threshold[n] ? t.left[n] : t.right[n];
        }
        if (!reached) continue;
        all.push_back(d.y[k]);
        (d.x[k][t.feature[i]] <= t.threshold[i] ? left : right).push_back(d.y[k]);
      }
      REQUIRE(!left.empty());
      REQUIRE(!right.empty());
      const double before = mean_predictor_mse(all) * all.size();
      const double after = mean_predictor_mse(left) * left.size() + mean_predictor_mse(right) * right.size();
      CHECK(before - after >= -1e-9 * (1 + before));
    }
  }
}

TEST_CASE("same seed gives the same forest, different seed a different one") {
  auto d = make_data(7, 120, [](const FeatureVector& f, Rng&) { return f[1] * f[5]; });
  const Forest a = Forest::fit(d.x, d.y, {}, 42);
  const Forest b = Forest::fit(d.x, d.y, {}, 42);
  const Forest c = Forest::fit(d.x, d.y, {}, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("deeper trees never raise training error") {
  auto d = make_data(8, 300, [](const FeatureVector& f, Rng& r) { return std::sin(6 * f[4]) + r.uniform(); });
  double prev = mean_predictor_mse(d.y) * (1 + 1e-12);
  for (int depth = 0; depth <= 14; depth += 2) {
    const Forest f = Forest::fit(d.x, d.y, {25, 2, depth, 4}, 99);
    const double mse = mean_squared_error(f, d.x, d.y);
    CHECK(mse <= prev * (1 + 1e-12) + 1e-15);
    prev = mse;
  }
}

TEST_CASE("prediction does not depend on tree order") {
  auto d = make_data(9, 150, [](const FeatureVector& f, Rng& r) { return f[9] + r.uniform(); });
  Forest f = Forest::fit(d.x, d.y, {}, 5);
  Forest g = f;
  std::reverse(g.mutable_trees().begin(), g.mutable_trees().end());
  std::rotate(g.mutable_trees().begin(), g.mutable_trees().begin() + 7, g.mutable_trees().end());
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    FeatureVector q;
    for (double& v : q) v = rng.uniform();
    CHECK(f.predict(q) == g.predict(q));
  }
}

TEST_CASE("save and load round-trip") {
  auto d = make_data(10, 180, [](const FeatureVector& f, Rng& r) { return 1e3 * f[0] + r.uniform(); });
  const Forest f = Forest::fit(d.x, d.y, {}, 12);
  const auto dir = std::filesystem::temp_directory_path() / "bnblab_test_forest";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.json";
  save_model(f, path);
  const Forest g = load_model(path);
  CHECK(f == g);
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    FeatureVector q;
    for (double& v : q) v = rng.uniform(-1, 2);
    CHECK(f.predict(q) == g.predict(q));
  }

  SUBCASE("tampered version") {
    std::string text = f.to_json();
    const auto pos = text.find(kFeatureLayoutVersion);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, kFeatureLayoutVersion.size(), "phi99-v9");
    CHECK_THROWS_AS(Forest::from_json(text), ForestError);
  }
  SUBCASE("empty file") {
    std::ofstream(dir / "empty.json").close();
    CHECK_THROWS_AS(load_model(dir / "empty.json"), ForestError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cross-validation") {
  SUBCASE("constant targets") {
    auto d = make_data(11, 50, [](const FeatureVector&, Rng&) { return -2.0; });
    for (double mse : cross_validate(d.x, d.y, {}, 5, 1)) CHECK(mse == 0.0);
  }
  SUBCASE("two samples, two folds") {
    auto d = make_data(12, 2, [](const FeatureVector& f, Rng&) { return f[0]; });
    const auto folds = fold_assignment(2, 2, 3);
    CHECK(folds[0] != folds[1]);
    const auto mse = cross_validate(d.x, d.y, {}, 2, 3);
    REQUIRE(mse.size() == 2);
    // Each fold trains on the other sample alone, so it predicts that target.
    const double e = (d.y[0] - d.y[1]) * (d.y[0] - d.y[1]);
    CHECK(mse[0] == doctest::Approx(e));
    CHECK(mse[1] == doctest::Approx(e));
  }
  SUBCASE("linear target beats the variance") {
    auto d = make_data(13, 400, [](const FeatureVector& f, Rng& r) { return 4 * f[6] + 0.1 * r.uniform(); });
    const auto mse = cross_validate(d.x, d.y, {}, 5, 7);
    const double mean = std::accumulate(mse.begin(), mse.end(), 0.0) / mse.size();
    CHECK(mean < mean_predictor_mse(d.y));
  }
  SUBCASE("errors") {
    auto d = make_data(14, 3, [](const FeatureVector&, Rng&) { return 1.0; });
    CHECK_THROWS_AS(cross_validate(d.x, d.y, {}, 1, 1), ForestError);
    CHECK_THROWS_AS(cross_validate(d.x, d.y, {}, 4, 1), ForestError);
  }
  SUBCASE("fold sizes are balanced") {
    const auto f = fold_assignment(23, 5, 9);
    std::vector<int> count(5, 0);
    for (int k : f) ++count[k];
    for (int c : count) CHECK((c == 4 || c == 5));
  }
}
