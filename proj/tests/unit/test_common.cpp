#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <set>

#include "anemiakit/common.hpp"

using namespace anemiakit;

TEST_CASE("rng streams are reproducible and seed dependent") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
}

TEST_CASE("uniform and below stay in range") {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7u);
  }
}

TEST_CASE("normal draws have roughly unit moments") {
  Rng r(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  Rng r(5);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.shuffle(v);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
}

TEST_CASE("derived seeds depend on label and coordinates") {
  const auto s = derive_seed(1, "cv", 0, 0);
  CHECK(s == derive_seed(1, "cv", 0, 0));
  CHECK(s != derive_seed(1, "cv", 1, 0));
  CHECK(s != derive_seed(1, "cv", 0, 1));
  CHECK(s != derive_seed(1, "split", 0, 0));
  CHECK(s != derive_seed(2, "cv", 0, 0));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int jobs : {1, 3}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, jobs, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](std::size_t i) {
                                 if (i == 4) throw Error(ErrorCode::kNumeric, "boom");
                               }),
                  Error);
}

TEST_CASE("sigmoid is stable at the extremes") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("error codes have names") {
  CHECK(error_code_name(ErrorCode::kInfeasible) == "infeasible");
  CHECK(error_code_name(ErrorCode::kInternal) == "internal");
}
