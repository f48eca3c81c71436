#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "safe/random.hpp"

TEST_CASE("streams are reproducible from the seed") {
  safe::RandomStream a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);
}

TEST_CASE("uniform lies in [0, 1) with mean 1/2") {
  safe::RandomStream r(1);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12 / n) ~ 6.5e-4
  CHECK(std::abs(sum / n - 0.5) < 4 * 6.5e-4);
}

TEST_CASE("normal has zero mean and unit variance") {
  safe::RandomStream r(2);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(safe::RandomStream(5).normal(3.0) == doctest::Approx(3.0 * safe::RandomStream(5).normal()));
}

TEST_CASE("hashed_normal is a pure function with normal moments") {
  CHECK(safe::hashed_normal(1, 2) == safe::hashed_normal(1, 2));
  CHECK(safe::hashed_normal(1, 2) != safe::hashed_normal(2, 2));
  const int n = 100000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = safe::hashed_normal(77, static_cast<std::uint64_t>(i));
    s += x;
    ss += x * x;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(ss / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("derived seeds are distinct per stream") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base)
    for (std::uint64_t stream = 0; stream < 50; ++stream) seen.insert(safe::derive_seed(base, stream));
  CHECK(seen.size() == 1000);
}
