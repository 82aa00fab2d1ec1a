#include <doctest.h>

#include <cmath>

#include "smm/rng.hpp"

using namespace smm;

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs = differs || va != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("uniform01 stays in [0,1) with a sane mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("uniform_int covers the inclusive range") {
  Rng rng(11);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) {
    const int v = rng.uniform_int(1, 5);
    REQUIRE(v >= 1);
    REQUIRE(v <= 5);
    counts[v - 1]++;
  }
  for (int c : counts) {
    CHECK(std::abs(c / 50000.0 - 0.2) < 0.01);
  }
}

TEST_CASE("gaussian matches its first two moments") {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian(3.0, 2.0);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 3.0) < 0.02);
  CHECK(std::abs(var - 4.0) < 0.08);
}

TEST_CASE("state round-trips and resumes the same stream") {
  Rng rng(99);
  for (int i = 0; i < 13; ++i) {
    rng.next_u64();
  }
  const auto saved = rng.state();
  Rng resumed;
  resumed.set_state(saved);
  for (int i = 0; i < 50; ++i) {
    CHECK(rng.next_u64() == resumed.next_u64());
  }
}

TEST_CASE("mix_seed separates grid cells") {
  CHECK(Rng::mix_seed(1, 0, 1) != Rng::mix_seed(1, 0, 2));
  CHECK(Rng::mix_seed(1, 0, 1) != Rng::mix_seed(1, 20000, 1));
  CHECK(Rng::mix_seed(1, 0, 1) == Rng::mix_seed(1, 0, 1));
}
