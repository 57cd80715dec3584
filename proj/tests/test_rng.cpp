#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sgrec/rng.hpp"

using namespace sgrec;

TEST_CASE("same seed reproduces the same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ from each other") {
  Rng a = Rng::derive(1, rng_streams::kEps, 3, 5);
  Rng b = Rng::derive(1, rng_streams::kEps, 3, 6);
  Rng c = Rng::derive(1, rng_streams::kDropout, 3, 5);
  CHECK(a.next_u64() != b.next_u64());
  Rng a2 = Rng::derive(1, rng_streams::kEps, 3, 5);
  CHECK(a2.next_u64() != c.next_u64());
}

TEST_CASE("next_below is unbiased enough") {
  Rng rng(9);
  const int bound = 10, draws = 100000;
  std::vector<int> hist(bound, 0);
  for (int i = 0; i < draws; ++i) ++hist[rng.next_below(bound)];
  // Binomial(n, 1/10): sd ~ 95; allow 5 sigma.
  const double expect = draws / static_cast<double>(bound);
  const double sd = std::sqrt(draws * 0.1 * 0.9);
  for (const int h : hist) CHECK(std::abs(h - expect) < 5 * sd);
}

TEST_CASE("normal draws have the right moments") {
  Rng rng(17);
  const int n = 100000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));           // se of mean = 1/sqrt(n)
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));  // se of var ~ sqrt(2/n)
}

TEST_CASE("sample_without_replacement returns distinct pool elements") {
  Rng rng(23);
  std::vector<int> pool;
  for (int i = 0; i < 50; ++i) pool.push_back(i * 3);
  const auto picked = rng.sample_without_replacement(pool, 20);
  CHECK(picked.size() == 20);
  std::set<int> uniq(picked.begin(), picked.end());
  CHECK(uniq.size() == 20);
  for (const int x : picked) CHECK(x % 3 == 0);

  const auto all = rng.sample_without_replacement(pool, 500);
  CHECK(all.size() == pool.size());
}
