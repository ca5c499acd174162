#include <cmath>
#include <cstdint>
#include <set>

#include "doctest.h"
#include "qtomo/rng.hpp"

using namespace qtomo;

TEST_CASE("splitmix64 matches the published reference stream") {
  // First outputs for state = 0, from the reference implementation.
  std::uint64_t state = 0;
  CHECK(rng::splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(rng::splitmix64(state) == 0x6e789e6aa1b965f4ULL);
  CHECK(rng::splitmix64(state) == 0x06c45d188009454fULL);
  CHECK(rng::splitmix64(state) == 0xf88bb8a8724c81ecULL);
}

TEST_CASE("xoshiro256++ streams are deterministic per seed") {
  rng::Xoshiro256pp a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t va = a.next();
    all_equal = all_equal && (va == b.next());
    any_diff = any_diff || (va != c.next());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform lies in [0,1) and fills the range") {
  rng::Xoshiro256pp gen(7);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = gen.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal has standard moments") {
  rng::Xoshiro256pp gen(11);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = gen.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cnormal parts are independent standard normals") {
  rng::Xoshiro256pp gen(13);
  const int n = 100000;
  double sr = 0, si = 0, srr = 0, sii = 0, sri = 0;
  for (int i = 0; i < n; ++i) {
    auto z = gen.cnormal();
    sr += z.real();
    si += z.imag();
    srr += z.real() * z.real();
    sii += z.imag() * z.imag();
    sri += z.real() * z.imag();
  }
  CHECK(std::abs(sr / n) < 0.02);
  CHECK(std::abs(si / n) < 0.02);
  CHECK(srr / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(sii / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs(sri / n) < 0.02);  // uncorrelated
}

TEST_CASE("below is unbiased and in range") {
  rng::Xoshiro256pp gen(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    std::uint64_t v = gen.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - n / 7) < 600);
}

TEST_CASE("fork gives decorrelated but reproducible substreams") {
  rng::Xoshiro256pp a(5);
  rng::Xoshiro256pp f1 = a.fork(1);
  rng::Xoshiro256pp a2(5);
  rng::Xoshiro256pp f1b = a2.fork(1);
  rng::Xoshiro256pp f2 = a2.fork(2);
  CHECK(f1.next() == f1b.next());
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs = differs || (f1.next() != f2.next());
  CHECK(differs);
}

TEST_CASE("sample_without_replacement is sorted, distinct and in range") {
  rng::Xoshiro256pp gen(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto s = rng::sample_without_replacement(5, 16, gen);
    REQUIRE(s.size() == 5);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i] < 16);
      if (i > 0) CHECK(s[i] > s[i - 1]);
      seen.insert(s[i]);
    }
    CHECK(seen.size() == 5);
  }
  // k = n covers everything.
  auto full = rng::sample_without_replacement(16, 16, gen);
  for (std::size_t i = 0; i < 16; ++i) CHECK(full[i] == i);
}

TEST_CASE("sample_without_replacement covers all subsets") {
  rng::Xoshiro256pp gen(29);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (int rep = 0; rep < 2000; ++rep) {
    auto s = rng::sample_without_replacement(2, 4, gen);
    seen.insert({s[0], s[1]});
  }
  CHECK(seen.size() == 6);  // C(4,2)
}
