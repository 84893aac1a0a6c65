#include <algorithm>
#include <set>
#include <vector>

#include <doctest.h>

#include "corpusgen/rng.hpp"

using namespace corpusgen;

TEST_CASE("core stream matches the published splitmix64 reference") {
  SplitRng r0(0);
  CHECK(r0.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(r0.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(r0.next_u64() == 0x06c45d188009454fULL);

  SplitRng r42(42);
  CHECK(r42.next_u64() == 0xbdd732262feb6e95ULL);
  CHECK(r42.next_u64() == 0x28efe333b266f103ULL);
}

TEST_CASE("same seed gives the same stream") {
  SplitRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("split derives from the seed, not from consumption state") {
  SplitRng fresh(777);
  SplitRng drained(777);
  for (int i = 0; i < 50; ++i) drained.next_u64();
  CHECK(fresh.split("stage").next_u64() == drained.split("stage").next_u64());
  CHECK(fresh.split("stage", 3).next_u64() ==
        drained.split("stage", 3).next_u64());
}

TEST_CASE("split streams differ across tags, indices and parents") {
  SplitRng r(9);
  std::set<std::uint64_t> firsts;
  firsts.insert(r.split("a").next_u64());
  firsts.insert(r.split("b").next_u64());
  firsts.insert(r.split("a", 0).next_u64());
  firsts.insert(r.split("a", 1).next_u64());
  firsts.insert(SplitRng(10).split("a").next_u64());
  CHECK(firsts.size() == 5);
}

TEST_CASE("next_below stays in range and reaches every value") {
  SplitRng r(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t v = r.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(r.next_below(1) == 0);
}

TEST_CASE("next_double and uniform stay inside their intervals") {
  SplitRng r(11);
  for (int i = 0; i < 1000; ++i) {
    double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    double u = r.uniform(-0.08, 0.08);
    CHECK(u >= -0.08);
    CHECK(u <= 0.08);
  }
}

TEST_CASE("shuffle permutes deterministically") {
  std::vector<int> v(20);
  for (int i = 0; i < 20; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> a = v, b = v, c = v;
  SplitRng(3).shuffle(a);
  SplitRng(3).shuffle(b);
  SplitRng(4).shuffle(c);
  CHECK(a == b);
  CHECK(a != c);
  std::sort(a.begin(), a.end());
  CHECK(a == v);
}

TEST_CASE("string hash matches the published FNV-1a vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
}
