#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <set>
#include <vector>

#include "markov_approx/parallel.hpp"
#include "markov_approx/rng.hpp"

using namespace markov_approx;

TEST_CASE("philox4x32-10 known answers") {
  // reference vectors distributed with the Random123 library
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
  RngStream c(42, 3);
  for (int i = 0; i < 10; ++i) c();
  RngStream d = c;
  CHECK(c() == d());
}

TEST_CASE("distinct streams differ") {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    same_ab += x == b();
    same_ac += x == c();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);

  const RngStream root(7, 0);
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 10000; ++i) ids.insert(root.child(i).stream_id());
  CHECK(ids.size() == 10000);
  CHECK(root.child(5).stream_id() == RngStream(7, 0).child(5).stream_id());
}

TEST_CASE("uniform lies strictly inside (0, 1) with the right moments") {
  RngStream s(1, 0);
  const int m = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(std::abs(sum / m - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / m));
  CHECK(std::abs(sum2 / m - 1.0 / 3.0) < 0.005);
}

TEST_CASE("counter advances one block per two draws") {
  RngStream s(9, 9);
  CHECK(s.counter() == 0);
  s();
  CHECK(s.counter() == 1);
  s();
  CHECK(s.counter() == 1);
  s();
  CHECK(s.counter() == 2);
}

TEST_CASE("parallel_chunks covers every index once, independent of worker count") {
  auto run = [](const char* threads) {
    setenv("MARKOV_APPROX_THREADS", threads, 1);
    std::vector<int> hits(10007, 0);
    std::vector<std::uint64_t> first(3, 0);
    parallel_chunks(hits.size(), 4096, [&](std::size_t c, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
      first[c] = RngStream(5, 0).child(c)();
    });
    unsetenv("MARKOV_APPROX_THREADS");
    for (int h : hits) REQUIRE(h == 1);
    return first;
  };
  CHECK(run("1") == run("4"));
}

TEST_CASE("parallel_chunks rethrows worker exceptions") {
  setenv("MARKOV_APPROX_THREADS", "3", 1);
  CHECK_THROWS_AS(parallel_chunks(100, 10,
                                  [](std::size_t c, std::size_t, std::size_t) {
                                    if (c == 4) throw std::runtime_error("boom");
                                  }),
                  std::runtime_error);
  unsetenv("MARKOV_APPROX_THREADS");
}

TEST_CASE("thread cap is parsed from the environment") {
  setenv("MARKOV_APPROX_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  setenv("MARKOV_APPROX_THREADS", "junk", 1);
  CHECK(worker_count() >= 1);
  unsetenv("MARKOV_APPROX_THREADS");
}
