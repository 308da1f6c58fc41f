#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "charcoal/parallel.hpp"

using namespace charcoal;

TEST(ParallelFor, EveryIndexRunsOnce) {
  for (std::size_t threads : {1u, 2u, 7u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (std::size_t threads : {1u, 4u}) {
    try {
      parallel_for(200, threads, [](std::size_t i) {
        if (i == 17 || i == 150) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(ResolveThreads, ExplicitThenEnvironment) {
  EXPECT_EQ(resolve_threads(3), 3u);
  EXPECT_GE(resolve_threads(0), 1u);
  ::setenv("CHARCOAL_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(), 5u);
  EXPECT_EQ(resolve_threads(2), 2u);
  ::setenv("CHARCOAL_THREADS", "junk", 1);
  EXPECT_GE(resolve_threads(), 1u);
  ::unsetenv("CHARCOAL_THREADS");
  EXPECT_GE(resolve_threads(), 1u);
}
