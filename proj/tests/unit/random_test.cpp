#include <atomic>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rsmp/brownian.hpp"
#include "rsmp/executor.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/random.hpp"

namespace rsmp {
namespace {

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff,
                                  0xffffffff},
                                 {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e,
                                  0x03707344},
                                 {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformOpenInterval) {
  EXPECT_GT(uniform_open(0, 0), 0.0);
  EXPECT_LT(uniform_open(0xffffffff, 0xffffffff), 1.0);
  EXPECT_NEAR(uniform_open(0x80000000, 0), 0.5, 1e-9);
}

TEST(NormalStream, DeterministicAndStandard) {
  const NormalStream a(17), b(17), other(18);
  EXPECT_EQ(a.pair(5, 3), b.pair(5, 3));
  EXPECT_NE(a.pair(5, 3), other.pair(5, 3));
  EXPECT_NE(a.pair(5, 3), a.pair(5, 4));

  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n / 2; ++i) {
    for (double v : a.pair(i, 0)) {
      sum += v;
      sq += v * v;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(NormalStream, DomainsAreIndependentStreams) {
  const NormalStream a(17, 0), b(17, 1);
  EXPECT_NE(a.pair(0, 0), b.pair(0, 0));
}

TEST(Executor, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 4}) {
    const Executor exec(workers);
    std::vector<std::atomic<int>> hits(1000);
    exec.for_each(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);

    std::vector<int> block_of(1000, -1);
    exec.for_blocks(1000, [&](std::size_t block, std::size_t begin,
                              std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        block_of[i] = static_cast<int>(block);
      }
    });
    for (std::size_t i = 0; i < 1000; ++i) {
      EXPECT_EQ(block_of[i], static_cast<int>(i / Executor::kBlockSize));
    }
  }
}

TEST(Executor, BlockCount) {
  EXPECT_EQ(Executor::block_count(0), 0u);
  EXPECT_EQ(Executor::block_count(1), 1u);
  EXPECT_EQ(Executor::block_count(Executor::kBlockSize), 1u);
  EXPECT_EQ(Executor::block_count(Executor::kBlockSize + 1), 2u);
}

TEST(Brownian, IdenticalForEveryWorkerCount) {
  const TimeGrid grid(1.0, 50);
  const auto one = sample_brownian(grid, 700, 2, 9, Executor(1));
  const auto four = sample_brownian(grid, 700, 2, 9, Executor(4));
  EXPECT_TRUE(one.increments == four.increments);
  const auto shifted = sample_brownian(grid, 700, 2, 10, Executor(1));
  EXPECT_FALSE(one.increments == shifted.increments);
}

TEST(Brownian, IncrementVarianceIsStepSize) {
  const TimeGrid grid(2.0, 40);
  const auto batch = sample_brownian(grid, 5000, 1, 3);
  double sq = 0.0;
  for (double v : batch.increments.data()) sq += v * v;
  const double mean_sq =
      sq / static_cast<double>(batch.increments.data().size());
  EXPECT_NEAR(mean_sq / grid.step_size(), 1.0, 0.02);
}

TEST(Brownian, CoarsenSumsIncrements) {
  const TimeGrid grid(1.0, 8);
  const auto fine = sample_brownian(grid, 3, 1, 1);
  const auto coarse = coarsen(fine, 4);
  ASSERT_EQ(coarse.grid.steps(), 2u);
  for (std::size_t p = 0; p < 3; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += fine.increments(p, k);
    EXPECT_DOUBLE_EQ(coarse.increments(p, 0), s);
  }
  EXPECT_THROW(coarsen(fine, 3), std::exception);
}

TEST(Brownian, LevelsStartAtZero) {
  const auto batch = sample_brownian(TimeGrid(1.0, 4), 2, 1, 1);
  const auto w = brownian_levels(batch);
  ASSERT_EQ(w.nodes(), 5u);
  EXPECT_EQ(w(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(w(1, 2), batch.increments(1, 0) + batch.increments(1, 1));
}

TEST(TimeGrid, NodeLookup) {
  const TimeGrid grid(1.0, 10);
  EXPECT_EQ(grid.node_at(0.3), 3u);
  EXPECT_THROW(grid.node_at(0.35), std::exception);
  EXPECT_DOUBLE_EQ(grid.time(10), 1.0);
}

}  // namespace
}  // namespace rsmp
