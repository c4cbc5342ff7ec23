#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "knnrm/estimator.hpp"
#include "knnrm/order_statistics.hpp"
#include "knnrm/rng.hpp"

using knnrm::DistanceLedger;

TEST(DistanceLedger, SelectOnSmallSets) {
  DistanceLedger d;
  EXPECT_TRUE(d.empty());
  d.insert(0.9);
  EXPECT_DOUBLE_EQ(d.select(1), 0.9);
  d.insert(0.1);
  EXPECT_DOUBLE_EQ(d.select(1), 0.1);
  EXPECT_DOUBLE_EQ(d.select(2), 0.9);
  d.insert(0.5);
  EXPECT_DOUBLE_EQ(d.select(2), 0.5);
  EXPECT_EQ(d.size(), 3u);
}

TEST(DistanceLedger, SelectOutOfRangeThrows) {
  DistanceLedger d;
  d.insert(1.0);
  EXPECT_ANY_THROW((void)d.select(0));
  EXPECT_ANY_THROW((void)d.select(2));
}

// Any interleaving of inserts and selects at arbitrary ranks must agree with
// sorting everything seen so far.
TEST(DistanceLedger, MatchesSortedBruteForceOnRandomStreams) {
  knnrm::Rng rng = knnrm::make_stream(7, 0);
  for (int stream = 0; stream < 10000; ++stream) {
    const std::size_t len = 1 + rng() % 40;
    const bool coarse = stream % 3 == 0;  // exercise ties
    DistanceLedger ledger;
    std::vector<double> all;
    for (std::size_t i = 0; i < len; ++i) {
      double v = knnrm::uniform(rng, 0.0, 1.0);
      if (coarse) v = std::floor(v * 5.0) / 5.0;
      ledger.insert(v);
      all.push_back(v);
      std::vector<double> sorted = all;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t k = 1 + rng() % all.size();
      ASSERT_EQ(ledger.select(k), sorted[k - 1]);
    }
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    ASSERT_EQ(ledger.sorted(), sorted);
  }
}

TEST(Membership, SpecExamples) {
  DistanceLedger d;
  EXPECT_TRUE(knnrm::knn_membership(d, 0.9, 1));
  d.insert(0.9);
  EXPECT_TRUE(knnrm::knn_membership(d, 0.1, 1));
  d.insert(0.1);
  EXPECT_FALSE(knnrm::knn_membership(d, 0.95, 1));
}

TEST(Membership, WarmupRuleOnlyMattersBeforeKPoints) {
  DistanceLedger d;
  EXPECT_TRUE(knnrm::knn_membership(d, 0.3, 1, knnrm::Warmup::accept));
  EXPECT_FALSE(knnrm::knn_membership(d, 0.3, 1, knnrm::Warmup::skip));
  d.insert(0.5);
  EXPECT_EQ(knnrm::knn_membership(d, 0.3, 1, knnrm::Warmup::skip),
            knnrm::knn_membership(d, 0.3, 1, knnrm::Warmup::accept));
}

TEST(Membership, TieIsMember) {
  DistanceLedger d;
  d.insert(0.25);
  d.insert(0.75);
  EXPECT_TRUE(knnrm::knn_membership(d, 0.25, 1));
  EXPECT_TRUE(knnrm::knn_membership(d, 0.75, 2));
}

TEST(Membership, BruteForceEquivalenceOverRandomStreams) {
  knnrm::Rng rng = knnrm::make_stream(11, 0);
  std::size_t violations = 0;
  for (int stream = 0; stream < 10000; ++stream) {
    const std::size_t len = 1 + rng() % 30;
    DistanceLedger ledger;
    std::vector<double> all;
    for (std::size_t i = 0; i < len; ++i) {
      double v = knnrm::uniform(rng, 0.0, 1.0);
      if (stream % 4 == 0) v = std::round(v * 8.0) / 8.0;
      ledger.insert(v);
      all.push_back(v);
    }
    std::sort(all.begin(), all.end());
    for (int probe = 0; probe < 5; ++probe) {
      const std::size_t k = 1 + rng() % len;
      double cand = knnrm::uniform(rng, 0.0, 1.0);
      if (probe == 0) cand = all[k - 1];
      const bool brute = cand <= all[k - 1];
      if (knnrm::knn_membership(ledger, cand, k) != brute) ++violations;
    }
  }
  EXPECT_EQ(violations, 0u);
}
