// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "moee/analysis.hpp"
#include "test_support.hpp"

namespace moee {
namespace {

using Vec = std::vector<double>;

TEST(Agreement, IdenticalPartitions) {
  auto p = Partition::from_labels({0, 1, 1, 2, 0, 2});
  auto r = cluster_agreement(p, p);
  EXPECT_NEAR(r.ami, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.nmi, 1.0);
  EXPECT_DOUBLE_EQ(r.jaccard, 1.0);
  EXPECT_DOUBLE_EQ(r.exact_match_pct, 100.0);
}

TEST(Agreement, SymmetricAndBounded) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> a(20), b(20);
    for (int& v : a) v = static_cast<int>(gen() % 3);
    for (int& v : b) v = static_cast<int>(gen() % 4);
    auto pa = Partition::from_labels(a), pb = Partition::from_labels(b);
    auto x = cluster_agreement(pa, pb), y = cluster_agreement(pb, pa);
    EXPECT_NEAR(x.ami, y.ami, 1e-12);
    EXPECT_NEAR(x.nmi, y.nmi, 1e-12);
    EXPECT_DOUBLE_EQ(x.jaccard, y.jaccard);
    EXPECT_DOUBLE_EQ(x.exact_match_pct, y.exact_match_pct);
    EXPECT_LE(x.ami, x.nmi + 1e-9);
    EXPECT_GE(x.nmi, 0.0);
    EXPECT_LE(x.nmi, 1.0 + 1e-12);
    EXPECT_GE(x.exact_match_pct, 0.0);
    EXPECT_LE(x.exact_match_pct, 100.0);
  }
}

TEST(Agreement, SmallJaccardCase) {
  auto r = cluster_agreement(Partition::from_labels({0, 0, 1, 1}), Partition::from_labels({0, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(r.jaccard, 0.25);
  EXPECT_DOUBLE_EQ(r.exact_match_pct, 75.0);
  EXPECT_MOEE_ERROR(cluster_agreement(Partition::from_labels({0}), Partition::from_labels({0, 1})),
                    ErrorKind::Shape);
}

TEST(PromptCorrelation, IdenticalAndAntiCorrelated) {
  Vec s{0.1, 0.5, 0.3, 0.9};
  Vec rev{0.9, 0.5, 0.7, 0.1};
  auto r = prompt_correlation_matrix({{1, s}, {2, s}}, {{1, rev}});
  ASSERT_EQ(r.labels, (std::vector<std::string>{"HS-1", "HS-2", "RW-1"}));
  EXPECT_DOUBLE_EQ(r.matrix[0][1], 1.0);
  EXPECT_DOUBLE_EQ(r.matrix[0][2], -1.0);
  EXPECT_DOUBLE_EQ(r.matrix[2][2], 1.0);
  EXPECT_DOUBLE_EQ(r.hs_hs_mean, 1.0);
  EXPECT_DOUBLE_EQ(r.hs_rw_mean, -1.0);
}

TEST(PromptCorrelation, InvariantToMonotoneTransform) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::map<int, Vec> hs, rw;
  for (int p = 1; p <= 9; ++p) {
    Vec a(15), b(15);
    for (double& v : a) v = u(gen);
    for (double& v : b) v = u(gen);
    hs[p] = a;
    rw[p] = b;
  }
  auto base = prompt_correlation_matrix(hs, rw);
  EXPECT_EQ(base.matrix.size(), 18u);
  for (double& v : hs[4]) v = std::exp(3 * v) - 2;
  auto moved = prompt_correlation_matrix(hs, rw);
  for (std::size_t i = 0; i < 18; ++i)
    for (std::size_t j = 0; j < 18; ++j) EXPECT_NEAR(base.matrix[i][j], moved.matrix[i][j], 1e-12);
}

TEST(PromptCorrelation, LengthMismatchIsShapeError) {
  EXPECT_MOEE_ERROR(prompt_correlation_matrix({{1, {1, 2, 3}}}, {{1, {1, 2}}}), ErrorKind::Shape);
}

TEST(BoxStats, OneToNine) {
  Vec v{9, 1, 8, 2, 7, 3, 6, 4, 5};
  auto s = box_stats(v);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.variance, 20.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.q1, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 5.0);
  EXPECT_DOUBLE_EQ(s.q3, 7.0);
  EXPECT_DOUBLE_EQ(s.max, 9.0);
  auto even = box_stats(Vec{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(even.q1, 1.75);
  EXPECT_DOUBLE_EQ(even.median, 2.5);
}

TEST(Robustness, ConstantAndSpread) {
  std::map<std::string, std::map<int, std::map<std::string, double>>> scores;
  for (int p = 1; p <= 9; ++p) {
    scores["flat"][p]["sts"] = 0.4;
    scores["spread"][p]["sts"] = p;
  }
  auto r = prompt_robustness(scores);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].method, "flat");
  EXPECT_DOUBLE_EQ(r.entries[0].stats.variance, 0.0);
  EXPECT_NEAR(r.entries[1].stats.variance, 20.0 / 3.0, 1e-9);
  EXPECT_GT(r.entries[1].stats.variance, r.entries[0].stats.variance);
  for (const auto& e : r.entries) {
    EXPECT_LE(e.stats.min, e.stats.q1);
    EXPECT_LE(e.stats.q1, e.stats.median);
    EXPECT_LE(e.stats.median, e.stats.q3);
    EXPECT_LE(e.stats.q3, e.stats.max);
  }
}

TEST(Robustness, SinglePromptIsInsufficient) {
  std::map<std::string, std::map<int, std::map<std::string, double>>> scores;
  scores["hs"][1]["sts"] = 0.5;
  EXPECT_MOEE_ERROR(prompt_robustness(scores), ErrorKind::InsufficientData);
}

TEST(Complementarity, BothMatchGold) {
  Vec g{1, 2, 3, 4, 5};
  auto r = complementarity_errors(g, g, g);
  EXPECT_EQ(r.conditioned(), 0u);
  EXPECT_EQ(r.p_hs_ok_rw_fail + r.p_hs_fail_rw_ok + r.p_both_fail, 0.0);
}

// Gold ranks 1..10, RW reversed: |11 - 2i| / 10 > 0.1 for every i except 5 and 6.
TEST(Complementarity, ReversedRwFailsAlone) {
  Vec gold(10), rev(10);
  std::iota(gold.begin(), gold.end(), 1.0);
  for (int i = 0; i < 10; ++i) rev[i] = 10.0 - i;
  auto r = complementarity_errors(gold, rev, gold, 0.1);
  EXPECT_EQ(r.hs_ok_rw_fail, 8u);
  EXPECT_EQ(r.conditioned(), 8u);
  EXPECT_DOUBLE_EQ(r.p_hs_ok_rw_fail, 1.0);
  EXPECT_DOUBLE_EQ(r.threshold, 0.1);
}

TEST(Complementarity, ProportionsPartitionConditionedSet) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01;
  int nonempty = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Vec g(12), h(12), w(12);
    for (int i = 0; i < 12; ++i) {
      g[i] = n01(gen);
      h[i] = g[i] + n01(gen);
      w[i] = g[i] + n01(gen);
    }
    auto r = complementarity_errors(h, w, g, 0.05 + 0.3 * (trial % 3));
    EXPECT_EQ(r.hs_ok_rw_fail + r.hs_fail_rw_ok + r.both_fail, r.conditioned());
    if (r.conditioned() > 0) {
      ++nonempty;
      EXPECT_NEAR(r.p_hs_ok_rw_fail + r.p_hs_fail_rw_ok + r.p_both_fail, 1.0, 1e-9);
    }
  }
  EXPECT_GT(nonempty, 100);
}

TEST(Complementarity, Errors) {
  Vec g{1, 1, 1}, x{1, 2, 3};
  EXPECT_MOEE_ERROR(complementarity_errors(x, x, g), ErrorKind::UndefinedRanking);
  EXPECT_MOEE_ERROR(complementarity_errors(x, x, x, 1.0), ErrorKind::Spec);
  EXPECT_MOEE_ERROR(complementarity_errors(x, Vec{1, 2}, x), ErrorKind::Shape);
}

}  // namespace
}  // namespace moee
