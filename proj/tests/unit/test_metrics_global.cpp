#include <gtest/gtest.h>

#include <cmath>

#include "coikit/metrics_global.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace coikit;

// High-precision reference values for p = (0.5, 0.5), q = (0.25, 0.75).
constexpr double kKlHalfQuarter = 0.1438410362258904637;
constexpr double kJsHalfQuarter = 0.0338220755686052300;

TEST(Divergence, TwoCellReferenceValues) {
  std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
  EXPECT_NEAR(kl_divergence(p, q), kKlHalfQuarter, 1e-15);
  EXPECT_NEAR(js_divergence(p, q), kJsHalfQuarter, 1e-15);
  EXPECT_NEAR(static_cast<double>(oracle::kl(p, q)), kKlHalfQuarter, 1e-15);
  EXPECT_NEAR(static_cast<double>(oracle::js(p, q)), kJsHalfQuarter, 1e-15);
}

TEST(Divergence, IdentityAndDisjointSupport) {
  std::vector<double> p = {0.2, 0.3, 0.5};
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_EQ(js_divergence(p, p), 0.0);
  std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
  EXPECT_NEAR(js_divergence(a, b), std::log(2.0), 1e-15);
}

TEST(Divergence, SupportMismatch) {
  std::vector<double> p = {0.5, 0.5}, q = {1.0, 0.0};
  try {
    kl_divergence(p, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSupportMismatch);
  }
  EXPECT_NO_THROW(kl_divergence(q, p));
}

TEST(Divergence, MatchesOracleOnRandomPairs) {
  SplitMix64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> p(81), q(81);
    double sp = 0, sq = 0;
    for (int i = 0; i < 81; ++i) {
      p[i] = -std::log(1.0 - rng.uniform());
      q[i] = -std::log(1.0 - rng.uniform());
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < 81; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    EXPECT_NEAR(kl_divergence(p, q), static_cast<double>(oracle::kl(p, q)), 1e-12);
    EXPECT_NEAR(js_divergence(p, q), static_cast<double>(oracle::js(p, q)), 1e-12);
  }
}

TEST(Clustering, IdenticalAndDisjoint) {
  clients::StubEmbedder e;
  auto same = cluster_questions({"salary pay?", "salary pay?", "salary pay?"}, e, 0.8);
  EXPECT_EQ(same.sizes, (std::vector<std::size_t>{3}));
  auto disjoint = cluster_questions({"alpha apples", "bravo bananas", "charlie cherries", "delta dates"}, e, 0.8);
  EXPECT_EQ(disjoint.sizes, (std::vector<std::size_t>{1, 1, 1, 1}));
  EXPECT_THROW(cluster_questions({"x"}, e, 1.0), Error);
}

TEST(Clustering, LeaderAssignmentMatchesPairwiseOracle) {
  clients::StubEmbedder e;
  const std::vector<std::string> texts = {
      "what is the salary", "salary what is", "where is the office", "office where located", "what salary is it"};
  auto cs = cluster_questions(texts, e, 0.8);
  // oracle: walk texts in order, compare with each leader's embedding
  std::vector<std::size_t> leaders;
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    bool placed = false;
    for (std::size_t c = 0; c < leaders.size(); ++c) {
      auto a = e.embed(texts[i]), b = e.embed(texts[leaders[c]]);
      double dot = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      if (dot >= 0.8) {
        clusters[c].push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      leaders.push_back(i);
      clusters.push_back({i});
    }
  }
  EXPECT_EQ(cs.clusters, clusters);
}

TEST(Clustering, ZeroVectorBecomesSealedSingleton) {
  clients::StubEmbedder e;
  auto cs = cluster_questions({"is it", "is it", "salary?"}, e, 0.8);
  EXPECT_EQ(cs.sizes, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Entropy, UniformDegenerateAndMean) {
  std::vector<std::size_t> four = {1, 1, 1, 1};
  EXPECT_NEAR(cluster_entropy(four), std::log(4.0), 1e-15);
  std::vector<std::size_t> one = {7};
  EXPECT_EQ(cluster_entropy(one), 0.0);

  // two categories: Information Inquiry with one cluster, Concerns About
  // the Job with two singletons
  auto d1 = fixture::dialogue_idx("a", {0, 0, 2, 2});
  d1.turns[1].text = "salary pay?";
  d1.turns[3].text = "salary pay?";
  d1.turns[5].text = "alpha apples?";
  d1.turns[7].text = "bravo bananas?";
  clients::StubEmbedder e;
  auto q = q_diversity(Corpus({d1}), e, 0.8);
  EXPECT_NEAR(q.score, std::log(2.0) / 2.0, 1e-15);
  EXPECT_EQ(q.per_category_entropy.size(), 2u);
}

TEST(QDiversity, NoQuestions) {
  auto d = fixture::dialogue_idx("a", {1});
  d.turns[1].text = "sure";
  clients::StubEmbedder e;
  try {
    q_diversity(Corpus({d}), e, 0.8);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kNoQuestions);
  }
}

TEST(Entropy, MergingClustersNeverIncreases) {
  SplitMix64 rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::size_t> sizes;
    const int n = 2 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) sizes.push_back(1 + rng.below(6));
    const double before = cluster_entropy(sizes);
    EXPECT_NEAR(before, oracle::entropy(sizes), 1e-12);
    std::vector<std::size_t> merged(sizes.begin() + 2, sizes.end());
    merged.push_back(sizes[0] + sizes[1]);
    EXPECT_LE(cluster_entropy(merged), before + 1e-12);
  }
}

TEST(GlobalReport, SelfComparisonAndSerialization) {
  std::vector<Dialogue> ds;
  SplitMix64 rng(4);
  for (int i = 0; i < 30; ++i) {
    auto d = fixture::dialogue(fixture::id("r", i), fixture::random_chain(rng, 5));
    d.turns[1].text = "question number " + std::to_string(i) + "?";
    ds.push_back(d);
  }
  Corpus c(ds);
  clients::StubEmbedder e;
  auto r = evaluate_global(c, c, e, GlobalConfig{});
  EXPECT_EQ(r.kl_div, 0.0);
  EXPECT_EQ(r.js_div, 0.0);
  Json j = to_json(r);
  for (const char* k : {"kl_div", "js_div", "q_diversity", "alpha", "tau"}) EXPECT_TRUE(j.contains(k)) << k;
}
