#include <gtest/gtest.h>

#include "coikit/coi.hpp"
#include "support/fixtures.hpp"

using namespace coikit;
using fixture::L;

namespace {
const IntentLabel A = IntentLabel::kInformationInquiry;
const IntentLabel B = IntentLabel::kPositiveIntent;
const IntentLabel C = IntentLabel::kConcernsAboutJob;

IntentChain chain(std::vector<IntentLabel> ls) { return IntentChain{"c", std::move(ls)}; }
}  // namespace

TEST(ExtractChain, CandidateLabelsInOrder) {
  auto d = fixture::dialogue("d", {A, B, IntentLabel::kSuccessfulConversion}, true);
  EXPECT_EQ(extract_chain(d).labels, (std::vector<IntentLabel>{A, B, IntentLabel::kSuccessfulConversion}));
  EXPECT_EQ(extract_chain(fixture::dialogue("one", {C})).labels.size(), 1u);
}

TEST(ExtractChain, MissingLabelNamesTurn) {
  auto d = fixture::dialogue("d", {A, B, C});
  d.turns[5].intent.reset();
  try {
    extract_chain(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingLabel);
    ASSERT_FALSE(e.details().empty());
    EXPECT_EQ(e.details()[0], "5");
  }
}

TEST(Accumulate, HandCountedPairs) {
  std::vector<IntentChain> chains = {chain({A, B, A}), chain({A, B})};
  auto tc = accumulate(chains);
  EXPECT_EQ(tc.count(A, B), 2u);
  EXPECT_EQ(tc.count(B, A), 1u);
  EXPECT_EQ(tc.total(), 3u);
  EXPECT_EQ(tc.initial()[index_of(A)], 2u);
  std::uint64_t sum = 0;
  for (auto v : tc.cells()) sum += v;
  EXPECT_EQ(sum, 3u);

  auto one = accumulate(std::vector<IntentChain>{chain({C})});
  EXPECT_EQ(one.total(), 0u);
  EXPECT_EQ(one.chains(), 1u);

  std::vector<IntentChain> doubled = chains;
  doubled.insert(doubled.end(), chains.begin(), chains.end());
  auto tc2 = accumulate(doubled);
  for (std::size_t i = 0; i < kNumCells; ++i) EXPECT_EQ(tc2.cells()[i], 2 * tc.cells()[i]);
  EXPECT_THROW(accumulate(std::vector<IntentChain>{}), Error);
}

TEST(Accumulate, PermutationInvariantAndSubtractive) {
  SplitMix64 rng(3);
  std::vector<IntentChain> chains;
  for (int i = 0; i < 50; ++i) chains.push_back(chain(fixture::random_chain(rng, 8)));
  auto tc = accumulate(chains);
  std::vector<IntentChain> rev(chains.rbegin(), chains.rend());
  EXPECT_EQ(accumulate(rev), tc);
  TransitionCounts part;
  for (int i = 0; i < 20; ++i) part.add(chains[i]);
  TransitionCounts rest;
  for (int i = 20; i < 50; ++i) rest.add(chains[i]);
  TransitionCounts diff = tc;
  diff -= part;
  EXPECT_EQ(diff, rest);
  EXPECT_THROW(part -= tc, Error);
}

TEST(IncomingMatrix, PaperExampleColumnsSumToOne) {
  // 4x4 example: rows I1..I4, entry (i, j) = P(prev = I_i | cur = I_j)
  std::vector<double> v = {0.1, 0.3, 0.4, 0.2,  //
                           0.1, 0.2, 0.3, 0.3,  //
                           0.5, 0.1, 0.2, 0.3,  //
                           0.3, 0.4, 0.1, 0.2};
  auto m = CoIMatrix::from_values(4, v);
  EXPECT_TRUE(m.flagged_columns().empty());
  EXPECT_LE(m.max_column_error(), 1e-9);
  EXPECT_TRUE(m.entries_in_unit_interval());
  EXPECT_DOUBLE_EQ(m.at(0, 0) + m.at(1, 0) + m.at(2, 0) + m.at(3, 0), 1.0);
}

TEST(IncomingMatrix, SingleTransitionAndEmpty) {
  TransitionCounts tc;
  tc.add(chain({A, B}));
  auto m = incoming_matrix(tc);
  EXPECT_EQ(m.at(index_of(A), index_of(B)), 1.0);
  EXPECT_EQ(m.flagged_columns().size(), kNumIntents - 1);
  EXPECT_FALSE(m.is_flagged(index_of(B)));

  auto z = incoming_matrix(TransitionCounts{});
  EXPECT_EQ(z.flagged_columns().size(), kNumIntents);
  for (double x : z.values()) EXPECT_EQ(x, 0.0);
}

TEST(IncomingMatrix, RandomCorporaColumnStochastic) {
  SplitMix64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    TransitionCounts tc;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) tc.add(chain(fixture::random_chain(rng, 10)));
    auto m = incoming_matrix(tc);
    EXPECT_LE(m.max_column_error(), 1e-9);
    EXPECT_TRUE(m.entries_in_unit_interval());
    for (std::size_t j = 0; j < kNumIntents; ++j) {
      double mass = 0.0;
      for (std::size_t i = 0; i < kNumIntents; ++i) mass += static_cast<double>(tc.cells()[i * kNumIntents + j]);
      EXPECT_EQ(m.is_flagged(j), mass == 0.0);
    }
  }
}

TEST(Joint, DirectNormalization) {
  TransitionCounts tc;
  tc.add(chain({A, B, A}));
  tc.add(chain({B, A, B}));
  auto j = joint_distribution(tc, 0.0);
  EXPECT_EQ(j.probs[cell_of(A, B)], 0.5);
  EXPECT_EQ(j.probs[cell_of(B, A)], 0.5);
  EXPECT_THROW(joint_distribution(TransitionCounts{}, 0.0), Error);
  auto s = joint_distribution(TransitionCounts{}, 0.5);
  for (double p : s.probs) EXPECT_DOUBLE_EQ(p, 1.0 / 81.0);
}

TEST(Joint, TwoLabelProjection) {
  // counts {A->B: 1} on a K = 2 cell vector (A->A, A->B, B->A, B->B)
  std::vector<std::uint64_t> cells = {0, 1, 0, 0};
  auto j = joint_from_cells(cells, 0.5);
  const double expected[] = {0.5 / 3, 1.5 / 3, 0.5 / 3, 0.5 / 3};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(j.probs[i], expected[i], 1e-15);
}

TEST(Joint, SmoothedIsPositiveAndSumsToOne) {
  SplitMix64 rng(5);
  TransitionCounts tc;
  for (int i = 0; i < 30; ++i) tc.add(chain(fixture::random_chain(rng, 6, 3)));
  for (auto how : {Flattening::kJoint, Flattening::kIncoming}) {
    auto j = flatten(tc, 0.5, how);
    double sum = 0.0;
    for (double p : j.probs) {
      EXPECT_GT(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Graph, ThresholdAndMonotone) {
  TransitionCounts tc;
  for (int i = 0; i < 3; ++i) tc.add(chain({A, B}));
  tc.add(chain({B, A}));
  auto g2 = build_graph(tc, 2);
  EXPECT_TRUE(g2.has_edge(A, B));
  EXPECT_FALSE(g2.has_edge(B, A));
  EXPECT_EQ(g2.size(), 1u);
  auto g1 = build_graph(tc, 1);
  EXPECT_EQ(g1.size(), 2u);
  EXPECT_EQ(build_graph(TransitionCounts{}, 1).size(), 0u);
  EXPECT_THROW(build_graph(tc, 0), Error);

  SplitMix64 rng(2);
  TransitionCounts big;
  for (int i = 0; i < 200; ++i) big.add(chain(fixture::random_chain(rng, 6)));
  for (std::uint64_t t = 1; t < 10; ++t) {
    auto lo = build_graph(big, t), hi = build_graph(big, t + 1);
    for (auto f : kAllIntents)
      for (auto to : kAllIntents)
        EXPECT_TRUE(!hi.has_edge(f, to) || lo.has_edge(f, to));
  }
}

TEST(Serialization, LabelAxesAndCsv) {
  TransitionCounts tc;
  tc.add(chain({A, B}));
  auto m = incoming_matrix(tc);
  Json j = matrix_to_json(m);
  EXPECT_EQ(j["axis"][0], "Information Inquiry");
  EXPECT_EQ(j["values"][0][1], 1.0);
  const std::string csv = matrix_to_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find(',')), "from\\to");
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  EXPECT_EQ(lines, kNumIntents + 1);
  Json c = counts_to_json(tc);
  EXPECT_EQ(c["counts"][0][1], 1);
  EXPECT_EQ(c["total_transitions"], 1);
}
