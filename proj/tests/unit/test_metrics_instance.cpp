#include <gtest/gtest.h>

#include "coikit/metrics_instance.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace coikit;
using fixture::L;

namespace {
const IntentLabel A = IntentLabel::kInformationInquiry;
const IntentLabel B = IntentLabel::kPositiveIntent;
const IntentLabel C = IntentLabel::kConcernsAboutJob;

oracle::Chain ints(const std::vector<IntentLabel>& ls) {
  oracle::Chain out;
  for (auto l : ls) out.push_back(static_cast<int>(index_of(l)));
  return out;
}

Dialogue syn(const std::string& id, bool convert, const std::string& scenario) {
  return fixture::dialogue(id, {A, B}, convert, Source::kSynthetic, scenario);
}
Dialogue real(const std::string& id, bool convert, const std::string& scenario) {
  return fixture::dialogue(id, {A, C}, convert, Source::kReal, scenario);
}
}  // namespace

TEST(EditDistance, MatchesOracle) {
  SplitMix64 rng(8);
  for (int rep = 0; rep < 300; ++rep) {
    auto a = fixture::random_chain(rng, 7, 4), b = fixture::random_chain(rng, 7, 4);
    EXPECT_EQ(chain_edit_distance(a, b), oracle::levenshtein(ints(a), ints(b)));
  }
}

TEST(Retrieve, ExactMatchPreferred) {
  Corpus r({fixture::dialogue("r1", {A, B}), fixture::dialogue("r2", {A, B, C}), fixture::dialogue("r0", {A})});
  EXPECT_EQ(retrieve_reference(r, IntentChain{"q", {A, B, C}}).id, "r2");
}

TEST(Retrieve, NearestWithIdTieBreak) {
  Corpus r({fixture::dialogue("r2", {A, B, C, C}), fixture::dialogue("r1", {A, B})});
  EXPECT_EQ(retrieve_reference(r, IntentChain{"q", {A, B, C}}).id, "r1");
  Corpus swapped({fixture::dialogue("r1", {A, B, C, C}), fixture::dialogue("r2", {A, B})});
  EXPECT_EQ(retrieve_reference(swapped, IntentChain{"q", {A, B, C}}).id, "r1");
  try {
    retrieve_reference(Corpus{}, IntentChain{"q", {A}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyReferenceCorpus);
  }
}

TEST(Retrieve, RandomAgainstBruteForce) {
  SplitMix64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Dialogue> ds;
    for (int i = 0; i < 15; ++i) ds.push_back(fixture::dialogue(fixture::id("r", 100 - i), fixture::random_chain(rng, 6, 3)));
    Corpus r(ds);
    auto q = fixture::random_chain(rng, 6, 3);
    std::size_t best = SIZE_MAX;
    std::string best_id;
    for (const auto& d : ds) {
      const auto dist = oracle::levenshtein(ints(extract_chain(d).labels), ints(q));
      if (dist < best || (dist == best && d.id < best_id)) {
        best = dist;
        best_id = d.id;
      }
    }
    EXPECT_EQ(retrieve_reference(r, IntentChain{"q", q}).id, best_id);
  }
}

TEST(Style, SelfDisjointAndFixture) {
  clients::StubJudge judge;
  auto d = fixture::dialogue("d", {A, B});
  Corpus self({d});
  EXPECT_EQ(style_similarity(d, self, judge).score.value(), 1.0);

  auto g = fixture::dialogue("g", {A});
  g.turns[1].text = "abcdefghi";
  auto r = fixture::dialogue("r", {A});
  r.turns[1].text = "abcde";
  auto res = style_similarity(g, Corpus({r}), judge);
  EXPECT_EQ(res.score.value(), 0.4);
  EXPECT_EQ(res.reference_id, "r");

  r.turns[1].text = "zzzzzz";
  EXPECT_EQ(style_similarity(g, Corpus({r}), judge).score.value(), 0.0);
  EXPECT_EQ(render_candidate_text(fixture::dialogue("x", {A, B})),
            "Candidate says Information Inquiry\nCandidate says Positive Intent");
}

TEST(ResultF1, Examples) {
  // tp = 3, fp = 1, fn = 2, tn = 1
  std::vector<Dialogue> s, r;
  const bool truth[] = {true, true, true, false, true, true, false};
  const bool pred[] = {true, true, true, true, false, false, false};
  for (int i = 0; i < 7; ++i) {
    const std::string sc = "scn" + std::to_string(i);
    s.push_back(syn("s" + std::to_string(i), pred[i], sc));
    r.push_back(real("r" + std::to_string(i), truth[i], sc));
  }
  auto f = result_f1(Corpus(s), Corpus(r));
  EXPECT_EQ(f.counts, (ConfusionCounts{3, 1, 2, 1}));
  EXPECT_DOUBLE_EQ(f.f1, 6.0 / 9.0);
  EXPECT_FALSE(f.degenerate);
}

TEST(ResultF1, AgreementNoPositiveAndDegenerate) {
  std::vector<Dialogue> s, r, s_all, r_none;
  for (int i = 0; i < 4; ++i) {
    const std::string sc = "scn" + std::to_string(i);
    s.push_back(syn("s" + std::to_string(i), i % 2 == 0, sc));
    r.push_back(real("r" + std::to_string(i), i % 2 == 0, sc));
    s_all.push_back(syn("s" + std::to_string(i), true, sc));
    r_none.push_back(real("r" + std::to_string(i), false, sc));
  }
  EXPECT_EQ(result_f1(Corpus(s), Corpus(r)).f1, 1.0);
  auto zero = result_f1(Corpus(s_all), Corpus(r_none));
  EXPECT_EQ(zero.f1, 0.0);
  EXPECT_EQ(zero.counts.fp, 4u);
  std::vector<Dialogue> s_none;
  for (int i = 0; i < 4; ++i) s_none.push_back(syn("s" + std::to_string(i), false, "scn" + std::to_string(i)));
  auto deg = result_f1(Corpus(s_none), Corpus(r_none));
  EXPECT_EQ(deg.f1, 1.0);
  EXPECT_TRUE(deg.degenerate);
}

TEST(ResultF1, UnpairedListsIds) {
  Corpus s({syn("s1", true, "a"), syn("s2", true, "missing")});
  Corpus r({real("r1", true, "a")});
  try {
    result_f1(s, r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnpairedScenario);
    EXPECT_EQ(e.details(), (std::vector<std::string>{"s2"}));
  }
  // two real dialogues share a scenario: pairing is ambiguous
  Corpus r2({real("r1", true, "a"), real("r2", false, "a")});
  EXPECT_THROW(result_f1(Corpus({syn("s1", true, "a")}), r2), Error);
}

TEST(Route, Examples) {
  IntentGraph g;
  g.add_edge(A, B);
  g.add_edge(B, C);
  EXPECT_TRUE(route_consistency(IntentChain{"x", {A, B, C}}, g));
  IntentGraph g2;
  g2.add_edge(A, B);
  EXPECT_FALSE(route_consistency(IntentChain{"x", {A, B, C}}, g2));
  EXPECT_TRUE(route_consistency(IntentChain{"x", {C}}, IntentGraph{}));
}

TEST(Route, Rate) {
  IntentGraph g;
  g.add_edge(A, B);
  Corpus c({fixture::dialogue("1", {A, B}), fixture::dialogue("2", {A}), fixture::dialogue("3", {A, B, A}),
            fixture::dialogue("4", {A, B, B})});
  EXPECT_DOUBLE_EQ(route_consistency_rate(c, g), 0.5);
  g.add_edge(B, A);
  g.add_edge(B, B);
  EXPECT_DOUBLE_EQ(route_consistency_rate(c, g), 1.0);
  IntentGraph empty;
  Corpus none({fixture::dialogue("1", {A, B}), fixture::dialogue("2", {B, C})});
  EXPECT_DOUBLE_EQ(route_consistency_rate(none, empty), 0.0);
  Corpus three_of_four({fixture::dialogue("1", {A, B}), fixture::dialogue("2", {A}), fixture::dialogue("3", {C}),
                        fixture::dialogue("4", {B, C})});
  EXPECT_DOUBLE_EQ(route_consistency_rate(three_of_four, g), 0.75);
}

TEST(Instances, ScoresAndJson) {
  Corpus r({real("r1", true, "a"), real("r2", false, "b")});
  Corpus s({syn("s1", true, "a"), syn("s2", true, "zzz")});
  clients::StubJudge judge;
  auto g = build_graph(accumulate(extract_chains(r)), 1);
  auto scores = score_instances(s, r, judge, g);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].result_match, true);
  EXPECT_FALSE(scores[1].result_match.has_value());
  EXPECT_FALSE(scores[0].route_consistent);  // A->B not in the real graph
  Json j = to_json(scores[1]);
  EXPECT_TRUE(j["result_match"].is_null());
  EXPECT_EQ(j["dialogue_id"], "s2");
}
