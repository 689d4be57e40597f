#pragma once

// Per-dialogue checks: style similarity against a retrieved real reference,
// outcome agreement with the paired real dialogue (and its corpus-level F1),
// and route consistency against the real intent graph.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coikit/clients.hpp"
#include "coikit/coi.hpp"

namespace coikit {

struct InstanceScores {
  std::string dialogue_id;
  clients::StyleScore style_sim;
  bool route_consistent = false;
  std::optional<bool> result_match;
  std::optional<std::string> reference_id;
};

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct F1Result {
  double f1 = 0.0;
  ConfusionCounts counts;
  bool degenerate = false;  // tp = fp = fn = 0, reported as f1 = 1
};

/// Levenshtein distance over label sequences.
std::size_t chain_edit_distance(const std::vector<IntentLabel>& a, const std::vector<IntentLabel>& b);

/// Precomputed chains of the labeled real corpus for reference lookups.
class ReferenceIndex {
 public:
  /// Throws kEmptyReferenceCorpus, kMissingLabel.
  explicit ReferenceIndex(const Corpus& real);

  /// Exact chain match when one exists, else minimum edit distance; ties go
  /// to the lexicographically smallest dialogue id.
  const Dialogue& retrieve(const IntentChain& query) const;

 private:
  const Corpus* real_;
  std::vector<IntentChain> chains_;
};

const Dialogue& retrieve_reference(const Corpus& real, const IntentChain& chain);

/// Candidate turns joined with '\n'.
std::string render_candidate_text(const Dialogue& d);

struct StyleResult {
  clients::StyleScore score;
  std::string reference_id;
};

StyleResult style_similarity(const Dialogue& d, const ReferenceIndex& index, clients::StyleJudge& judge);
StyleResult style_similarity(const Dialogue& d, const Corpus& real, clients::StyleJudge& judge);

/// Looks up the real dialogue paired with `syn` via pairing_key(); nullptr
/// when there is no unique partner.
const Dialogue* paired_real(const Dialogue& syn, const Corpus& real);

/// Truth = real outcome, prediction = synthetic outcome. Throws
/// kUnpairedScenario listing every synthetic id without a unique partner.
F1Result result_f1(const Corpus& syn, const Corpus& real);

/// F1 = 2tp / (2tp + fp + fn), with the all-negative case reported as 1.
F1Result f1_from_counts(const ConfusionCounts& c);

/// Every consecutive transition must be an edge of g; 1-chains pass.
bool route_consistency(const IntentChain& chain, const IntentGraph& g);

/// Fraction of route-consistent dialogues (0 for an empty corpus).
double route_consistency_rate(const Corpus& syn, const IntentGraph& g);

/// Scores every synthetic dialogue.
std::vector<InstanceScores> score_instances(const Corpus& syn, const Corpus& real,
                                            clients::StyleJudge& judge, const IntentGraph& g);

Json to_json(const InstanceScores& s);

}  // namespace coikit
