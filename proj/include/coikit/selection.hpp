#pragma once

// Subset curation over a synthetic pool: instance-level top-k ranking, and
// distribution matching against a real reference by Monte Carlo search,
// greedy backward elimination, or exhaustive enumeration (small pools).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coikit/coi.hpp"
#include "coikit/metrics_instance.hpp"
#include "coikit/rewards.hpp"

namespace coikit {

struct CompositeWeights {
  double w_style = 1.0;
  double w_result = 1.0;
  double w_route = 1.0;
  double w_reward = 1.0;

  void validate() const;
};

enum class Strategy : std::uint8_t { kRank, kMonteCarlo, kGreedy, kExhaustive };
enum class GapMetric : std::uint8_t { kKL, kJS };

std::string_view to_string(Strategy s);
std::string_view to_string(GapMetric m);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<GapMetric> parse_gap_metric(std::string_view s);

struct SelectionConfig {
  std::size_t k = 1;
  std::optional<std::size_t> k1;  // stage-1 size; default min(pool, 3k)
  Strategy strategy = Strategy::kGreedy;
  GapMetric gap_metric = GapMetric::kKL;
  std::size_t mc_iterations = 1000;
  bool mc_dedup = false;  // never evaluate the same subset twice
  std::size_t greedy_batch = 1;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  Flattening flattening = Flattening::kJoint;

  /// Checks everything except k against a pool size.
  void validate() const;
};

struct SelectionResult {
  std::vector<std::string> selected_ids;
  double achieved_gap = 0.0;
  Strategy strategy = Strategy::kGreedy;
  std::size_t iterations_used = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> stage1_ids;  // set by curate when stage 1 ran
};

struct ScoredId {
  std::string id;
  double score = 0.0;
};

/// Affine map of a penalty in [-1, 0] onto [0, 1], clamped.
double normalize_penalty(double r_total);

/// Weighted sum of style, result match, route consistency and normalized
/// reward total; booleans count 1 when true, 0 when false or absent.
double composite_score(const InstanceScores& s, const RewardBreakdown& rb, const CompositeWeights& w);

/// The k highest scores, ties by ascending id. Throws kKTooLarge.
std::vector<std::string> select_topk(std::span<const ScoredId> pool, std::size_t k);

/// Δ between two count tables: KL(reference || subset) or JS.
double gap_between(const TransitionCounts& subset, const TransitionCounts& reference,
                   const SelectionConfig& cfg);
double divergence_gap(const Corpus& subset, const Corpus& reference, const SelectionConfig& cfg);

/// Per-dialogue transition counts of a pool plus the reference, the state
/// every distribution-level strategy searches over.
class GapProblem {
 public:
  GapProblem(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg);

  std::size_t pool_size() const { return items_.size(); }
  const TransitionCounts& item(std::size_t i) const { return items_[i]; }
  const std::string& id(std::size_t i) const { return pool_->dialogues()[i].id; }
  double gap(const TransitionCounts& subset) const;
  double gap_of(std::span<const std::size_t> members) const;
  const SelectionConfig& config() const { return cfg_; }

 private:
  const Corpus* pool_;
  SelectionConfig cfg_;
  std::vector<TransitionCounts> items_;
  JointDistribution reference_;
};

/// T uniform size-k draws (iteration t uses its own stream derived from the
/// seed); keeps the first draw with the minimum gap.
SelectionResult monte_carlo_select(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg);

/// Starting from the whole pool, each epoch removes the `greedy_batch`
/// dialogues whose removal leaves the lowest gap (ties by id) until k remain.
/// Candidate gaps come from subtracting one dialogue's counts from the
/// running total.
SelectionResult greedy_backward_eliminate(const Corpus& pool, const Corpus& reference,
                                          const SelectionConfig& cfg);

/// Removal order produced by greedy elimination (for auditing).
std::vector<std::string> greedy_elimination_order(const Corpus& pool, const Corpus& reference,
                                                  const SelectionConfig& cfg);

inline constexpr std::uint64_t kMaxExhaustiveSubsets = 1'000'000;

/// Number of k-subsets of n, saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Global minimum over all C(n, k) subsets; ties by lexicographic id list.
/// Throws kCombinatorialBlowup above kMaxExhaustiveSubsets.
SelectionResult exhaustive_select(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg);

/// Stage 1 ranks to k1 by composite score; stage 2 runs the configured
/// distribution strategy down to k. The rank strategy skips stage 2.
SelectionResult curate(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg,
                       std::span<const ScoredId> scores);

Json to_json(const SelectionResult& r);

}  // namespace coikit
