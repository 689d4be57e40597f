#pragma once

// Offline rule-based scoring of dialogues: the simulator-behaviour penalty
// mix (repeat, length, action) and the rule/model reward combination used as
// curation signals.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coikit/corpus.hpp"

namespace coikit {

struct LengthBand {
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 120;
};

struct RewardWeights {
  double lambda1 = 1.0;  // repeat
  double lambda2 = 1.0;  // length
  double lambda3 = 1.0;  // action
  double alpha = 0.5;    // rule
  double beta = 0.5;     // model
  LengthBand length_band;
  double repeat_threshold = 0.8;

  void validate() const;
};

struct RewardBreakdown {
  double r_repeat = 0.0;
  double r_length = 0.0;
  double r_action = 0.0;
  double r_total = 0.0;
  double r_rule = 0.0;
  std::optional<double> r_model;
  std::optional<double> r_combined;
};

/// Case-insensitive line patterns. A leading '^' anchors at the start of the
/// text, a trailing '$' at the end; otherwise the pattern is a substring.
/// Blank lines and lines starting with '#' are ignored.
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(std::vector<std::string> lines);
  static PatternSet load(const std::filesystem::path& path);

  bool matches(std::string_view text) const;
  bool empty() const { return patterns_.empty(); }

 private:
  struct Pattern {
    std::string needle;  // lowercased
    bool anchor_start = false;
    bool anchor_end = false;
  };
  std::vector<Pattern> patterns_;
};

struct RulePatterns {
  PatternSet banned;
  PatternSet privacy;
};

/// Candidate actions a simulated candidate may emit, plus the conversion
/// marker itself.
const std::vector<std::string>& allowed_candidate_actions();

/// -(candidate turns whose trigram Jaccard with an earlier candidate turn
/// exceeds the threshold) / (candidate turns).
double repeat_penalty(const Dialogue& d, double repeat_threshold);

/// -(fraction of candidate turns with whitespace-token count outside band).
double length_penalty(const Dialogue& d, const LengthBand& band);

/// -1 when a candidate behavior tag recurs or is not an allowed action.
double action_penalty(const Dialogue& d);

/// -1 when a recruiter turn hits a banned or privacy pattern, or repeats an
/// earlier recruiter question verbatim.
double rule_reward(const Dialogue& d, const RulePatterns& rules);

/// Throws kModelScoreOutOfRange unless model_score lies in [-1, 1].
RewardBreakdown combined_reward(const Dialogue& d, std::optional<double> model_score,
                                const RewardWeights& w, const RulePatterns& rules);

Json to_json(const RewardBreakdown& rb);

}  // namespace coikit
