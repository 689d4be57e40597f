#include "coikit/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coikit/text.hpp"

namespace coikit {

void RewardWeights::validate() const {
  if (length_band.min_tokens < 1 || length_band.min_tokens > length_band.max_tokens) {
    throw Error(ErrorCode::kInvalidArgument, "length band needs 1 <= min <= max");
  }
  if (!(repeat_threshold > 0.0 && repeat_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "repeat_threshold must lie in (0, 1]");
  }
  for (double v : {lambda1, lambda2, lambda3, alpha, beta}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "reward weights must be finite");
  }
}

PatternSet::PatternSet(std::vector<std::string> lines) {
  for (const auto& raw : lines) {
    std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    Pattern p;
    if (line.front() == '^') {
      p.anchor_start = true;
      line.remove_prefix(1);
    }
    if (!line.empty() && line.back() == '$') {
      p.anchor_end = true;
      line.remove_suffix(1);
    }
    p.needle = text::ascii_lower(line);
    patterns_.push_back(std::move(p));
  }
}

PatternSet PatternSet::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return PatternSet(std::move(lines));
}

bool PatternSet::matches(std::string_view raw) const {
  const std::string lowered = text::ascii_lower(raw);
  const std::string_view t = text::trim(lowered);
  for (const auto& p : patterns_) {
    if (p.anchor_start && p.anchor_end) {
      if (t == p.needle) return true;
    } else if (p.anchor_start) {
      if (t.substr(0, p.needle.size()) == p.needle) return true;
    } else if (p.anchor_end) {
      if (t.size() >= p.needle.size() && t.substr(t.size() - p.needle.size()) == p.needle) return true;
    } else if (t.find(p.needle) != std::string_view::npos) {
      return true;
    }
  }
  return false;
}

const std::vector<std::string>& allowed_candidate_actions() {
  static const std::vector<std::string> actions = {
      "[Behavior] C add contact information card",
      "[Behavior] requested to exchange contact information",
      "[Behavior] sent resume",
      "[Behavior] sent attached resume",
      "[Behavior] shared phone number",
      "[Behavior] ended conversation",
      std::string(kConversionMarker),
  };
  return actions;
}

namespace {

std::vector<const Turn*> turns_of(const Dialogue& d, Speaker who) {
  std::vector<const Turn*> out;
  for (const auto& t : d.turns) {
    if (t.speaker == who) out.push_back(&t);
  }
  return out;
}

}  // namespace

double repeat_penalty(const Dialogue& d, double repeat_threshold) {
  const auto cand = turns_of(d, Speaker::kCandidate);
  if (cand.empty()) return 0.0;
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (text::trigram_jaccard(cand[i]->text, cand[j]->text).value() > repeat_threshold) {
        ++repeats;
        break;
      }
    }
  }
  if (repeats == 0) return 0.0;
  return -static_cast<double>(repeats) / static_cast<double>(cand.size());
}

double length_penalty(const Dialogue& d, const LengthBand& band) {
  const auto cand = turns_of(d, Speaker::kCandidate);
  if (cand.empty()) return 0.0;
  std::size_t outside = 0;
  for (const Turn* t : cand) {
    const std::size_t n = text::split_whitespace(t->text).size();
    if (n < band.min_tokens || n > band.max_tokens) ++outside;
  }
  if (outside == 0) return 0.0;
  return -static_cast<double>(outside) / static_cast<double>(cand.size());
}

double action_penalty(const Dialogue& d) {
  const auto& allowed = allowed_candidate_actions();
  std::vector<std::string> seen;
  for (const Turn* t : turns_of(d, Speaker::kCandidate)) {
    for (const auto& tag : effective_behavior_tags(*t)) {
      if (std::find(allowed.begin(), allowed.end(), tag) == allowed.end()) return -1.0;
      if (std::find(seen.begin(), seen.end(), tag) != seen.end()) return -1.0;
      seen.push_back(tag);
    }
  }
  return 0.0;
}

double rule_reward(const Dialogue& d, const RulePatterns& rules) {
  std::vector<std::string_view> asked;
  for (const Turn* t : turns_of(d, Speaker::kRecruiter)) {
    if (rules.banned.matches(t->text) || rules.privacy.matches(t->text)) return -1.0;
    if (text::has_question_mark(t->text)) {
      if (std::find(asked.begin(), asked.end(), t->text) != asked.end()) return -1.0;
      asked.push_back(t->text);
    }
  }
  return 0.0;
}

RewardBreakdown combined_reward(const Dialogue& d, std::optional<double> model_score,
                                const RewardWeights& w, const RulePatterns& rules) {
  if (model_score && !(*model_score >= -1.0 && *model_score <= 1.0)) {
    throw Error(ErrorCode::kModelScoreOutOfRange,
                "model score " + std::to_string(*model_score) + " outside [-1, 1]");
  }
  RewardBreakdown rb;
  rb.r_repeat = repeat_penalty(d, w.repeat_threshold);
  rb.r_length = length_penalty(d, w.length_band);
  rb.r_action = action_penalty(d);
  rb.r_total = w.lambda1 * rb.r_repeat + w.lambda2 * rb.r_length + w.lambda3 * rb.r_action;
  rb.r_rule = rule_reward(d, rules);
  if (model_score) {
    rb.r_model = *model_score;
    rb.r_combined = w.beta == 0.0 ? w.alpha * rb.r_rule
                                  : w.alpha * rb.r_rule + w.beta * *model_score;
  }
  return rb;
}

Json to_json(const RewardBreakdown& rb) {
  Json out = Json::object();
  out["r_repeat"] = rb.r_repeat;
  out["r_length"] = rb.r_length;
  out["r_action"] = rb.r_action;
  out["r_total"] = rb.r_total;
  out["r_rule"] = rb.r_rule;
  out["r_model"] = rb.r_model ? Json(*rb.r_model) : Json(nullptr);
  out["r_combined"] = rb.r_combined ? Json(*rb.r_combined) : Json(nullptr);
  return out;
}

}  // namespace coikit
