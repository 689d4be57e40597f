#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "coikit/corpus.hpp"
#include "coikit/rng.hpp"
#include "coikit/synthgen.hpp"

namespace fixture {

using coikit::Dialogue;
using coikit::IntentLabel;
using coikit::Speaker;
using coikit::Turn;

inline IntentLabel L(int i) { return coikit::kAllIntents[static_cast<std::size_t>(i)]; }

/// Recruiter/candidate pairs, one candidate turn per label. With
/// `convert`, the last candidate turn carries the conversion marker.
inline Dialogue dialogue(const std::string& id, const std::vector<IntentLabel>& labels, bool convert = false,
                         coikit::Source source = coikit::Source::kReal,
                         std::optional<std::string> scenario = std::nullopt) {
  Dialogue d;
  d.id = id;
  d.source = source;
  d.scenario_id = std::move(scenario);
  if (source == coikit::Source::kSynthetic && !d.scenario_id) d.scenario_id = "scn-" + id;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Turn r;
    r.index = d.turns.size();
    r.speaker = Speaker::kRecruiter;
    r.text = "Recruiter line " + std::to_string(i);
    d.turns.push_back(r);
    Turn c;
    c.index = d.turns.size();
    c.speaker = Speaker::kCandidate;
    c.text = "Candidate says " + std::string(coikit::to_string(labels[i]));
    c.intent = labels[i];
    if (convert && i + 1 == labels.size()) c.behavior_tags.emplace_back(coikit::kConversionMarker);
    d.turns.push_back(c);
  }
  return d;
}

inline Dialogue dialogue_idx(const std::string& id, std::initializer_list<int> labels, bool convert = false) {
  std::vector<IntentLabel> ls;
  for (int l : labels) ls.push_back(L(l));
  return dialogue(id, ls, convert);
}

/// Random labeled chain of length [1, max_len] over the first `alphabet`
/// labels.
inline std::vector<IntentLabel> random_chain(coikit::SplitMix64& rng, std::size_t max_len,
                                             std::size_t alphabet = coikit::kNumIntents) {
  const std::size_t len = 1 + static_cast<std::size_t>(rng.below(max_len));
  std::vector<IntentLabel> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(L(static_cast<int>(rng.below(alphabet))));
  return out;
}

inline std::string id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("coikit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(COIKIT_FIXTURE_DIR) / name;
}

/// Moves 0.2 of every transient row's mass onto the next label, so the
/// chain drifts away from the spec it was derived from.
inline coikit::GeneratorSpec perturbed(coikit::GeneratorSpec spec) {
  for (std::size_t i = 0; i < coikit::kNumIntents; ++i) {
    if (spec.absorbing[i]) continue;
    for (std::size_t j = 0; j < coikit::kNumIntents; ++j) spec.forward_matrix[i][j] *= 0.8;
    spec.forward_matrix[i][(i + 1) % coikit::kNumIntents] += 0.2;
  }
  return spec;
}

}  // namespace fixture
