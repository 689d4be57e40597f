#pragma once

// Markov-chain dialogue generator. Chains are sampled forward from an initial
// distribution and a row-stochastic matrix, then rendered into templated
// recruiter/candidate turns with the intent pre-filled.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "coikit/coi.hpp"
#include "coikit/rng.hpp"

namespace coikit {

struct GeneratorSpec {
  std::array<double, kNumIntents> initial_dist{};
  /// forward_matrix[i][j] = P(next = j | current = i). Rows of absorbing
  /// labels are never read.
  std::array<std::array<double, kNumIntents>, kNumIntents> forward_matrix{};
  std::array<bool, kNumIntents> absorbing{};
  std::size_t max_turns = 12;
  std::array<std::vector<std::string>, kNumIntents> templates;
  std::vector<std::string> recruiter_templates;
  /// Labels whose candidate turn carries the conversion marker. Successful
  /// Conversion always does, whatever this says.
  std::array<bool, kNumIntents> conversion_marker_on{};
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidSpec) with every problem found.
  void validate() const;

  /// Labels with non-zero probability of appearing in a chain.
  std::array<bool, kNumIntents> reachable() const;
};

/// Substitution values for {job}, {salary}, ... placeholders; scenario i of a
/// corpus uses entry i modulo the list length.
using Scenario = std::map<std::string, std::string>;

IntentChain sample_chain(const GeneratorSpec& spec, SplitMix64& rng);

/// Recruiter turn then candidate turn per label. Throws kMissingTemplate.
Dialogue render_dialogue(const IntentChain& chain, const GeneratorSpec& spec, SplitMix64& rng,
                         const Scenario& scenario = {});

/// Dialogues "syn-000001".. with scenario ids "scn-000001"..; dialogue i uses
/// the stream derive_stream(spec.seed, i). Without scenarios, {job} and
/// {salary} get generic fillers. Throws kInvalidArgument for n = 0.
Corpus generate_corpus(const GeneratorSpec& spec, std::size_t n,
                       const std::vector<Scenario>& scenarios = {});

GeneratorSpec generator_spec_from_json(const Json& j);
Json generator_spec_to_json(const GeneratorSpec& spec);
GeneratorSpec load_generator_spec(const std::filesystem::path& path);
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

/// Nine-state demo spec: absorbing on Successful Conversion and Rejection,
/// at most 12 candidate turns.
GeneratorSpec default_generator_spec();

}  // namespace coikit
