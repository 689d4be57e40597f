#pragma once

// Command-line driver: configuration layering (flags > config file > env),
// exit-code contract and the six subcommands.

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coikit/clients.hpp"
#include "coikit/corpus.hpp"
#include "coikit/metrics_global.hpp"
#include "coikit/rewards.hpp"
#include "coikit/selection.hpp"

namespace coikit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitIO = 1,
  kExitValidation = 2,
  kExitClient = 3,
  kExitPrecondition = 4,
  kExitSelection = 5,
};

int exit_code_for(ErrorCode code);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Environment variables consulted for client endpoints.
inline constexpr const char* kEnvClassifierUrl = "COI_CLASSIFIER_URL";
inline constexpr const char* kEnvJudgeUrl = "COI_JUDGE_URL";
inline constexpr const char* kEnvEmbedderUrl = "COI_EMBEDDER_URL";

/// Fully resolved settings. `values` has one entry per known key in a fixed
/// order; `sources` says which layer supplied each one.
struct RunConfig {
  Json values = Json::object();
  Json sources = Json::object();
  Json flags = Json::object();
  Json file = Json::object();
  Json env = Json::object();
  std::optional<std::string> file_path;

  const Json& at(const std::string& key) const { return values.at(key); }
  double number(const std::string& key) const { return values.at(key).get<double>(); }
  bool has(const std::string& key) const { return !values.at(key).is_null(); }

  /// Block embedded in every report.
  Json echo() const;

  clients::ClientConfig client(const std::string& url_key) const;
  GlobalConfig global() const;
  RewardWeights reward_weights() const;
  CompositeWeights composite_weights() const;
  RulePatterns rule_patterns() const;
  SelectionConfig selection() const;
};

/// Names of every configuration key, in echo order.
const std::vector<std::string>& config_keys();

/// Layers defaults, env, the optional config file and explicit flags. Throws
/// kInvalidArgument on unknown keys or wrongly typed values.
RunConfig resolve_config(const Json& flags, const std::optional<std::string>& config_path,
                         const EnvLookup& env);

EnvLookup process_env();

/// Entry point shared by the binary and in-process tests; args excludes
/// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace coikit::cli
