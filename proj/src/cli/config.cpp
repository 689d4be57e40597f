#include <cstdlib>
#include <limits>

#include "coikit/cli.hpp"

namespace coikit::cli {

namespace {

enum class Kind { kNumber, kCount, kUint64, kBool, kString, kStrategy, kGapMetric, kFlattening };

struct KeySpec {
  const char* name;
  Kind kind;
  Json fallback;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"seed", Kind::kUint64, nullptr},
      {"alpha", Kind::kNumber, 0.5},
      {"tau", Kind::kNumber, 0.8},
      {"theta", Kind::kCount, 1},
      {"flattening", Kind::kFlattening, "joint"},
      {"gap_metric", Kind::kGapMetric, "kl"},
      {"k", Kind::kCount, nullptr},
      {"k1", Kind::kCount, nullptr},
      {"strategy", Kind::kStrategy, "greedy"},
      {"mc_iters", Kind::kCount, 1000},
      {"mc_dedup", Kind::kBool, false},
      {"greedy_batch", Kind::kCount, 1},
      {"n", Kind::kCount, nullptr},
      {"stub", Kind::kBool, false},
      {"classifier_url", Kind::kString, ""},
      {"judge_url", Kind::kString, ""},
      {"embedder_url", Kind::kString, ""},
      {"timeout_ms", Kind::kCount, 30000},
      {"max_retries", Kind::kCount, 2},
      {"max_in_flight", Kind::kCount, 8},
      {"lambda1", Kind::kNumber, 1.0},
      {"lambda2", Kind::kNumber, 1.0},
      {"lambda3", Kind::kNumber, 1.0},
      {"reward_alpha", Kind::kNumber, 0.5},
      {"reward_beta", Kind::kNumber, 0.5},
      {"length_min", Kind::kCount, 2},
      {"length_max", Kind::kCount, 120},
      {"repeat_threshold", Kind::kNumber, 0.8},
      {"w_style", Kind::kNumber, 1.0},
      {"w_result", Kind::kNumber, 1.0},
      {"w_route", Kind::kNumber, 1.0},
      {"w_reward", Kind::kNumber, 1.0},
      {"banned_patterns", Kind::kString, ""},
      {"privacy_patterns", Kind::kString, ""},
      {"model_scores", Kind::kString, ""},
      {"scenarios", Kind::kString, ""},
  };
  return table;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

Json coerce(const KeySpec& spec, const Json& v, const std::string& origin) {
  auto bad = [&](const char* want) {
    return Error(ErrorCode::kInvalidArgument,
                 origin + ": '" + spec.name + "' must be " + want + ", got " + v.dump());
  };
  if (v.is_null()) return v;
  switch (spec.kind) {
    case Kind::kNumber:
      if (!v.is_number()) throw bad("a number");
      return v.get<double>();
    case Kind::kCount:
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw bad("a non-negative integer");
      }
      return v.get<std::uint64_t>();
    case Kind::kUint64:
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw bad("a non-negative integer");
      }
      return v.get<std::uint64_t>();
    case Kind::kBool:
      if (!v.is_boolean()) throw bad("true or false");
      return v;
    case Kind::kString:
      if (!v.is_string()) throw bad("a string");
      return v;
    case Kind::kStrategy:
      if (!v.is_string() || !parse_strategy(v.get<std::string>())) {
        throw bad("one of rank, monte_carlo, greedy, exhaustive");
      }
      return v;
    case Kind::kGapMetric:
      if (!v.is_string() || !parse_gap_metric(v.get<std::string>())) throw bad("kl or js");
      return v;
    case Kind::kFlattening:
      if (!v.is_string() || (v != "joint" && v != "incoming")) throw bad("joint or incoming");
      return v;
  }
  return v;
}

Json read_config_file(const std::string& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, path + ": config must be a JSON object");
  return j;
}

std::string optional_string(const RunConfig& rc, const char* key) {
  const Json& v = rc.at(key);
  return v.is_null() ? std::string() : v.get<std::string>();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.emplace_back(k.name);
    return out;
  }();
  return names;
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
}

RunConfig resolve_config(const Json& flags, const std::optional<std::string>& config_path,
                         const EnvLookup& env) {
  RunConfig rc;
  rc.file_path = config_path;
  for (const auto& k : key_table()) {
    rc.values[k.name] = k.fallback;
    rc.sources[k.name] = "default";
  }

  const std::pair<const char*, const char*> env_keys[] = {
      {"classifier_url", kEnvClassifierUrl},
      {"judge_url", kEnvJudgeUrl},
      {"embedder_url", kEnvEmbedderUrl},
  };
  for (const auto& [key, var] : env_keys) {
    if (auto v = env(var)) {
      rc.env[var] = *v;
      rc.values[key] = *v;
      rc.sources[key] = "env";
    }
  }

  if (config_path) {
    rc.file = read_config_file(*config_path);
    for (const auto& [name, value] : rc.file.items()) {
      const KeySpec* spec = find_key(name);
      if (spec == nullptr) throw Error(ErrorCode::kInvalidArgument, *config_path + ": unknown key '" + name + "'");
      rc.values[name] = coerce(*spec, value, *config_path);
      rc.sources[name] = "file";
    }
  }

  for (const auto& [name, value] : flags.items()) {
    const KeySpec* spec = find_key(name);
    if (spec == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown flag key '" + name + "'");
    rc.flags[name] = value;
    rc.values[name] = coerce(*spec, value, "command line");
    rc.sources[name] = "flag";
  }
  return rc;
}

Json RunConfig::echo() const {
  Json out = Json::object();
  out["resolved"] = values;
  out["sources"] = sources;
  out["flags"] = flags;
  out["config_file"] = file_path ? Json(*file_path) : Json(nullptr);
  out["file"] = file;
  out["env"] = env;
  return out;
}

clients::ClientConfig RunConfig::client(const std::string& url_key) const {
  clients::ClientConfig c;
  c.endpoint = optional_string(*this, url_key.c_str());
  c.mode = (at("stub").get<bool>() || c.endpoint.empty()) ? clients::Mode::kStub : clients::Mode::kRemote;
  c.timeout = std::chrono::milliseconds(at("timeout_ms").get<std::int64_t>());
  c.max_retries = static_cast<int>(at("max_retries").get<std::int64_t>());
  c.max_in_flight = static_cast<int>(at("max_in_flight").get<std::int64_t>());
  c.validate();
  return c;
}

GlobalConfig RunConfig::global() const {
  GlobalConfig g;
  g.alpha = number("alpha");
  g.tau = number("tau");
  g.flattening = at("flattening") == "incoming" ? Flattening::kIncoming : Flattening::kJoint;
  return g;
}

RewardWeights RunConfig::reward_weights() const {
  RewardWeights w;
  w.lambda1 = number("lambda1");
  w.lambda2 = number("lambda2");
  w.lambda3 = number("lambda3");
  w.alpha = number("reward_alpha");
  w.beta = number("reward_beta");
  w.length_band.min_tokens = at("length_min").get<std::size_t>();
  w.length_band.max_tokens = at("length_max").get<std::size_t>();
  w.repeat_threshold = number("repeat_threshold");
  w.validate();
  return w;
}

CompositeWeights RunConfig::composite_weights() const {
  CompositeWeights w;
  w.w_style = number("w_style");
  w.w_result = number("w_result");
  w.w_route = number("w_route");
  w.w_reward = number("w_reward");
  w.validate();
  return w;
}

RulePatterns RunConfig::rule_patterns() const {
  RulePatterns r;
  if (auto p = optional_string(*this, "banned_patterns"); !p.empty()) r.banned = PatternSet::load(p);
  if (auto p = optional_string(*this, "privacy_patterns"); !p.empty()) r.privacy = PatternSet::load(p);
  return r;
}

SelectionConfig RunConfig::selection() const {
  SelectionConfig s;
  if (!has("k")) throw Error(ErrorCode::kInvalidArgument, "selection needs --k");
  s.k = at("k").get<std::size_t>();
  if (has("k1")) s.k1 = at("k1").get<std::size_t>();
  s.strategy = *parse_strategy(at("strategy").get<std::string>());
  s.gap_metric = *parse_gap_metric(at("gap_metric").get<std::string>());
  s.mc_iterations = at("mc_iters").get<std::size_t>();
  s.mc_dedup = at("mc_dedup").get<bool>();
  s.greedy_batch = at("greedy_batch").get<std::size_t>();
  s.seed = has("seed") ? at("seed").get<std::uint64_t>() : 0;
  s.alpha = number("alpha");
  s.flattening = global().flattening;
  s.validate();
  return s;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIOFailure:
      return kExitIO;
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kMissingTemplate:
    case ErrorCode::kInvalidArgument:
      return kExitValidation;
    case ErrorCode::kRemoteUnavailable:
    case ErrorCode::kUnparseableLabel:
    case ErrorCode::kOutOfRangeScore:
    case ErrorCode::kZeroVector:
      return kExitClient;
    case ErrorCode::kUnlabeledCorpus:
    case ErrorCode::kMissingLabel:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kDegenerateDistribution:
    case ErrorCode::kSupportMismatch:
    case ErrorCode::kNoQuestions:
    case ErrorCode::kEmptyReferenceCorpus:
    case ErrorCode::kUnpairedScenario:
    case ErrorCode::kModelScoreOutOfRange:
      return kExitPrecondition;
    case ErrorCode::kKTooLarge:
    case ErrorCode::kCombinatorialBlowup:
      return kExitSelection;
  }
  return kExitValidation;
}

}  // namespace coikit::cli
