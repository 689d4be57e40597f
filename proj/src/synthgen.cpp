#include "coikit/synthgen.hpp"

#include <cmath>
#include <cstdio>

#include "coikit/parallel.hpp"

namespace coikit {

namespace {

constexpr double kSimplexTolerance = 1e-9;

std::size_t sample_index(const std::array<double, kNumIntents>& probs, SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // Rows summing to slightly under one leave a sliver past the last bucket.
  return last_positive;
}

void check_simplex(const std::array<double, kNumIntents>& v, const std::string& what,
                   std::vector<std::string>& problems) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      problems.push_back(what + " has a negative or non-finite entry");
      return;
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", sum);
    problems.push_back(what + " sums to " + buf + ", not 1");
  }
}

std::string fill_placeholders(const std::string& tmpl, const Scenario& scenario) {
  if (scenario.empty()) return tmpl;
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = scenario.find(tmpl.substr(i + 1, close - i - 1));
        if (it != scenario.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

const std::string& pick(const std::vector<std::string>& options, SplitMix64& rng) {
  return options[static_cast<std::size_t>(rng.below(options.size()))];
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, i);
  return buf;
}

IntentLabel label_or_throw(const std::string& name) {
  auto l = parse_intent(name);
  if (!l) throw Error(ErrorCode::kInvalidSpec, "unknown intent label '" + name + "'");
  return *l;
}

std::array<double, kNumIntents> dist_from_json(const Json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidSpec, what + " must be an object keyed by label");
  std::array<double, kNumIntents> out{};
  for (const auto& [name, value] : j.items()) {
    if (!value.is_number()) throw Error(ErrorCode::kInvalidSpec, what + "." + name + " must be a number");
    out[index_of(label_or_throw(name))] = value.get<double>();
  }
  return out;
}

Json dist_to_json(const std::array<double, kNumIntents>& v) {
  Json out = Json::object();
  for (auto l : kAllIntents) {
    if (v[index_of(l)] != 0.0) out[std::string(to_string(l))] = v[index_of(l)];
  }
  return out;
}

std::array<bool, kNumIntents> label_set_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidSpec, what + " must be an array of labels");
  std::array<bool, kNumIntents> out{};
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::kInvalidSpec, what + " must contain label names");
    out[index_of(label_or_throw(v.get<std::string>()))] = true;
  }
  return out;
}

Json label_set_to_json(const std::array<bool, kNumIntents>& s) {
  Json out = Json::array();
  for (auto l : kAllIntents) {
    if (s[index_of(l)]) out.push_back(std::string(to_string(l)));
  }
  return out;
}

std::vector<std::string> strings_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidSpec, what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::kInvalidSpec, what + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

const std::vector<std::string>& default_recruiter_templates() {
  static const std::vector<std::string> lines = {
      "Hi, we are hiring for {job}. Would you like to hear more?",
      "The role pays {salary}. Does that work for you?",
      "Happy to answer anything about the position.",
      "Shall I send over the contact card so we can set up an interview?",
      "Thanks for the reply. What else would you like to know?",
  };
  return lines;
}

}  // namespace

std::array<bool, kNumIntents> GeneratorSpec::reachable() const {
  std::array<bool, kNumIntents> seen{};
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (initial_dist[i] > 0.0) {
      seen[i] = true;
      frontier.push_back(i);
    }
  }
  if (max_turns < 2) return seen;
  while (!frontier.empty()) {
    const std::size_t i = frontier.back();
    frontier.pop_back();
    if (absorbing[i]) continue;
    for (std::size_t j = 0; j < kNumIntents; ++j) {
      if (forward_matrix[i][j] > 0.0 && !seen[j]) {
        seen[j] = true;
        frontier.push_back(j);
      }
    }
  }
  return seen;
}

void GeneratorSpec::validate() const {
  std::vector<std::string> problems;
  check_simplex(initial_dist, "initial_dist", problems);
  for (auto l : kAllIntents) {
    if (absorbing[index_of(l)]) continue;
    check_simplex(forward_matrix[index_of(l)], "forward_matrix row '" + std::string(to_string(l)) + "'",
                  problems);
  }
  if (max_turns < 1) problems.push_back("max_turns must be >= 1");
  if (recruiter_templates.empty()) problems.push_back("recruiter_templates is empty");
  if (!problems.empty()) {
    std::string msg = "invalid generator spec: " + problems.front();
    throw Error(ErrorCode::kInvalidSpec, msg, problems);
  }
  const auto reach = reachable();
  for (auto l : kAllIntents) {
    if (reach[index_of(l)] && templates[index_of(l)].empty()) {
      throw Error(ErrorCode::kMissingTemplate,
                  "no templates for reachable label '" + std::string(to_string(l)) + "'");
    }
  }
}

IntentChain sample_chain(const GeneratorSpec& spec, SplitMix64& rng) {
  IntentChain chain;
  std::size_t cur = sample_index(spec.initial_dist, rng);
  chain.labels.push_back(kAllIntents[cur]);
  while (chain.labels.size() < spec.max_turns && !spec.absorbing[cur]) {
    cur = sample_index(spec.forward_matrix[cur], rng);
    chain.labels.push_back(kAllIntents[cur]);
  }
  return chain;
}

Dialogue render_dialogue(const IntentChain& chain, const GeneratorSpec& spec, SplitMix64& rng,
                         const Scenario& scenario) {
  Dialogue d;
  d.id = chain.dialogue_id;
  d.source = Source::kSynthetic;
  for (auto label : chain.labels) {
    const auto& options = spec.templates[index_of(label)];
    if (options.empty()) {
      throw Error(ErrorCode::kMissingTemplate, "no templates for label '" + std::string(to_string(label)) + "'");
    }
    Turn rec;
    rec.index = d.turns.size();
    rec.speaker = Speaker::kRecruiter;
    rec.text = fill_placeholders(pick(spec.recruiter_templates, rng), scenario);
    d.turns.push_back(std::move(rec));

    Turn cand;
    cand.index = d.turns.size();
    cand.speaker = Speaker::kCandidate;
    cand.text = fill_placeholders(pick(options, rng), scenario);
    cand.intent = label;
    if (label == IntentLabel::kSuccessfulConversion || spec.conversion_marker_on[index_of(label)]) {
      cand.behavior_tags.emplace_back(kConversionMarker);
    }
    d.turns.push_back(std::move(cand));
  }
  return d;
}

Corpus generate_corpus(const GeneratorSpec& spec, std::size_t n, const std::vector<Scenario>& scenarios) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "dialogue count must be >= 1");
  spec.validate();
  std::vector<Dialogue> out(n);
  parallel_for(n, [&](std::size_t i) {
    auto rng = derive_stream(spec.seed, i);
    IntentChain chain = sample_chain(spec, rng);
    chain.dialogue_id = numbered("syn", i + 1);
    static const Scenario fallback = {{"job", "this position"}, {"salary", "the posted salary"}};
    const Scenario& sc = scenarios.empty() ? fallback : scenarios[i % scenarios.size()];
    out[i] = render_dialogue(chain, spec, rng, sc);
    out[i].scenario_id = numbered("scn", i + 1);
  });
  return Corpus(std::move(out));
}

GeneratorSpec generator_spec_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidSpec, "generator spec must be a JSON object");
  for (const char* key : {"initial_dist", "forward_matrix", "templates"}) {
    if (!j.contains(key)) throw Error(ErrorCode::kInvalidSpec, std::string("generator spec is missing '") + key + "'");
  }
  GeneratorSpec spec;
  spec.initial_dist = dist_from_json(j.at("initial_dist"), "initial_dist");
  const Json& fm = j.at("forward_matrix");
  if (!fm.is_object()) throw Error(ErrorCode::kInvalidSpec, "forward_matrix must be an object keyed by label");
  for (const auto& [name, row] : fm.items()) {
    spec.forward_matrix[index_of(label_or_throw(name))] = dist_from_json(row, "forward_matrix." + name);
  }
  if (j.contains("absorbing")) spec.absorbing = label_set_from_json(j.at("absorbing"), "absorbing");
  if (j.contains("conversion_marker_on")) {
    spec.conversion_marker_on = label_set_from_json(j.at("conversion_marker_on"), "conversion_marker_on");
  }
  if (j.contains("max_turns")) {
    const Json& mt = j.at("max_turns");
    if (!mt.is_number_integer() || mt.get<std::int64_t>() < 1) {
      throw Error(ErrorCode::kInvalidSpec, "max_turns must be a positive integer");
    }
    spec.max_turns = mt.get<std::size_t>();
  }
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_integer()) throw Error(ErrorCode::kInvalidSpec, "seed must be an integer");
    spec.seed = s.is_number_unsigned() ? s.get<std::uint64_t>() : static_cast<std::uint64_t>(s.get<std::int64_t>());
  }
  const Json& t = j.at("templates");
  if (!t.is_object()) throw Error(ErrorCode::kInvalidSpec, "templates must be an object keyed by label");
  for (const auto& [name, lines] : t.items()) {
    spec.templates[index_of(label_or_throw(name))] = strings_from_json(lines, "templates." + name);
  }
  spec.recruiter_templates = j.contains("recruiter_templates")
                                 ? strings_from_json(j.at("recruiter_templates"), "recruiter_templates")
                                 : default_recruiter_templates();
  return spec;
}

Json generator_spec_to_json(const GeneratorSpec& spec) {
  Json out = Json::object();
  out["seed"] = spec.seed;
  out["max_turns"] = spec.max_turns;
  out["initial_dist"] = dist_to_json(spec.initial_dist);
  Json fm = Json::object();
  for (auto l : kAllIntents) {
    if (!spec.absorbing[index_of(l)]) fm[std::string(to_string(l))] = dist_to_json(spec.forward_matrix[index_of(l)]);
  }
  out["forward_matrix"] = fm;
  out["absorbing"] = label_set_to_json(spec.absorbing);
  out["conversion_marker_on"] = label_set_to_json(spec.conversion_marker_on);
  Json t = Json::object();
  for (auto l : kAllIntents) {
    if (!spec.templates[index_of(l)].empty()) t[std::string(to_string(l))] = spec.templates[index_of(l)];
  }
  out["templates"] = t;
  out["recruiter_templates"] = spec.recruiter_templates;
  return out;
}

GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, path.string() + ": " + e.what());
  }
  return generator_spec_from_json(j);
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kInvalidSpec, "scenario file must hold a JSON array of objects");
  std::vector<Scenario> out;
  for (const auto& item : j) {
    if (!item.is_object()) throw Error(ErrorCode::kInvalidSpec, "scenario entries must be objects");
    Scenario s;
    for (const auto& [k, v] : item.items()) {
      s[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    out.push_back(std::move(s));
  }
  return out;
}

GeneratorSpec default_generator_spec() {
  using L = IntentLabel;
  GeneratorSpec s;
  s.seed = 20240601;
  s.max_turns = 12;
  s.absorbing[index_of(L::kSuccessfulConversion)] = true;
  s.absorbing[index_of(L::kRejection)] = true;
  s.conversion_marker_on[index_of(L::kSuccessfulConversion)] = true;

  // Column order follows IntentLabel: II PI CJ CS Rej IU SC SR TF.
  s.initial_dist = {0.40, 0.15, 0.12, 0.10, 0.03, 0.10, 0.02, 0.05, 0.03};
  auto& f = s.forward_matrix;
  f[index_of(L::kInformationInquiry)] = {0.30, 0.20, 0.12, 0.08, 0.06, 0.06, 0.08, 0.06, 0.04};
  f[index_of(L::kPositiveIntent)] = {0.20, 0.15, 0.05, 0.05, 0.03, 0.04, 0.30, 0.12, 0.06};
  f[index_of(L::kConcernsAboutJob)] = {0.30, 0.10, 0.20, 0.05, 0.15, 0.05, 0.05, 0.05, 0.05};
  f[index_of(L::kConcernsAboutSelf)] = {0.25, 0.10, 0.05, 0.25, 0.15, 0.05, 0.05, 0.05, 0.05};
  f[index_of(L::kIrrelevantUtterance)] = {0.25, 0.10, 0.05, 0.05, 0.10, 0.30, 0.05, 0.05, 0.05};
  f[index_of(L::kSentResumeOrContact)] = {0.20, 0.25, 0.05, 0.05, 0.05, 0.05, 0.25, 0.05, 0.05};
  f[index_of(L::kPositiveButTechnicalFailure)] = {0.10, 0.20, 0.05, 0.05, 0.05, 0.05, 0.20, 0.20, 0.10};

  auto& t = s.templates;
  t[index_of(L::kInformationInquiry)] = {
      "What are the working hours?",
      "Where is the office located?",
      "Is the pay for {job} fixed or commission based?",
      "Do I need any experience for this?",
      "How many days off per month?",
  };
  t[index_of(L::kPositiveIntent)] = {
      "Sounds good, I'm interested.",
      "Okay, that works for me.",
      "Great, I'd like to apply.",
      "Sure, let's go ahead.",
  };
  t[index_of(L::kConcernsAboutJob)] = {
      "Is this a legit company? Do I have to pay any fee?",
      "The salary of {salary} seems low for this kind of work.",
      "I'm worried the shifts are too long.",
  };
  t[index_of(L::kConcernsAboutSelf)] = {
      "I'm not sure I'm qualified, I have no degree.",
      "I'm a bit old for this, will that be a problem?",
      "I only have weekend availability.",
  };
  t[index_of(L::kRejection)] = {
      "Not suitable for me, thanks.",
      "No thanks, I found another job.",
      "I'm not interested anymore.",
  };
  t[index_of(L::kIrrelevantUtterance)] = {
      "Hello",
      "Who is this?",
      "Sorry, wrong chat.",
  };
  t[index_of(L::kSuccessfulConversion)] = {
      "Here is my number, call me anytime.",
      "Done, I just clicked the contact card.",
  };
  t[index_of(L::kSentResumeOrContact)] = {
      "I sent you my resume.",
      "My WeChat is in my profile, add me there.",
  };
  t[index_of(L::kPositiveButTechnicalFailure)] = {
      "I want to apply but the app keeps crashing.",
      "I tried to send my resume but the upload failed.",
  };
  s.recruiter_templates = default_recruiter_templates();
  return s;
}

}  // namespace coikit
