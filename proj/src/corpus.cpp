#include "coikit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "coikit/text.hpp"

namespace coikit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIOFailure: return "IOFailure";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnlabeledCorpus: return "UnlabeledCorpus";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kNoQuestions: return "NoQuestions";
    case ErrorCode::kRemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::kUnparseableLabel: return "UnparseableLabel";
    case ErrorCode::kOutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyReferenceCorpus: return "EmptyReferenceCorpus";
    case ErrorCode::kUnpairedScenario: return "UnpairedScenario";
    case ErrorCode::kModelScoreOutOfRange: return "ModelScoreOutOfRange";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kCombinatorialBlowup: return "CombinatorialBlowup";
    case ErrorCode::kMissingTemplate: return "MissingTemplate";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
std::string summarize(const std::vector<LineIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " schema violation(s)";
  if (!issues.empty()) os << "; first at line " << issues.front().line << ": " << issues.front().message;
  return os.str();
}
}  // namespace

SchemaError::SchemaError(std::vector<LineIssue> issues)
    : Error(ErrorCode::kSchemaViolation, summarize(issues)), issues_(std::move(issues)) {}

namespace {

constexpr std::array<std::string_view, kNumIntents> kIntentNames = {
    "Information Inquiry",
    "Positive Intent",
    "Concerns About the Job",
    "Concerns About Self",
    "Rejection",
    "Irrelevant Utterance",
    "Successful Conversion",
    "Sent Resume or Contact Info",
    "Positive Intent but Technical Failure",
};

}  // namespace

std::string_view to_string(IntentLabel label) { return kIntentNames[index_of(label)]; }

std::optional<IntentLabel> parse_intent(std::string_view name) {
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (kIntentNames[i] == name) return kAllIntents[i];
  }
  return std::nullopt;
}

std::string_view to_string(Speaker s) {
  return s == Speaker::kRecruiter ? "recruiter" : "candidate";
}
std::string_view to_string(Source s) { return s == Source::kReal ? "real" : "synthetic"; }
std::string_view to_string(CorpusSource s) {
  switch (s) {
    case CorpusSource::kReal: return "real";
    case CorpusSource::kSynthetic: return "synthetic";
    case CorpusSource::kMixed: return "mixed";
  }
  return "mixed";
}
std::string_view to_string(Outcome o) {
  return o == Outcome::kConversion ? "Conversion" : "NonConversion";
}

std::size_t Dialogue::candidate_turn_count() const {
  return static_cast<std::size_t>(std::count_if(turns.begin(), turns.end(), [](const Turn& t) {
    return t.speaker == Speaker::kCandidate;
  }));
}

bool Dialogue::fully_labeled() const {
  return std::all_of(turns.begin(), turns.end(), [](const Turn& t) {
    return t.speaker != Speaker::kCandidate || t.intent.has_value();
  });
}

std::vector<std::string> effective_behavior_tags(const Turn& turn) {
  std::vector<std::string> tags;
  auto add = [&](std::string_view tag) {
    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.emplace_back(tag);
  };
  for (const auto& t : turn.behavior_tags) add(t);
  std::string_view rest = turn.text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = text::trim(rest.substr(0, nl));
    if (line.substr(0, kBehaviorPrefix.size()) == kBehaviorPrefix) add(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  return tags;
}

Outcome derive_outcome(const Dialogue& d) {
  for (const auto& t : d.turns) {
    if (t.text.find(kConversionMarker) != std::string::npos) return Outcome::kConversion;
    for (const auto& tag : t.behavior_tags) {
      if (tag == kConversionMarker) return Outcome::kConversion;
    }
  }
  return Outcome::kNonConversion;
}

Corpus::Corpus(std::vector<Dialogue> dialogues) : dialogues_(std::move(dialogues)) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> dupes;
  bool any_real = false;
  bool any_syn = false;
  for (const auto& d : dialogues_) {
    if (!seen.insert(d.id).second) dupes.push_back(d.id);
    (d.source == Source::kReal ? any_real : any_syn) = true;
    if (!d.fully_labeled()) label_complete_ = false;
  }
  if (!dupes.empty()) {
    throw Error(ErrorCode::kDuplicateId, "duplicate dialogue id '" + dupes.front() + "'", dupes);
  }
  source_ = any_real && !any_syn   ? CorpusSource::kReal
            : any_syn && !any_real ? CorpusSource::kSynthetic
                                   : CorpusSource::kMixed;
}

const Dialogue* Corpus::find(std::string_view id) const {
  for (const auto& d : dialogues_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

Corpus Corpus::subset(const std::vector<std::size_t>& positions) const {
  std::vector<Dialogue> picked;
  picked.reserve(positions.size());
  for (std::size_t p : positions) picked.push_back(dialogues_.at(p));
  return Corpus(std::move(picked));
}

// ---------------------------------------------------------------------------
// JSON Lines schema

namespace {

class Violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Violation(where + "missing field \"" + key + "\"");
  return *it;
}

std::string require_string(const Json& v, const std::string& what) {
  if (!v.is_string()) throw Violation(what + " must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const Json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) throw Violation(where + "\"" + key + "\" must be an array of strings");
  for (const auto& e : *it) out.push_back(require_string(e, where + "\"" + key + "\" entry"));
  return out;
}

Json leftover(const Json& obj, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) extra[it.key()] = it.value();
  }
  return extra;
}

Profile parse_profile(const Json& obj) {
  Profile p;
  if (obj.is_null()) return p;
  if (!obj.is_object()) throw Violation("\"profile\" must be an object");
  if (auto it = obj.find("gender"); it != obj.end() && !it->is_null()) {
    p.gender = require_string(*it, "profile.gender");
  }
  if (auto it = obj.find("age"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw Violation("profile.age must be an integer");
    const auto age = it->get<std::int64_t>();
    if (age < 14 || age > 100) throw Violation("profile.age " + std::to_string(age) + " outside [14, 100]");
    p.age = static_cast<int>(age);
  }
  p.work_experience = string_list(obj, "work_experience", "profile.");
  p.job_preferences = string_list(obj, "job_preferences", "profile.");
  p.extra = leftover(obj, {"gender", "age", "work_experience", "job_preferences"});
  return p;
}

Turn parse_turn(const Json& obj, std::size_t position) {
  const std::string where = "turns[" + std::to_string(position) + "].";
  if (!obj.is_object()) throw Violation(where.substr(0, where.size() - 1) + " must be an object");
  Turn t;
  const Json& idx = require(obj, "index", where);
  if (!idx.is_number_integer() || idx.get<std::int64_t>() != static_cast<std::int64_t>(position)) {
    throw Violation(where + "index must equal " + std::to_string(position) +
                    " (turn indices are contiguous from 0)");
  }
  t.index = position;
  const std::string speaker = require_string(require(obj, "speaker", where), where + "speaker");
  if (speaker == "recruiter") {
    t.speaker = Speaker::kRecruiter;
  } else if (speaker == "candidate") {
    t.speaker = Speaker::kCandidate;
  } else {
    throw Violation(where + "speaker must be \"recruiter\" or \"candidate\", got \"" + speaker + "\"");
  }
  t.text = require_string(require(obj, "text", where), where + "text");
  t.behavior_tags = string_list(obj, "behavior_tags", where);
  if (auto it = obj.find("intent"); it != obj.end() && !it->is_null()) {
    const std::string name = require_string(*it, where + "intent");
    auto label = parse_intent(name);
    if (!label) throw Violation(where + "unknown intent label \"" + name + "\"");
    if (t.speaker != Speaker::kCandidate) throw Violation(where + "intent is only allowed on candidate turns");
    t.intent = label;
  }
  t.extra = leftover(obj, {"index", "speaker", "text", "behavior_tags", "intent"});
  return t;
}

}  // namespace

Dialogue parse_dialogue(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& msg) -> SchemaError {
    return SchemaError({LineIssue{line_no, msg}});
  };
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!obj.is_object()) throw Violation("record must be a JSON object");
    Dialogue d;
    d.id = require_string(require(obj, "id", ""), "id");
    if (d.id.empty()) throw Violation("id must be non-empty");
    const std::string source = require_string(require(obj, "source", ""), "source");
    if (source == "real") {
      d.source = Source::kReal;
    } else if (source == "synthetic") {
      d.source = Source::kSynthetic;
    } else {
      throw Violation("source must be \"real\" or \"synthetic\", got \"" + source + "\"");
    }
    if (auto it = obj.find("scenario_id"); it != obj.end() && !it->is_null()) {
      d.scenario_id = require_string(*it, "scenario_id");
    }
    if (d.source == Source::kSynthetic && !d.scenario_id) {
      throw Violation("scenario_id is required for synthetic dialogues");
    }
    if (auto it = obj.find("profile"); it != obj.end()) d.profile = parse_profile(*it);
    const Json& turns = require(obj, "turns", "");
    if (!turns.is_array()) throw Violation("\"turns\" must be an array");
    for (std::size_t i = 0; i < turns.size(); ++i) d.turns.push_back(parse_turn(turns[i], i));
    if (d.candidate_turn_count() == 0) throw Violation("dialogue has no candidate turns");
    d.extra = leftover(obj, {"id", "scenario_id", "source", "profile", "turns"});
    return d;
  } catch (const Violation& v) {
    throw fail(v.what());
  }
}

Json dialogue_to_json(const Dialogue& d) {
  Json obj = Json::object();
  obj["id"] = d.id;
  obj["scenario_id"] = d.scenario_id ? Json(*d.scenario_id) : Json(nullptr);
  obj["source"] = to_string(d.source);
  Json profile = Json::object();
  profile["gender"] = d.profile.gender;
  profile["age"] = d.profile.age ? Json(*d.profile.age) : Json(nullptr);
  profile["work_experience"] = d.profile.work_experience;
  profile["job_preferences"] = d.profile.job_preferences;
  for (auto it = d.profile.extra.begin(); it != d.profile.extra.end(); ++it) profile[it.key()] = it.value();
  obj["profile"] = std::move(profile);
  Json turns = Json::array();
  for (const auto& t : d.turns) {
    Json jt = Json::object();
    jt["index"] = t.index;
    jt["speaker"] = to_string(t.speaker);
    jt["text"] = t.text;
    jt["behavior_tags"] = t.behavior_tags;
    jt["intent"] = t.intent ? Json(to_string(*t.intent)) : Json(nullptr);
    for (auto it = t.extra.begin(); it != t.extra.end(); ++it) jt[it.key()] = it.value();
    turns.push_back(std::move(jt));
  }
  obj["turns"] = std::move(turns);
  for (auto it = d.extra.begin(); it != d.extra.end(); ++it) obj[it.key()] = it.value();
  return obj;
}

std::string dialogue_to_line(const Dialogue& d) { return dialogue_to_json(d).dump(); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIOFailure, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIOFailure, "read failed for '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIOFailure, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIOFailure, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIOFailure, "cannot rename into '" + path.string() + "'");
  }
}

IngestReport scan_corpus_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kIOFailure, "no such file '" + path.string() + "'");
  }
  const std::string bytes = read_file(path);
  IngestReport report;
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      report.dialogues.push_back(parse_dialogue(line, line_no));
    } catch (const SchemaError& e) {
      report.issues.insert(report.issues.end(), e.issues().begin(), e.issues().end());
    }
  }
  return report;
}

Corpus ingest(const std::filesystem::path& path) {
  IngestReport report = scan_corpus_file(path);
  if (!report.issues.empty()) throw SchemaError(std::move(report.issues));
  return Corpus(std::move(report.dialogues));
}

std::string to_jsonl(const Corpus& c) {
  std::string out;
  for (const auto& d : c.dialogues()) {
    out += dialogue_to_line(d);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& c) {
  write_file_atomic(path, to_jsonl(c));
}

QuestionsByIntent extract_questions(const Corpus& c) {
  if (!c.label_complete()) {
    throw Error(ErrorCode::kUnlabeledCorpus, "corpus has unlabeled candidate turns");
  }
  QuestionsByIntent out;
  for (const auto& d : c.dialogues()) {
    for (const auto& t : d.turns) {
      if (t.speaker != Speaker::kCandidate) continue;
      if (*t.intent == IntentLabel::kInformationInquiry || text::has_question_mark(t.text)) {
        out[index_of(*t.intent)].push_back(Question{d.id, t.text});
      }
    }
  }
  return out;
}

}  // namespace coikit
