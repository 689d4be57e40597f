#pragma once

// Dialogue data model, JSON Lines ingestion and outcome derivation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "coikit/error.hpp"

namespace coikit {

using Json = nlohmann::ordered_json;

/// The nine candidate intents. Declaration order fixes matrix axes and the
/// row-major flattening of joint distributions.
enum class IntentLabel : std::uint8_t {
  kInformationInquiry,
  kPositiveIntent,
  kConcernsAboutJob,
  kConcernsAboutSelf,
  kRejection,
  kIrrelevantUtterance,
  kSuccessfulConversion,
  kSentResumeOrContact,
  kPositiveButTechnicalFailure,
};

inline constexpr std::size_t kNumIntents = 9;

inline constexpr std::array<IntentLabel, kNumIntents> kAllIntents = {
    IntentLabel::kInformationInquiry,   IntentLabel::kPositiveIntent,
    IntentLabel::kConcernsAboutJob,     IntentLabel::kConcernsAboutSelf,
    IntentLabel::kRejection,            IntentLabel::kIrrelevantUtterance,
    IntentLabel::kSuccessfulConversion, IntentLabel::kSentResumeOrContact,
    IntentLabel::kPositiveButTechnicalFailure,
};

constexpr std::size_t index_of(IntentLabel l) { return static_cast<std::size_t>(l); }

/// Canonical label name, e.g. "Sent Resume or Contact Info".
std::string_view to_string(IntentLabel label);

/// Exact, case-sensitive match against the canonical names.
std::optional<IntentLabel> parse_intent(std::string_view name);

/// Behavior marker that signals the candidate clicked the contact card.
inline constexpr std::string_view kConversionMarker =
    "[Behavior]C clicked contact information card";
inline constexpr std::string_view kBehaviorPrefix = "[Behavior]";

enum class Speaker : std::uint8_t { kRecruiter, kCandidate };
enum class Source : std::uint8_t { kReal, kSynthetic };
enum class CorpusSource : std::uint8_t { kReal, kSynthetic, kMixed };
enum class Outcome : std::uint8_t { kConversion, kNonConversion };

std::string_view to_string(Speaker s);
std::string_view to_string(Source s);
std::string_view to_string(CorpusSource s);
std::string_view to_string(Outcome o);

struct Turn {
  std::size_t index = 0;
  Speaker speaker = Speaker::kCandidate;
  std::string text;
  std::vector<std::string> behavior_tags;
  std::optional<IntentLabel> intent;
  Json extra = Json::object();  // unknown keys, preserved on write

  bool operator==(const Turn&) const = default;
};

struct Profile {
  std::string gender;
  std::optional<int> age;
  std::vector<std::string> work_experience;
  std::vector<std::string> job_preferences;
  Json extra = Json::object();

  bool operator==(const Profile&) const = default;
};

struct Dialogue {
  std::string id;
  std::optional<std::string> scenario_id;
  Source source = Source::kReal;
  Profile profile;
  std::vector<Turn> turns;
  Json extra = Json::object();

  bool operator==(const Dialogue&) const = default;

  std::size_t candidate_turn_count() const;
  bool fully_labeled() const;
  /// Key used to pair a synthetic dialogue with its real counterpart.
  const std::string& pairing_key() const { return scenario_id ? *scenario_id : id; }
};

/// Behavior tags of a turn plus any "[Behavior]..." lines embedded in its
/// text, deduplicated, in first-seen order.
std::vector<std::string> effective_behavior_tags(const Turn& turn);

/// Conversion iff the exact marker appears in some turn's tags or text.
Outcome derive_outcome(const Dialogue& d);

/// Validated, immutable collection of dialogues.
class Corpus {
 public:
  Corpus() = default;
  /// Throws Error(kDuplicateId) on repeated ids.
  explicit Corpus(std::vector<Dialogue> dialogues);

  const std::vector<Dialogue>& dialogues() const noexcept { return dialogues_; }
  std::size_t size() const noexcept { return dialogues_.size(); }
  bool empty() const noexcept { return dialogues_.empty(); }
  CorpusSource source() const noexcept { return source_; }
  bool label_complete() const noexcept { return label_complete_; }

  const Dialogue* find(std::string_view id) const;

  /// Sub-corpus holding the dialogues at the given positions, in that order.
  Corpus subset(const std::vector<std::size_t>& positions) const;

 private:
  std::vector<Dialogue> dialogues_;
  CorpusSource source_ = CorpusSource::kMixed;
  bool label_complete_ = true;
};

/// Parses and validates one JSON Lines record. Throws SchemaError.
Dialogue parse_dialogue(std::string_view line, std::size_t line_no);
Json dialogue_to_json(const Dialogue& d);
std::string dialogue_to_line(const Dialogue& d);  // no trailing newline

struct IngestReport {
  std::vector<Dialogue> dialogues;
  std::vector<LineIssue> issues;
};

/// Reads every line and collects all schema problems instead of stopping at
/// the first one. Throws Error(kIOFailure) when the file cannot be read.
IngestReport scan_corpus_file(const std::filesystem::path& path);

/// Strict ingest: SchemaError on any malformed line, kDuplicateId on clashes.
Corpus ingest(const std::filesystem::path& path);

std::string to_jsonl(const Corpus& c);
void write_corpus(const std::filesystem::path& path, const Corpus& c);

struct Question {
  std::string dialogue_id;
  std::string text;
};

using QuestionsByIntent = std::array<std::vector<Question>, kNumIntents>;

/// A candidate turn is a question when labeled Information Inquiry or when
/// its text contains '?' or U+FF1F. Throws kUnlabeledCorpus.
QuestionsByIntent extract_questions(const Corpus& c);

/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace coikit
