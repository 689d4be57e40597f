#include "coikit/clients.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "coikit/text.hpp"

namespace coikit::clients {

void ClientConfig::validate() const {
  if (timeout.count() <= 0) throw Error(ErrorCode::kInvalidArgument, "client timeout must be > 0 ms");
  if (max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  if (max_in_flight < 1) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  if (mode == Mode::kRemote && endpoint.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "remote client mode requires an endpoint");
  }
}

StyleScore StyleScore::from_step(int step) {
  if (step < 0 || step > 5) {
    throw Error(ErrorCode::kOutOfRangeScore, "style step " + std::to_string(step) + " outside 0..5");
  }
  StyleScore s;
  s.step_ = step;
  return s;
}

StyleScore StyleScore::snap(double v, double tol) {
  if (std::isfinite(v)) {
    const double scaled = v * 5.0;
    const double nearest = std::round(scaled);
    if (nearest >= 0.0 && nearest <= 5.0 && std::abs(v - nearest / 5.0) <= tol) {
      return from_step(static_cast<int>(nearest));
    }
  }
  throw Error(ErrorCode::kOutOfRangeScore,
              "style score " + std::to_string(v) + " is not in {0, 0.2, ..., 1.0}");
}

StyleScore round_to_step(std::size_t num, std::size_t den) {
  if (den == 0 || num > den) throw Error(ErrorCode::kInvalidArgument, "ratio must lie in [0, 1]");
  // floor(5*num/den + 1/2) computed exactly
  return StyleScore::from_step(static_cast<int>((10 * num + den) / (2 * den)));
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// Stub classifier

namespace {

using Phrases = std::vector<std::vector<std::string>>;

Phrases phrases(std::initializer_list<std::string_view> raw) {
  Phrases out;
  for (auto p : raw) out.push_back(text::word_tokens(p));
  return out;
}

bool any_phrase(const std::vector<std::string>& tokens, const Phrases& list) {
  return std::any_of(list.begin(), list.end(),
                     [&](const auto& p) { return text::contains_phrase(tokens, p); });
}

struct KeywordTable {
  Phrases contact_behaviors = phrases({"resume", "contact", "phone", "wechat", "number"});
  Phrases ended_behaviors = phrases({"ended conversation"});
  Phrases lets_talk = phrases({"let's talk"});
  Phrases technical = phrases({"not there", "can't add", "cannot add", "unable to add", "can't find",
                               "cannot find", "can't see", "cannot see", "doesn't work",
                               "not working", "failed to add", "won't load", "no card"});
  Phrases rejection = phrases({"not suitable", "not interested", "not considering", "won't do",
                               "no thanks", "not for me", "don't want", "i'll pass", "refuse",
                               "not going to", "no need", "forget it"});
  Phrases job_concern = phrases({"scam", "legit", "legitimate", "fake", "fee", "fees", "cheat",
                                 "fraud", "guaranteed", "commission", "deposit", "trust"});
  Phrases self_concern = phrases({"haven't done", "no experience", "not experienced", "my voice",
                                  "my appearance", "my looks", "not good at", "no time",
                                  "too busy", "too old", "too young", "i am male", "i'm male",
                                  "i am female", "i'm female", "no equipment", "don't have a phone",
                                  "shy", "not pretty"});
  Phrases interrogative_lead = phrases({"what", "where", "how", "when", "which", "who", "why", "is",
                                        "are", "does", "do", "can", "could", "will", "would"});
  Phrases affirmation = phrases({"interested", "sure", "yes", "sounds good", "great", "i'd like",
                                 "i want to", "count me in", "alright", "deal", "i'll add"});
};

const KeywordTable& table() {
  static const KeywordTable t;
  return t;
}

bool is_filler_only(std::string_view trimmed) {
  static const std::vector<std::string_view> fillers = {"?", ".", "？", "。", "uh", "um", "er", "hmm"};
  const std::string lowered = text::ascii_lower(trimmed);
  return std::find(fillers.begin(), fillers.end(), lowered) != fillers.end();
}

}  // namespace

IntentLabel StubClassifier::classify(std::string_view utterance, std::span<const Turn>) {
  const auto& t = table();
  const std::string_view trimmed = text::trim(utterance);
  if (trimmed.find(kConversionMarker) != std::string_view::npos) return IntentLabel::kSuccessfulConversion;
  const auto tokens = text::word_tokens(trimmed);
  if (trimmed.find(kBehaviorPrefix) != std::string_view::npos) {
    if (any_phrase(tokens, t.ended_behaviors)) return IntentLabel::kRejection;
    if (any_phrase(tokens, t.contact_behaviors)) return IntentLabel::kSentResumeOrContact;
    return IntentLabel::kIrrelevantUtterance;
  }
  if (any_phrase(tokens, t.lets_talk)) return IntentLabel::kPositiveIntent;
  if (any_phrase(tokens, t.technical)) return IntentLabel::kPositiveButTechnicalFailure;
  if (any_phrase(tokens, t.rejection)) return IntentLabel::kRejection;
  if (is_filler_only(trimmed) || any_phrase(tokens, t.job_concern)) return IntentLabel::kConcernsAboutJob;
  if (any_phrase(tokens, t.self_concern)) return IntentLabel::kConcernsAboutSelf;
  if (text::has_question_mark(trimmed) ||
      (!tokens.empty() && any_phrase({tokens.front()}, t.interrogative_lead))) {
    return IntentLabel::kInformationInquiry;
  }
  if (any_phrase(tokens, t.affirmation)) return IntentLabel::kPositiveIntent;
  return IntentLabel::kIrrelevantUtterance;
}

StyleScore StubJudge::style_score(std::string_view generated, std::string_view reference) {
  if (generated.empty() || reference.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "style_score needs non-empty texts");
  }
  const auto j = text::trigram_jaccard(generated, reference);
  return round_to_step(j.intersection, j.union_size);
}

// ---------------------------------------------------------------------------
// Stub embedder

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_stopword(std::string_view w) {
  static const std::vector<std::string_view> stop = {
      "a",  "an", "the", "is", "are", "am", "was", "were", "be", "to",  "of",  "and", "or",
      "in", "on", "at",  "for", "it", "this", "that", "i",  "you", "me", "my", "your", "do",
      "does", "did", "so", "just"};
  return std::find(stop.begin(), stop.end(), w) != stop.end();
}

namespace {
bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}
}  // namespace

Embedding StubEmbedder::embed(std::string_view input) {
  if (text::trim(input).empty()) throw Error(ErrorCode::kInvalidArgument, "embed needs non-empty text");
  Embedding v(kStubEmbeddingDim, 0.0);
  for (const auto& raw : text::split_whitespace(input)) {
    std::string_view tok = raw;
    while (!tok.empty() && is_ascii_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_ascii_punct(tok.back())) tok.remove_suffix(1);
    const std::string lowered = text::ascii_lower(tok);
    if (lowered.empty() || is_stopword(lowered)) continue;
    v[fnv1a64(lowered) % kStubEmbeddingDim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    throw Error(ErrorCode::kZeroVector, "no content tokens in '" + std::string(input) + "'");
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// ---------------------------------------------------------------------------
// Prompts

namespace {

constexpr std::string_view kIntentTemplate =
    R"(You are an intent classification expert. Your task is to assign a label to the candidate's utterance based on the following intent definitions.

[Intent Definitions]
1. Information Inquiry: Initial inquiries where the candidate proactively asks about job or company details (e.g., "take a look", "job benefits", "salary", contract questions).
2. Positive Intent: The candidate shows interest or gives positive signals (e.g., "interested in the role", "let's talk"). Note: Any occurrence of "let's talk" is always classified as Positive Intent.
3. Concerns About the Job: Expressions of doubt or negative sentiment toward the job (e.g., "fake job posting", "is this legit?", questioning high commissions). Includes single punctuation ("?", ".") or filler words ("uh").
4. Rejection: Explicit decline (e.g., "not considering", "won't do it") or refusal to switch platforms/add contact information.
5. Irrelevant Utterance: Messages unrelated to the job-seeking process or containing no substantive information.
6. Successful Conversion: The exact string "[Behavior]C clicked contact information card" appears. No paraphrasing allowed.
7. Sent Resume or Contact Info: Candidate sends resume or shares contact info. Must contain "[Behavior]" (e.g., "[Behavior] sent attached resume").
8. Concerns About Self: Expressions of personal limitations (e.g., appearance, lack of experience, insufficient equipment, time constraints).
9. Positive Intent but Technical Failure: Candidate intends to proceed but fails due to technical issues (e.g., unable to add contact information).

[Critical Note]
Sharing/exchanging contact information counts as Label 7, while clicking the contact information card counts as Label 6—they are distinct.

[Input Data]
Candidate Utterance: {user_dialogue}

[Output Requirements]
Output only the label name from the list below. Do not provide explanations or reasoning.
Valid Labels: Information Inquiry, Positive Intent, Concerns About the Job, Concerns About Self, Rejection, Irrelevant Utterance, Successful Conversion, Sent Resume or Contact Info, Positive Intent but Technical Failure.)";

constexpr std::string_view kStyleTemplate =
    R"(You are a professional expert in evaluating dialogue tone and style.

[Task]
Assess whether the "Generated Dialogue" matches the "Original Dialogue" in terms of tone and style.
- Make a global judgment based on the overall dialogue, not a sentence-by-sentence comparison.
- Definition of Tone Style: Refers to the speaker's manner of expression, including emotional inclination (positive/neutral/negative), politeness level (polite/casual), formality (formal/colloquial), and sentence mood (interrogative/imperative/declarative).
- Focus solely on the "way of speaking" (i.e., whether they sound like the same person), regardless of content relevance.

[Scoring Criteria]
- 1.0: Tone is almost identical; sounds exactly like the same person.
- 0.8: Tone is very close; only subtle differences exist.
- 0.6: Tone is roughly similar, but distinguishable as different speakers.
- 0.4: Obvious differences in tone.
- 0.2: Tone is completely different.
- 0.0: Tone is extremely opposite (e.g., one is extremely polite, the other is extremely rude).

[Output Format]
Output only a single float number representing the score.

[Input Data]
Generated Dialogue: {text1}
Original Dialogue: {text2})";

// Replaces the single occurrence of `slot`. Values are inserted after all
// slots are located, so braces inside a value are never re-expanded.
std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::vector<std::pair<std::size_t, std::pair<std::string_view, std::string_view>>> found;
  for (const auto& s : slots) found.emplace_back(tmpl.find(s.first), s);
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  std::size_t pos = 0;
  for (const auto& [at, slot] : found) {
    out.append(tmpl.substr(pos, at - pos));
    out.append(slot.second);
    pos = at + slot.first.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace

std::string render_intent_prompt(std::string_view utterance) {
  return fill(kIntentTemplate, {{"{user_dialogue}", utterance}});
}

std::string render_style_prompt(std::string_view generated, std::string_view original) {
  return fill(kStyleTemplate, {{"{text1}", generated}, {"{text2}", original}});
}

// ---------------------------------------------------------------------------
// Transport

namespace {

class HttpTransport final : public Transport {
 public:
  std::string post(const std::string& url, const std::string& body,
                   std::chrono::milliseconds timeout) override {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, url_re)) throw TransportFailure("malformed endpoint URL '" + url + "'");
    httplib::Client client(m[1].str());
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, body, "application/json");
    if (!res) throw TransportFailure("request to '" + url + "' failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw TransportFailure("request to '" + url + "' returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

std::vector<std::chrono::milliseconds> backoff_schedule(const ClientConfig& cfg) {
  std::vector<std::chrono::milliseconds> waits;
  std::chrono::milliseconds wait{200};
  for (int i = 0; i < cfg.max_retries; ++i) {
    waits.push_back(std::min(wait, cfg.timeout));
    wait *= 2;
  }
  return waits;
}

RemoteChannel::RemoteChannel(ClientConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  cfg_.validate();
  if (!transport_) transport_ = make_http_transport();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteChannel::complete(const std::string& prompt) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    RemoteChannel* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  const std::string body = Json{{"prompt", prompt}}.dump();
  const auto waits = backoff_schedule(cfg_);
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= waits.size(); ++attempt) {
    if (attempt > 0) sleeper_(waits[attempt - 1]);
    try {
      const std::string raw = transport_->post(cfg_.endpoint, body, cfg_.timeout);
      const Json reply = Json::parse(raw);
      if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw TransportFailure("response lacks a string \"text\" field");
      }
      return reply["text"].get<std::string>();
    } catch (const TransportFailure& e) {
      last_error = e.what();
    } catch (const Json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw Error(ErrorCode::kRemoteUnavailable,
              "'" + cfg_.endpoint + "' unavailable after " + std::to_string(waits.size() + 1) +
                  " attempt(s): " + last_error);
}

IntentLabel RemoteClassifier::classify(std::string_view utterance, std::span<const Turn>) {
  if (utterance.empty()) throw Error(ErrorCode::kInvalidArgument, "classify needs non-empty text");
  const std::string reply = channel_->complete(render_intent_prompt(utterance));
  if (auto label = parse_intent(reply)) return *label;
  throw Error(ErrorCode::kUnparseableLabel, "classifier replied '" + reply + "', not a label name");
}

StyleScore RemoteJudge::style_score(std::string_view generated, std::string_view reference) {
  if (generated.empty() || reference.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "style_score needs non-empty texts");
  }
  const std::string reply = channel_->complete(render_style_prompt(generated, reference));
  const std::string_view t = text::trim(reply);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::kOutOfRangeScore, "judge replied '" + reply + "', not a number");
  }
  return StyleScore::snap(v);
}

Embedding RemoteEmbedder::embed(std::string_view input) {
  if (input.empty()) throw Error(ErrorCode::kInvalidArgument, "embed needs non-empty text");
  const std::string reply = channel_->complete(std::string(input));
  Embedding v;
  try {
    const Json arr = Json::parse(reply);
    if (!arr.is_array() || arr.empty()) throw Error(ErrorCode::kRemoteUnavailable, "embedding must be a non-empty array");
    for (const auto& x : arr) v.push_back(x.get<double>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kRemoteUnavailable, std::string("malformed embedding: ") + e.what());
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0 || !std::isfinite(norm)) throw Error(ErrorCode::kZeroVector, "remote embedding has zero norm");
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

namespace {
std::shared_ptr<RemoteChannel> channel_for(const ClientConfig& cfg, std::shared_ptr<Transport> transport) {
  return std::make_shared<RemoteChannel>(cfg, std::move(transport));
}
}  // namespace

std::unique_ptr<IntentClassifier> make_classifier(const ClientConfig& cfg, std::shared_ptr<Transport> transport) {
  cfg.validate();
  if (cfg.mode == Mode::kStub) return std::make_unique<StubClassifier>();
  return std::make_unique<RemoteClassifier>(channel_for(cfg, std::move(transport)));
}

std::unique_ptr<StyleJudge> make_judge(const ClientConfig& cfg, std::shared_ptr<Transport> transport) {
  cfg.validate();
  if (cfg.mode == Mode::kStub) return std::make_unique<StubJudge>();
  return std::make_unique<RemoteJudge>(channel_for(cfg, std::move(transport)));
}

std::unique_ptr<Embedder> make_embedder(const ClientConfig& cfg, std::shared_ptr<Transport> transport) {
  cfg.validate();
  if (cfg.mode == Mode::kStub) return std::make_unique<StubEmbedder>();
  return std::make_unique<RemoteEmbedder>(channel_for(cfg, std::move(transport)));
}

}  // namespace coikit::clients
