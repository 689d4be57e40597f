#pragma once

// Pluggable LLM-backed services (intent classifier, style judge, embedder).
// Each has a deterministic local stub and a remote HTTP implementation that
// speaks {"prompt": ...} -> {"text": ...}.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coikit/corpus.hpp"

namespace coikit::clients {

enum class Mode : std::uint8_t { kRemote, kStub };

struct ClientConfig {
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  Mode mode = Mode::kStub;
  int max_in_flight = 8;

  /// Throws Error(kInvalidArgument) on a broken config.
  void validate() const;
};

/// Discretized style score: step in 0..5 maps to {0.0, 0.2, ..., 1.0}.
class StyleScore {
 public:
  constexpr StyleScore() = default;
  static StyleScore from_step(int step);
  /// Snaps `v` to the nearest grid value if within `tol`; else kOutOfRangeScore.
  static StyleScore snap(double v, double tol = 1e-6);

  constexpr int step() const { return step_; }
  double value() const { return static_cast<double>(step_) / 5.0; }
  bool operator==(const StyleScore&) const = default;

 private:
  int step_ = 0;
};

/// Rounds an exact ratio num/den to the nearest 0.2 step, ties upward.
StyleScore round_to_step(std::size_t num, std::size_t den);

using Embedding = std::vector<double>;

inline constexpr std::size_t kStubEmbeddingDim = 256;

class IntentClassifier {
 public:
  virtual ~IntentClassifier() = default;
  /// `context` holds the turns preceding the utterance.
  virtual IntentLabel classify(std::string_view utterance, std::span<const Turn> context) = 0;
};

class StyleJudge {
 public:
  virtual ~StyleJudge() = default;
  virtual StyleScore style_score(std::string_view generated, std::string_view reference) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Unit-norm vector; throws Error(kZeroVector) for degenerate input.
  virtual Embedding embed(std::string_view text) = 0;
};

// ---------------------------------------------------------------------------
// Stubs

/// Ordered keyword rules: behavior markers, "let's talk", technical failure,
/// rejection, job concerns, self concerns, interrogatives, affirmations,
/// then Irrelevant Utterance.
class StubClassifier final : public IntentClassifier {
 public:
  IntentLabel classify(std::string_view utterance, std::span<const Turn> context) override;
};

/// Character-trigram Jaccard rounded to the 0.2 grid.
class StubJudge final : public StyleJudge {
 public:
  StyleScore style_score(std::string_view generated, std::string_view reference) override;
};

/// Feature hashing of whitespace tokens (lowercased, edge punctuation
/// stripped, stopwords dropped) into 256 count buckets, L2-normalized.
class StubEmbedder final : public Embedder {
 public:
  Embedding embed(std::string_view text) override;
};

std::uint64_t fnv1a64(std::string_view bytes);
bool is_stopword(std::string_view lowered_token);

// ---------------------------------------------------------------------------
// Remote

/// Prompt templates rendered as plain text.
std::string render_intent_prompt(std::string_view utterance);
std::string render_style_prompt(std::string_view generated, std::string_view original);

/// Minimal transport seam so retry and payload logic can be tested without a
/// server. `post` returns the response body or throws on transport failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post(const std::string& url, const std::string& body,
                           std::chrono::milliseconds timeout) = 0;
};

class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// cpp-httplib backed transport (http:// and https:// when built with TLS).
std::shared_ptr<Transport> make_http_transport();

/// Backoff schedule: 200 ms, doubling, each wait capped at the timeout.
std::vector<std::chrono::milliseconds> backoff_schedule(const ClientConfig& cfg);

/// Shared request machinery: bounded in-flight requests, retries, envelope.
class RemoteChannel {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RemoteChannel(ClientConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  /// Sends {"prompt": prompt}; returns the response's "text" field.
  std::string complete(const std::string& prompt);

  const ClientConfig& config() const { return cfg_; }

 private:
  ClientConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

class RemoteClassifier final : public IntentClassifier {
 public:
  explicit RemoteClassifier(std::shared_ptr<RemoteChannel> channel) : channel_(std::move(channel)) {}
  /// The response text must equal a label name byte-for-byte.
  IntentLabel classify(std::string_view utterance, std::span<const Turn> context) override;

 private:
  std::shared_ptr<RemoteChannel> channel_;
};

class RemoteJudge final : public StyleJudge {
 public:
  explicit RemoteJudge(std::shared_ptr<RemoteChannel> channel) : channel_(std::move(channel)) {}
  StyleScore style_score(std::string_view generated, std::string_view reference) override;

 private:
  std::shared_ptr<RemoteChannel> channel_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(std::shared_ptr<RemoteChannel> channel) : channel_(std::move(channel)) {}
  /// Prompt is the raw text; the response "text" is a JSON array of numbers.
  Embedding embed(std::string_view text) override;

 private:
  std::shared_ptr<RemoteChannel> channel_;
};

std::unique_ptr<IntentClassifier> make_classifier(const ClientConfig& cfg,
                                                  std::shared_ptr<Transport> transport = nullptr);
std::unique_ptr<StyleJudge> make_judge(const ClientConfig& cfg,
                                       std::shared_ptr<Transport> transport = nullptr);
std::unique_ptr<Embedder> make_embedder(const ClientConfig& cfg,
                                        std::shared_ptr<Transport> transport = nullptr);

double cosine(const Embedding& a, const Embedding& b);

}  // namespace coikit::clients
