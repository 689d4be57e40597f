#pragma once

// Corpus-level fidelity: KL and JS divergence of flattened transition
// distributions, and question diversity as mean per-intent cluster entropy.
// Natural log throughout; results are in nats.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coikit/clients.hpp"
#include "coikit/coi.hpp"

namespace coikit {

/// sum p ln(p/q) over p > 0. Throws kSupportMismatch if some p > 0 meets
/// q = 0, kInvalidArgument on length mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const JointDistribution& p, const JointDistribution& q);

/// Half-sum of KL to the midpoint mixture. Always finite.
double js_divergence(std::span<const double> p, std::span<const double> q);
double js_divergence(const JointDistribution& p, const JointDistribution& q);

struct ClusterSet {
  std::optional<IntentLabel> category;
  std::vector<std::vector<std::size_t>> clusters;  // member indices, ascending
  std::vector<std::size_t> sizes;
};

/// Leader clustering: each text joins the first cluster whose leader has
/// cosine >= tau, otherwise leads a new one. Texts the embedder rejects with
/// kZeroVector become singletons that no later text can join.
ClusterSet cluster_questions(const std::vector<std::string>& texts, clients::Embedder& embedder,
                             double tau);

/// -sum p ln p over cluster-size proportions.
double cluster_entropy(std::span<const std::size_t> sizes);

struct QDiversity {
  double score = 0.0;
  std::map<IntentLabel, double> per_category_entropy;       // non-empty categories only
  std::map<IntentLabel, std::size_t> per_category_questions;
  std::map<IntentLabel, ClusterSet> clusters;
};

/// Mean entropy over categories holding at least one question.
/// Throws kUnlabeledCorpus, kNoQuestions.
QDiversity q_diversity(const Corpus& c, clients::Embedder& embedder, double tau);

struct GlobalConfig {
  double alpha = 0.5;
  double tau = 0.8;
  Flattening flattening = Flattening::kJoint;
};

struct GlobalReport {
  double kl_div = 0.0;
  double js_div = 0.0;
  double q_diversity = 0.0;
  std::map<IntentLabel, double> per_category_entropy;
  GlobalConfig config;
};

/// KL(real || synthetic), JS(real, synthetic), Q-Diversity of the synthetic
/// corpus's questions.
GlobalReport evaluate_global(const Corpus& real, const Corpus& synthetic, clients::Embedder& embedder,
                             const GlobalConfig& cfg);

Json to_json(const GlobalReport& r);

}  // namespace coikit
