#include "coikit/metrics_global.hpp"

#include <algorithm>
#include <cmath>

namespace coikit {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kInvalidArgument, "distributions differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw Error(ErrorCode::kSupportMismatch,
                  "p has mass at cell " + std::to_string(i) + " where q is zero");
    }
    sum += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative residue for p ~= q.
  return std::max(sum, 0.0);
}

double kl_divergence(const JointDistribution& p, const JointDistribution& q) {
  return kl_divergence(p.probs, q.probs);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kInvalidArgument, "distributions differ in length");
  // Per-cell symmetric form, so JS(p, q) and JS(q, p) add identical terms.
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    double a = 0.0, b = 0.0;
    if (p[i] > 0.0) a = p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) b = q[i] * std::log(q[i] / m);
    sum += 0.5 * (a + b);
  }
  return std::clamp(sum, 0.0, std::log(2.0));
}

double js_divergence(const JointDistribution& p, const JointDistribution& q) {
  return js_divergence(p.probs, q.probs);
}

ClusterSet cluster_questions(const std::vector<std::string>& texts, clients::Embedder& embedder,
                             double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  ClusterSet out;
  std::vector<clients::Embedding> leaders;  // empty embedding = sealed singleton
  for (std::size_t i = 0; i < texts.size(); ++i) {
    clients::Embedding e;
    try {
      e = embedder.embed(texts[i]);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kZeroVector) throw;
    }
    std::size_t home = out.clusters.size();
    if (!e.empty()) {
      for (std::size_t c = 0; c < leaders.size(); ++c) {
        if (!leaders[c].empty() && clients::cosine(e, leaders[c]) >= tau) {
          home = c;
          break;
        }
      }
    }
    if (home == out.clusters.size()) {
      out.clusters.push_back({i});
      leaders.push_back(std::move(e));
    } else {
      out.clusters[home].push_back(i);
    }
  }
  for (const auto& c : out.clusters) out.sizes.push_back(c.size());
  return out;
}

double cluster_entropy(std::span<const std::size_t> sizes) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  if (n == 0) return 0.0;
  double h = 0.0;
  for (auto s : sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

QDiversity q_diversity(const Corpus& c, clients::Embedder& embedder, double tau) {
  const QuestionsByIntent questions = extract_questions(c);
  QDiversity out;
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumIntents; ++k) {
    if (questions[k].empty()) continue;
    std::vector<std::string> texts;
    for (const auto& q : questions[k]) texts.push_back(q.text);
    ClusterSet cs = cluster_questions(texts, embedder, tau);
    cs.category = kAllIntents[k];
    const double h = cluster_entropy(cs.sizes);
    out.per_category_entropy[kAllIntents[k]] = h;
    out.per_category_questions[kAllIntents[k]] = texts.size();
    out.clusters[kAllIntents[k]] = std::move(cs);
    sum += h;
  }
  if (out.per_category_entropy.empty()) {
    throw Error(ErrorCode::kNoQuestions, "corpus contains no candidate questions");
  }
  out.score = sum / static_cast<double>(out.per_category_entropy.size());
  return out;
}

GlobalReport evaluate_global(const Corpus& real, const Corpus& synthetic, clients::Embedder& embedder,
                             const GlobalConfig& cfg) {
  const auto real_chains = extract_chains(real);
  const auto syn_chains = extract_chains(synthetic);
  const auto p = flatten(accumulate(real_chains), cfg.alpha, cfg.flattening);
  const auto q = flatten(accumulate(syn_chains), cfg.alpha, cfg.flattening);
  GlobalReport r;
  r.config = cfg;
  r.kl_div = kl_divergence(p, q);
  r.js_div = js_divergence(p, q);
  const QDiversity qd = q_diversity(synthetic, embedder, cfg.tau);
  r.q_diversity = qd.score;
  r.per_category_entropy = qd.per_category_entropy;
  return r;
}

Json to_json(const GlobalReport& r) {
  Json entropy = Json::object();
  for (const auto& [label, h] : r.per_category_entropy) entropy[std::string(to_string(label))] = h;
  Json out = Json::object();
  out["kl_div"] = r.kl_div;
  out["js_div"] = r.js_div;
  out["q_diversity"] = r.q_diversity;
  out["per_category_entropy"] = std::move(entropy);
  out["alpha"] = r.config.alpha;
  out["tau"] = r.config.tau;
  out["flattening"] = r.config.flattening == Flattening::kJoint ? "joint" : "incoming";
  return out;
}

}  // namespace coikit
