#include "coikit/metrics_instance.hpp"

#include <algorithm>
#include <unordered_map>

#include "coikit/parallel.hpp"

namespace coikit {

std::size_t chain_edit_distance(const std::vector<IntentLabel>& a, const std::vector<IntentLabel>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ReferenceIndex::ReferenceIndex(const Corpus& real) : real_(&real) {
  if (real.empty()) throw Error(ErrorCode::kEmptyReferenceCorpus, "reference corpus is empty");
  chains_ = extract_chains(real);
}

const Dialogue& ReferenceIndex::retrieve(const IntentChain& query) const {
  std::size_t best = 0;
  std::size_t best_dist = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < chains_.size(); ++i) {
    const std::size_t d = chain_edit_distance(query.labels, chains_[i].labels);
    const auto& id = real_->dialogues()[i].id;
    if (d < best_dist || (d == best_dist && id < real_->dialogues()[best].id)) {
      best = i;
      best_dist = d;
    }
  }
  return real_->dialogues()[best];
}

const Dialogue& retrieve_reference(const Corpus& real, const IntentChain& chain) {
  // The index borrows `real`, which outlives the returned reference.
  return ReferenceIndex(real).retrieve(chain);
}

std::string render_candidate_text(const Dialogue& d) {
  std::string out;
  for (const auto& t : d.turns) {
    if (t.speaker != Speaker::kCandidate) continue;
    if (!out.empty()) out += '\n';
    out += t.text;
  }
  return out;
}

StyleResult style_similarity(const Dialogue& d, const ReferenceIndex& index, clients::StyleJudge& judge) {
  const Dialogue& ref = index.retrieve(extract_chain(d));
  return StyleResult{judge.style_score(render_candidate_text(d), render_candidate_text(ref)), ref.id};
}

StyleResult style_similarity(const Dialogue& d, const Corpus& real, clients::StyleJudge& judge) {
  return style_similarity(d, ReferenceIndex(real), judge);
}

namespace {

std::unordered_map<std::string, std::vector<const Dialogue*>> index_by_key(const Corpus& real) {
  std::unordered_map<std::string, std::vector<const Dialogue*>> by_key;
  for (const auto& d : real.dialogues()) by_key[d.pairing_key()].push_back(&d);
  return by_key;
}

}  // namespace

const Dialogue* paired_real(const Dialogue& syn, const Corpus& real) {
  const Dialogue* hit = nullptr;
  for (const auto& d : real.dialogues()) {
    if (d.pairing_key() != syn.pairing_key()) continue;
    if (hit) return nullptr;
    hit = &d;
  }
  return hit;
}

F1Result f1_from_counts(const ConfusionCounts& c) {
  F1Result r;
  r.counts = c;
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) {
    r.f1 = 1.0;
    r.degenerate = true;
  } else {
    r.f1 = static_cast<double>(2 * c.tp) / static_cast<double>(denom);
  }
  return r;
}

F1Result result_f1(const Corpus& syn, const Corpus& real) {
  const auto by_key = index_by_key(real);
  ConfusionCounts c;
  std::vector<std::string> unpaired;
  for (const auto& d : syn.dialogues()) {
    auto it = by_key.find(d.pairing_key());
    if (it == by_key.end() || it->second.size() != 1) {
      unpaired.push_back(d.id);
      continue;
    }
    const bool truth = derive_outcome(*it->second.front()) == Outcome::kConversion;
    const bool pred = derive_outcome(d) == Outcome::kConversion;
    if (truth && pred) {
      ++c.tp;
    } else if (pred) {
      ++c.fp;
    } else if (truth) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  if (!unpaired.empty()) {
    throw Error(ErrorCode::kUnpairedScenario,
                std::to_string(unpaired.size()) + " synthetic dialogue(s) lack a unique real partner, first '" +
                    unpaired.front() + "'",
                unpaired);
  }
  return f1_from_counts(c);
}

bool route_consistency(const IntentChain& chain, const IntentGraph& g) {
  for (std::size_t t = 1; t < chain.labels.size(); ++t) {
    if (!g.has_edge(chain.labels[t - 1], chain.labels[t])) return false;
  }
  return true;
}

double route_consistency_rate(const Corpus& syn, const IntentGraph& g) {
  if (syn.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& d : syn.dialogues()) {
    if (route_consistency(extract_chain(d), g)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(syn.size());
}

std::vector<InstanceScores> score_instances(const Corpus& syn, const Corpus& real,
                                            clients::StyleJudge& judge, const IntentGraph& g) {
  const ReferenceIndex index(real);
  const auto by_key = index_by_key(real);
  std::vector<InstanceScores> out(syn.size());
  parallel_for(syn.size(), [&](std::size_t i) {
    const Dialogue& d = syn.dialogues()[i];
    InstanceScores s;
    s.dialogue_id = d.id;
    const IntentChain chain = extract_chain(d);
    const Dialogue& ref = index.retrieve(chain);
    s.style_sim = judge.style_score(render_candidate_text(d), render_candidate_text(ref));
    s.reference_id = ref.id;
    s.route_consistent = route_consistency(chain, g);
    if (auto it = by_key.find(d.pairing_key()); it != by_key.end() && it->second.size() == 1) {
      s.result_match = derive_outcome(d) == derive_outcome(*it->second.front());
    }
    out[i] = std::move(s);
  }, 16);
  return out;
}

Json to_json(const InstanceScores& s) {
  Json out = Json::object();
  out["dialogue_id"] = s.dialogue_id;
  out["style_sim"] = s.style_sim.value();
  out["route_consistent"] = s.route_consistent;
  out["result_match"] = s.result_match ? Json(*s.result_match) : Json(nullptr);
  out["reference_id"] = s.reference_id ? Json(*s.reference_id) : Json(nullptr);
  return out;
}

}  // namespace coikit
