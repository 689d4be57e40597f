#include "coikit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "coikit/metrics_global.hpp"
#include "coikit/parallel.hpp"
#include "coikit/rng.hpp"

namespace coikit {

void CompositeWeights::validate() const {
  for (double w : {w_style, w_result, w_route, w_reward}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "composite weights must be finite and non-negative");
    }
  }
  if (w_style == 0.0 && w_result == 0.0 && w_route == 0.0 && w_reward == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "at least one composite weight must be positive");
  }
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRank: return "rank";
    case Strategy::kMonteCarlo: return "monte_carlo";
    case Strategy::kGreedy: return "greedy";
    case Strategy::kExhaustive: return "exhaustive";
  }
  return "greedy";
}

std::string_view to_string(GapMetric m) { return m == GapMetric::kKL ? "kl" : "js"; }

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto v : {Strategy::kRank, Strategy::kMonteCarlo, Strategy::kGreedy, Strategy::kExhaustive}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<GapMetric> parse_gap_metric(std::string_view s) {
  if (s == "kl") return GapMetric::kKL;
  if (s == "js") return GapMetric::kJS;
  return std::nullopt;
}

void SelectionConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (k1 && *k1 < k) throw Error(ErrorCode::kInvalidArgument, "stage-1 size k1 must be >= k");
  if (mc_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "mc_iterations must be >= 1");
  if (greedy_batch < 1) throw Error(ErrorCode::kInvalidArgument, "greedy_batch must be >= 1");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
}

double normalize_penalty(double r_total) { return std::clamp(r_total + 1.0, 0.0, 1.0); }

double composite_score(const InstanceScores& s, const RewardBreakdown& rb, const CompositeWeights& w) {
  const double result = s.result_match.value_or(false) ? 1.0 : 0.0;
  const double route = s.route_consistent ? 1.0 : 0.0;
  return w.w_style * s.style_sim.value() + w.w_result * result + w.w_route * route +
         w.w_reward * normalize_penalty(rb.r_total);
}

namespace {

void check_k(std::size_t k, std::size_t pool) {
  if (k > pool) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(k) + " exceeds pool size " + std::to_string(pool));
  }
}

}  // namespace

std::vector<std::string> select_topk(std::span<const ScoredId> pool, std::size_t k) {
  check_k(k, pool.size());
  std::vector<const ScoredId*> order;
  for (const auto& s : pool) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const ScoredId* a, const ScoredId* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(order[i]->id);
  return out;
}

double gap_between(const TransitionCounts& subset, const TransitionCounts& reference,
                   const SelectionConfig& cfg) {
  const auto p = flatten(reference, cfg.alpha, cfg.flattening);
  const auto q = flatten(subset, cfg.alpha, cfg.flattening);
  return cfg.gap_metric == GapMetric::kKL ? kl_divergence(p, q) : js_divergence(p, q);
}

double divergence_gap(const Corpus& subset, const Corpus& reference, const SelectionConfig& cfg) {
  TransitionCounts sub, ref;
  for (const auto& c : extract_chains(subset)) sub.add(c);
  for (const auto& c : extract_chains(reference)) ref.add(c);
  return gap_between(sub, ref, cfg);
}

GapProblem::GapProblem(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg)
    : pool_(&pool), cfg_(cfg) {
  cfg_.validate();
  check_k(cfg_.k, pool.size());
  TransitionCounts ref;
  for (const auto& c : extract_chains(reference)) ref.add(c);
  reference_ = flatten(ref, cfg_.alpha, cfg_.flattening);
  items_.reserve(pool.size());
  for (const auto& d : pool.dialogues()) {
    TransitionCounts tc;
    tc.add(extract_chain(d));
    items_.push_back(tc);
  }
}

double GapProblem::gap(const TransitionCounts& subset) const {
  const auto q = flatten(subset, cfg_.alpha, cfg_.flattening);
  return cfg_.gap_metric == GapMetric::kKL ? kl_divergence(reference_, q) : js_divergence(reference_, q);
}

double GapProblem::gap_of(std::span<const std::size_t> members) const {
  TransitionCounts sum;
  for (auto i : members) sum += items_[i];
  return gap(sum);
}

namespace {

std::vector<std::size_t> draw_subset(SplitMix64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::string> ids_of(const GapProblem& prob, const std::vector<std::size_t>& members) {
  std::vector<std::string> ids;
  for (auto i : members) ids.push_back(prob.id(i));
  return ids;
}

}  // namespace

SelectionResult monte_carlo_select(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg) {
  const GapProblem prob(pool, reference, cfg);
  const std::size_t n = prob.pool_size();
  const std::size_t T = cfg.mc_iterations;

  SelectionResult r;
  r.strategy = Strategy::kMonteCarlo;
  r.seed = cfg.seed;

  if (!cfg.mc_dedup) {
    std::vector<double> gaps(T);
    parallel_for(T, [&](std::size_t t) {
      auto rng = derive_stream(cfg.seed, t);
      gaps[t] = prob.gap_of(draw_subset(rng, n, cfg.k));
    }, 16);
    const std::size_t best = static_cast<std::size_t>(std::min_element(gaps.begin(), gaps.end()) - gaps.begin());
    auto rng = derive_stream(cfg.seed, best);
    r.selected_ids = ids_of(prob, draw_subset(rng, n, cfg.k));
    r.achieved_gap = gaps[best];
    r.iterations_used = T;
    return r;
  }

  const std::uint64_t distinct = binomial(n, cfg.k);
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> best_members;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < T && seen.size() < distinct; ++t) {
    auto rng = derive_stream(cfg.seed, t);
    auto members = draw_subset(rng, n, cfg.k);
    while (seen.count(members)) members = draw_subset(rng, n, cfg.k);
    seen.insert(members);
    const double g = prob.gap_of(members);
    if (g < best_gap) {
      best_gap = g;
      best_members = members;
    }
  }
  r.selected_ids = ids_of(prob, best_members);
  r.achieved_gap = best_gap;
  r.iterations_used = seen.size();
  return r;
}

namespace {

struct GreedyRun {
  std::vector<std::size_t> removed;  // in elimination order
  std::vector<std::size_t> kept;     // pool order
  double gap = 0.0;
  std::size_t epochs = 0;
};

GreedyRun run_greedy(const GapProblem& prob) {
  const auto& cfg = prob.config();
  const std::size_t n = prob.pool_size();
  TransitionCounts current;
  for (std::size_t i = 0; i < n; ++i) current += prob.item(i);
  std::vector<std::size_t> alive(n);
  std::iota(alive.begin(), alive.end(), 0);

  GreedyRun run;
  std::vector<double> gaps;
  while (alive.size() > cfg.k) {
    const std::size_t m = std::min(cfg.greedy_batch, alive.size() - cfg.k);
    gaps.assign(alive.size(), 0.0);
    parallel_for(alive.size(), [&](std::size_t a) {
      TransitionCounts without = current;
      without -= prob.item(alive[a]);
      gaps[a] = prob.gap(without);
    });
    std::vector<std::size_t> order(alive.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        if (gaps[x] != gaps[y]) return gaps[x] < gaps[y];
                        return prob.id(alive[x]) < prob.id(alive[y]);
                      });
    std::vector<bool> drop(alive.size(), false);
    for (std::size_t r = 0; r < m; ++r) {
      drop[order[r]] = true;
      run.removed.push_back(alive[order[r]]);
      current -= prob.item(alive[order[r]]);
    }
    std::vector<std::size_t> next;
    for (std::size_t a = 0; a < alive.size(); ++a) {
      if (!drop[a]) next.push_back(alive[a]);
    }
    alive.swap(next);
    ++run.epochs;
  }
  run.kept = alive;
  run.gap = prob.gap(current);
  return run;
}

}  // namespace

SelectionResult greedy_backward_eliminate(const Corpus& pool, const Corpus& reference,
                                          const SelectionConfig& cfg) {
  const GapProblem prob(pool, reference, cfg);
  const GreedyRun run = run_greedy(prob);
  SelectionResult r;
  r.strategy = Strategy::kGreedy;
  r.seed = cfg.seed;
  r.selected_ids = ids_of(prob, run.kept);
  r.achieved_gap = run.gap;
  r.iterations_used = run.epochs;
  return r;
}

std::vector<std::string> greedy_elimination_order(const Corpus& pool, const Corpus& reference,
                                                  const SelectionConfig& cfg) {
  const GapProblem prob(pool, reference, cfg);
  return ids_of(prob, run_greedy(prob).removed);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    c = c * (n - i) / (i + 1);
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

namespace {

struct ExhaustiveSearch {
  const GapProblem& prob;
  std::size_t k;
  std::vector<std::size_t> members;
  TransitionCounts running;
  std::vector<std::size_t> best;
  std::vector<std::string> best_ids;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;

  std::vector<std::string> sorted_ids(const std::vector<std::size_t>& m) const {
    auto ids = ids_of(prob, m);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  void consider() {
    ++visited;
    const double g = prob.gap(running);
    if (g < best_gap) {
      best_gap = g;
      best = members;
      best_ids = sorted_ids(members);
    } else if (g == best_gap) {
      auto ids = sorted_ids(members);
      if (ids < best_ids) {
        best = members;
        best_ids = std::move(ids);
      }
    }
  }

  void descend(std::size_t start) {
    if (members.size() == k) {
      consider();
      return;
    }
    const std::size_t need = k - members.size();
    for (std::size_t i = start; i + need <= prob.pool_size(); ++i) {
      members.push_back(i);
      running += prob.item(i);
      descend(i + 1);
      running -= prob.item(i);
      members.pop_back();
    }
  }
};

}  // namespace

SelectionResult exhaustive_select(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg) {
  check_k(cfg.k, pool.size());
  const std::uint64_t subsets = binomial(pool.size(), cfg.k);
  if (subsets > kMaxExhaustiveSubsets) {
    throw Error(ErrorCode::kCombinatorialBlowup,
                "C(" + std::to_string(pool.size()) + ", " + std::to_string(cfg.k) + ") = " +
                    std::to_string(subsets) + " subsets exceeds the enumeration limit");
  }
  const GapProblem prob(pool, reference, cfg);
  ExhaustiveSearch search{prob, cfg.k, {}, {}, {}, {}};
  search.descend(0);
  SelectionResult r;
  r.strategy = Strategy::kExhaustive;
  r.seed = cfg.seed;
  r.selected_ids = ids_of(prob, search.best);
  r.achieved_gap = search.best_gap;
  r.iterations_used = search.visited;
  return r;
}

SelectionResult curate(const Corpus& pool, const Corpus& reference, const SelectionConfig& cfg,
                       std::span<const ScoredId> scores) {
  cfg.validate();
  check_k(cfg.k, pool.size());
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id[s.id] = s.score;
  std::vector<ScoredId> ranked;
  for (const auto& d : pool.dialogues()) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw Error(ErrorCode::kInvalidArgument, "no composite score for '" + d.id + "'");
    ranked.push_back({d.id, it->second});
  }

  if (cfg.strategy == Strategy::kRank) {
    SelectionResult r;
    r.strategy = Strategy::kRank;
    r.seed = cfg.seed;
    r.selected_ids = select_topk(ranked, cfg.k);
    r.stage1_ids = r.selected_ids;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (std::find(r.selected_ids.begin(), r.selected_ids.end(), pool.dialogues()[i].id) != r.selected_ids.end()) {
        pos.push_back(i);
      }
    }
    r.achieved_gap = divergence_gap(pool.subset(pos), reference, cfg);
    r.iterations_used = 1;
    return r;
  }

  const std::size_t k1 = cfg.k1.value_or(std::min(pool.size(), 3 * cfg.k));
  check_k(k1, pool.size());
  const auto stage1 = select_topk(ranked, k1);
  const std::set<std::string> keep(stage1.begin(), stage1.end());
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (keep.count(pool.dialogues()[i].id)) positions.push_back(i);
  }
  const Corpus narrowed = pool.subset(positions);

  SelectionResult r;
  switch (cfg.strategy) {
    case Strategy::kMonteCarlo: r = monte_carlo_select(narrowed, reference, cfg); break;
    case Strategy::kGreedy: r = greedy_backward_eliminate(narrowed, reference, cfg); break;
    case Strategy::kExhaustive: r = exhaustive_select(narrowed, reference, cfg); break;
    case Strategy::kRank: break;
  }
  r.stage1_ids = stage1;
  return r;
}

Json to_json(const SelectionResult& r) {
  Json out = Json::object();
  out["selected_ids"] = r.selected_ids;
  out["achieved_gap"] = r.achieved_gap;
  out["strategy"] = to_string(r.strategy);
  out["iterations_used"] = r.iterations_used;
  out["seed"] = r.seed;
  out["stage1_ids"] = r.stage1_ids;
  return out;
}

}  // namespace coikit
