#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"

#include "coikit/cli.hpp"
#include "coikit/coi.hpp"
#include "coikit/metrics_instance.hpp"
#include "coikit/parallel.hpp"
#include "coikit/synthgen.hpp"

namespace fs = std::filesystem;

namespace coikit::cli {

namespace {

struct Context {
  RunConfig rc;
  std::optional<std::string> out;
  std::ostream& log;
  std::ostream& report;
};

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

fs::path require_out(const Context& ctx, const char* what) {
  if (!ctx.out) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " needs --out");
  return *ctx.out;
}

fs::path out_dir(const Context& ctx, const char* what) {
  fs::path dir = require_out(ctx, what);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIOFailure, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void require_labeled(const Corpus& c, const std::string& path) {
  if (!c.label_complete()) {
    throw Error(ErrorCode::kUnlabeledCorpus, path + " has candidate turns without an intent label", {path});
  }
}

std::map<std::string, double> load_model_scores(const std::string& path) {
  std::map<std::string, double> out;
  if (path.empty()) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw SchemaError({{line_no, path + ": not valid JSON"}});
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("score") ||
        !j["score"].is_number()) {
      throw SchemaError({{line_no, path + ": expected {\"id\": string, \"score\": number}"}});
    }
    out[j["id"].get<std::string>()] = j["score"].get<double>();
  }
  return out;
}

std::vector<RewardBreakdown> score_rewards(const Corpus& c, const RunConfig& rc) {
  const RewardWeights w = rc.reward_weights();
  const RulePatterns rules = rc.rule_patterns();
  const auto model = load_model_scores(rc.at("model_scores").get<std::string>());
  std::vector<RewardBreakdown> out;
  out.reserve(c.size());
  for (const auto& d : c.dialogues()) {
    std::optional<double> m;
    if (auto it = model.find(d.id); it != model.end()) m = it->second;
    out.push_back(combined_reward(d, m, w, rules));
  }
  return out;
}

std::string rewards_jsonl(const Corpus& c, const std::vector<RewardBreakdown>& rb) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Json line = Json::object();
    line["dialogue_id"] = c.dialogues()[i].id;
    const Json fields = to_json(rb[i]);
    for (const auto& [k, v] : fields.items()) line[k] = v;
    out += line.dump();
    out += '\n';
  }
  return out;
}

IntentGraph real_graph(const Corpus& real, const RunConfig& rc) {
  const auto chains = extract_chains(real);
  return build_graph(accumulate(chains), rc.at("theta").get<std::uint64_t>());
}

// validate ------------------------------------------------------------------

int cmd_validate(Context& ctx, const std::string& path) {
  IngestReport rep = scan_corpus_file(path);
  std::vector<LineIssue> issues = std::move(rep.issues);
  std::map<std::string, std::size_t> seen;
  std::size_t dup = 0;
  for (const auto& d : rep.dialogues) {
    if (seen[d.id]++ == 1) {
      ++dup;
      issues.push_back({0, "duplicate id '" + d.id + "'"});
    }
  }
  Json errors = Json::array();
  for (const auto& is : issues) {
    Json e = Json::object();
    e["line"] = is.line;
    e["message"] = is.message;
    errors.push_back(std::move(e));
  }
  std::size_t unlabeled = 0;
  for (const auto& d : rep.dialogues) unlabeled += d.fully_labeled() ? 0 : 1;
  Json report = Json::object();
  report["path"] = path;
  report["valid"] = issues.empty();
  report["dialogues"] = rep.dialogues.size();
  report["unlabeled_dialogues"] = unlabeled;
  report["duplicate_ids"] = dup;
  report["errors"] = std::move(errors);
  ctx.report << pretty(report);
  if (ctx.out) write_file_atomic(*ctx.out, pretty(report));
  return issues.empty() ? kExitOk : kExitValidation;
}

// label ---------------------------------------------------------------------

// Behavior tags are part of what the candidate "said" as far as the
// classifier is concerned; transcripts often carry them with empty text.
std::string classifier_input(const Turn& turn) {
  std::string out = turn.text;
  for (const auto& tag : turn.behavior_tags) {
    if (out.find(tag) != std::string::npos) continue;
    if (!out.empty()) out += '\n';
    out += tag;
  }
  return out;
}

int cmd_label(Context& ctx, const std::string& path) {
  const fs::path out = require_out(ctx, "label");
  // Fail on schema problems before any client traffic.
  const Corpus corpus = ingest(path);
  (void)corpus;

  const std::string text = read_file(path);
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (true) {
      const auto nl = text.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }

  auto classifier = clients::make_classifier(ctx.rc.client("classifier_url"));
  std::vector<std::size_t> pending;
  std::vector<Dialogue> parsed(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    parsed[i] = parse_dialogue(lines[i], i + 1);
    if (!parsed[i].fully_labeled()) pending.push_back(i);
  }

  std::size_t filled = 0;
  std::vector<std::size_t> filled_per(pending.size(), 0);
  parallel_for(pending.size(), [&](std::size_t p) {
    Dialogue& d = parsed[pending[p]];
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      Turn& turn = d.turns[t];
      if (turn.speaker != Speaker::kCandidate || turn.intent) continue;
      turn.intent = classifier->classify(classifier_input(turn), std::span<const Turn>(d.turns.data(), t));
      ++filled_per[p];
    }
  }, 8);
  for (std::size_t p = 0; p < pending.size(); ++p) {
    lines[pending[p]] = dialogue_to_line(parsed[pending[p]]);
    filled += filled_per[p];
  }

  std::string result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) result += '\n';
    result += lines[i];
  }
  write_file_atomic(out, result);

  Json report = Json::object();
  report["input"] = path;
  report["output"] = out.string();
  report["dialogues_relabeled"] = pending.size();
  report["turns_labeled"] = filled;
  report["classifier"] = ctx.rc.client("classifier_url").mode == clients::Mode::kStub ? "stub" : "remote";
  ctx.report << pretty(report);
  return kExitOk;
}

// eval ----------------------------------------------------------------------

int cmd_eval(Context& ctx, const std::string& real_path, const std::string& syn_path) {
  const fs::path dir = out_dir(ctx, "eval");
  const Corpus real = ingest(real_path);
  const Corpus syn = ingest(syn_path);
  require_labeled(real, real_path);
  require_labeled(syn, syn_path);
  ctx.log << "eval: " << real.size() << " real, " << syn.size() << " synthetic dialogues\n";

  auto embedder = clients::make_embedder(ctx.rc.client("embedder_url"));
  auto judge = clients::make_judge(ctx.rc.client("judge_url"));
  const GlobalReport global = evaluate_global(real, syn, *embedder, ctx.rc.global());
  const IntentGraph graph = real_graph(real, ctx.rc);
  const auto instances = score_instances(syn, real, *judge, graph);
  const F1Result f1 = result_f1(syn, real);
  const double route = route_consistency_rate(syn, graph);
  double style_sum = 0.0;
  for (const auto& s : instances) style_sum += s.style_sim.value();
  const double style_mean = instances.empty() ? 0.0 : style_sum / static_cast<double>(instances.size());
  const auto rewards = score_rewards(syn, ctx.rc);

  Json report = Json::object();
  report["kl_div"] = global.kl_div;
  report["js_div"] = global.js_div;
  report["q_diversity"] = global.q_diversity;
  report["style_sim"] = style_mean;
  report["result_f1"] = f1.f1;
  report["route_cons"] = route;
  Json entropy = Json::object();
  for (const auto& [label, h] : global.per_category_entropy) entropy[std::string(to_string(label))] = h;
  report["per_category_entropy"] = std::move(entropy);
  Json conf = Json::object();
  conf["tp"] = f1.counts.tp;
  conf["fp"] = f1.counts.fp;
  conf["fn"] = f1.counts.fn;
  conf["tn"] = f1.counts.tn;
  conf["degenerate"] = f1.degenerate;
  report["result_confusion"] = std::move(conf);
  report["dialogues"] = {{"real", real.size()}, {"synthetic", syn.size()}};
  report["inputs"] = {{"real", real_path}, {"synthetic", syn_path}};
  report["config"] = ctx.rc.echo();

  std::string inst;
  for (const auto& s : instances) inst += to_json(s).dump() + "\n";

  write_file_atomic(dir / "instances.jsonl", inst);
  write_file_atomic(dir / "rewards.jsonl", rewards_jsonl(syn, rewards));
  write_file_atomic(dir / "report.json", pretty(report));

  Json summary = Json::object();
  for (const char* key : {"kl_div", "js_div", "q_diversity", "style_sim", "result_f1", "route_cons"}) {
    summary[key] = report[key];
  }
  ctx.report << pretty(summary);
  return kExitOk;
}

// select --------------------------------------------------------------------

int cmd_select(Context& ctx, const std::string& pool_path, const std::string& ref_path) {
  const fs::path dir = out_dir(ctx, "select");
  const SelectionConfig cfg = ctx.rc.selection();
  const Corpus pool = ingest(pool_path);
  const Corpus reference = ingest(ref_path);
  require_labeled(pool, pool_path);
  require_labeled(reference, ref_path);
  if (cfg.k > pool.size()) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(cfg.k) + " exceeds pool size " + std::to_string(pool.size()));
  }
  ctx.log << "select: pool " << pool.size() << ", reference " << reference.size() << ", k " << cfg.k << "\n";

  auto judge = clients::make_judge(ctx.rc.client("judge_url"));
  const IntentGraph graph = real_graph(reference, ctx.rc);
  const auto instances = score_instances(pool, reference, *judge, graph);
  const auto rewards = score_rewards(pool, ctx.rc);
  const CompositeWeights weights = ctx.rc.composite_weights();
  std::vector<ScoredId> scores;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    scores.push_back({pool.dialogues()[i].id, composite_score(instances[i], rewards[i], weights)});
  }

  const SelectionResult result = curate(pool, reference, cfg, scores);

  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (std::find(result.selected_ids.begin(), result.selected_ids.end(), pool.dialogues()[i].id) !=
        result.selected_ids.end()) {
      positions.push_back(i);
    }
  }
  const Corpus selected = pool.subset(positions);

  Json manifest = to_json(result);
  manifest["gap_metric"] = to_string(cfg.gap_metric);
  manifest["k"] = cfg.k;
  manifest["k1"] = cfg.strategy == Strategy::kRank ? Json(nullptr)
                                                    : Json(cfg.k1.value_or(std::min(pool.size(), 3 * cfg.k)));
  Json sc = Json::array();
  for (const auto& s : scores) sc.push_back({{"id", s.id}, {"score", s.score}});
  manifest["composite_scores"] = std::move(sc);
  manifest["inputs"] = {{"pool", pool_path}, {"reference", ref_path}};
  manifest["config"] = ctx.rc.echo();

  write_file_atomic(dir / "selected.jsonl", to_jsonl(selected));
  write_file_atomic(dir / "manifest.json", pretty(manifest));

  Json summary = Json::object();
  summary["selected"] = result.selected_ids.size();
  summary["achieved_gap"] = result.achieved_gap;
  summary["strategy"] = to_string(result.strategy);
  ctx.report << pretty(summary);
  return kExitOk;
}

// synth ---------------------------------------------------------------------

int cmd_synth(Context& ctx, const std::optional<std::string>& spec_path, bool emit_spec) {
  const fs::path out = require_out(ctx, "synth");
  GeneratorSpec spec = spec_path ? load_generator_spec(*spec_path) : default_generator_spec();
  if (ctx.rc.has("seed")) spec.seed = ctx.rc.at("seed").get<std::uint64_t>();
  if (emit_spec) {
    spec.validate();
    write_file_atomic(out, pretty(generator_spec_to_json(spec)));
    return kExitOk;
  }
  if (!ctx.rc.has("n")) throw Error(ErrorCode::kInvalidArgument, "synth needs --n");
  const std::size_t n = ctx.rc.at("n").get<std::size_t>();
  std::vector<Scenario> scenarios;
  if (auto p = ctx.rc.at("scenarios").get<std::string>(); !p.empty()) scenarios = load_scenarios(p);
  const Corpus c = generate_corpus(spec, n, scenarios);
  write_file_atomic(out, to_jsonl(c));

  Json report = Json::object();
  report["output"] = out.string();
  report["dialogues"] = c.size();
  report["seed"] = spec.seed;
  report["spec"] = spec_path ? Json(*spec_path) : Json("default");
  ctx.report << pretty(report);
  return kExitOk;
}

// coi -----------------------------------------------------------------------

int cmd_coi(Context& ctx, const std::string& path) {
  const fs::path dir = out_dir(ctx, "coi");
  const Corpus c = ingest(path);
  require_labeled(c, path);
  const TransitionCounts tc = accumulate(extract_chains(c));
  const CoIMatrix m = incoming_matrix(tc);

  Json counts = counts_to_json(tc);
  const auto joint = flatten(tc, ctx.rc.number("alpha"), ctx.rc.global().flattening);
  counts["joint"] = joint.probs;
  counts["joint_alpha"] = joint.smoothing_alpha;
  counts["input"] = path;
  counts["config"] = ctx.rc.echo();
  Json matrix = matrix_to_json(m);
  matrix["input"] = path;

  write_file_atomic(dir / "counts.json", pretty(counts));
  write_file_atomic(dir / "matrix.json", pretty(matrix));
  write_file_atomic(dir / "heatmap.csv", matrix_to_csv(m));

  Json summary = Json::object();
  summary["chains"] = tc.chains();
  summary["transitions"] = tc.total();
  summary["flagged_columns"] = m.flagged_columns().size();
  ctx.report << pretty(summary);
  return kExitOk;
}

void report_error(std::ostream& err, const Error& e) {
  Json j = Json::object();
  j["error"] = to_string(e.code());
  j["message"] = e.what();
  if (auto* se = dynamic_cast<const SchemaError*>(&e)) {
    Json issues = Json::array();
    for (const auto& is : se->issues()) issues.push_back({{"line", is.line}, {"message", is.message}});
    j["issues"] = std::move(issues);
  }
  if (!e.details().empty()) j["details"] = e.details();
  err << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Chain-of-Intention corpus evaluation, curation and generation", "coikit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, out_path;
  std::optional<std::uint64_t> seed, theta, k, k1, mc_iters, greedy_batch, n;
  std::optional<double> alpha, tau;
  std::optional<std::string> strategy, gap_metric, flattening, scenarios, model_scores, banned, privacy;
  bool stub = false, mc_dedup = false;

  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--out", out_path, "Output directory, or file for label/synth");
  app.add_option("--seed", seed, "Master seed");
  app.add_flag("--stub", stub, "Force offline stub clients");
  app.add_option("--alpha", alpha, "Additive smoothing for joint distributions");
  app.add_option("--tau", tau, "Cosine threshold for question clustering");
  app.add_option("--theta", theta, "Minimum count for an intent-graph edge");
  app.add_option("--k", k, "Number of dialogues to select");
  app.add_option("--k1", k1, "Stage-1 shortlist size");
  app.add_option("--strategy", strategy, "rank | monte_carlo | greedy | exhaustive");
  app.add_option("--gap-metric", gap_metric, "kl | js");
  app.add_option("--mc-iters", mc_iters, "Monte Carlo draws");
  app.add_flag("--mc-dedup", mc_dedup, "Skip already evaluated Monte Carlo subsets");
  app.add_option("--greedy-batch", greedy_batch, "Dialogues removed per greedy epoch");
  app.add_option("--n", n, "Number of dialogues to generate");
  app.add_option("--flattening", flattening, "joint | incoming");
  app.add_option("--scenarios", scenarios, "Scenario placeholder file for synth");
  app.add_option("--model-scores", model_scores, "JSON Lines of {id, score} model rewards");
  app.add_option("--banned-patterns", banned, "Banned-phrase pattern file");
  app.add_option("--privacy-patterns", privacy, "Privacy pattern file");

  std::string validate_path, label_path, coi_path, real_path, syn_path, pool_path, ref_path;
  std::optional<std::string> spec_path;
  bool emit_spec = false;
  auto* v = app.add_subcommand("validate", "Check a corpus against the schema");
  v->add_option("corpus", validate_path)->required();
  auto* l = app.add_subcommand("label", "Fill missing candidate intents");
  l->add_option("corpus", label_path)->required();
  auto* e = app.add_subcommand("eval", "Score a synthetic corpus against a real one");
  e->add_option("real", real_path)->required();
  e->add_option("synthetic", syn_path)->required();
  auto* s = app.add_subcommand("select", "Curate a subset of a synthetic pool");
  s->add_option("pool", pool_path)->required();
  s->add_option("reference", ref_path)->required();
  auto* g = app.add_subcommand("synth", "Generate dialogues from a Markov spec");
  g->add_option("spec", spec_path, "Generator spec JSON (built-in demo spec if omitted)");
  g->add_flag("--emit-spec", emit_spec, "Write the resolved spec to --out instead of dialogues");
  auto* c = app.add_subcommand("coi", "Export transition counts and the incoming matrix");
  c->add_option("corpus", coi_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << pe.what() << "\n";
    return kExitValidation;
  }

  Json flags = Json::object();
  if (seed) flags["seed"] = *seed;
  if (alpha) flags["alpha"] = *alpha;
  if (tau) flags["tau"] = *tau;
  if (theta) flags["theta"] = *theta;
  if (flattening) flags["flattening"] = *flattening;
  if (gap_metric) flags["gap_metric"] = *gap_metric;
  if (k) flags["k"] = *k;
  if (k1) flags["k1"] = *k1;
  if (strategy) flags["strategy"] = *strategy;
  if (mc_iters) flags["mc_iters"] = *mc_iters;
  if (mc_dedup) flags["mc_dedup"] = true;
  if (greedy_batch) flags["greedy_batch"] = *greedy_batch;
  if (n) flags["n"] = *n;
  if (stub) flags["stub"] = true;
  if (banned) flags["banned_patterns"] = *banned;
  if (privacy) flags["privacy_patterns"] = *privacy;
  if (model_scores) flags["model_scores"] = *model_scores;
  if (scenarios) flags["scenarios"] = *scenarios;

  try {
    Context ctx{resolve_config(flags, config_path, env), out_path, err, out};
    if (*v) return cmd_validate(ctx, validate_path);
    if (*l) return cmd_label(ctx, label_path);
    if (*e) return cmd_eval(ctx, real_path, syn_path);
    if (*s) return cmd_select(ctx, pool_path, ref_path);
    if (*g) return cmd_synth(ctx, spec_path, emit_spec);
    if (*c) return cmd_coi(ctx, coi_path);
  } catch (const Error& ex) {
    report_error(err, ex);
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "{\"error\":\"Internal\",\"message\":" << Json(ex.what()).dump() << "}\n";
    return kExitIO;
  }
  return kExitValidation;
}

}  // namespace coikit::cli
