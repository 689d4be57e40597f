#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "coikit/cli.hpp"
#include "coikit/selection.hpp"
#include "coikit/synthgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace coikit;
using namespace coikit::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
  std::ostringstream out, err;
  EnvLookup lookup = [env](const char* key) -> std::optional<std::string> {
    auto it = env.find(key);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  const int code = run_cli(args, out, err, lookup);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_file(p); }

void put(const fs::path& p, const std::string& bytes) { write_file_atomic(p, bytes); }

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST(CliValidate, ExitCodes) {
  auto dir = fixture::temp_dir("cli_validate");
  auto ok = run({"validate", s(fixture::fixture_path("unlabeled.jsonl"))});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_EQ(Json::parse(ok.out)["valid"], true);

  std::string bytes = slurp(fixture::fixture_path("unlabeled.jsonl"));
  bytes += "{\"id\": broken\n";
  put(dir / "broken.jsonl", bytes);
  auto bad = run({"validate", s(dir / "broken.jsonl")});
  EXPECT_EQ(bad.code, kExitValidation);
  auto report = Json::parse(bad.out);
  ASSERT_FALSE(report["errors"].empty());
  EXPECT_EQ(report["errors"][0]["line"], 5);

  EXPECT_EQ(run({"validate", s(dir / "nope.jsonl")}).code, kExitIO);
}

TEST(CliLabel, StubMatchesGolden) {
  auto dir = fixture::temp_dir("cli_label");
  auto r = run({"label", s(fixture::fixture_path("unlabeled.jsonl")), "--stub", "--out", s(dir / "out.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "out.jsonl"), slurp(fixture::fixture_path("unlabeled.stub_golden.jsonl")));
}

TEST(CliLabel, FullyLabeledIsByteIdentical) {
  auto dir = fixture::temp_dir("cli_label_noop");
  // Odd spacing that a re-serialization would not reproduce.
  std::string bytes = slurp(fixture::fixture_path("unlabeled.stub_golden.jsonl"));
  bytes.insert(1, "  ");
  put(dir / "in.jsonl", bytes);
  auto r = run({"label", s(dir / "in.jsonl"), "--stub", "--out", s(dir / "out.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "out.jsonl"), bytes);
}

TEST(CliLabel, RemoteUnavailableLeavesNoOutput) {
  auto dir = fixture::temp_dir("cli_label_remote");
  put(dir / "cfg.json", R"({"classifier_url": "http://127.0.0.1:1/classify", "max_retries": 0, "timeout_ms": 500})");
  auto r = run({"label", s(fixture::fixture_path("unlabeled.jsonl")), "--config", s(dir / "cfg.json"), "--out",
                s(dir / "out.jsonl")});
  EXPECT_EQ(r.code, kExitClient) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out.jsonl"));
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "cfg.json");
}

TEST(CliEval, SelfComparison) {
  auto dir = fixture::temp_dir("cli_eval_self");
  write_corpus(dir / "c.jsonl", generate_corpus(default_generator_spec(), 60));
  auto r = run({"eval", s(dir / "c.jsonl"), s(dir / "c.jsonl"), "--stub", "--out", s(dir / "out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto report = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_NEAR(report["kl_div"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(report["js_div"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(report["result_f1"].get<double>(), 1.0);
  EXPECT_EQ(report["route_cons"].get<double>(), 1.0);
  for (const char* key : {"kl_div", "js_div", "q_diversity", "style_sim", "result_f1", "route_cons", "config"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "instances.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out" / "rewards.jsonl"));
}

TEST(CliEval, UnlabeledSyntheticIsPrecondition) {
  auto dir = fixture::temp_dir("cli_eval_unlabeled");
  auto r = run({"eval", s(fixture::fixture_path("unlabeled.stub_golden.jsonl")),
                s(fixture::fixture_path("unlabeled.jsonl")), "--stub", "--out", s(dir / "out")});
  EXPECT_EQ(r.code, kExitPrecondition);
  EXPECT_NE(r.err.find("UnlabeledCorpus"), std::string::npos) << r.err;
}

TEST(CliEval, TrueChainBeatsPerturbedChain) {
  auto dir = fixture::temp_dir("cli_eval_order");
  auto spec = default_generator_spec();
  write_corpus(dir / "ref.jsonl", generate_corpus(spec, 1500));
  auto same = spec;
  same.seed = spec.seed + 1;
  write_corpus(dir / "same.jsonl", generate_corpus(same, 1500));
  write_corpus(dir / "pert.jsonl", generate_corpus(fixture::perturbed(same), 1500));
  auto a = run({"eval", s(dir / "ref.jsonl"), s(dir / "same.jsonl"), "--stub", "--out", s(dir / "a")});
  auto b = run({"eval", s(dir / "ref.jsonl"), s(dir / "pert.jsonl"), "--stub", "--out", s(dir / "b")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk) << b.err;
  auto ra = Json::parse(slurp(dir / "a" / "report.json"));
  auto rb = Json::parse(slurp(dir / "b" / "report.json"));
  EXPECT_LT(ra["kl_div"].get<double>(), rb["kl_div"].get<double>());
  EXPECT_LT(ra["js_div"].get<double>(), rb["js_div"].get<double>());
}

TEST(CliSelect, ExhaustiveMatchesOracleAndIsDeterministic) {
  auto dir = fixture::temp_dir("cli_select");
  auto spec = default_generator_spec();
  const Corpus pool = generate_corpus(spec, 8);
  spec.seed = 404;
  const Corpus reference = generate_corpus(spec, 8);
  write_corpus(dir / "pool.jsonl", pool);
  write_corpus(dir / "ref.jsonl", reference);
  const std::vector<std::string> common = {"select", s(dir / "pool.jsonl"), s(dir / "ref.jsonl"), "--stub",
                                           "--strategy", "exhaustive", "--k", "3", "--k1", "8", "--seed", "11"};
  auto args = common;
  args.insert(args.end(), {"--out", s(dir / "a")});
  auto r = run(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto manifest = Json::parse(slurp(dir / "a" / "manifest.json"));

  SelectionConfig cfg;
  cfg.k = 3;
  EXPECT_NEAR(manifest["achieved_gap"].get<double>(), oracle::exhaustive_min(pool, reference, cfg), 1e-12);

  args = common;
  args.insert(args.end(), {"--out", s(dir / "b")});
  ASSERT_EQ(run(args).code, kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "manifest.json"), slurp(dir / "b" / "manifest.json"));
  EXPECT_EQ(slurp(dir / "a" / "selected.jsonl"), slurp(dir / "b" / "selected.jsonl"));

  auto too_big = run({"select", s(dir / "pool.jsonl"), s(dir / "ref.jsonl"), "--stub", "--strategy", "greedy",
                      "--k", "9", "--out", s(dir / "c")});
  EXPECT_EQ(too_big.code, kExitSelection) << too_big.err;
}

TEST(CliSynth, GoldenAndErrors) {
  auto dir = fixture::temp_dir("cli_synth");
  auto r = run({"synth", "--n", "10", "--seed", "7", "--out", s(dir / "syn.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "syn.jsonl"), slurp(fixture::fixture_path("synth_n10_seed7.jsonl")));

  EXPECT_EQ(run({"synth", "--n", "0", "--out", s(dir / "zero.jsonl")}).code, kExitValidation);
  EXPECT_FALSE(fs::exists(dir / "zero.jsonl"));

  Json spec = generator_spec_to_json(default_generator_spec());
  spec["forward_matrix"]["Information Inquiry"]["Positive Intent"] = 0.9;
  put(dir / "bad.json", spec.dump());
  EXPECT_EQ(run({"synth", s(dir / "bad.json"), "--n", "5", "--out", s(dir / "bad.jsonl")}).code, kExitValidation);
}

TEST(CliCoi, WritesMatrixFiles) {
  auto dir = fixture::temp_dir("cli_coi");
  auto r = run({"coi", s(fixture::fixture_path("synth_n10_seed7.jsonl")), "--out", s(dir / "o")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"counts.json", "matrix.json", "heatmap.csv"}) EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
}

TEST(CliConfig, FlagBeatsFileBeatsEnv) {
  auto dir = fixture::temp_dir("cli_config");
  put(dir / "cfg.json", R"({"judge_url": "http://file", "tau": 0.7})");
  auto env = [](const char* key) -> std::optional<std::string> {
    if (std::string(key) == kEnvJudgeUrl) return "http://env";
    if (std::string(key) == kEnvEmbedderUrl) return "http://env-embed";
    return std::nullopt;
  };
  auto rc = resolve_config(Json{{"tau", 0.9}}, s(dir / "cfg.json"), env);
  EXPECT_EQ(rc.at("tau"), 0.9);
  EXPECT_EQ(rc.sources["tau"], "flag");
  EXPECT_EQ(rc.at("judge_url"), "http://file");
  EXPECT_EQ(rc.sources["judge_url"], "file");
  EXPECT_EQ(rc.at("embedder_url"), "http://env-embed");
  EXPECT_EQ(rc.sources["embedder_url"], "env");
  EXPECT_EQ(rc.at("alpha"), 0.5);
  EXPECT_EQ(rc.sources["alpha"], "default");
  auto echo = rc.echo();
  for (const char* key : {"resolved", "sources", "flags", "config_file", "file", "env"}) {
    EXPECT_TRUE(echo.contains(key)) << key;
  }

  put(dir / "unknown.json", R"({"tua": 0.7})");
  EXPECT_THROW(resolve_config(Json::object(), s(dir / "unknown.json"), env), Error);
  EXPECT_EQ(run({"coi", s(fixture::fixture_path("synth_n10_seed7.jsonl")), "--config", s(dir / "unknown.json"),
                 "--out", s(dir / "o")})
                .code,
            kExitValidation);
}
