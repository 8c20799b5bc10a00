#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "toxvid/cli.hpp"

using namespace toxvid;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path gen(const std::string& name, const std::string& preset, std::size_t total) {
  const auto dir = support::fresh_dir(name);
  const auto r = invoke({"gen-data", "--preset", preset, "--total", std::to_string(total), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

fs::path write_config(const fs::path& dir, const fs::path& manifest, std::size_t n_runs = 1) {
  nlohmann::json j{{"manifest", manifest.string()},
                   {"model",
                    {{"d_t", 8},
                     {"abstract_len", 3},
                     {"text_len", 6},
                     {"heads", 2},
                     {"depth", 1},
                     {"ffn_dim", 8},
                     {"vocab_size", 64}}},
                   {"train", {{"epochs", 1}, {"n_runs", n_runs}, {"batch_size", 4}}}};
  const auto p = dir / "experiment.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

void write_aggregate(const fs::path& p, const std::vector<double>& f1) {
  std::ofstream(p) << nlohmann::json{{"metrics", {{"toxicity", {{"f1", {{"runs", f1}}}}}}}}.dump();
}

}  // namespace

TEST(Cli, GenDataIsByteIdenticalAcrossRuns) {
  const auto a = gen("cli_gen_a", "crossmodal-xor", 24);
  const auto b = gen("cli_gen_b", "crossmodal-xor", 24);
  for (const char* f : {"manifest.jsonl", "stats.json", "stats.txt", "resolved_config.json"}) {
    EXPECT_EQ(support::slurp(a / f), support::slurp(b / f)) << f;
  }
  EXPECT_EQ(support::slurp(a / "features/utt00007.audio.txvf"), support::slurp(b / "features/utt00007.audio.txvf"));
  const auto stats = nlohmann::json::parse(support::slurp(a / "stats.json"));
  EXPECT_TRUE(stats.contains("fleiss_kappa"));
  EXPECT_EQ(stats["records"], 24);
}

TEST(Cli, UsageErrorsExitOne) {
  const auto dir = support::fresh_dir("cli_usage");
  EXPECT_EQ(invoke({"gen-data", "--preset", "nonsense", "--out", dir.string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"gen-data", "--total", "0", "--out", dir.string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, StatsReadsAManifest) {
  const auto dir = gen("cli_stats", "toxcmm-marginals", 40);
  const auto r = invoke({"stats", "--manifest", dir.string(), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["records"], 40);
}

TEST(Cli, TrainEvalRoundTrip) {
  const auto data = gen("cli_train_data", "toxcmm-marginals", 50);
  const auto run = support::fresh_dir("cli_train_run");
  const auto cfg = write_config(run, data);
  const auto r = invoke({"train", "--config", cfg.string(), "--out", (run / "out").string(), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"resolved_config.json", "aggregate.json", "toxvid.log", "run_0/result.json",
                        "run_0/checkpoint/config.json"}) {
    EXPECT_TRUE(fs::exists(run / "out" / f)) << f;
  }
  const auto result = nlohmann::json::parse(support::slurp(run / "out/run_0/result.json"));
  EXPECT_EQ(result["seed"], 3);
  const auto resolved = nlohmann::json::parse(support::slurp(run / "out/resolved_config.json"));
  EXPECT_EQ(resolved["train"]["seed"], 3);

  const auto ck = (run / "out/run_0/checkpoint").string();
  const auto e1 = invoke({"eval", "--checkpoint", ck, "--manifest", data.string()});
  const auto e2 = invoke({"eval", "--checkpoint", ck, "--manifest", data.string()});
  ASSERT_EQ(e1.code, 0) << e1.err;
  EXPECT_EQ(e1.out, e2.out);
  EXPECT_EQ(nlohmann::json::parse(e1.out)["records"], 50);

  std::ofstream(run / "out/run_0/checkpoint/text.embedding.txvf", std::ios::trunc) << "garbage";
  const auto bad = invoke({"eval", "--checkpoint", ck, "--manifest", data.string()});
  EXPECT_NE(bad.code, 0);
  EXPECT_FALSE(bad.err.empty());
}

TEST(Cli, MissingManifestIsNamed) {
  const auto run = support::fresh_dir("cli_missing");
  const auto cfg = write_config(run, run / "nowhere");
  const auto r = invoke({"train", "--config", cfg.string(), "--out", (run / "out").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos) << r.err;
}

TEST(Cli, BadConfigIsRejectedBeforeTraining) {
  const auto run = support::fresh_dir("cli_badcfg");
  std::ofstream(run / "experiment.json") << R"({"manifest": ".", "model": {"heads": 3}})";
  const auto r = invoke({"train", "--config", (run / "experiment.json").string(), "--out", (run / "out").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(fs::exists(run / "out"));
}

TEST(Cli, AblateWritesOneRowPerVariantTask) {
  const auto data = gen("cli_ablate_data", "crossmodal-xor", 30);
  const auto run = support::fresh_dir("cli_ablate_run");
  const auto cfg = write_config(run, data);
  const auto r = invoke({"ablate", "--config", cfg.string(), "--out", (run / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = support::slurp(run / "out/ablation_table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 3);
  for (const char* v : {"full", "no_gf", "no_mhca", "no_both"}) {
    EXPECT_TRUE(fs::exists(run / "out" / (std::string(v) + ".aggregate.json"))) << v;
  }
  EXPECT_EQ(invoke({"ablate", "--config", cfg.string(), "--out", (run / "x").string(), "--variants", "full,bogus"}).code,
            cli::kExitUsage);
}

TEST(Cli, Significance) {
  const auto dir = support::fresh_dir("cli_sig");
  const std::vector<double> a{0.79, 0.81, 0.80, 0.78, 0.82, 0.80, 0.79, 0.81, 0.80, 0.80};
  std::vector<double> b = a;
  for (auto& v : b) v += 0.15;
  write_aggregate(dir / "a.json", a);
  write_aggregate(dir / "a2.json", a);
  write_aggregate(dir / "b.json", b);
  write_aggregate(dir / "one.json", {0.8});

  auto same = invoke({"significance", "--runs-a", (dir / "a.json").string(), "--runs-b", (dir / "a2.json").string()});
  ASSERT_EQ(same.code, 0) << same.err;
  auto j = nlohmann::json::parse(same.out);
  EXPECT_EQ(j["p"], 1.0);
  EXPECT_EQ(j["verdict"], "not significant");

  auto diff = invoke({"significance", "--runs-a", (dir / "a.json").string(), "--runs-b", (dir / "b.json").string()});
  ASSERT_EQ(diff.code, 0) << diff.err;
  j = nlohmann::json::parse(diff.out);
  EXPECT_LT(j["p"].get<double>(), 0.05);
  EXPECT_EQ(j["verdict"], "significant");

  EXPECT_EQ(invoke({"significance", "--runs-a", (dir / "one.json").string(), "--runs-b", (dir / "b.json").string()}).code,
            cli::kExitUsage);
  EXPECT_EQ(invoke({"significance", "--runs-a", (dir / "a.json").string(), "--runs-b", (dir / "b.json").string(),
                    "--metric", "sentiment.f1"})
                .code,
            cli::kExitUsage);
}
