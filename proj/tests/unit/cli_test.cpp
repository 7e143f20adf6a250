#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "avkit/cli/app.hpp"
#include "support/synthetic_corpus.hpp"

namespace avkit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir = testing::temp_dir(std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    testing::SyntheticSpec spec;
    spec.authors = {{"A", 3, 1, 0.9}, {"B", 3, 2, 0.9}};
    spec.min_words = 120;
    spec.max_words = 200;
    spec.disputed_style = "A";
    testing::write_synthetic_corpus(spec, dir / "corpus");
    testing::SyntheticSpec labelled_only = spec;
    labelled_only.disputed_style.clear();
    testing::write_synthetic_corpus(labelled_only, dir / "labelled");
  }

  json base_config(const std::string& corpus = "corpus/manifest.csv") const {
    return {{"corpus", corpus},
            {"features",
             {{"blocks", {"TokenLengths", "CharNgrams", "FunctionWords"}},
              {"ngram_orders", {{"CharNgrams", {1, 2}}}},
              {"function_words", "corpus/function_words.txt"}}},
            {"segmentation", {{"min_tokens", 80}}},
            {"learner", {{"C_grid", {0.1, 1, 10}}, {"inner_folds", 3}}},
            {"task", {{"positive_author", "A"}}},
            {"seed", 7},
            {"output_dir", "out"}};
  }

  fs::path write_config(const json& j, const std::string& name = "run.json") const {
    std::ofstream(dir / name) << j.dump(2);
    return dir / name;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "avkit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out.str("");
    err.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }

  fs::path dir;
  std::ostringstream out, err;
};

TEST_F(Cli, LooWritesSelfDescribingReport) {
  const auto cfg = write_config(base_config());
  ASSERT_EQ(run({"loo", "--config", cfg.string(), "--threads", "2"}), cli::kExitOk) << err.str();
  const auto report = json::parse(slurp(dir / "out" / "loo_report.json"));
  EXPECT_EQ(report["tool"], "avkit");
  EXPECT_EQ(report["seed"], 7);
  EXPECT_EQ(report["config"], base_config());
  EXPECT_TRUE(report.contains("version"));
  EXPECT_EQ(report["corpus_fingerprint"].get<std::string>().size(), 16u);
  EXPECT_EQ(report["results"]["records"].size(), 6u);
  EXPECT_TRUE(fs::exists(dir / "out" / "loo_records.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "hardest_texts.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "loo_timings.csv"));
}

TEST_F(Cli, ReportsAreByteIdenticalAcrossRunsAndThreads) {
  const auto cfg = write_config(base_config());
  ASSERT_EQ(run({"loo", "--config", cfg.string(), "--threads", "1", "--output-dir", (dir / "r1").string()}), 0);
  ASSERT_EQ(run({"loo", "--config", cfg.string(), "--threads", "4", "--output-dir", (dir / "r2").string()}), 0);
  EXPECT_EQ(slurp(dir / "r1" / "loo_report.json"), slurp(dir / "r2" / "loo_report.json"));
  EXPECT_EQ(slurp(dir / "r1" / "loo_records.csv"), slurp(dir / "r2" / "loo_records.csv"));
}

TEST_F(Cli, ExitCodes) {
  auto missing = base_config("nowhere/manifest.csv");
  EXPECT_EQ(run({"loo", "--config", write_config(missing, "m.json").string()}), cli::kExitCorpus);

  auto labelled = base_config("labelled/manifest.csv");
  EXPECT_EQ(run({"verify", "--config", write_config(labelled, "l.json").string()}), cli::kExitExperiment);
  EXPECT_NE(err.str().find("UNKNOWN"), std::string::npos);

  auto unknown_key = base_config();
  unknown_key["learnr"] = json::object();
  EXPECT_EQ(run({"loo", "--config", write_config(unknown_key, "u.json").string()}), cli::kExitConfig);

  auto bad_block = base_config();
  bad_block["features"]["blocks"] = {"Nope"};
  EXPECT_EQ(run({"loo", "--config", write_config(bad_block, "b.json").string()}), cli::kExitConfig);

  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run({"loo", "--config", (dir / "broken.json").string()}), cli::kExitConfig);
  EXPECT_EQ(run({"loo", "--config", (dir / "absent.json").string()}), cli::kExitConfig);
  EXPECT_EQ(run({"frobnicate", "--config", (dir / "run.json").string()}), cli::kExitConfig);
  EXPECT_EQ(run({"ablate", "--config", write_config(base_config()).string(), "--mode", "fast"}), cli::kExitConfig);
}

TEST_F(Cli, IngestCacheFeedsLaterRuns) {
  const auto cfg = write_config(base_config());
  ASSERT_EQ(run({"ingest", "--config", cfg.string()}), 0) << err.str();
  const auto summary = json::parse(slurp(dir / "out" / "ingest_report.json"));
  EXPECT_EQ(summary["results"]["documents"], 7);

  auto cached = base_config("out/corpus_cache.json");
  cached["output_dir"] = "out_cached";
  ASSERT_EQ(run({"ingest", "--config", write_config(cached, "c.json").string()}), 0) << err.str();
  const auto again = json::parse(slurp(dir / "out_cached" / "ingest_report.json"));
  EXPECT_EQ(again["corpus_fingerprint"], summary["corpus_fingerprint"]);
}

TEST_F(Cli, StudiesWriteTheirTables) {
  const auto cfg = write_config(base_config());
  ASSERT_EQ(run({"verify", "--config", cfg.string(), "--replicas", "3"}), 0) << err.str();
  const auto verdict = json::parse(slurp(dir / "out" / "verdict.json"));
  EXPECT_EQ(verdict["results"]["replica_posteriors"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "out" / "verify_replicas.csv"));

  ASSERT_EQ(run({"attribute", "--config", cfg.string(), "--min-texts", "2"}), 0) << err.str();
  const auto attribution = json::parse(slurp(dir / "out" / "attribution.json"));
  EXPECT_EQ(attribution["results"]["min_texts"], 2);
  EXPECT_TRUE(fs::exists(dir / "out" / "attribution_ranking.csv"));

  ASSERT_EQ(run({"similar", "--config", cfg.string()}), 0) << err.str();
  EXPECT_EQ(json::parse(slurp(dir / "out" / "similarity.json"))["results"]["ranking"].size(), 6u);

  auto attribution_loo = base_config();
  attribution_loo["task"]["loo"] = "attribution";
  attribution_loo["output_dir"] = "out_aa";
  ASSERT_EQ(run({"loo", "--config", write_config(attribution_loo, "aa.json").string()}), 0) << err.str();
  EXPECT_NE(slurp(dir / "out_aa" / "attribution_contingency.csv").find("A,"), std::string::npos);

  auto ablation = base_config();
  ablation["task"]["ablation_pool"] = {"TokenLengths", "CharNgrams"};
  ablation["output_dir"] = "out_ab";
  ASSERT_EQ(run({"ablate", "--config", write_config(ablation, "ab.json").string(), "--mode", "hardest10"}), 0)
      << err.str();
  const auto ab = json::parse(slurp(dir / "out_ab" / "ablation_report.json"));
  EXPECT_EQ(ab["results"]["mode"], "hardest10");
  EXPECT_TRUE(fs::exists(dir / "out_ab" / "ablation.csv"));
}

} // namespace
} // namespace avkit
