#include <algorithm>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "wr/cli.hpp"
#include "wr/config.hpp"

namespace wr::cli {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run wr(std::vector<std::string> args) {
  args.insert(args.begin(), "wr");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A small corpus plus the crop and LBP settings that suit 160x120 pages.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const std::string o = dir_.path().string();
    const auto r = wr({"synth", "--out-dir", o, "--synth-writers", "4", "--synth-pages", "3", "--synth-distractors", "2",
                       "--synth-width", "160", "--synth-height", "120", "--workers", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    manifest_ = (dir_ / "corpus" / "manifest.csv").string();
    ASSERT_TRUE(std::filesystem::exists(manifest_));
  }

  std::vector<std::string> small(std::vector<std::string> args, const std::string& out_dir) {
    const bool reads_images = args[0] == "extract" || args[0] == "run-all";
    args.insert(args.end(), {"--out-dir", out_dir, "--workers", "2"});
    if (reads_images) args.insert(args.end(), {"--crop-margin", "8", "--lbp-radii", "1-4"});
    return args;
  }

  test::TempDir dir_{"cli"};
  std::string manifest_;
};

TEST_F(CliTest, StepwiseCommandsMatchRunAll) {
  const std::string o = (dir_ / "steps").string();
  auto r = wr(small({"extract", "-m", manifest_}, o));
  ASSERT_EQ(r.code, 0) << r.err;
  r = wr(small({"embed", "-d", o + "/descriptors.bin", "--pca-dim", "8"}, o));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(o + "/embeddings_retrieval.bin.meta.json"));
  r = wr(small({"distmat", "-e", o + "/embeddings_retrieval.bin"}, o));
  ASSERT_EQ(r.code, 0) << r.err;
  r = wr(small({"evaluate", "-x", o + "/distances.bin", "-m", manifest_}, o));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mAP"), std::string::npos) << r.out;
  const auto steps = nlohmann::json::parse(slurp(o + "/report.json"));
  EXPECT_TRUE(std::filesystem::exists(o + "/run_log.evaluate.json"));

  const std::string a = (dir_ / "all").string();
  r = wr(small({"run-all", "--manifest", manifest_, "--pca-dim", "8"}, a));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto whole = nlohmann::json::parse(slurp(a + "/report.json"));
  EXPECT_EQ(steps["runs"][0]["full"]["map"], whole["runs"][0]["full"]["map"]);
  EXPECT_EQ(whole["runs"][0]["full"]["excluded_queries"], 2);
  EXPECT_EQ(slurp(o + "/distances.bin"), slurp(a + "/distances_retrieval.bin"));
}

TEST_F(CliTest, RerunIsByteIdentical) {
  const std::string a = (dir_ / "a").string();
  const std::string b = (dir_ / "b").string();
  ASSERT_EQ(wr(small({"run-all", "--manifest", manifest_, "--pca-dim", "8"}, a)).code, 0);
  auto args = small({"run-all", "--manifest", manifest_, "--pca-dim", "8"}, b);
  *(std::find(args.begin(), args.end(), "--workers") + 1) = "1";
  ASSERT_EQ(wr(args).code, 0);
  for (const char* f : {"descriptors.bin", "pca_retrieval.bin", "embeddings_retrieval.bin", "distances_retrieval.bin",
                        "report.json"}) {
    EXPECT_EQ(slurp(a + "/" + f), slurp(b + "/" + f)) << f;
  }
  const auto log = nlohmann::json::parse(slurp(a + "/run_log.run-all.json"));
  EXPECT_EQ(log["config"]["pca_dim"], "8");
  EXPECT_EQ(log["inputs"][manifest_].get<std::string>().size(), 64u);
}

TEST_F(CliTest, ClassificationWithoutTrainingIsUsageError) {
  const std::string o = (dir_ / "cls").string();
  ASSERT_EQ(wr(small({"extract", "-m", manifest_}, o)).code, 0);
  const auto r = wr(small({"embed", "-d", o + "/descriptors.bin", "--pca-mode", "classification"}, o));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("usage"), std::string::npos) << r.err;
  EXPECT_EQ(wr(small({"run-all", "--manifest", manifest_, "--pca-mode", "both"}, o)).code, 2);
}

TEST_F(CliTest, UsageAndInputErrorsMapToExitCodes) {
  const std::string o = (dir_ / "err").string();
  ASSERT_EQ(wr(small({"extract", "-m", manifest_}, o)).code, 0);
  EXPECT_EQ(wr({"distmat", "-e", o + "/descriptors.bin", "--metric", "cosine", "--out-dir", o}).code, 2);
  EXPECT_EQ(wr({"frobnicate"}).code, 2);
  EXPECT_EQ(wr({}).code, 2);
  EXPECT_EQ(wr({"evaluate", "-x", o + "/missing.bin", "-m", manifest_, "--out-dir", o}).code, 3);
  {
    std::ofstream(o + "/junk.bin", std::ios::binary) << "not a matrix at all";
  }
  EXPECT_EQ(wr({"evaluate", "-x", o + "/junk.bin", "-m", manifest_, "--out-dir", o}).code, 3);
  EXPECT_EQ(wr({"run-all", "--lbp-radii", "3,2", "--manifest", manifest_, "--out-dir", o}).code, 2);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const std::string o = (dir_ / "cfg").string();
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "# small run\nmanifest = " << manifest_ << "\nout_dir = " << o
        << "\ncrop_margin = 8\nlbp_radii = 1-3\npca_dim = 6\nmetric = chi_square\nmatrix_format = csv\n";
  }
  const auto r = wr({"run-all", "-c", (dir_ / "run.cfg").string(), "--metric", "euclidean"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(o + "/distances_retrieval.csv"));
  const auto log = nlohmann::json::parse(slurp(o + "/run_log.run-all.json"));
  EXPECT_EQ(log["config"]["metric"], "euclidean");
  EXPECT_EQ(log["config"]["pca_dim"], "6");
}

TEST(Config, TextRoundTrip) {
  RunConfig cfg;
  cfg.pca_dim = 64;
  cfg.metric = retrieval::Metric::chi_square;
  cfg.pca_modes = {embed::FitMode::classification, embed::FitMode::retrieval};
  cfg.lbp.radii = {1, 3, 5};
  cfg.workers = 3;
  RunConfig back;
  apply_settings(back, parse_config_text(to_config_text(cfg)));
  EXPECT_EQ(to_settings(back), to_settings(cfg));
  EXPECT_EQ(test::code_of([] {
              RunConfig c;
              apply_setting(c, "no_such_key", "1");
            }),
            Errc::usage);
  EXPECT_EQ(test::code_of([] {
              RunConfig c;
              apply_setting(c, "pca_dim", "many");
            }),
            Errc::usage);
}

TEST(Config, WorkerPrecedence) {
  RunConfig cfg;
  cfg.workers = 5;
  EXPECT_EQ(resolve_workers(cfg), 5u);
  cfg.workers.reset();
  ::setenv("WR_WORKERS", "3", 1);
  EXPECT_EQ(resolve_workers(cfg), 3u);
  ::unsetenv("WR_WORKERS");
  EXPECT_GE(resolve_workers(cfg), 1u);
}

}  // namespace
}  // namespace wr::cli
