// SPDX-License-Identifier: Apache-2.0
// Drives the installed command-line tool end to end.
#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "waterflow/ltns.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(WATERFLOW_CLI_PATH) + " --quiet " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testsupport::temp_dir("cli");
    den_ = testsupport::save_trained_denoiser(dir_);
    ASSERT_EQ(run("dataset --out " + (dir_ / "ds").string() + " --count 2 --seed 5").code, 0);
  }
  static fs::path dir_;
  static fs::path den_;
};

fs::path Cli::dir_;
fs::path Cli::den_;

}  // namespace

TEST_F(Cli, Version) {
  const Result r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}

TEST_F(Cli, DatasetWritesImages) {
  EXPECT_TRUE(fs::exists(dir_ / "ds" / "img_000.ltns"));
  EXPECT_TRUE(fs::exists(dir_ / "ds" / "img_001.ltns"));
  EXPECT_TRUE(fs::exists(dir_ / "ds" / "dataset.json"));
}

TEST_F(Cli, EmbedDetectAttack) {
  const std::string img = (dir_ / "ds" / "img_000.ltns").string();
  const std::string wm = (dir_ / "wm.ltns").string();
  const std::string rec = (dir_ / "wm.record.json").string();
  const Result e = run("embed --input " + img + " --out " + wm + " --record " + rec + " --denoiser " + den_.string() +
                       " --flow identity --key-seed 3 --radius 10 --ssim-threshold 0.95 --store-wstar true");
  ASSERT_EQ(e.code, 0) << e.out;
  const auto summary = nlohmann::json::parse(e.out);
  EXPECT_GE(summary.at("ssim").get<double>(), 0.95 - 1e-9);

  const Result d = run("detect --input " + wm + " --record " + rec + " --denoiser " + den_.string());
  EXPECT_EQ(d.code, 0) << d.out;
  EXPECT_GE(nlohmann::json::parse(d.out).at("detection_probability").get<double>(), 0.99);

  EXPECT_EQ(run("detect --input " + img + " --record " + rec + " --denoiser " + den_.string()).code, 1);

  const std::string pgm = (dir_ / "wm_jpeg.pgm").string();
  ASSERT_EQ(run("attack --input " + wm + " --out " + pgm + " --kind jpeg --quality 50").code, 0);
  EXPECT_TRUE(fs::exists(pgm));
  const Result dj = run("detect --input " + pgm + " --channels 4 --record " + rec + " --denoiser " + den_.string());
  EXPECT_NE(dj.code, 2) << dj.out;
}

TEST_F(Cli, AttackIsSeeded) {
  const std::string img = (dir_ / "ds" / "img_001.ltns").string();
  const std::string a = (dir_ / "n1.ltns").string(), b = (dir_ / "n2.ltns").string();
  ASSERT_EQ(run("attack --input " + img + " --out " + a + " --kind gnoise --std 0.05 --seed 4").code, 0);
  ASSERT_EQ(run("attack --input " + img + " --out " + b + " --kind gnoise --std 0.05 --seed 4").code, 0);
  EXPECT_EQ(wf::read_file(a), wf::read_file(b));
}

TEST_F(Cli, ErrorsAreStructured) {
  const Result missing = run("embed --out x.ltns");
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(nlohmann::json::parse(missing.out).at("error").at("kind"), "usage");

  wf::write_file(dir_ / "bad.json", R"({"embed": {"radius": 10, "radiuss": 3}})");
  const Result bad = run("--config " + (dir_ / "bad.json").string() + " dataset --out " + (dir_ / "x").string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(nlohmann::json::parse(bad.out).at("error").at("kind"), "config");

  const Result nokind = run("attack --input " + (dir_ / "ds" / "img_000.ltns").string() + " --out " +
                            (dir_ / "y.ltns").string() + " --kind crop");
  EXPECT_EQ(nokind.code, 2);
}
