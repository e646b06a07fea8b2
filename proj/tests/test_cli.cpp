#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ids/bench_harness.hpp"
#include "test_util.hpp"

using ids::testing::add_noise;
using ids::testing::gaussian_features;
using ids::testing::TempDir;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string(IDS_BENCH_EXE) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto real = gaussian_features(300, 8, 1);
    ids::write_features(real, dir_ / "real.idsf");
    ids::write_features(add_noise(real, 0.5, 2), dir_ / "fake.idsf");
    ids::write_features(add_noise(real, 1.0, 3), dir_ / "fake2.idsf");
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  TempDir dir_{"cli"};
};

}  // namespace

TEST_F(CliTest, MetricCommandsWriteReportsThatRerunExactly) {
  for (const char* cmd : {"pids", "uids", "fid", "kid"}) {
    std::string out = p(std::string(cmd) + ".json");
    auto r = cli(std::string(cmd) + " --real " + p("real.idsf") + " --fake " + p("fake.idsf") +
                 " --seed 4 --out " + out + (std::string(cmd) == "fid" ? "" : " --runs 3") +
                 (std::string(cmd) == "kid" ? " --block-size 100" : ""));
    ASSERT_EQ(r.code, 0) << r.out;
    auto report = ids::load_report(out);
    EXPECT_EQ(report.spec.kind, "metric");
    EXPECT_EQ(report.spec.base_seed, 4u);
    ASSERT_EQ(report.cells.size(), 1u);
    EXPECT_TRUE(std::filesystem::exists(p(std::string(cmd) + ".csv")));
    auto again = cli("rerun --check --report " + out);
    EXPECT_EQ(again.code, 0) << again.out;
    EXPECT_NE(again.out.find("identical"), std::string::npos);
  }
}

TEST_F(CliTest, SvmFlagsAreRecorded) {
  auto r = cli("uids --real " + p("real.idsf") + " --fake " + p("fake.idsf") +
               " --svm-c 0.5 --svm-tol 1e-3 --runs 1 --out " + p("u.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto spec = ids::load_report(p("u.json")).spec;
  EXPECT_EQ(spec.svm.c, 0.5);
  EXPECT_EQ(spec.svm.tol, 1e-3);
}

TEST_F(CliTest, ConvergenceRerunAndTamperDetection) {
  auto r = cli("convergence --real " + p("real.idsf") + " --variant s05=" + p("fake.idsf") +
               " --variant s10=" + p("fake2.idsf") + " --sizes 100,300 --runs 2 --seed 9 --out " +
               p("conv.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto report = ids::load_report(p("conv.json"));
  EXPECT_EQ(report.cells.size(), 2u * 2u * 3u);
  EXPECT_EQ(cli("rerun --check --report " + p("conv.json") + " --out " + p("conv2.json")).code, 0);
  EXPECT_TRUE(ids::same_numbers(report, ids::load_report(p("conv2.json"))));

  auto j = json::parse(slurp(p("conv.json")));
  j["cells"][0]["result"]["mean"] = 12.5;
  std::ofstream(p("tampered.json")) << j.dump();
  EXPECT_EQ(cli("rerun --check --report " + p("tampered.json")).code, 3);
}

TEST_F(CliTest, MaskgenIsByteReproducible) {
  auto a = cli("maskgen --width 64 --height 48 --count 4 --ratio-min 0.2 --ratio-max 0.6 --seed 5 --out " + p("ma"));
  auto b = cli("maskgen --width 64 --height 48 --count 4 --ratio-min 0.2 --ratio-max 0.6 --seed 5 --out " + p("mb"));
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0);
  for (int i = 0; i < 4; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "mask_%05d.png", i);
    EXPECT_EQ(slurp(dir_ / "ma" / name), slurp(dir_ / "mb" / name));
    auto m = ids::read_mask_png(dir_ / "ma" / name);
    EXPECT_GT(m.masked_ratio(), 0.2);
    EXPECT_LT(m.masked_ratio(), 0.6);
  }
  auto manifest = json::parse(slurp(dir_ / "ma" / "masks.json"));
  EXPECT_EQ(manifest.size(), 4u);
}

TEST_F(CliTest, ExtractManipulateAndSubtle) {
  std::filesystem::create_directories(dir_ / "imgs");
  for (int i = 0; i < 6; ++i)
    ids::write_png(ids::testing::synthetic_image(24, 24, i), dir_ / "imgs" / ("i" + std::to_string(i) + ".png"));
  auto e = cli("extract --images " + p("imgs") + " --out " + p("x.idsf") + " --manifest " + p("x.json") +
               " --dim 32 --extractor-seed 3");
  ASSERT_EQ(e.code, 0) << e.out;
  EXPECT_EQ(ids::read_features(p("x.idsf")).n(), 6u);
  auto viaplugin = cli("extract --images " + p("imgs") + " --out " + p("y.idsf") +
                       " --extractor plugin --dim 32 --plugin '" + std::string(IDS_TOY_PLUGIN_EXE) +
                       " --seed 3 --dim 32'");
  ASSERT_EQ(viaplugin.code, 0) << viaplugin.out;
  auto x = ids::read_features(p("x.idsf")), y = ids::read_features(p("y.idsf"));
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));

  for (const char* kind : {"square --param 5", "noisy --param 40", "mask --ratio-min 0.1 --ratio-max 0.5"}) {
    auto m = cli("manipulate --images " + p("imgs") + " --out " + p("out") + " --seed 2 --kind " + kind);
    ASSERT_EQ(m.code, 0) << m.out;
    EXPECT_EQ(ids::list_png_files(dir_ / "out").size(), 6u);
  }

  auto s = cli("subtle --images " + p("imgs") + " --pixel-counts 0,32 --runs 2 --dim 32 --metrics p_ids,fid --out " +
               p("subtle.json"));
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_EQ(cli("rerun --check --report " + p("subtle.json")).code, 0);
}

TEST_F(CliTest, BucketTableAndCorrelation) {
  for (const char* d : {"real", "b1", "b2"}) std::filesystem::create_directories(dir_ / d);
  for (int i = 0; i < 8; ++i) {
    auto img = ids::testing::synthetic_image(20, 20, 50 + i);
    std::string n = "f" + std::to_string(i) + ".png";
    ids::write_png(img, dir_ / "real" / n);
    ids::write_png(ids::testing::pixel_noise(img, 0.1, i), dir_ / "b1" / n);
    ids::write_png(ids::testing::pixel_noise(img, 0.5, i), dir_ / "b2" / n);
  }
  auto r = cli("bucket-table --real " + p("real") + " --bucket 0-0.2=" + p("b1") + " --bucket 0.8-1=" + p("b2") +
               " --runs 2 --dim 16 --out " + p("bt.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(cli("rerun --check --report " + p("bt.json")).code, 0);
  EXPECT_EQ(cli("bucket-table --real " + p("real") + " --bucket 0-0.2=" + p("nope") + " --dim 16").code, 2);

  std::ofstream(p("pts.csv")) << "label,human,p_ids\na,0.1,0.2\nb,0.2,0.4\nc,0.25,0.45\n";
  auto c = cli("correlation --points " + p("pts.csv") + " --out " + p("corr.json"));
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_TRUE(std::filesystem::exists(p("corr.scatter.csv")));
  EXPECT_EQ(cli("rerun --check --report " + p("corr.json")).code, 0);
}

TEST_F(CliTest, PearsonPrintsValue) {
  auto r = cli("pearson --x 1,2,3,4 --y 1,3,2,4");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 0.8, 1e-12);
  EXPECT_EQ(cli("pearson --x 1,2,3 --y 1,2").code, 2);
  EXPECT_EQ(cli("pearson --x 1,2,x --y 1,2,3").code, 2);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli("pids --real " + p("missing.idsf") + " --fake " + p("fake.idsf")).code, 2);
  EXPECT_EQ(cli("pids --bogus").code, 2);
  EXPECT_EQ(cli("").code, 2);
  std::ofstream(p("corrupt.idsf")) << "IDSF garbage";
  EXPECT_EQ(cli("uids --real " + p("corrupt.idsf") + " --fake " + p("fake.idsf")).code, 5);
  EXPECT_EQ(cli("maskgen --width 16 --height 16 --count 1 --ratio-min 0.5 --ratio-max 0.50001 "
                "--max-attempts 3 --out " + p("sat")).code, 4);
  ids::write_features(gaussian_features(4, 2, 1), p("small.idsf"));
  ids::GaussianStats bad;
  bad.mean = Eigen::VectorXd::Zero(2);
  bad.cov = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  bad.n = 10;
  ids::write_stats(bad, p("bad.idsg"));
  EXPECT_EQ(cli("fid --real " + p("bad.idsg") + " --fake " + p("small.idsf")).code, 3);
  EXPECT_EQ(cli("convergence --real " + p("real.idsf") + " --variant v=" + p("fake.idsf") + " --sizes 999").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}
