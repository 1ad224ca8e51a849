#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wsketch/cli.hpp"
#include "wsketch/container.hpp"

using namespace wsketch;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wsketch-cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wsketch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    std::mt19937_64 rng(7);
    std::normal_distribution<float> n(0.0f, 0.02f);
    std::vector<float> v(96 * 128);
    for (auto& x : v) x = n(rng);
    write_tensor(path("w.wskt"), Tensor({96, 128}, v));
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, InjectiveCompressionIsUntouched) {
  const Result c = run_cli({"compress", "-i", path("w.wskt"), "-o", path("w.wsks"), "--rate", "1",
                            "--rows", "1", "--test-hash", "--min-columns", "1"});
  ASSERT_EQ(c.code, 0) << c.err;
  const Result s = run_cli({"stats", "--original", path("w.wskt"), "--sketch", path("w.wsks")});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto kv = key_values(s.out);
  EXPECT_EQ(kv.at("untouched_fraction"), "1");
  EXPECT_EQ(kv.at("mean_relative_error"), "0");

  const Result d = run_cli({"decompress", "-i", path("w.wsks"), "-o", path("r.wskt")});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(read_tensor(path("r.wskt")), read_tensor(path("w.wskt")));
}

TEST_F(CliTest, CompressReportsEquivalentBits) {
  const Result c = run_cli({"compress", "-i", path("w.wskt"), "-o", path("w.wsks"), "--rate",
                            "0.125", "--quant", "q4"});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto kv = key_values(c.out);
  EXPECT_EQ(kv.at("equivalent_bits"), "0.5");
  EXPECT_EQ(kv.at("achieved_equivalent_bits"), "0.5");
  EXPECT_EQ(kv.at("state_elements"), "1536");
  EXPECT_EQ(std::stoull(kv.at("serialized_bytes")), fs::file_size(path("w.wsks")));

  const Result j = run_cli({"stats", "--original", path("w.wskt"), "--sketch", path("w.wsks"), "--json"});
  ASSERT_EQ(j.code, 0) << j.err;
  EXPECT_NE(j.out.find("\"quantized\": true"), std::string::npos);
}

TEST_F(CliTest, FixedSeedRunsAreByteReproducible) {
  const std::vector<std::string> base = {"compress", "-i", path("w.wskt"), "--rate", "0.25",
                                         "--seed", "11", "--quant", "q8", "--topk", "4",
                                         "--granularity", "row", "--min-columns", "2"};
  auto a = base, b = base;
  a.insert(a.end(), {"-o", path("a.wsks")});
  b.insert(b.end(), {"-o", path("b.wsks"), "--threads", "4"});
  const Result ra = run_cli(a), rb = run_cli(b);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(slurp(path("a.wsks")), slurp(path("b.wsks")));
  run_cli({"decompress", "-i", path("a.wsks"), "-o", path("a.wskt")});
  run_cli({"decompress", "-i", path("b.wsks"), "-o", path("b.wskt")});
  EXPECT_EQ(slurp(path("a.wskt")), slurp(path("b.wskt")));
}

TEST_F(CliTest, BoundExample) {
  const Result r = run_cli({"bound", "--p", "0.9", "--dist", "normal", "--k", "80000", "--m", "10000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(r.out);
  const double coverage = std::stod(kv.at("coverage"));
  const double se = std::stod(kv.at("standard_error"));
  EXPECT_GE(coverage, 0.9 - 3 * se);
  EXPECT_EQ(kv.at("holds"), "yes");
  EXPECT_NEAR(std::stod(kv.at("L")), -2.2237, 1e-4);
  EXPECT_EQ(r.out, run_cli({"bound", "--p", "0.9", "--dist", "normal", "--k", "80000", "--m", "10000"}).out);
}

TEST_F(CliTest, CompareTable) {
  const Result r = run_cli({"compare", "-i", path("w.wskt"), "--rate", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("absmaxmin\t"), std::string::npos);
  EXPECT_NE(r.out.find("countmin\t"), std::string::npos);
}

TEST_F(CliTest, MemoryEstimate) {
  const Result r = run_cli({"memest", "--layers", "100,100", "--sketches", "12,12"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "peak=124\nbaseline=200\n");
}

TEST_F(CliTest, Importance) {
  write_tensor(path("act.wskt"), Tensor({2, 2}, {1, 0, 0, 2}));
  const Result r = run_cli({"importance", "--activations", path("act.wskt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("channels=2\n"), std::string::npos);
  EXPECT_NE(r.out.find("0\t0.5\n1\t2\n"), std::string::npos);
}

TEST_F(CliTest, DemoFinetuneShortRun) {
  const Result r = run_cli({"demo-finetune", "--mode", "ste", "--steps", "5", "--hidden", "16",
                            "--pretrain-steps", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("step\tloss", 0), 0u);
  EXPECT_NE(r.out.find("# mode=ste"), std::string::npos);
  EXPECT_NE(r.out.find("# compress_only"), std::string::npos);
}

TEST_F(CliTest, Failures) {
  EXPECT_NE(run_cli({}).code, 0);
  EXPECT_NE(run_cli({"compress", "-i", path("w.wskt"), "-o", path("x.wsks"), "--bogus"}).code, 0);
  EXPECT_NE(run_cli({"compress", "-i", path("missing.wskt"), "-o", path("x.wsks")}).code, 0);
  const Result low = run_cli({"compress", "-i", path("w.wskt"), "-o", path("x.wsks"), "--rate",
                              "0.001", "--granularity", "row"});
  EXPECT_EQ(low.code, 1);
  EXPECT_NE(low.err.find("rate too low"), std::string::npos);
  {
    std::ofstream(path("junk.wsks")) << "not a sketch";
  }
  const Result junk = run_cli({"decompress", "-i", path("junk.wsks"), "-o", path("y.wskt")});
  EXPECT_EQ(junk.code, 1);
  EXPECT_EQ(junk.err.rfind("error: ", 0), 0u);
  EXPECT_NE(run_cli({"memest", "--layers", "100", "--sketches", "1,2"}).code, 0);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}
