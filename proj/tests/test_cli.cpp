#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "elsa/app.hpp"
#include "elsa/cli.hpp"
#include "elsa/rng.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"elsa"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out;
  std::ostringstream err;
  const int code = elsa::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("elsa_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(Cli, HelpExitsZero) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "am-check"));
  EXPECT_EQ(run({"sim", "--help"}).code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const Result r = run({"am-check", "--bits", "40"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "--bits"));
  EXPECT_EQ(run({"am-check"}).code, 1);
  EXPECT_EQ(run({"sim", "--hidden", "0"}).code, 1);
  EXPECT_EQ(run({"generate", "--weights", "/nonexistent", "--vocab", "/nonexistent",
                 "--prime", "a"})
                .code,
            1);
}

TEST(Cli, AmCheckReportsBoundFailure) {
  const Result r = run({"am-check", "--bits", "4"});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(contains(r.out, "pairs=256 (exhaustive)"));
  EXPECT_TRUE(contains(r.out, "fast_equivalence=pass"));
  EXPECT_TRUE(contains(r.out, "bound=FAIL"));
  EXPECT_TRUE(contains(r.out, "max_error=0.21875"));
}

TEST(Cli, AmCheckFastOnly) {
  const Result r = run({"am-check", "--bits", "8", "--fast"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "fast_equivalence=pass"));
  const Result s = run({"am-check", "--bits", "14", "--fast", "--samples", "500"});
  EXPECT_EQ(s.code, 0);
  EXPECT_TRUE(contains(s.out, "pairs=500 (sampled)"));
}

TEST(Cli, SimZeroLayer) {
  const Result r = run({"sim", "--zero", "--hidden", "1", "--timesteps", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "total_cycles=98\n"));
  EXPECT_TRUE(contains(r.out, "model=skipped"));
  EXPECT_TRUE(contains(r.err, "warning"));
}

TEST(Cli, SimCrossChecksModel) {
  const Result p = run({"sim", "--hidden", "6", "--timesteps", "5", "--seed", "3"});
  EXPECT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(contains(p.out, "schedule=pipelined"));
  EXPECT_TRUE(contains(p.out, "(match)")) << p.out;
  const Result q = run({"sim", "--hidden", "6", "--timesteps", "5", "--no-pipeline"});
  EXPECT_EQ(q.code, 0) << q.err;
  EXPECT_TRUE(contains(q.out, "schedule=nonpipelined"));
  EXPECT_TRUE(contains(q.out, "(match)")) << q.out;
  const Result rect = run({"sim", "--hidden", "4", "--input-dim", "3"});
  EXPECT_EQ(rect.code, 0);
  EXPECT_TRUE(contains(rect.out, "model=skipped (input_dim != hidden)"));
}

TEST(Cli, SimWritesTrace) {
  TempDir dir;
  const std::string path = dir.file("trace.csv");
  const Result r = run({"sim", "--hidden", "2", "--timesteps", "2", "--trace", path.c_str()});
  ASSERT_EQ(r.code, 0);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("CS1,1,0,", 0), 0U) << first;
}

TEST(Cli, SweepIsByteIdenticalAcrossRuns) {
  TempDir dir;
  const std::string a = dir.file("a.csv");
  const std::string b = dir.file("b.csv");
  const auto args = [](const std::string& out) {
    return run({"sweep", "--bits", "6,8", "--hidden", "3,5", "--timesteps", "2,4",
                "--seed", "5", "--out", out.c_str()});
  };
  const Result ra = args(a);
  const Result rb = args(b);
  EXPECT_EQ(ra.code, 0) << ra.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_TRUE(contains(ra.out, "configs=8 "));
  EXPECT_TRUE(contains(ra.out, "model_mismatches=0"));
  std::ifstream fa(a);
  std::ifstream fb(b);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
}

TEST(Cli, AccuracyWritesReports) {
  TempDir dir;
  const std::string out = dir.file("acc");
  const Result r = run({"accuracy", "--bits-list", "6,8", "--timesteps", "20", "--hidden",
                        "4", "--samples", "200", "--out", out.c_str()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"mse_6.csv", "mse_8.csv", "relative_error_6.csv",
                           "relative_error_8.csv"})
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / name)) << name;
  EXPECT_TRUE(contains(r.out, "bits=6 "));
  EXPECT_TRUE(contains(r.out, "bits=8 "));
}

TEST(Cli, GenerateFromFiles) {
  TempDir dir;
  const std::string weights = dir.file("w.txt");
  const std::string vocab = dir.file("v.txt");
  elsa::SplitMix64 rng(1);
  const elsa::NetworkSpec net = elsa::random_network({'a', 'b', 'c', ' '}, {5}, 8, rng);
  elsa::save_network(weights, net);
  elsa::save_vocab(vocab, net.vocab);
  const Result r = run({"generate", "--weights", weights.c_str(), "--vocab", vocab.c_str(),
                        "--prime", "ab", "--length", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.size(), 13U);
  EXPECT_EQ(r.out.rfind("ab", 0), 0U);
  const Result again = run({"generate", "--weights", weights.c_str(), "--vocab",
                            vocab.c_str(), "--prime", "ab", "--length", "10"});
  EXPECT_EQ(again.out, r.out);

  const Result oov = run({"generate", "--weights", weights.c_str(), "--vocab",
                          vocab.c_str(), "--prime", "xyz"});
  EXPECT_EQ(oov.code, 2);
  EXPECT_TRUE(contains(oov.err, "'x'"));
}

TEST(Cli, MalformedWeightsAreDataErrors) {
  TempDir dir;
  const std::string weights = dir.file("w.txt");
  const std::string vocab = dir.file("v.txt");
  elsa::save_vocab(vocab, {'a', 'b'});
  std::ofstream(weights) << "ELSAW 2\n";
  const Result r = run({"generate", "--weights", weights.c_str(), "--vocab", vocab.c_str(),
                        "--prime", "a"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "unsupported weight format version"));
}
