#include "maps/config.hpp"
#include "maps/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#ifndef MAPS_CLI_PATH
#error "MAPS_CLI_PATH must name the maps binary"
#endif

namespace maps {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("maps_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    TrainConfig c;
    c.num_modules = 3;
    c.feature_dim = 6;
    c.hidden_width = 8;
    c.module_hidden_layers = 1;
    c.selector_hidden_layers = 1;
    c.batch_size = 16;
    c.epochs = 2;
    std::ofstream(dir_ / "tiny.cfg") << to_config_text(c);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + MAPS_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  void gen(const std::string& suite, int per_task) const {
    const Result r = run("gen-data --suite " + suite + " --per-task " + std::to_string(per_task) +
                         " --seed 3 --out " + p("demos.bin"));
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

TEST_F(Cli, GenerateTrainEvaluate) {
  gen("subbehavior", 4);
  EXPECT_EQ(load_demos(p("demos.bin")).trajectories.size(), 16u);

  Result r = run("train --config " + p("tiny.cfg") + " --data " + p("demos.bin") + " --out " +
                 p("maps.ckpt"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string history = slurp(p("maps.ckpt.history.csv"));
  EXPECT_EQ(history.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(history.find("epoch,split,L_total,L_BC"), std::string::npos);

  r = run("eval --model " + p("maps.ckpt") + " --suite subbehavior --starts 5");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "suite,task,name,method,success_rate");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 4);

  r = run("usage --model " + p("maps.ckpt") + " --data " + p("demos.bin") + " --out " + p("u"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(p("u.csv")));
  EXPECT_TRUE(fs::exists(p("u.svg")));
}

TEST_F(Cli, TrainingIsReproducible) {
  gen("morph", 3);
  for (const char* name : {"a.ckpt", "b.ckpt"}) {
    const Result r = run("train --config " + p("tiny.cfg") + " --data " + p("demos.bin") +
                         " --out " + p(name) + " --method mtmh");
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(p("a.ckpt.history.csv")), slurp(p("b.ckpt.history.csv")));
  EXPECT_EQ(slurp(p("a.ckpt")), slurp(p("b.ckpt")));
}

TEST_F(Cli, SingleWritesOneCheckpointPerTask) {
  gen("scaled", 3);
  Result r = run("train --config " + p("tiny.cfg") + " --data " + p("demos.bin") + " --out " +
                 p("s.ckpt") + " --method single");
  ASSERT_EQ(r.code, 0) << r.err;
  std::string models;
  for (int k = 0; k < 5; ++k) {
    const std::string f = p("s.ckpt.task" + std::to_string(k));
    EXPECT_TRUE(fs::exists(f)) << f;
    models += " --model " + f;
  }
  r = run("eval" + models + " --suite scaled --starts 3");
  EXPECT_EQ(r.code, 0) << r.err;
  r = run("eval --model " + p("s.ckpt.task0") + " --suite scaled --starts 3");
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, ErrorsReportCategoryAndExitCode) {
  std::ofstream(dir_ / "junk.bin") << "not a demo file";
  Result r = run("train --config " + p("tiny.cfg") + " --data " + p("junk.bin") + " --out " +
                 p("x.ckpt"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: format:", 0), 0u) << r.err;

  std::ofstream(dir_ / "bad.cfg") << "epochs = 3\n";
  gen("scaled", 2);
  r = run("train --config " + p("bad.cfg") + " --data " + p("demos.bin") + " --out " + p("x.ckpt"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: config:", 0), 0u) << r.err;

  r = run("gen-data --suite walker --out " + p("d.bin"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: invalid_argument:", 0), 0u) << r.err;

  r = run("train --data " + p("demos.bin"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
}

}  // namespace
}  // namespace maps
