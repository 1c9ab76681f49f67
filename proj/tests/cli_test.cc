#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"

namespace fs = std::filesystem;

namespace {

struct result {
  int code;
  std::string output;
};

result run(std::string const& args, fs::path const& dir) {
  auto const log = dir / "cli.log";
  auto const cmd = std::string{DELAYNET_CLI} + " " + args + " > " +
                   log.string() + " 2>&1";
  auto const status = std::system(cmd.c_str());
  std::ifstream f{log};
  std::ostringstream s;
  s << f.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

class cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("delaynet_cli_" +
            std::string{::testing::UnitTest::GetInstance()->current_test_info()->name()});
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out() const { return "--out " + (dir_ / "out").string(); }
  std::string small() const {
    return "--kind synthetic --synth-months 3 --synth-nodes 16 "
           "--classifiers decision_tree,logistic --feature-sets ncm,tf " +
           out();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(cli, missing_subcommand_is_a_usage_error) {
  EXPECT_EQ(run("", dir_).code, 1);
  EXPECT_EQ(run("frobnicate", dir_).code, 1);
}

TEST_F(cli, evaluate_before_train_names_the_missing_stage) {
  ASSERT_EQ(run("synth " + small(), dir_).code, 0);
  auto const input = "--input " + (dir_ / "out" / "synthetic.csv").string();
  for (auto const* stage : {"ingest", "label", "featurize"}) {
    ASSERT_EQ(run(std::string{stage} + " " + small() + " " + input, dir_).code, 0)
        << stage;
  }
  auto const r = run("evaluate " + small(), dir_);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("delaynet train"), std::string::npos) << r.output;
}

TEST_F(cli, invalid_config_is_rejected) {
  auto const cfg = dir_ / "bad.cfg";
  std::ofstream{cfg} << "percentile=1.5\nmin_rides=0\n";
  auto const r = run("pipeline --config " + cfg.string() + " " + small(), dir_);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("percentile"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("min-rides"), std::string::npos) << r.output;
}

TEST_F(cli, command_line_overrides_config) {
  auto const cfg = dir_ / "ok.cfg";
  std::ofstream{cfg} << "# comment\nclassifiers=nonsense\n";
  EXPECT_EQ(run("synth --config " + cfg.string() + " " + small(), dir_).code, 0);
}

TEST_F(cli, pipeline_writes_stamped_artifacts) {
  auto const r = run("pipeline " + small(), dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  for (auto const* f : {"synthetic.csv", "aggregates.csv", "labeled.csv",
                        "snapshots.csv", "features.csv", "plan.txt",
                        "metrics.txt", "metrics_by_month.csv", "matrix_ba.csv",
                        "matrix_f1.csv", "matrix_auc.csv",
                        "models/logistic.ncm.txt"}) {
    auto const p = dir_ / "out" / f;
    ASSERT_TRUE(fs::exists(p)) << f;
    std::ifstream in{p};
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first.rfind("# delaynet stage=", 0), 0u) << f;
  }
  EXPECT_NE(r.output.find("balanced accuracy"), std::string::npos);
}

TEST_F(cli, unknown_classifier_parameter_is_a_usage_error) {
  auto const r = run("pipeline " + small() + " --param logistic.depth=3", dir_);
  EXPECT_EQ(r.code, 1);
}

TEST_F(cli, malformed_input_is_a_data_error) {
  auto const bad = dir_ / "bad.csv";
  std::ofstream{bad} << "RDT-ID,Date\n1,2\n";
  auto const r = run("ingest --kind rail --input " + bad.string() + " " + out(), dir_);
  EXPECT_EQ(r.code, 2);
}

TEST_F(cli, pooled_flag_fits_one_model) {
  ASSERT_EQ(run("pipeline --pooled " + small(), dir_).code, 0);
  std::ifstream plan{dir_ / "out" / "plan.txt"};
  std::string line;
  std::size_t parts = 0;
  while (std::getline(plan, line)) {
    parts += line.rfind("part ", 0) == 0 ? 1 : 0;
  }
  EXPECT_EQ(parts, 1u);
}
