// Copyright 2026 The coldstart Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the coldstart executable as a subprocess and checks exit codes and
// written artifacts.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "coldstart/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using coldstart::pipeline::read_text;
using coldstart::pipeline::write_text;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("coldstart_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Exit status of `coldstart <args>`; stdout and stderr land in out_ / err_.
  int run(const std::string& args) {
    const std::string cmd = std::string(COLDSTART_CLI) + " " + args + " >" + path("stdout") +
                            " 2>" + path("stderr");
    const int status = std::system(cmd.c_str());
    out_ = read_text(path("stdout"));
    err_ = read_text(path("stderr"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string out_;
  std::string err_;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run("synth --pattern weekly --out " + path("x.csv")), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ZeroWindowIsRejected) {
  ASSERT_EQ(run("synth --pattern sporadic --seed 1 --out " + path("s.csv")), 0);
  EXPECT_EQ(run("simulate --series " + path("s.csv") + " --policy fixed --window 0 --out " +
                path("sim")),
            2);
  EXPECT_EQ(run("simulate --series " + path("s.csv") + " --policy adaptive --out " + path("sim")),
            2);
  EXPECT_NE(err_.find("MissingForecaster"), std::string::npos) << err_;
}

TEST_F(Cli, MissingInputNamesThePath) {
  const std::string missing = path("nowhere/day_01.csv");
  EXPECT_EQ(run("ingest --input " + missing + " --out " + path("ing")), 2);
  EXPECT_NE(err_.find(missing), std::string::npos) << err_;
}

TEST_F(Cli, EvaluateIdenticalArrays) {
  write_text(path("a.csv"), "value\n3\n1\n4\n1\n5\n9\n");
  ASSERT_EQ(run("evaluate --actual " + path("a.csv") + " --predicted " + path("a.csv") +
                " --json " + path("m.json")),
            0)
      << err_;
  const auto j = nlohmann::json::parse(read_text(path("m.json")));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["smape"], 0.0);
  EXPECT_EQ(j[0]["r2"], 1.0);
  EXPECT_EQ(j[0]["rmse"], 0.0);
  EXPECT_EQ(j[0]["normalized_rmse"], 0.0);
  EXPECT_DOUBLE_EQ(j[0]["explained_variance"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j[0]["spearman"].get<double>(), 1.0);
  EXPECT_NE(out_.find("model,dataset,smape"), std::string::npos);
}

TEST_F(Cli, MalformedValuesExitTwoWithRow) {
  write_text(path("a.csv"), "1\n2\n3\n");
  write_text(path("f.csv"), "1\nnan\n3\n");
  EXPECT_EQ(run("evaluate --actual " + path("a.csv") + " --predicted " + path("f.csv")), 2);
  EXPECT_NE(err_.find("row 2"), std::string::npos) << err_;
}

TEST_F(Cli, DivergentTrainingExitsThree) {
  ASSERT_EQ(run("synth --pattern diurnal --seed 1 --out " + path("d.csv")), 0);
  EXPECT_EQ(run("train --series " + path("d.csv") +
                " --model transformer --context 24 --horizon 6 --epochs 3 --lr 1e200"
                " --max-windows 16 --out " + path("m.json")),
            3);
  EXPECT_NE(err_.find("NonFinite"), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --pattern bursty --seed 5 --out " + path("a.csv")), 0);
  ASSERT_EQ(run("synth --pattern bursty --seed 5 --out " + path("b.csv")), 0);
  EXPECT_EQ(read_text(path("a.csv")), read_text(path("b.csv")));
}

TEST_F(Cli, SimulateFixedAgainstOracle) {
  ASSERT_EQ(run("synth --pattern sporadic --seed 2 --out " + path("s.csv")), 0);
  ASSERT_EQ(run("simulate --series " + path("s.csv") + " --policy fixed --policy oracle --out " +
                path("sim")),
            0)
      << err_;
  const std::string table = read_text(path("sim/table.csv"));
  EXPECT_NE(table.find("synth:sporadic:2,OpenWhisk,10,10,100\n"), std::string::npos) << table;
  EXPECT_NE(table.find(",Oracle,1,"), std::string::npos) << table;
  EXPECT_EQ(table.substr(table.rfind(',') + 1), "1\n");
  EXPECT_TRUE(fs::exists(path("sim/plot.csv")));
}

TEST_F(Cli, IngestAndTrainRoundTrip) {
  ASSERT_EQ(run("synth --pattern periodic --period 45 --count 2 --format days --out " +
                path("days")),
            0)
      << err_;
  std::string inputs;
  for (int d = 1; d <= 14; ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "days/day_%02d.csv", d);
    inputs += " --input " + path(name);
  }
  ASSERT_EQ(run("ingest" + inputs + " --granularity hour --out " + path("ing")), 0) << err_;
  const auto manifest = nlohmann::json::parse(read_text(path("ing/manifest.json")));
  EXPECT_EQ(manifest["numFunctions"], 2);
  EXPECT_EQ(manifest["seriesLength"], 336);

  EXPECT_EQ(run("train --series " + path("ing/series.csv") + " --out " + path("m.json")), 2);
  EXPECT_NE(err_.find("--function"), std::string::npos) << err_;
  ASSERT_EQ(run("train --series " + path("ing/series.csv") + " --function synth:periodic:1" +
                " --context 24 --horizon 6 --epochs 1 --max-windows 8 --out " +
                path("m.json") + " --loss-csv " + path("loss.csv")),
            0)
      << err_;
  EXPECT_EQ(read_text(path("loss.csv")).rfind("epoch,loss\n", 0), 0u);
  ASSERT_EQ(run("forecast --checkpoint " + path("m.json") + " --series " +
                path("ing/series.csv") +
                " --function synth:periodic:1 --samples 20 --out " + path("f.json")),
            0)
      << err_;
  const auto f = nlohmann::json::parse(read_text(path("f.json")));
  EXPECT_EQ(f["functionId"], "synth:periodic:1");
}

} // namespace
