// Copyright 2026 The ETR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the etr executable end to end on small SBM bundles.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "etr/bundle_io.h"
#include "etr/model_io.h"
#include "json.hpp"

namespace etr {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("etr_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  Outcome run(const std::string& args) const {
    const std::string err_file = path("stderr.txt");
    const std::string cmd =
        std::string(ETR_CLI_PATH) + " " + args + " 2>" + err_file;
    Outcome r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
      r.out.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_file);
    return r;
  }

  void make_bundle(const std::string& name, int seed = 1) const {
    Outcome r = run("gen-sbm --out " + path(name) +
                " --nodes 120 --classes 3 --p-in 0.15 --p-out 0.01 --dim 8"
                " --seed " + std::to_string(seed));
    ASSERT_EQ(r.code, 0) << r.err;
  }

  void make_model(const std::string& data, const std::string& name) const {
    Outcome r = run("train --data " + path(data) + " --out " + path(name) +
                " --hidden 8 --epochs 20 --lr 0.1 --seed 3");
    ASSERT_EQ(r.code, 0) << r.err;
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  static void expect_error_json(const Outcome& r, int code) {
    EXPECT_EQ(r.code, code) << r.err;
    nlohmann::json j = nlohmann::json::parse(r.err, nullptr, false);
    ASSERT_FALSE(j.is_discarded()) << r.err;
    EXPECT_EQ(j["error"]["exit_code"], code);
    EXPECT_TRUE(j["error"]["message"].is_string());
    EXPECT_TRUE(j["error"]["kind"].is_string());
  }

  fs::path dir_;
};

TEST_F(CliTest, MissingDataPrintsUsage) {
  Outcome r = run("train --out " + path("m.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE((r.out + r.err).find("--data"), std::string::npos);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(CliTest, GenSbmIsDeterministic) {
  make_bundle("a", 5);
  make_bundle("b", 5);
  for (const char* f :
       {"meta.json", "edges.tsv", "features.csv", "labels.csv", "splits.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_EQ(load_bundle(path("a")).num_nodes(), 120);
}

TEST_F(CliTest, TrainIsDeterministicAndReportsJson) {
  make_bundle("g");
  Outcome a = run("train --data " + path("g") + " --out " + path("m1.json") +
              " --hidden 8 --epochs 20 --lr 0.1 --seed 3");
  Outcome b = run("train --data " + path("g") + " --out " + path("m2.json") +
              " --hidden 8 --epochs 20 --lr 0.1 --seed 3");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir_ / "m1.json"), slurp(dir_ / "m2.json"));
  nlohmann::json j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j.contains("test_f1"));
  EXPECT_TRUE(j.contains("train_f1"));
}

TEST_F(CliTest, TrainRejectsOutOfRangeLearningRate) {
  make_bundle("g");
  Outcome r = run("train --data " + path("g") + " --out " + path("m.json") +
              " --lr 0.9");
  expect_error_json(r, 1);
  EXPECT_FALSE(fs::exists(dir_ / "m.json"));
}

TEST_F(CliTest, UnlearnZeroStepKeepsWeights) {
  make_bundle("g");
  make_model("g", "m.json");
  GraphBundle g = load_bundle(path("g"));
  write("req.json", "{\"kind\":\"node\",\"ids\":[" +
                        std::to_string(g.train_nodes()[0]) + "," +
                        std::to_string(g.train_nodes()[5]) + "]}");
  Outcome r = run("unlearn --model " + path("m.json") + " --data " + path("g") +
              " --request " + path("req.json") + " --out " + path("u.json") +
              " --lambda 0 --m 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(
      weights_equal(load_model(path("u.json")), load_model(path("m.json"))));
  nlohmann::json rep = nlohmann::json::parse(r.out);
  EXPECT_EQ(rep["sizes"]["D_f"], 2);
}

TEST_F(CliTest, UnlearnReportsEditsAndIsIdempotent) {
  make_bundle("g");
  make_model("g", "m.json");
  GraphBundle g = load_bundle(path("g"));
  write("req.json", "{\"kind\":\"node\",\"ids\":[" +
                        std::to_string(g.train_nodes()[1]) + "]}");
  const std::string args = "unlearn --model " + path("m.json") + " --data " +
                           path("g") + " --request " + path("req.json") +
                           " --m 10 --report " + path("rep.json") + " --out ";
  Outcome a = run(args + path("u1.json"));
  Outcome b = run(args + path("u2.json"));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir_ / "u1.json"), slurp(dir_ / "u2.json"));
  nlohmann::json rep = nlohmann::json::parse(slurp(dir_ / "rep.json"));
  EXPECT_GT(rep["erase"]["branch1_count"].get<int>(), 0);
}

TEST_F(CliTest, UnlearnErrors) {
  make_bundle("g");
  make_model("g", "m.json");
  write("empty.json", "");
  expect_error_json(run("unlearn --model " + path("m.json") + " --data " +
                        path("g") + " --request " + path("empty.json") +
                        " --out " + path("u.json")),
                    1);

  std::string text = slurp(dir_ / "m.json");
  nlohmann::json m = nlohmann::json::parse(text);
  m["grad_snapshot"] = nullptr;
  write("bare.json", m.dump());
  GraphBundle g = load_bundle(path("g"));
  write("req.json", "{\"kind\":\"node\",\"ids\":[" +
                        std::to_string(g.train_nodes()[0]) + "]}");
  Outcome r = run("unlearn --model " + path("bare.json") + " --data " + path("g") +
              " --request " + path("req.json") + " --out " + path("u.json"));
  expect_error_json(r, 4);
  EXPECT_NE(r.err.find("retrain"), std::string::npos);

  write("test.json", "{\"kind\":\"node\",\"ids\":[" +
                         std::to_string(g.test_nodes()[0]) + "]}");
  expect_error_json(run("unlearn --model " + path("m.json") + " --data " +
                        path("g") + " --request " + path("test.json") +
                        " --out " + path("u.json")),
                    1);

  expect_error_json(run("unlearn --model " + path("m.json") + " --data " +
                        path("g") + " --request " + path("req.json") +
                        " --out " + path("m.json")),
                    1);
  expect_error_json(run("unlearn --model " + path("missing.json") +
                        " --data " + path("g") + " --request " +
                        path("req.json") + " --out " + path("u.json")),
                    3);
}

TEST_F(CliTest, BundleErrorsNameFileAndLine) {
  make_bundle("g");
  std::string edges = slurp(dir_ / "g" / "edges.tsv");
  edges.replace(0, edges.find('\n'), "3\t3");
  std::ofstream(dir_ / "g" / "edges.tsv", std::ios::trunc) << edges;
  Outcome r = run("train --data " + path("g") + " --out " + path("m.json"));
  expect_error_json(r, 1);
  EXPECT_NE(r.err.find("edges.tsv:1"), std::string::npos) << r.err;
  expect_error_json(
      run("train --data " + path("nothing") + " --out " + path("m.json")), 3);
}

TEST_F(CliTest, EvalIdenticalModelsHaveZeroDistance) {
  make_bundle("g");
  make_model("g", "m.json");
  Outcome r = run("eval --data " + path("g") + " --model " + path("m.json") +
              " --retrained " + path("m.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "ratio,seed,method,f1,rms_dist,ad,rd,time_s");
  bool saw = false;
  while (std::getline(lines, row)) {
    if (row.find(",original,") != std::string::npos ||
        row.find(",retrain,") != std::string::npos) {
      std::vector<std::string> cols;
      std::stringstream ss(row);
      for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
      ASSERT_GE(cols.size(), 5u) << row;
      EXPECT_EQ(std::stod(cols[4]), 0.0) << row;
      saw = true;
    }
  }
  EXPECT_TRUE(saw) << r.out;
}

TEST_F(CliTest, EvalRunsUnlearningForARequest) {
  make_bundle("g");
  make_model("g", "m.json");
  GraphBundle g = load_bundle(path("g"));
  write("req.json", "{\"kind\":\"node\",\"ids\":[" +
                        std::to_string(g.train_nodes()[2]) + "]}");
  Outcome rt = run("retrain --data " + path("g") + " --request " +
               path("req.json") + " --out " + path("r.json") +
               " --hidden 8 --epochs 20 --lr 0.1 --seed 3");
  ASSERT_EQ(rt.code, 0) << rt.err;
  Outcome r = run("eval --data " + path("g") + " --model " + path("m.json") +
              " --request " + path("req.json") + " --retrained " +
              path("r.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",unlearned,"), std::string::npos) << r.out;
}

TEST_F(CliTest, AttackWritesCsvAndSummary) {
  make_bundle("g");
  Outcome r = run("attack --data " + path("g") +
              " --ratios 0,0.2 --hidden 8 --epochs 20 --lr 0.1 --summary " +
              path("s.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  int count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  EXPECT_EQ(count, 1 + 2 * 3);
  nlohmann::json s = nlohmann::json::parse(slurp(dir_ / "s.json"));
  EXPECT_EQ(s["rows"].size(), 2u);
  expect_error_json(
      run("attack --data " + path("g") + " --ratios 0,2"), 1);
}

TEST_F(CliTest, AuditNeedsRetrainedModel) {
  make_bundle("g");
  make_model("g", "m.json");
  GraphBundle g = load_bundle(path("g"));
  write("req.json", "{\"kind\":\"node\",\"ids\":[" +
                        std::to_string(g.train_nodes()[0]) + "]}");
  const std::string base = "audit --model " + path("m.json") + " --data " +
                           path("g") + " --request " + path("req.json");
  expect_error_json(run(base), 4);
  Outcome rt = run("retrain --data " + path("g") + " --request " +
               path("req.json") + " --out " + path("r.json") +
               " --hidden 8 --epochs 20 --lr 0.1 --seed 3");
  ASSERT_EQ(rt.code, 0) << rt.err;
  Outcome r = run(base + " --retrained " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("Q"));
  EXPECT_TRUE(j.contains("rhs"));
}

}  // namespace
}  // namespace etr
