// Copyright 2026 The dprecal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "dprecal/dprecal.hpp"

namespace dprecal {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dprecal_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_path(const std::string& text) {
  try {
    config_from_json(parse_config_text(text));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(Config, MinimalFillsDefaults) {
  TempDir dir;
  write(dir.file("c.json"), R"({"iterations": 100})");
  const RunConfig c = load_config(dir.file("c.json"));
  EXPECT_EQ(c.iterations, 100u);
  EXPECT_EQ(c.start_agent, 1u);
  EXPECT_EQ(c.tail_fraction, 0.5);
  EXPECT_EQ(c.agents, 8u);
  EXPECT_EQ(c.topology, "ring");
  EXPECT_FALSE(c.privacy.enabled);
  EXPECT_EQ(c.stepsize.fraction, 0.9);
}

TEST(Config, FieldPathErrors) {
  EXPECT_EQ(config_error_path(R"({"iterations": -5})"), "/iterations");
  EXPECT_EQ(config_error_path(R"({})"), "/iterations");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "extra": 0})"), "/extra");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "problem": {"dimensoin": 3}})"),
            "/problem/dimensoin");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "stepsize": {"fraction": 1.5}})"),
            "/stepsize/fraction");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "start_agent": 9})"), "/start_agent");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "problem": {"loss": "poisson"}})"),
            "/problem/loss");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "topology": "file:/no/such/graph"})"),
            "/topology");
  EXPECT_EQ(config_error_path(R"({"iterations": 1, "privacy": {"enabled": true, "attenuation": 1.0, "sigma1_sq": 1}})"),
            "/privacy/attenuation");
}

TEST(Config, SigmaAndTargetConflict) {
  EXPECT_EQ(config_error_path(
                R"({"iterations": 1, "privacy": {"sigma1_sq": 1.0, "target_epsilon": 2.0}})"),
            "/privacy");
}

TEST(Config, ParseErrorReportsLine) {
  try {
    parse_config_text("{\n  \"iterations\": 3,\n  \"agents\": ,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "line 3");
  }
}

TEST(Config, EchoRoundTrips) {
  const RunConfig c = config_from_json(parse_config_text(
      R"({"iterations": 9, "privacy": {"target_epsilon": 3}, "stepsize": {"mode": "explicit", "values": [0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1]}})"));
  const Json echo = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(echo)), echo);
}

TEST(Config, OverridesPatchBeforeValidation) {
  Json doc = parse_config_text(R"({"iterations": 9})");
  apply_override(doc, "problem.dimension=4");
  apply_override(doc, "/topology=complete");
  const RunConfig c = config_from_json(doc);
  EXPECT_EQ(c.problem.dimension, 4);
  EXPECT_EQ(c.topology, "complete");
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
}

TEST(Synthetic, NoiselessRecoveryWithoutRegularizer) {
  SyntheticSpec spec;
  spec.agents = 4;
  spec.dimension = 10;
  spec.samples_per_agent = 6;
  spec.noise_level = 0.0;
  spec.regularizer = Regularizer::none();
  const auto inst = gen_synthetic(spec);
  EXPECT_LE((reference_solution(inst.problem).x - inst.planted).norm(), 1e-8);
}

TEST(Synthetic, SameSeedSameInstance) {
  const auto a = gen_synthetic(SyntheticSpec{});
  const auto b = gen_synthetic(SyntheticSpec{});
  EXPECT_EQ(a.planted, b.planted);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.problem.loss(i).data(), b.problem.loss(i).data());
    EXPECT_EQ(a.problem.loss(i).targets(), b.problem.loss(i).targets());
  }
  SyntheticSpec other;
  other.seed = 4;
  EXPECT_NE(gen_synthetic(other).planted, a.planted);
}

TEST(Synthetic, SparsityControlsSupport) {
  SyntheticSpec spec;
  spec.sparsity = 1.0;
  EXPECT_EQ((gen_synthetic(spec).planted.array() != 0.0).count(), 20);
  spec.sparsity = 0.25;
  EXPECT_EQ((gen_synthetic(spec).planted.array() != 0.0).count(), 5);
}

TEST(Dataset, ShardSizes) {
  EXPECT_EQ(shard_sizes(10, 3), (std::vector<Eigen::Index>{4, 3, 3}));
  const auto s = shard_sizes(103, 7);
  Eigen::Index total = 0;
  for (auto v : s) total += v;
  EXPECT_EQ(total, 103);
  EXPECT_THROW(shard_sizes(2, 3), ValidationError);
}

TEST(Dataset, NormalizesAndGuardsConstantColumns) {
  TempDir dir;
  write(dir.file("d.csv"), "a,b,c,label\n1,5,2,1\n3,5,4,-1\n2,5,6,1\n");
  DatasetOptions o;
  o.loss = LossKind::kLogistic;
  o.sample_average = false;
  const auto p = load_csv_dataset(dir.file("d.csv"), 1, o);
  Matrix want(3, 3);
  want << 0, 0, 0, 1, 0, 0.5, 0.5, 0, 1;
  EXPECT_EQ(p.loss(0).data(), want);
  EXPECT_EQ(p.loss(0).targets(), Eigen::Vector3d(1, 0, 1));
}

TEST(Dataset, RejectsBadFiles) {
  TempDir dir;
  write(dir.file("ragged.csv"), "1,2,3\n4,5\n");
  EXPECT_THROW(load_csv_dataset(dir.file("ragged.csv"), 1, {}), ValidationError);
  write(dir.file("text.csv"), "1,2,3\n4,x,6\n");
  EXPECT_THROW(load_csv_dataset(dir.file("text.csv"), 1, {}), ValidationError);
  write(dir.file("few.csv"), "1,2\n3,4\n");
  EXPECT_THROW(load_csv_dataset(dir.file("few.csv"), 3, {}), ValidationError);
}

RunConfig small_config() {
  return config_from_json(parse_config_text(
      R"({"iterations": 600, "agents": 4, "topology": "complete",
          "problem": {"dimension": 5, "samples_per_agent": 12}})"));
}

TEST(Experiment, NoPrivacyMeansNoNoise) {
  const RunConfig c = small_config();
  const auto b = run_experiment(c);
  EXPECT_EQ(b.summary.realized_epsilon, 0.0);
  EXPECT_FALSE(b.summary.private_run);
  const auto e = prepare_experiment(c);
  RunOptions o;
  o.iterations = c.iterations;
  std::size_t checked = 0;
  run(e.problem, e.steps, e.graph, std::nullopt, o, e.reference, [&](const RunState& st) {
    ASSERT_EQ(st.u_published, st.u);
    ++checked;
  });
  EXPECT_EQ(checked, c.iterations);
}

TEST(Experiment, SummaryFollowsRecords) {
  RunConfig c = small_config();
  c.privacy.enabled = true;
  c.privacy.target_epsilon = 5.0;
  const auto b = run_experiment(c);
  const auto& last = b.records.back();
  EXPECT_EQ(b.summary.final_relative_error, last.relative_error);
  EXPECT_EQ(b.summary.final_consensus, last.consensus);
  EXPECT_EQ(b.summary.lci, last.lci);
  EXPECT_EQ(b.summary.communications, last.communications);
  EXPECT_EQ(b.summary.realized_epsilon, last.epsilon);
  EXPECT_EQ(b.summary.communications, c.iterations);
  EXPECT_EQ(b.summary.planned_lci, 150u);
  EXPECT_NEAR(b.summary.prospective_epsilon, 5.0, 5e-6);
  if (b.summary.lci <= b.summary.planned_lci) {
    EXPECT_LE(b.summary.realized_epsilon, b.summary.prospective_epsilon);
  } else {
    EXPECT_GT(b.summary.realized_epsilon, b.summary.prospective_epsilon);
  }
}

TEST(Experiment, InvalidStepsizesNeverReachEngine) {
  RunConfig c = small_config();
  c.stepsize.mode = "explicit";
  c.stepsize.values = {10, 10, 10, 10};
  EXPECT_THROW(run_experiment(c), ValidationError);
}

TEST(Results, EmitThenLoadRoundTrips) {
  TempDir dir;
  RunConfig c = small_config();
  c.privacy.enabled = true;
  c.privacy.sigma1_sq = 0.5;
  const auto b = run_experiment(c);
  emit_results(b, dir.file("out/run"));
  EXPECT_EQ(load_results(dir.file("out/run")), b);
  std::ifstream in(dir.file("out/run") + ".records.jsonl");
  std::string line;
  std::size_t lines = 0;
  long prev = -1;
  while (std::getline(in, line)) {
    const long k = Json::parse(line).at("k").get<long>();
    EXPECT_GT(k, prev);
    prev = k;
    ++lines;
  }
  EXPECT_EQ(lines, b.records.size());
}

TEST(Results, EmptyTrajectoryWritesSummaryOnly) {
  TempDir dir;
  ResultBundle b;
  b.config = config_to_json(small_config());
  emit_results(b, dir.file("empty"));
  EXPECT_TRUE(fs::exists(dir.file("empty.summary.json")));
  EXPECT_FALSE(fs::exists(dir.file("empty.records.jsonl")));
  EXPECT_EQ(load_results(dir.file("empty")), b);
}

TEST(Results, IdenticalRunsAreByteIdentical) {
  TempDir dir;
  RunConfig c = small_config();
  c.privacy.enabled = true;
  c.privacy.target_epsilon = 2.0;
  emit_results(run_experiment(c), dir.file("a"));
  emit_results(run_experiment(c), dir.file("b"));
  EXPECT_EQ(slurp(dir.file("a.summary.json")), slurp(dir.file("b.summary.json")));
  EXPECT_EQ(slurp(dir.file("a.records.jsonl")), slurp(dir.file("b.records.jsonl")));
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  SweepSpec spec;
  spec.base = small_config();
  spec.epsilons = {1.0, 10.0};
  spec.seeds = 3;
  spec.threads = 1;
  const auto serial = run_sweep(spec);
  spec.threads = 4;
  const auto parallel = run_sweep(spec);
  EXPECT_EQ(sweep_to_json(serial), sweep_to_json(parallel));
  ASSERT_EQ(serial.arms.size(), 3u);
  EXPECT_FALSE(serial.arms[0].target_epsilon.has_value());
  EXPECT_EQ(serial.arms[0].realized_epsilons, std::vector<double>(3, 0.0));
}

TEST(Sweep, Median) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

struct Command {
  int status;
  std::string out;
};

Command run_cli(const std::string& args) {
  const std::string cmd = std::string(DPRECAL_CLI_PATH) + " " + args + " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe.release());
  return {WEXITSTATUS(status), out};
}

TEST(Cli, AccountantPrintsLabeledValues) {
  const auto r = run_cli("accountant --alpha 0.1 --beta 0.0555555555555556 --lipschitz 2 "
                         "--sigma1 1 --attenuation 2 --lci 1 --delta 0.001");
  ASSERT_EQ(r.status, 0) << r.out;
  const double rho = 8 * 0.01 * std::pow(1.0 / 18.0, 2) * 4;
  EXPECT_NE(r.out.find("sensitivity:"), std::string::npos);
  std::istringstream in(r.out);
  std::string label;
  double value = 0;
  while (in >> label >> value) {
    if (label == "rho1:") EXPECT_NEAR(value, rho, 1e-12);
    if (label == "epsilon:") EXPECT_NEAR(value, rho + 2 * std::sqrt(rho * std::log(1000.0)), 1e-12);
  }
}

TEST(Cli, RunWritesBundleAndFlagOverridesFile) {
  TempDir dir;
  write(dir.file("c.json"), R"({"iterations": 50, "agents": 3, "problem": {"dimension": 4}})");
  const auto r = run_cli("run -c " + dir.file("c.json") + " --iterations 70 -o " + dir.file("r"));
  ASSERT_EQ(r.status, 0) << r.out;
  const auto b = load_results(dir.file("r"));
  EXPECT_EQ(b.summary.iterations, 70u);
  EXPECT_EQ(b.records.back().k, 70u);
}

TEST(Cli, ErrorsExitNonzeroWithDiagnostic) {
  TempDir dir;
  write(dir.file("c.json"), R"({"iterations": -1})");
  const auto r = run_cli("run -c " + dir.file("c.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("/iterations"), std::string::npos);
  EXPECT_NE(run_cli("frobnicate").status, 0);
}

TEST(Cli, ValidateStepsizeReportsEigenvalue) {
  TempDir dir;
  write(dir.file("c.json"), R"({"iterations": 1, "agents": 2, "problem": {"dimension": 2}})");
  const auto ok = run_cli("validate-stepsize -c " + dir.file("c.json"));
  EXPECT_EQ(ok.status, 0) << ok.out;
  const auto bad = run_cli("validate-stepsize -c " + dir.file("c.json") + " --alpha 50,50");
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.out.find("min eigenvalue"), std::string::npos);
}

TEST(Cli, GenDataFeedsCsvRun) {
  TempDir dir;
  const auto g = run_cli("gen-data --agents 3 --dimension 4 --samples 5 -o " + dir.file("d.csv"));
  ASSERT_EQ(g.status, 0) << g.out;
  write(dir.file("c.json"), R"({"iterations": 30, "agents": 3, "problem": {"source": "csv", "path": ")" +
                                dir.file("d.csv") + R"("}})");
  const auto r = run_cli("run -c " + dir.file("c.json"));
  EXPECT_EQ(r.status, 0) << r.out;
}

}  // namespace
}  // namespace dprecal
