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

// dprecal command-line driver.
//
//   dprecal run --config cfg.json [--output stem] [--set problem.dimension=10]
//   dprecal sweep --config cfg.json --epsilons 1,5,10 --seeds 10
//   dprecal accountant --alpha A --beta B --lipschitz L --sigma1 S
//                      --attenuation R --lci XI --delta D
//   dprecal validate-stepsize --config cfg.json [--alpha a1,a2,...]
//   dprecal gen-data --agents 8 --dimension 20 --output data.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dprecal/dprecal.hpp"

namespace {

using dprecal::Json;

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> agents;
  std::optional<std::string> topology;
  std::optional<double> epsilon;
  std::optional<double> sigma1_sq;
  std::optional<std::uint64_t> seed_relay;
  std::optional<std::uint64_t> seed_noise;
  std::optional<std::uint64_t> seed_data;
  std::optional<std::string> output;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", path, "JSON run configuration")->required();
    app->add_option("--set", overrides, "override a config field, e.g. privacy.delta=1e-4");
    app->add_option("--iterations", iterations, "iteration budget K");
    app->add_option("--agents", agents, "number of agents");
    app->add_option("--topology", topology, "complete|ring|path|erdos-renyi:<p>|file:<path>");
    app->add_option("--epsilon", epsilon, "enable privacy with this target epsilon");
    app->add_option("--sigma1-sq", sigma1_sq, "enable privacy with this initial noise variance");
    app->add_option("--seed-relay", seed_relay);
    app->add_option("--seed-noise", seed_noise);
    app->add_option("--seed-data", seed_data);
    app->add_option("-o,--output", output, "output stem for result files");
  }

  dprecal::RunConfig load() const {
    Json doc = dprecal::read_config_document(path);
    if (!doc.is_object()) throw dprecal::ConfigError("/", "expected an object");
    auto set = [&](const char* pointer, Json v) { doc[Json::json_pointer(pointer)] = std::move(v); };
    if (iterations) set("/iterations", *iterations);
    if (agents) set("/agents", *agents);
    if (topology) set("/topology", *topology);
    if (epsilon || sigma1_sq) {
      set("/privacy/enabled", true);
      Json& pr = doc["privacy"];
      pr.erase("target_epsilon");
      pr.erase("sigma1_sq");
      if (epsilon) pr["target_epsilon"] = *epsilon;
      if (sigma1_sq) pr["sigma1_sq"] = *sigma1_sq;
    }
    if (seed_relay) set("/seeds/relay", *seed_relay);
    if (seed_noise) set("/seeds/noise", *seed_noise);
    if (seed_data) set("/seeds/data", *seed_data);
    if (output) set("/output", *output);
    for (const auto& o : overrides) dprecal::apply_override(doc, o);
    return dprecal::config_from_json(doc);
  }
};

void print_labeled(const char* label, double value) {
  std::printf("%-14s %.17g\n", label, value);
}

int cmd_run(const ConfigFlags& flags) {
  const dprecal::RunConfig cfg = flags.load();
  const dprecal::ResultBundle b = dprecal::run_experiment(cfg);
  if (!cfg.output.empty()) dprecal::emit_results(b, cfg.output);
  std::cout << dprecal::summary_to_json(b.summary).dump(2) << "\n";
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::vector<double>& epsilons,
              std::size_t seeds, bool no_baseline, std::size_t threads) {
  dprecal::SweepSpec spec;
  spec.base = flags.load();
  spec.epsilons = epsilons;
  spec.seeds = seeds;
  spec.include_noiseless = !no_baseline;
  spec.threads = threads;
  const Json out = dprecal::sweep_to_json(dprecal::run_sweep(spec));
  if (!spec.base.output.empty()) {
    std::ofstream f(spec.base.output);
    if (!f) throw dprecal::Error("cannot open '" + spec.base.output + "' for writing");
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct AccountantFlags {
  double alpha = 0.0, beta = 0.0, lipschitz = 0.0;
  std::optional<double> sigma1, sigma1_sq;
  double attenuation = 0.0;
  std::size_t lci = 0;
  double delta = 1e-3;
};

int cmd_accountant(const AccountantFlags& f) {
  const double variance = f.sigma1 ? *f.sigma1 * *f.sigma1 : *f.sigma1_sq;
  const dprecal::NoiseSchedule schedule(variance, f.attenuation);
  const dprecal::PrivacyBudget b = dprecal::budget_for(
      dprecal::AccountantParams{f.alpha, f.beta, f.lipschitz, f.delta}, schedule, f.lci);
  print_labeled("sensitivity:", b.sensitivity);
  print_labeled("rho1:", b.rho_first);
  print_labeled("zcdp_sum:", b.zcdp);
  print_labeled("epsilon:", b.epsilon);
  print_labeled("delta:", b.delta);
  return 0;
}

int cmd_validate(const ConfigFlags& flags, const std::vector<double>& alpha,
                 const std::string& mode) {
  const dprecal::RunConfig cfg = flags.load();
  const dprecal::ProblemInstance p = dprecal::problem_for(cfg);
  const dprecal::StepsizeSet s = alpha.empty() ? dprecal::stepsizes_for(cfg, p)
                                               : dprecal::StepsizeSet::explicit_values(alpha);
  bool ok = true;
  for (const auto check : {dprecal::StepsizeCheck::kSimple, dprecal::StepsizeCheck::kMatrix}) {
    const bool simple = check == dprecal::StepsizeCheck::kSimple;
    if ((simple && mode == "matrix") || (!simple && mode == "simple")) continue;
    const dprecal::StepsizeReport r = dprecal::validate_stepsizes(s, p, check);
    std::printf("%s check: %s\n", simple ? "simple" : "matrix", r.ok ? "ok" : "FAILED");
    if (r.smallest_eigenvalue) print_labeled("  min eigenvalue:", *r.smallest_eigenvalue);
    if (!r.ok) std::printf("  %s\n", r.message.c_str());
    ok = ok && r.ok;
  }
  return ok ? 0 : 2;
}

struct GenFlags {
  std::size_t agents = 8;
  long dimension = 20;
  long samples = 30;
  double noise = 0.01;
  double sparsity = 0.5;
  std::uint64_t seed = 3;
  std::string loss = "least-squares";
  std::string output;
  std::string planted;
};

int cmd_gen(const GenFlags& g) {
  dprecal::SyntheticSpec spec;
  spec.agents = g.agents;
  spec.dimension = g.dimension;
  spec.samples_per_agent = g.samples;
  spec.noise_level = g.noise;
  spec.sparsity = g.sparsity;
  spec.seed = g.seed;
  spec.loss = dprecal::parse_loss_kind(g.loss);
  spec.regularizer = dprecal::Regularizer::none();
  const dprecal::SyntheticInstance inst = dprecal::gen_synthetic(spec);
  std::ofstream out(g.output);
  if (!out) throw dprecal::Error("cannot open '" + g.output + "' for writing");
  out.precision(17);
  for (long j = 0; j < g.dimension; ++j) out << "x" << j + 1 << ",";
  out << "label\n";
  for (std::size_t i = 0; i < inst.problem.agents(); ++i) {
    const auto& loss = inst.problem.loss(i);
    for (Eigen::Index r = 0; r < loss.data().rows(); ++r) {
      for (Eigen::Index c = 0; c < loss.data().cols(); ++c) out << loss.data()(r, c) << ",";
      out << loss.targets()(r) << "\n";
    }
  }
  if (!out) throw dprecal::Error("write to '" + g.output + "' failed");
  if (!g.planted.empty()) {
    std::ofstream pf(g.planted);
    pf.precision(17);
    for (Eigen::Index j = 0; j < inst.planted.size(); ++j) pf << inst.planted(j) << "\n";
    if (!pf) throw dprecal::Error("write to '" + g.planted + "' failed");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private relay-based decentralized optimization simulator"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment and emit its result bundle");
  run_flags.attach(run);

  ConfigFlags sweep_flags;
  std::vector<double> epsilons;
  std::size_t seeds = 10, threads = 0;
  bool no_baseline = false;
  auto* sweep = app.add_subcommand("sweep", "median final error over epsilons x seeds");
  sweep_flags.attach(sweep);
  sweep->add_option("--epsilons", epsilons, "target epsilons")->delimiter(',')->required();
  sweep->add_option("--seeds", seeds, "seed offsets per epsilon")->check(CLI::PositiveNumber);
  sweep->add_option("--threads", threads, "worker threads (0 = all cores)");
  sweep->add_flag("--no-baseline", no_baseline, "skip the noiseless arm");

  AccountantFlags acc;
  auto* accountant = app.add_subcommand("accountant", "print the privacy budget of a schedule");
  accountant->add_option("--alpha", acc.alpha, "largest primal stepsize")->required();
  accountant->add_option("--beta", acc.beta, "coupling stepsize")->required();
  accountant->add_option("--lipschitz", acc.lipschitz, "largest local Lipschitz constant")
      ->required();
  auto* s1 = accountant->add_option("--sigma1", acc.sigma1, "initial noise standard deviation");
  auto* s1sq = accountant->add_option("--sigma1-sq", acc.sigma1_sq, "initial noise variance");
  s1->excludes(s1sq);
  accountant->add_option("--attenuation", acc.attenuation, "noise attenuation R > 1")
      ->required();
  accountant->add_option("--lci", acc.lci, "local communication involvement")->required();
  accountant->add_option("--delta", acc.delta, "target delta");

  ConfigFlags val_flags;
  std::vector<double> alpha;
  std::string mode = "both";
  auto* validate = app.add_subcommand("validate-stepsize", "check stepsizes for a configured problem");
  val_flags.attach(validate);
  validate->add_option("--alpha", alpha, "explicit per-agent stepsizes")->delimiter(',');
  validate->add_option("--mode", mode)->check(CLI::IsMember({"simple", "matrix", "both"}));

  GenFlags gen;
  auto* gen_data = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  gen_data->add_option("--agents", gen.agents)->check(CLI::PositiveNumber);
  gen_data->add_option("--dimension", gen.dimension)->check(CLI::PositiveNumber);
  gen_data->add_option("--samples", gen.samples, "samples per agent")->check(CLI::PositiveNumber);
  gen_data->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
  gen_data->add_option("--sparsity", gen.sparsity)->check(CLI::Range(0.0, 1.0));
  gen_data->add_option("--seed", gen.seed);
  gen_data->add_option("--loss", gen.loss)->check(CLI::IsMember({"least-squares", "logistic"}));
  gen_data->add_option("-o,--output", gen.output)->required();
  gen_data->add_option("--planted", gen.planted, "also write the planted vector here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, epsilons, seeds, no_baseline, threads);
    if (*accountant) {
      if (!acc.sigma1 && !acc.sigma1_sq) {
        std::cerr << "error: one of --sigma1 or --sigma1-sq is required\n";
        return 1;
      }
      return cmd_accountant(acc);
    }
    if (*validate) return cmd_validate(val_flags, alpha, mode);
    if (*gen_data) return cmd_gen(gen);
  } catch (const dprecal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
