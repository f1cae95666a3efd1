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

// Experiment orchestration: config -> graph, problem, stepsizes, reference
// solution, noise calibration -> run -> ResultBundle. Sweeps repeat one
// prepared instance over privacy budgets and seeds.

#ifndef DPRECAL_EXPERIMENT_HPP_
#define DPRECAL_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dprecal/config.hpp"
#include "dprecal/dataset.hpp"
#include "dprecal/engine.hpp"
#include "dprecal/metrics.hpp"
#include "dprecal/objective.hpp"
#include "dprecal/privacy.hpp"
#include "dprecal/results.hpp"
#include "dprecal/synthetic.hpp"
#include "dprecal/topology.hpp"

namespace dprecal {

// Matrix-mode stepsize checks are skipped above this many rows.
inline constexpr Eigen::Index kMatrixCheckLimit = 2000;

struct PreparedExperiment {
  Graph graph;
  ProblemInstance problem;
  StepsizeSet steps;
  ActivationProbabilities activation;
  ReferenceSolution reference;
};

inline Graph graph_for(const RunConfig& cfg) {
  if (cfg.topology.rfind("file:", 0) == 0) {
    const std::string path = cfg.topology.substr(5);
    std::ifstream in(path);
    if (!in) throw ConfigError("/topology", "cannot open graph file '" + path + "'");
    Graph g = read_graph(in);
    if (g.size() != cfg.agents) {
      throw ConfigError("/topology", "graph file has " + std::to_string(g.size()) +
                                         " agents but config has " +
                                         std::to_string(cfg.agents));
    }
    return g;
  }
  std::mt19937_64 rng(cfg.seeds.data ^ 0x5bd1e995ULL);
  return graph_from_spec(cfg.topology, cfg.agents, rng);
}

inline ProblemInstance problem_for(const RunConfig& cfg) {
  const auto& pc = cfg.problem;
  if (pc.source == "csv") {
    DatasetOptions o;
    o.loss = pc.loss;
    o.regularizer = pc.regularizer;
    o.prox_weight = pc.prox_weight;
    o.sample_average = pc.sample_average;
    return load_csv_dataset(pc.path, cfg.agents, o);
  }
  SyntheticSpec spec;
  spec.agents = cfg.agents;
  spec.dimension = pc.dimension;
  spec.samples_per_agent = pc.samples_per_agent;
  spec.noise_level = pc.noise_level;
  spec.sparsity = pc.sparsity;
  spec.sample_average = pc.sample_average;
  spec.loss = pc.loss;
  spec.regularizer = pc.regularizer;
  spec.prox_weight = pc.prox_weight;
  spec.seed = cfg.seeds.data;
  return gen_synthetic(spec).problem;
}

inline StepsizeSet stepsizes_for(const RunConfig& cfg, const ProblemInstance& p) {
  if (cfg.stepsize.mode == "explicit") return StepsizeSet::explicit_values(cfg.stepsize.values);
  return StepsizeSet::local_bound(p, cfg.stepsize.fraction);
}

// Throws ValidationError when the stepsizes fail either check.
inline void require_valid_stepsizes(const StepsizeSet& s, const ProblemInstance& p) {
  const StepsizeReport simple = validate_stepsizes(s, p, StepsizeCheck::kSimple);
  if (!simple.ok) throw ValidationError("stepsize check failed: " + simple.message);
  const Eigen::Index rows =
      p.dimension() * static_cast<Eigen::Index>(p.agents() + 1);
  if (rows <= kMatrixCheckLimit) {
    const StepsizeReport matrix = validate_stepsizes(s, p, StepsizeCheck::kMatrix);
    if (!matrix.ok) throw ValidationError("stepsize check failed: " + matrix.message);
  }
}

// Everything that depends only on the data seed and problem fields.
inline PreparedExperiment prepare_experiment(const RunConfig& cfg) {
  Graph graph = graph_for(cfg);
  ProblemInstance problem = problem_for(cfg);
  StepsizeSet steps = stepsizes_for(cfg, problem);
  require_valid_stepsizes(steps, problem);
  ActivationProbabilities g = activation_probabilities(graph);
  ReferenceSolution ref = reference_solution(problem);
  return PreparedExperiment{std::move(graph), std::move(problem), std::move(steps),
                            std::move(g), std::move(ref)};
}

inline AccountantParams accountant_for(const RunConfig& cfg, const PreparedExperiment& e) {
  return AccountantParams{e.steps.max_alpha(), e.steps.beta, e.problem.max_lipschitz(),
                          cfg.privacy.delta};
}

// Planned LCI: the configured value, else ceil(K * max_i g_i), at least 1.
inline std::size_t planned_lci_for(const RunConfig& cfg, const PreparedExperiment& e) {
  if (cfg.privacy.planned_lci) return *cfg.privacy.planned_lci;
  const double planned =
      std::ceil(static_cast<double>(cfg.iterations) * e.activation.max() - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(planned));
}

// Runs `cfg` against an already prepared instance. Only the privacy block,
// seeds, start agent, iteration count and recording fields of `cfg` are
// read here.
inline ResultBundle run_prepared(const RunConfig& cfg, const PreparedExperiment& e) {
  RunSummary sum;
  std::optional<PrivacySetup> privacy;
  if (cfg.privacy.enabled) {
    const AccountantParams acc = accountant_for(cfg, e);
    sum.planned_lci = planned_lci_for(cfg, e);
    sum.sigma1_sq = cfg.privacy.sigma1_sq
                        ? *cfg.privacy.sigma1_sq
                        : calibrate_sigma(*cfg.privacy.target_epsilon, acc.delta, acc.alpha,
                                          acc.beta, acc.lipschitz, cfg.privacy.attenuation,
                                          sum.planned_lci);
    const NoiseSchedule schedule(sum.sigma1_sq, cfg.privacy.attenuation);
    sum.prospective_epsilon = budget_for(acc, schedule, sum.planned_lci).epsilon;
    privacy = PrivacySetup{schedule, acc};
  }

  RunOptions opts;
  opts.iterations = cfg.iterations;
  opts.start = cfg.start_agent - 1;
  opts.seeds = Seeds{cfg.seeds.relay, cfg.seeds.noise};
  opts.record_stride = cfg.record_stride;
  const Trajectory traj =
      run(e.problem, e.steps, e.graph, privacy, opts, e.reference);

  sum.iterations = cfg.iterations;
  sum.agents = e.problem.agents();
  sum.dimension = static_cast<std::size_t>(e.problem.dimension());
  sum.final_relative_error = traj.final_relative_error;
  sum.final_s_norm = traj.records.back().s_norm;
  sum.final_consensus = traj.final_consensus;
  sum.communications = traj.communications;
  sum.lci = traj.lci;
  sum.activations = traj.activations;
  sum.private_run = privacy.has_value();
  if (traj.budget) {
    sum.realized_epsilon = traj.budget->epsilon;
    sum.realized_zcdp = traj.budget->zcdp;
  }
  sum.reference_iterations = e.reference.iterations;
  sum.x_final.assign(traj.x_final.data(), traj.x_final.data() + traj.x_final.size());

  // Rate fit over records on the regular stride, k >= 1, above the floor.
  std::vector<double> errors;
  for (const auto& r : traj.records) {
    if (r.k >= 1 && r.k % cfg.record_stride == 0) errors.push_back(r.relative_error);
  }
  const std::vector<double> tail = above_floor(errors);
  if (static_cast<double>(tail.size()) * cfg.tail_fraction >= 10.0) {
    const RateFit fit = fit_linear_rate(tail, cfg.tail_fraction);
    sum.rate_slope = fit.slope / static_cast<double>(cfg.record_stride);
    sum.rate_r_squared = fit.r_squared;
  }

  return ResultBundle{config_to_json(cfg), std::move(sum), traj.records};
}

inline ResultBundle run_experiment(const RunConfig& cfg) {
  return run_prepared(cfg, prepare_experiment(cfg));
}

struct SweepSpec {
  RunConfig base;
  std::vector<double> epsilons;   // target epsilon per private arm
  std::size_t seeds = 10;         // seed offsets 0..seeds-1
  bool include_noiseless = true;
  std::size_t threads = 0;        // 0 = hardware concurrency
};

struct SweepArm {
  std::optional<double> target_epsilon;  // empty for the noiseless arm
  std::vector<double> final_errors;      // indexed by seed offset
  std::vector<double> realized_epsilons;
  double median_error = 0.0;
};

struct SweepResult {
  std::vector<SweepArm> arms;  // noiseless first, then epsilons in the given order
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Seed offset s shifts the relay and noise seeds by s; the data seed stays
// fixed so every arm sees the same instance.
inline RunConfig sweep_variant(const RunConfig& base, std::optional<double> epsilon,
                               std::size_t offset) {
  RunConfig c = base;
  c.seeds.relay += offset;
  c.seeds.noise += offset;
  c.privacy.enabled = epsilon.has_value();
  c.privacy.sigma1_sq.reset();
  c.privacy.target_epsilon = epsilon;
  return c;
}

inline SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.seeds == 0) throw ValidationError("sweep needs at least one seed");
  const PreparedExperiment prepared = prepare_experiment(spec.base);

  SweepResult result;
  if (spec.include_noiseless) result.arms.push_back(SweepArm{});
  for (double eps : spec.epsilons) {
    if (!(eps > 0.0)) throw ValidationError("sweep epsilons must be > 0");
    result.arms.push_back(SweepArm{eps, {}, {}, 0.0});
  }
  for (auto& arm : result.arms) {
    arm.final_errors.assign(spec.seeds, 0.0);
    arm.realized_epsilons.assign(spec.seeds, 0.0);
  }

  const std::size_t jobs = result.arms.size() * spec.seeds;
  std::vector<std::exception_ptr> failures(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      SweepArm& arm = result.arms[j / spec.seeds];
      const std::size_t s = j % spec.seeds;
      try {
        const ResultBundle b =
            run_prepared(sweep_variant(spec.base, arm.target_epsilon, s), prepared);
        arm.final_errors[s] = b.summary.final_relative_error;
        arm.realized_epsilons[s] = b.summary.realized_epsilon;
      } catch (...) {
        failures[j] = std::current_exception();
      }
    }
  };
  std::size_t threads = spec.threads ? spec.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (auto& arm : result.arms) arm.median_error = median(arm.final_errors);
  return result;
}

inline nlohmann::json sweep_to_json(const SweepResult& r) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : r.arms) {
    arms.push_back({{"target_epsilon", a.target_epsilon ? nlohmann::json(*a.target_epsilon)
                                                        : nlohmann::json(nullptr)},
                    {"median_final_relative_error", a.median_error},
                    {"final_relative_errors", a.final_errors},
                    {"realized_epsilons", a.realized_epsilons}});
  }
  return nlohmann::json{{"format", "dprecal-sweep"}, {"version", 1}, {"arms", arms}};
}

}  // namespace dprecal

#endif  // DPRECAL_EXPERIMENT_HPP_
