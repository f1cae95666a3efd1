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

// The relay primal-dual iteration, its all-agents counterpart, the
// activation mask that links the two, and run orchestration.

#ifndef DPRECAL_ENGINE_HPP_
#define DPRECAL_ENGINE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <concepts>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/error.hpp"
#include "dprecal/metrics.hpp"
#include "dprecal/objective.hpp"
#include "dprecal/privacy.hpp"
#include "dprecal/state.hpp"
#include "dprecal/topology.hpp"

namespace dprecal {

struct Seeds {
  std::uint64_t relay = 1;
  std::uint64_t noise = 2;
};

// lambda^1 = 0, hence u = u_published = 0. y0 defaults to copies of x0.
inline RunState init_state(const ProblemInstance& p, const StepsizeSet& s,
                           AgentId start, const Vector& x0,
                           const std::vector<Vector>& y0 = {},
                           Seeds seeds = {}) {
  const Eigen::Index q = p.dimension();
  if (x0.size() != q) throw ValidationError("x0 has the wrong dimension");
  if (!y0.empty() && y0.size() != p.agents()) {
    throw ValidationError("y0 needs one vector per agent");
  }
  if (start >= p.agents()) {
    throw ValidationError("start agent " + std::to_string(start + 1) +
                          " is out of range");
  }
  const StepsizeReport report = validate_stepsizes(s, p, StepsizeCheck::kSimple);
  if (!report.ok) throw ValidationError("invalid stepsizes: " + report.message);

  RunState st;
  st.beta = s.beta;
  st.x = x0;
  st.u = Vector::Zero(q);
  st.u_published = Vector::Zero(q);
  st.current = start;
  st.k = 1;
  st.relay_rng.seed(seeds.relay);
  st.noise_rng.seed(seeds.noise);
  st.agents.resize(p.agents());
  for (std::size_t i = 0; i < p.agents(); ++i) {
    auto& a = st.agents[i];
    a.lambda = Vector::Zero(q);
    a.y = y0.empty() ? x0 : y0[i];
    if (a.y.size() != q) throw ValidationError("y0 has the wrong dimension");
    a.alpha = s.alpha[i];
  }
  return st;
}

namespace detail {

inline void require_finite(const Vector& v, const char* name, std::size_t k,
                           AgentId agent) {
  if (!v.allFinite()) throw DivergenceError(name, k, agent);
}

}  // namespace detail

// Callable producing the published-aggregate perturbation for a given
// activation count. Eigen expressions are excluded (they are callable too).
template <class F>
concept NoiseSource =
    std::invocable<F&, std::size_t> &&
    !std::is_base_of_v<Eigen::EigenBase<std::decay_t<F>>, std::decay_t<F>>;

// One relay iteration by the baton holder i = state.current:
//   lambda_i^+1/2 = lambda_i + beta (x - y_i)
//   x^+           = prox(x - (u_published + lambda_i^+1/2 - lambda_i))
//   y_i^+         = y_i - alpha_i (grad f_i(y_i) - lambda_i^+1/2)
//   lambda_i^+    = lambda_i^+1/2 + beta ((x^+ - x) - (y_i^+ - y_i))
//   u^+           = u + lambda_i^+ - lambda_i
//   u_published^+ = u^+ - noise
// `noise_for(tau)` is called after the deterministic updates with the
// agent's activation count including this step. The next baton holder is
// then drawn from P.
template <NoiseSource NoiseFn>
void relay_step(const ProblemInstance& p, const TransitionMatrix& transition,
                RunState& st, NoiseFn&& noise_for) {
  const AgentId i = st.current;
  AgentState& a = st.agents[i];
  const double beta = st.beta;

  const Vector lambda_half = a.lambda + beta * (st.x - a.y);
  const Vector x_next = p.prox(st.x - (st.u_published + lambda_half - a.lambda));
  const Vector y_next =
      a.y - a.alpha * (p.loss(i).gradient(a.y) - lambda_half);
  const Vector lambda_next =
      lambda_half + beta * ((x_next - st.x) - (y_next - a.y));

  detail::require_finite(x_next, "x", st.k, i);
  detail::require_finite(y_next, "y", st.k, i);
  detail::require_finite(lambda_next, "lambda", st.k, i);

  st.u += lambda_next - a.lambda;
  ++a.activations;
  const Vector noise = noise_for(a.activations);
  if (noise.size() != st.x.size()) {
    throw ValidationError("noise vector has the wrong dimension");
  }
  st.u_published = st.u - noise;
  detail::require_finite(st.u_published, "published aggregate", st.k, i);

  a.lambda = lambda_next;
  a.y = y_next;
  st.x = x_next;
  ++st.k;
  st.current = sample_next(transition, i, st.relay_rng);
}

inline void relay_step(const ProblemInstance& p,
                       const TransitionMatrix& transition, RunState& st,
                       const Vector& noise) {
  relay_step(p, transition, st, [&noise](std::size_t) { return noise; });
}

// The all-agents operator: every agent performs its half/primal/dual update
// and x sees the full aggregate sum_j lambda_j^+1/2 - noise.
inline FullUpdate centralized_step(const ProblemInstance& p, const RunState& st,
                                   const Vector& noise) {
  const std::size_t n = st.agents.size();
  const double beta = st.beta;
  FullUpdate out;
  out.lambda_half.reserve(n);
  out.y.reserve(n);
  out.lambda.reserve(n);

  Vector half_sum = Vector::Zero(st.x.size());
  for (const auto& a : st.agents) {
    out.lambda_half.push_back(a.lambda + beta * (st.x - a.y));
    half_sum += out.lambda_half.back();
  }
  out.x = p.prox(st.x - (half_sum - noise));
  detail::require_finite(out.x, "x", st.k, st.current);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = st.agents[i];
    out.y.push_back(a.y - a.alpha * (p.loss(i).gradient(a.y) - out.lambda_half[i]));
    out.lambda.push_back(out.lambda_half[i] +
                         beta * ((out.x - st.x) - (out.y[i] - a.y)));
    detail::require_finite(out.y[i], "y", st.k, i);
    detail::require_finite(out.lambda[i], "lambda", st.k, i);
  }
  return out;
}

// w + E (w_hat - w): the active agent's lambda and y and the shared x come
// from `full`, every other block from `base`. Bookkeeping fields (u, k,
// counters, random streams) are left as in `base`.
inline RunState apply_mask(const RunState& base, const FullUpdate& full,
                           const MaskSpec& mask) {
  RunState out = base;
  const AgentId i = mask.active();
  out.agents.at(i).lambda = full.lambda.at(i);
  out.agents.at(i).y = full.y.at(i);
  out.x = full.x;
  return out;
}

// Replaces every block by the full update; u is re-aggregated and the
// published copy set equal to it.
inline RunState apply_full(const RunState& base, const FullUpdate& full) {
  RunState out = base;
  for (std::size_t i = 0; i < out.agents.size(); ++i) {
    out.agents[i].lambda = full.lambda[i];
    out.agents[i].y = full.y[i];
  }
  out.x = full.x;
  out.u = out.lambda_sum();
  out.u_published = out.u;
  ++out.k;
  return out;
}

struct RunOptions {
  std::size_t iterations = 0;
  AgentId start = 0;
  Seeds seeds;
  std::optional<Vector> x0;      // defaults to zero
  std::size_t record_stride = 1;  // initial and final records always kept
};

struct PrivacySetup {
  NoiseSchedule schedule;
  AccountantParams accountant;
};

struct Trajectory {
  std::vector<IterationRecord> records;
  Vector x_final;
  std::vector<std::size_t> activations;
  std::size_t lci = 0;
  std::size_t communications = 0;
  double final_relative_error = 0.0;
  double final_consensus = 0.0;
  std::optional<PrivacyBudget> budget;
};

using StepObserver = std::function<void(const RunState&)>;

// K relay steps from the given start. With a privacy setup, the active
// agent perturbs the published aggregate with N(0, sigma^2_tau I) where tau
// is its activation count including the current step.
inline Trajectory run(const ProblemInstance& p, const StepsizeSet& s,
                      const Graph& graph,
                      const std::optional<PrivacySetup>& privacy,
                      const RunOptions& opts, const ReferenceSolution& ref,
                      const StepObserver& observer = {}) {
  if (graph.size() != p.agents()) {
    throw ValidationError("graph has " + std::to_string(graph.size()) +
                          " agents but the problem has " +
                          std::to_string(p.agents()));
  }
  if (opts.record_stride == 0) throw ValidationError("record stride must be >= 1");
  const TransitionMatrix transition(graph);
  const Vector x0 = opts.x0.value_or(Vector::Zero(p.dimension()));
  RunState st = init_state(p, s, opts.start, x0, {}, opts.seeds);
  Counters counters(p.agents());
  std::optional<PrivacyLedger> ledger;
  if (privacy) ledger.emplace(privacy->accountant, privacy->schedule, p.agents());

  auto snapshot = [&](std::size_t k, std::size_t active) {
    IterationRecord r;
    r.k = k;
    r.active = active;
    r.relative_error = relative_error(st.x, ref.x, x0);
    r.s_norm = s_norm_dist(st, ref, st.beta);
    r.consensus = consensus_residual(st);
    r.communications = counters.communications();
    r.lci = counters.lci();
    r.epsilon = ledger ? ledger->realized().epsilon : 0.0;
    return r;
  };

  Trajectory traj;
  traj.records.push_back(snapshot(0, 0));
  const Vector zero = Vector::Zero(p.dimension());
  for (std::size_t step = 1; step <= opts.iterations; ++step) {
    const AgentId active = st.current;
    if (ledger) {
      relay_step(p, transition, st, [&](std::size_t tau) {
        ledger->record(active);
        return sample_noise(privacy->schedule.variance(tau), p.dimension(),
                            st.noise_rng);
      });
    } else {
      relay_step(p, transition, st, zero);
    }
    counters.record(active);
    if (observer) observer(st);
    if (step % opts.record_stride == 0 || step == opts.iterations) {
      traj.records.push_back(snapshot(step, active + 1));
    }
  }
  traj.x_final = st.x;
  traj.activations = counters.activations();
  traj.lci = counters.lci();
  traj.communications = counters.communications();
  traj.final_relative_error = traj.records.back().relative_error;
  traj.final_consensus = traj.records.back().consensus;
  if (ledger) traj.budget = ledger->realized();
  return traj;
}

}  // namespace dprecal

#endif  // DPRECAL_ENGINE_HPP_
