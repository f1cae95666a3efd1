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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dprecal/engine.hpp"
#include "dprecal/metrics.hpp"
#include "dprecal/synthetic.hpp"

namespace dprecal {
namespace {

Vector gaussian(std::mt19937_64& rng, Eigen::Index q) {
  std::normal_distribution<double> n;
  return Vector::NullaryExpr(q, [&] { return n(rng); });
}

TEST(Reference, IdentityQuadratic) {
  const Vector c = Eigen::Vector3d(1.5, -2, 0.25);
  const ProblemInstance p({LocalLoss::least_squares(Matrix::Identity(3, 3), c)}, Regularizer::none());
  const auto ref = reference_solution(p);
  EXPECT_LE((ref.x - c).norm(), 1e-10);
}

TEST(Reference, LassoZeroBeyondThreshold) {
  auto inst = gen_synthetic(SyntheticSpec{.agents = 4, .dimension = 6, .samples_per_agent = 10});
  Vector corr = Vector::Zero(6);
  for (const auto& f : inst.problem.losses()) {
    corr += f.weight() * f.data().transpose() * f.targets();
  }
  const double threshold = corr.lpNorm<Eigen::Infinity>() / 4.0;
  const ProblemInstance above(inst.problem.losses(), Regularizer::lasso(threshold * 1.01));
  EXPECT_EQ(reference_solution(above).x, Vector::Zero(6));
  const ProblemInstance below(inst.problem.losses(), Regularizer::lasso(threshold * 0.9));
  EXPECT_GT(reference_solution(below).x.norm(), 0.0);
}

TEST(Reference, BeatsRandomPerturbations) {
  std::mt19937_64 rng(1);
  for (auto loss : {LossKind::kLeastSquares, LossKind::kLogistic}) {
    SyntheticSpec spec;
    spec.agents = 5;
    spec.dimension = 8;
    spec.loss = loss;
    spec.regularizer = Regularizer::elastic_net(0.02, 0.01);
    auto inst = gen_synthetic(spec);
    const auto ref = reference_solution(inst.problem);
    const double best = objective_value(inst.problem, ref.x);
    for (int t = 0; t < 1000; ++t) {
      const Vector d = gaussian(rng, 8) * (t % 2 ? 1e-3 : 1e-1);
      EXPECT_LE(best, objective_value(inst.problem, ref.x + d));
    }
  }
}

TEST(Reference, SatisfiesOptimality) {
  auto inst = gen_synthetic(SyntheticSpec{});
  const auto ref = reference_solution(inst.problem);
  const auto& p = inst.problem;
  Vector sum = Vector::Zero(p.dimension());
  for (std::size_t i = 0; i < p.agents(); ++i) {
    EXPECT_EQ(ref.lambda[i], p.loss(i).gradient(ref.x));
    sum += ref.lambda[i];
  }
  EXPECT_LE(p.regularizer().subgradient_violation(ref.x, -sum, p.prox_weight()), 1e-8);
  EXPECT_LE(ref.optimality_violation, 1e-8);
}

TEST(SNorm, ZeroAtSolution) {
  auto inst = gen_synthetic(SyntheticSpec{.agents = 3, .dimension = 4, .samples_per_agent = 10});
  const auto ref = reference_solution(inst.problem);
  RunState st = init_state(inst.problem, StepsizeSet::local_bound(inst.problem, 0.9), 0, ref.x);
  for (std::size_t i = 0; i < 3; ++i) st.agents[i].lambda = ref.lambda[i];
  EXPECT_EQ(s_norm_dist(st, ref, st.beta), 0.0);
}

TEST(SNorm, MatchesExplicitQuadraticForm) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + t % 4;
    const Eigen::Index q = 1 + t % 3;
    const double beta = 1.0 / (2.0 * (n + 1.0));
    RunState st;
    st.x = gaussian(rng, q);
    ReferenceSolution ref;
    ref.x = gaussian(rng, q);
    st.agents.resize(n);
    std::vector<double> alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
      st.agents[i].lambda = gaussian(rng, q);
      st.agents[i].y = gaussian(rng, q);
      st.agents[i].alpha = alpha[i] = 0.1 + 0.2 * i;
      ref.lambda.push_back(gaussian(rng, q));
    }
    // Stack w - w* = (lambda, x, y) and build S as a dense diagonal matrix.
    const Eigen::Index dim = q * static_cast<Eigen::Index>(2 * n + 1);
    Vector d(dim);
    Vector diag(dim);
    for (std::size_t i = 0; i < n; ++i) {
      d.segment(i * q, q) = st.agents[i].lambda - ref.lambda[i];
      diag.segment(i * q, q).setConstant(1.0 / beta);
    }
    d.segment(n * q, q) = st.x - ref.x;
    diag.segment(n * q, q).setConstant(1.0);
    for (std::size_t i = 0; i < n; ++i) {
      d.segment((n + 1 + i) * q, q) = st.agents[i].y - ref.x;
      diag.segment((n + 1 + i) * q, q).setConstant(1.0 / alpha[i]);
    }
    const Matrix s = diag.asDiagonal();
    const double want = std::sqrt(d.dot(s * d));
    EXPECT_NEAR(s_norm_dist(st, ref, beta), want, 1e-12 * std::max(1.0, want));
  }
}

TEST(SNorm, IdentityMetricIsEuclidean) {
  std::mt19937_64 rng(3);
  RunState st;
  st.x = gaussian(rng, 2);
  st.agents.resize(2);
  ReferenceSolution ref;
  ref.x = gaussian(rng, 2);
  double sq = (st.x - ref.x).squaredNorm();
  for (auto& a : st.agents) {
    a.lambda = gaussian(rng, 2);
    a.y = gaussian(rng, 2);
    a.alpha = 1.0;
    ref.lambda.push_back(Vector::Zero(2));
    sq += a.lambda.squaredNorm() + (a.y - ref.x).squaredNorm();
  }
  EXPECT_NEAR(s_norm_dist(st, ref, 1.0), std::sqrt(sq), 1e-14);
}

TEST(Counters, SingleAgentRepeated) {
  Counters c(3);
  for (int k = 0; k < 17; ++k) update_counters(c, 0);
  EXPECT_EQ(c.lci(), 17u);
  EXPECT_EQ(c.communications(), 17u);
}

TEST(Counters, RoundRobin) {
  Counters c(4);
  for (int k = 0; k < 4 * 9; ++k) update_counters(c, k % 4);
  EXPECT_EQ(c.lci(), 9u);
}

TEST(Counters, RandomRelayRunIdentity) {
  auto inst = gen_synthetic(SyntheticSpec{.agents = 6, .dimension = 3, .samples_per_agent = 8});
  const auto ref = reference_solution(inst.problem);
  RunOptions o;
  o.iterations = 777;
  const auto t = run(inst.problem, StepsizeSet::local_bound(inst.problem, 0.9), ring_graph(6),
                     std::nullopt, o, ref);
  std::size_t sum = 0;
  for (auto a : t.activations) sum += a;
  EXPECT_EQ(sum, 777u);
  EXPECT_LE(t.lci, 777u);
  EXPECT_EQ(t.lci, *std::max_element(t.activations.begin(), t.activations.end()));
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    EXPECT_EQ(t.records[i].communications, t.records[i].k);
    EXPECT_GE(t.records[i].lci, t.records[i - 1].lci);
  }
}

TEST(RateFit, ExactGeometric) {
  std::vector<double> e;
  for (int k = 1; k <= 40; ++k) e.push_back(std::exp(-double(k)));
  const auto f = fit_linear_rate(e, 1.0);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(RateFit, Constant) {
  const auto f = fit_linear_rate(std::vector<double>(30, 0.3));
  EXPECT_EQ(f.slope, 0.0);
}

TEST(RateFit, Errors) {
  EXPECT_THROW(fit_linear_rate(std::vector<double>(12, 1.0), 0.5), ValidationError);
  std::vector<double> e(20, 1.0);
  e[15] = 0.0;
  EXPECT_THROW(fit_linear_rate(e), ValidationError);
}

TEST(RateFit, NoiselessRunIsLinear) {
  auto inst = gen_synthetic(SyntheticSpec{.agents = 4, .dimension = 6, .samples_per_agent = 20});
  const auto ref = reference_solution(inst.problem);
  RunOptions o;
  o.iterations = 4000;
  const auto t = run(inst.problem, StepsizeSet::local_bound(inst.problem, 0.9), complete_graph(4),
                     std::nullopt, o, ref);
  std::vector<double> e;
  for (const auto& r : t.records) e.push_back(r.relative_error);
  const auto f = fit_linear_rate(above_floor(e));
  EXPECT_LT(f.slope, 0.0);
  EXPECT_GE(f.r_squared, 0.9);
}

TEST(RelativeError, Basics) {
  const Vector xs = Eigen::Vector2d(1, 1);
  EXPECT_EQ(relative_error(Vector::Zero(2), xs, Vector::Zero(2)), 1.0);
  EXPECT_EQ(relative_error(xs, xs, Vector::Zero(2)), 0.0);
  EXPECT_EQ(relative_error(Eigen::Vector2d(1, 2), xs, xs), 1.0);
}

}  // namespace
}  // namespace dprecal
