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

#include <cmath>
#include <random>
#include <vector>

#include "dprecal/privacy.hpp"

namespace dprecal {
namespace {

double explicit_sum(double rho1, double r, std::size_t xi) {
  double total = 0.0, term = rho1;
  for (std::size_t t = 1; t <= xi; ++t, term *= r) total += term;
  return total;
}

TEST(Schedule, Variances) {
  const NoiseSchedule s(1.0, 2.0);
  EXPECT_EQ(noise_variance(s, 1), 1.0);
  EXPECT_EQ(noise_variance(s, 3), 0.25);
}

TEST(Schedule, Recurrence) {
  for (double r : {1.05, 1.5, 3.0}) {
    const NoiseSchedule s(2.7, r);
    for (std::size_t t = 1; t < 60; ++t) {
      EXPECT_NEAR(noise_variance(s, t), r * noise_variance(s, t + 1), 1e-14 * noise_variance(s, t));
    }
  }
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(NoiseSchedule(0.0, 2.0), ValidationError);
  EXPECT_THROW(NoiseSchedule(1.0, 1.0), ValidationError);
  EXPECT_THROW(noise_variance(NoiseSchedule(1.0, 2.0), 0), ValidationError);
}

TEST(Noise, ZeroVarianceIsZero) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(sample_noise(0.0, 5, rng), Eigen::VectorXd::Zero(5));
}

TEST(Noise, MonteCarloMoments) {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd v = sample_noise(1.0, 1000000, rng);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / double(v.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(Noise, SeededIsReproducible) {
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample_noise(0.3, 16, a), sample_noise(0.3, 16, b));
}

TEST(Sensitivity, Examples) {
  EXPECT_NEAR(sensitivity(0.1, 1.0 / 18.0, 2.0), 0.8 / 18.0, 1e-16);
  EXPECT_EQ(sensitivity(1, 1, 1), 4.0);
  EXPECT_NEAR(sensitivity(0.2, 0.3, 5.0), 2.0 * sensitivity(0.1, 0.3, 5.0), 1e-15);
  EXPECT_NEAR(sensitivity(0.2, 0.6, 5.0), 2.0 * sensitivity(0.2, 0.3, 5.0), 1e-15);
  EXPECT_NEAR(sensitivity(0.2, 0.3, 10.0), 2.0 * sensitivity(0.2, 0.3, 5.0), 1e-15);
}

TEST(RhoFirst, Examples) {
  EXPECT_EQ(rho_first(1, 1, 1, 1), 8.0);
  EXPECT_NEAR(rho_first(0.3, 0.1, 2, 4.0), 0.5 * rho_first(0.3, 0.1, 2, 2.0), 1e-16);
  EXPECT_THROW(rho_first(1, 1, 1, 0.0), ValidationError);
}

// Activation t has variance sigma_1^2 R^(1-t), so its rho is R times the
// previous one.
TEST(RhoFirst, GrowsByAttenuationPerActivation) {
  const NoiseSchedule s(3.0, 1.5);
  for (std::size_t t = 1; t < 20; ++t) {
    const double a = rho_first(0.2, 0.05, 4.0, s.variance(t));
    const double b = rho_first(0.2, 0.05, 4.0, s.variance(t + 1));
    EXPECT_NEAR(b, 1.5 * a, 1e-13 * b);
  }
}

TEST(ZcdpToDp, Examples) {
  EXPECT_EQ(zcdp_to_dp(0.0, 1e-3), 0.0);
  EXPECT_NEAR(zcdp_to_dp(1.0, std::exp(-1.0)), 3.0, 1e-15);
  EXPECT_THROW(zcdp_to_dp(1.0, 0.0), ValidationError);
  EXPECT_THROW(zcdp_to_dp(1.0, 1.0), ValidationError);
}

TEST(ZcdpToDp, MonotoneOnGrid) {
  for (double d : {1e-6, 1e-4, 1e-3, 0.1}) {
    double prev = -1.0;
    for (double rho = 0.0; rho < 5.0; rho += 0.01) {
      const double e = zcdp_to_dp(rho, d);
      EXPECT_GT(e, prev);
      prev = e;
    }
  }
  for (double rho : {0.01, 0.5, 3.0}) {
    double prev = INFINITY;
    for (double d = 1e-8; d < 0.9; d *= 1.7) {
      const double e = zcdp_to_dp(rho, d);
      EXPECT_LT(e, prev);
      prev = e;
    }
  }
}

TEST(Accumulated, ClosedFormMatchesTermByTerm) {
  for (double r : {1.1, 1.5, 2.0, 3.0}) {
    for (std::size_t xi = 1; xi <= 64; ++xi) {
      const double want = explicit_sum(0.01, r, xi);
      EXPECT_NEAR(accumulated_zcdp(0.01, r, xi), want, 1e-12 * want) << r << " " << xi;
    }
  }
  const double want = explicit_sum(0.01, 1.5, 10);
  EXPECT_NEAR(accumulated_zcdp(0.01, 1.5, 10), want, 1e-12 * want);
}

TEST(Budget, SingleActivation) {
  const AccountantParams a{0.3, 0.1, 2.0, 1e-3};
  const NoiseSchedule s(0.5, 1.2);
  const PrivacyBudget b = budget_for(a, s, 1);
  const double rho = 8.0 * 0.3 * 0.3 * 0.1 * 0.1 * 4.0 / 0.5;
  EXPECT_NEAR(b.zcdp, rho, 1e-15);
  EXPECT_NEAR(b.epsilon, rho + 2.0 * std::sqrt(rho * std::log(1e3)), 1e-14);
}

TEST(Budget, NoActivationsNoLeakage) {
  PrivacyLedger ledger({0.3, 0.1, 2.0, 1e-3}, NoiseSchedule(0.5, 1.2), 4);
  EXPECT_EQ(total_budget(ledger).epsilon, 0.0);
  EXPECT_EQ(total_budget(ledger).lci, 0u);
}

TEST(Ledger, TracksMaximumActivation) {
  PrivacyLedger ledger({0.3, 0.1, 2.0, 1e-3}, NoiseSchedule(0.5, 1.2), 3);
  EXPECT_EQ(ledger.record(0), 1u);
  EXPECT_EQ(ledger.record(2), 1u);
  EXPECT_EQ(ledger.record(0), 2u);
  EXPECT_EQ(ledger.lci(), 2u);
  EXPECT_EQ(ledger.activations(), (std::vector<std::size_t>{2, 0, 1}));
  const double want = zcdp_to_dp(explicit_sum(ledger.realized().rho_first, 1.2, 2), 1e-3);
  EXPECT_NEAR(total_budget(ledger).epsilon, want, 1e-13 * want);
  EXPECT_LE(ledger.realized().epsilon, ledger.prospective(5).epsilon);
}

TEST(Calibrate, RoundTrip) {
  const double alpha = 0.2, beta = 1.0 / 18.0, l = 3.0, delta = 1e-3;
  for (double r : {1.05, 1.5, 2.0}) {
    for (std::size_t xi : {1, 10, 100, 1250}) {
      if (double(xi) * std::log(r) > 600.0) continue;
      for (double eps : {0.5, 1.0, 5.0, 10.0}) {
        const double var = calibrate_sigma(eps, delta, alpha, beta, l, r, xi);
        const double got = budget_for({alpha, beta, l, delta}, NoiseSchedule(var, r), xi).epsilon;
        EXPECT_LE(got, eps);
        EXPECT_GE(got, eps * (1.0 - 1e-6));
      }
    }
  }
}

TEST(Calibrate, LargerBudgetNeedsLessNoise) {
  double prev = INFINITY;
  for (double eps : {0.1, 0.5, 1.0, 5.0, 10.0, 50.0}) {
    const double v = calibrate_sigma(eps, 1e-3, 0.2, 0.05, 3.0, 1.1, 40);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

// For one activation eps = rho + 2 sqrt(rho c) with c = ln(1/delta), so
// sqrt(rho) = -sqrt(c) + sqrt(c + eps) and sigma^2 = 8 a^2 b^2 L^2 / rho.
TEST(Calibrate, SingleActivationClosedForm) {
  const double alpha = 0.4, beta = 0.1, l = 2.5, delta = 1e-4;
  const double c = std::log(1.0 / delta);
  for (double eps : {0.3, 1.0, 4.0, 20.0}) {
    const double root = -std::sqrt(c) + std::sqrt(c + eps);
    const double want = 8.0 * alpha * alpha * beta * beta * l * l / (root * root);
    const double got = calibrate_sigma(eps, delta, alpha, beta, l, 1.5, 1);
    EXPECT_NEAR(got, want, 1e-9 * want);
  }
}

TEST(Calibrate, RejectsBadInput) {
  EXPECT_THROW(calibrate_sigma(0.0, 1e-3, 0.1, 0.1, 1.0, 1.1, 3), ValidationError);
  EXPECT_THROW(calibrate_sigma(1.0, 1e-3, 0.1, 0.1, 1.0, 1.1, 0), ValidationError);
}

}  // namespace
}  // namespace dprecal
