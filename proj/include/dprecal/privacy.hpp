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

// Gaussian noise schedule with geometric variance decay and the zCDP
// accountant that turns per-activation leakage into an (epsilon, delta)
// budget.

#ifndef DPRECAL_PRIVACY_HPP_
#define DPRECAL_PRIVACY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/error.hpp"
#include "dprecal/topology.hpp"

namespace dprecal {

// sigma^2_tau = sigma^2_1 * R^(1 - tau), tau >= 1, R > 1.
class NoiseSchedule {
 public:
  NoiseSchedule(double initial_variance, double attenuation)
      : initial_variance_(initial_variance), attenuation_(attenuation) {
    if (!(initial_variance > 0.0) || !std::isfinite(initial_variance)) {
      throw ValidationError("initial noise variance must be positive and finite");
    }
    if (!(attenuation > 1.0) || !std::isfinite(attenuation)) {
      throw ValidationError(
          "attenuation coefficient must be > 1; constant noise (R = 1) is "
          "outside the geometric-sum accountant");
    }
  }

  double initial_variance() const noexcept { return initial_variance_; }
  double attenuation() const noexcept { return attenuation_; }

  double variance(std::size_t tau) const {
    if (tau < 1) throw ValidationError("activation index must be >= 1");
    return initial_variance_ *
           std::pow(attenuation_, 1.0 - static_cast<double>(tau));
  }

 private:
  double initial_variance_;
  double attenuation_;
};

inline double noise_variance(const NoiseSchedule& s, std::size_t tau) {
  return s.variance(tau);
}

// i.i.d. N(0, variance) entries.
template <class Rng>
Eigen::VectorXd sample_noise(double variance, Eigen::Index q, Rng& rng) {
  if (!(variance >= 0.0)) throw ValidationError("noise variance must be >= 0");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(q);
  if (variance == 0.0) return v;
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  for (Eigen::Index j = 0; j < q; ++j) v(j) = normal(rng);
  return v;
}

// Worst-case change of the published aggregate when one record changes.
inline double sensitivity(double alpha, double beta, double lipschitz) {
  return 4.0 * alpha * beta * lipschitz;
}

// zCDP parameter of one activation at variance sigma^2_1.
inline double rho_first(double alpha, double beta, double lipschitz,
                        double initial_variance) {
  if (!(initial_variance > 0.0)) {
    throw ValidationError("initial noise variance must be positive");
  }
  const double abl = alpha * beta * lipschitz;
  return 8.0 * abl * abl / initial_variance;
}

inline double zcdp_to_dp(double rho, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
  if (!(rho >= 0.0)) throw ValidationError("rho must be >= 0");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

// sum_{t=1}^{lci} rho1 R^(t-1) = rho1 (R^lci - 1) / (R - 1).
inline double accumulated_zcdp(double rho1, double attenuation,
                               std::size_t lci) {
  if (!(attenuation > 1.0)) throw ValidationError("attenuation must be > 1");
  if (lci == 0) return 0.0;
  const double growth =
      std::expm1(static_cast<double>(lci) * std::log(attenuation));
  const double total = rho1 * growth / (attenuation - 1.0);
  if (!std::isfinite(total)) {
    throw ValidationError("accumulated zCDP overflows for LCI " +
                          std::to_string(lci));
  }
  return total;
}

struct AccountantParams {
  double alpha = 0.0;      // max_i alpha_i
  double beta = 0.0;
  double lipschitz = 0.0;  // max_i L_i
  double delta = 1e-3;
};

struct PrivacyBudget {
  double sensitivity = 0.0;
  double rho_first = 0.0;
  double zcdp = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t lci = 0;
};

inline PrivacyBudget budget_for(const AccountantParams& a,
                                const NoiseSchedule& s, std::size_t lci) {
  PrivacyBudget b;
  b.sensitivity = sensitivity(a.alpha, a.beta, a.lipschitz);
  b.rho_first = rho_first(a.alpha, a.beta, a.lipschitz, s.initial_variance());
  b.zcdp = accumulated_zcdp(b.rho_first, s.attenuation(), lci);
  b.epsilon = zcdp_to_dp(b.zcdp, a.delta);
  b.delta = a.delta;
  b.lci = lci;
  return b;
}

// Append-only record of activations for one run.
class PrivacyLedger {
 public:
  PrivacyLedger(AccountantParams params, NoiseSchedule schedule,
                std::size_t agents)
      : params_(params), schedule_(schedule), activations_(agents, 0) {
    if (!(params.delta > 0.0 && params.delta < 1.0)) {
      throw ValidationError("delta must lie in (0, 1)");
    }
  }

  // Returns the agent's activation count including this one.
  std::size_t record(AgentId agent) {
    const std::size_t t = ++activations_.at(agent);
    lci_ = std::max(lci_, t);
    return t;
  }

  const AccountantParams& params() const noexcept { return params_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  const std::vector<std::size_t>& activations() const noexcept {
    return activations_;
  }
  std::size_t lci() const noexcept { return lci_; }

  PrivacyBudget realized() const { return budget_for(params_, schedule_, lci_); }
  PrivacyBudget prospective(std::size_t planned_lci) const {
    return budget_for(params_, schedule_, planned_lci);
  }

 private:
  AccountantParams params_;
  NoiseSchedule schedule_;
  std::vector<std::size_t> activations_;
  std::size_t lci_ = 0;
};

inline PrivacyBudget total_budget(const PrivacyLedger& ledger) {
  return ledger.realized();
}

// Smallest sigma^2_1 whose accumulated budget over `lci` activations stays
// within `target_epsilon`. Bisection on log(sigma^2_1).
inline double calibrate_sigma(double target_epsilon, double delta, double alpha,
                              double beta, double lipschitz, double attenuation,
                              std::size_t lci) {
  if (!(target_epsilon > 0.0)) throw ValidationError("target epsilon must be > 0");
  if (lci == 0) {
    throw ValidationError("calibration needs at least one planned activation");
  }
  const AccountantParams params{alpha, beta, lipschitz, delta};
  auto eps_at = [&](double log_var) {
    return budget_for(params, NoiseSchedule(std::exp(log_var), attenuation), lci)
        .epsilon;
  };
  constexpr double kLogMax = 690.0;
  double hi = 0.0;
  while (eps_at(hi) > target_epsilon) {
    hi += 8.0;
    if (hi > kLogMax) {
      throw OracleError("no feasible sigma^2_1 below 1e300 for epsilon " +
                        std::to_string(target_epsilon));
    }
  }
  double lo = hi - 8.0;
  while (eps_at(lo) <= target_epsilon) {
    hi = lo;
    lo -= 8.0;
    if (lo < -kLogMax) break;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (eps_at(mid) <= target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double variance = std::exp(hi);
  if (eps_at(hi) > target_epsilon) {
    throw OracleError("sigma calibration failed post-verification");
  }
  return variance;
}

}  // namespace dprecal

#endif  // DPRECAL_PRIVACY_HPP_
