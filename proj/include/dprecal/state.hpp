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

#ifndef DPRECAL_STATE_HPP_
#define DPRECAL_STATE_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/topology.hpp"

namespace dprecal {

struct AgentState {
  Eigen::VectorXd lambda;  // dual
  Eigen::VectorXd y;       // local copy of x
  double alpha = 0.0;
  std::size_t activations = 0;
};

// Full iteration state of one run. `u` is the exact dual aggregate
// sum_i lambda_i; `u_published` is the noisy copy carried by the baton.
struct RunState {
  std::vector<AgentState> agents;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd u_published;
  std::size_t k = 1;
  AgentId current = 0;
  double beta = 0.0;
  std::mt19937_64 relay_rng;
  std::mt19937_64 noise_rng;

  std::size_t agent_count() const noexcept { return agents.size(); }

  Eigen::VectorXd lambda_sum() const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(x.size());
    for (const auto& a : agents) s += a.lambda;
    return s;
  }
};

// Result of applying the all-agents operator to a state.
struct FullUpdate {
  std::vector<Eigen::VectorXd> lambda_half;
  Eigen::VectorXd x;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> lambda;
};

// Selects the blocks that change in one relay step: the active agent's
// lambda and y plus the shared x. Holds exactly one agent by construction.
class MaskSpec {
 public:
  explicit MaskSpec(AgentId active) : active_(active) {}
  AgentId active() const noexcept { return active_; }

 private:
  AgentId active_;
};

}  // namespace dprecal

#endif  // DPRECAL_STATE_HPP_
