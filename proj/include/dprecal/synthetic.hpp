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

#ifndef DPRECAL_SYNTHETIC_HPP_
#define DPRECAL_SYNTHETIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dprecal/error.hpp"
#include "dprecal/objective.hpp"

namespace dprecal {

struct SyntheticSpec {
  std::size_t agents = 8;
  Eigen::Index dimension = 20;
  Eigen::Index samples_per_agent = 30;
  double noise_level = 0.01;
  double sparsity = 0.5;  // fraction of nonzero planted coefficients
  bool sample_average = true;  // weight each local loss by 1/m_i
  LossKind loss = LossKind::kLeastSquares;
  Regularizer regularizer = Regularizer::lasso(0.1);
  std::optional<double> prox_weight;
  std::uint64_t seed = 3;
};

struct SyntheticInstance {
  ProblemInstance problem;
  Vector planted;
};

// B_i has i.i.d. N(0,1) entries; b_i = B_i x + noise (least squares) or the
// indicator of B_i x + noise > 0 (logistic). Losses are per-sample averages
// unless `sample_average` is off.
inline SyntheticInstance gen_synthetic(const SyntheticSpec& spec) {
  if (spec.agents == 0 || spec.dimension <= 0 || spec.samples_per_agent <= 0) {
    throw ValidationError("synthetic dimensions must be positive");
  }
  if (!(spec.sparsity >= 0.0 && spec.sparsity <= 1.0)) {
    throw ValidationError("sparsity must lie in [0, 1]");
  }
  if (!(spec.noise_level >= 0.0)) throw ValidationError("noise level must be >= 0");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const Eigen::Index q = spec.dimension;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto nonzeros = static_cast<std::size_t>(
      std::llround(spec.sparsity * static_cast<double>(q)));
  Vector planted = Vector::Zero(q);
  for (std::size_t j = 0; j < nonzeros; ++j) planted(order[j]) = normal(rng);

  std::vector<LocalLoss> losses;
  losses.reserve(spec.agents);
  for (std::size_t i = 0; i < spec.agents; ++i) {
    Matrix b(spec.samples_per_agent, q);
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < q; ++c) b(r, c) = normal(rng);
    Vector t = b * planted;
    for (Eigen::Index r = 0; r < t.size(); ++r) t(r) += spec.noise_level * normal(rng);
    if (spec.loss == LossKind::kLogistic) {
      t = t.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    }
    const double weight =
        spec.sample_average ? 1.0 / static_cast<double>(spec.samples_per_agent)
                            : 1.0;
    losses.emplace_back(spec.loss, std::move(b), std::move(t), weight);
  }
  return {ProblemInstance(std::move(losses), spec.regularizer, spec.prox_weight),
          std::move(planted)};
}

}  // namespace dprecal

#endif  // DPRECAL_SYNTHETIC_HPP_
