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

// Error metrics, counters, rate fitting and the reference-solution oracle.

#ifndef DPRECAL_METRICS_HPP_
#define DPRECAL_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/error.hpp"
#include "dprecal/objective.hpp"
#include "dprecal/state.hpp"

namespace dprecal {

struct IterationRecord {
  std::size_t k = 0;           // completed relay steps
  std::size_t active = 0;      // 1-based agent that ran step k; 0 for k = 0
  double relative_error = 0.0;
  double s_norm = 0.0;
  double consensus = 0.0;
  std::size_t communications = 0;
  std::size_t lci = 0;
  double epsilon = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

// Primal minimizer x* and the matching saddle point
// (lambda*, x*, y*) with y*_i = x* and lambda*_i = grad f_i(x*).
struct ReferenceSolution {
  Vector x;
  std::vector<Vector> lambda;
  std::size_t iterations = 0;
  double gradient_mapping = 0.0;
  double optimality_violation = 0.0;
};

namespace detail {

inline double smooth_lipschitz_bound(const ProblemInstance& p) {
  bool uniform = true;
  for (const auto& f : p.losses()) {
    uniform &= f.kind() == p.loss(0).kind() && f.weight() == p.loss(0).weight();
  }
  if (!uniform) {
    double s = 0.0;
    for (const auto& f : p.losses()) s += f.lipschitz();
    return s;
  }
  Eigen::Index rows = 0;
  for (const auto& f : p.losses()) rows += f.samples();
  Matrix stacked(rows, p.dimension());
  Eigen::Index r = 0;
  for (const auto& f : p.losses()) {
    stacked.middleRows(r, f.samples()) = f.data();
    r += f.samples();
  }
  const double top = largest_gram_eigenvalue(stacked, 1e-12);
  // Power iteration approaches from below; pad slightly.
  const double scale = p.loss(0).weight() *
                       (p.loss(0).kind() == LossKind::kLogistic ? 0.25 : 1.0);
  return scale * top * (1.0 + 1e-9);
}

}  // namespace detail

// Accelerated proximal gradient with adaptive restart on
// sum_i f_i(x) + w r(x), run until the gradient-mapping norm drops below
// tol * (1 + ||grad F(0)||), then polished until it stops improving.
inline ReferenceSolution reference_solution(const ProblemInstance& p,
                                            double tol = 1e-12,
                                            std::size_t max_iter = 1000000) {
  const Eigen::Index q = p.dimension();
  const double lip = detail::smooth_lipschitz_bound(p);
  const double w = p.prox_weight();
  ReferenceSolution ref;
  if (lip == 0.0) {
    // Purely regularized problem: the minimizer of w r is 0.
    ref.x = Vector::Zero(q);
  } else {
    const double step = 1.0 / lip;
    const double scale = 1.0 + p.smooth_gradient(Vector::Zero(q)).norm();
    auto mapping = [&](const Vector& x, const Vector& grad) {
      return Vector((x - prox_reg(p.regularizer(), x - step * grad, step * w)) /
                    step);
    };
    Vector x = Vector::Zero(q);
    Vector z = x;
    double t = 1.0;
    bool done = false;
    double best = std::numeric_limits<double>::infinity();
    Vector best_x = x;
    constexpr std::size_t kStall = 200, kPolishCap = 20000;
    std::size_t stall = 0, polish = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      const Vector gz = p.smooth_gradient(z);
      const Vector next = prox_reg(p.regularizer(), z - step * gz, step * w);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      if ((z - next).dot(next - x) > 0.0) {
        z = next;
        t = 1.0;
      } else {
        z = next + ((t - 1.0) / t_next) * (next - x);
        t = t_next;
      }
      x = next;
      ref.iterations = it + 1;
      const double gm = mapping(x, p.smooth_gradient(x)).norm();
      if (gm < best) {
        best = gm;
        best_x = x;
        stall = 0;
      } else {
        ++stall;
      }
      if (gm <= tol * scale) done = true;
      // Past the tolerance, keep polishing until roundoff stalls progress.
      if (done && (stall >= kStall || ++polish >= kPolishCap)) break;
    }
    if (!done) {
      throw OracleError("reference solver hit its iteration cap (" +
                        std::to_string(max_iter) +
                        ") with gradient mapping " + std::to_string(best));
    }
    ref.x = best_x;
    ref.gradient_mapping = best;
  }
  ref.lambda.reserve(p.agents());
  Vector sum = Vector::Zero(q);
  for (const auto& f : p.losses()) {
    ref.lambda.push_back(f.gradient(ref.x));
    sum += ref.lambda.back();
  }
  ref.optimality_violation =
      p.regularizer().subgradient_violation(ref.x, -sum, w);
  const double scale = 1.0 + p.smooth_gradient(Vector::Zero(q)).norm();
  if (ref.optimality_violation > 1e-8 * scale) {
    throw OracleError("reference solution fails the optimality check (" +
                      std::to_string(ref.optimality_violation) + ")");
  }
  return ref;
}

// ||x - x*|| / ||x0 - x*||; falls back to the absolute error when x0 = x*.
inline double relative_error(const Vector& x, const Vector& x_star,
                             const Vector& x0) {
  const double den = (x0 - x_star).norm();
  const double num = (x - x_star).norm();
  return den > 0.0 ? num / den : num;
}

inline double consensus_residual(const RunState& s) {
  double worst = 0.0;
  for (const auto& a : s.agents) worst = std::max(worst, (a.y - s.x).norm());
  return worst;
}

// sqrt(||lambda - lambda*||^2 / beta + ||x - x*||^2
//      + sum_i ||y_i - x*||^2 / alpha_i).
inline double s_norm_dist(const RunState& s, const ReferenceSolution& ref,
                          double beta) {
  double acc = (s.x - ref.x).squaredNorm();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    acc += (a.lambda - ref.lambda[i]).squaredNorm() / beta;
    acc += (a.y - ref.x).squaredNorm() / a.alpha;
  }
  return std::sqrt(acc);
}

// Activation counts tau_i, their maximum (LCI) and baton transfers.
class Counters {
 public:
  explicit Counters(std::size_t agents) : tau_(agents, 0) {}

  void record(AgentId active) {
    const std::size_t t = ++tau_.at(active);
    lci_ = std::max(lci_, t);
    ++communications_;
  }

  const std::vector<std::size_t>& activations() const noexcept { return tau_; }
  std::size_t lci() const noexcept { return lci_; }
  std::size_t communications() const noexcept { return communications_; }

 private:
  std::vector<std::size_t> tau_;
  std::size_t lci_ = 0;
  std::size_t communications_ = 0;
};

inline void update_counters(Counters& c, AgentId active) { c.record(active); }

struct RateFit {
  double slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares of ln(error) against the index, over the last
// `tail_fraction` of the sequence. R^2 is 1 when the tail is constant.
inline RateFit fit_linear_rate(std::span<const double> errors,
                               double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ValidationError("tail fraction must lie in (0, 1]");
  }
  const std::size_t n = errors.size();
  const auto count = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(n)));
  if (count < 10) throw ValidationError("rate fit needs at least 10 tail points");
  const std::size_t first = n - count;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    if (!(errors[i] > 0.0)) {
      throw ValidationError("non-positive error at index " + std::to_string(i));
    }
    sx += static_cast<double>(i);
    sy += std::log(errors[i]);
  }
  const double m = static_cast<double>(count);
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double dx = static_cast<double>(i) - mx;
    const double dy = std::log(errors[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.points = count;
  fit.slope = sxy / sxx;
  const double resid = syy - fit.slope * sxy;
  fit.r_squared = syy > 0.0 ? 1.0 - std::max(0.0, resid) / syy : 1.0;
  return fit;
}

// Drops everything from the first value at or below `floor` onward, so the
// fit only sees the part of the curve above numerical precision.
inline std::vector<double> above_floor(std::span<const double> errors,
                                       double floor = 1e-13) {
  std::vector<double> out;
  for (double e : errors) {
    if (!(e > floor)) break;
    out.push_back(e);
  }
  return out;
}

}  // namespace dprecal

#endif  // DPRECAL_METRICS_HPP_
