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

// Local smooth losses, the shared regularizer and its proximal map, and the
// stepsize conditions that make the primal-dual iteration convergent.

#ifndef DPRECAL_OBJECTIVE_HPP_
#define DPRECAL_OBJECTIVE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/error.hpp"
#include "dprecal/topology.hpp"

namespace dprecal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LossKind { kLeastSquares, kLogistic };

inline std::string_view to_string(LossKind k) {
  return k == LossKind::kLeastSquares ? "least-squares" : "logistic";
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "least-squares") return LossKind::kLeastSquares;
  if (s == "logistic") return LossKind::kLogistic;
  if (s == "likelihood" || s == "poisson") {
    throw UnsupportedError("loss kind '" + std::string(s) + "' is not supported");
  }
  throw ValidationError("unknown loss kind '" + std::string(s) + "'");
}

// Largest eigenvalue of B^T B by power iteration. Returns 0 for an empty or
// all-zero B.
inline double largest_gram_eigenvalue(const Matrix& b, double tol = 1e-10,
                                      std::size_t max_iter = 200000) {
  if (b.rows() == 0 || b.cols() == 0 || b.isZero(0.0)) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector v(b.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
  v.normalize();
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = b.transpose() * (b * v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - lambda) <= tol * next) return next;
    lambda = next;
  }
  return lambda;
}

// f_i(y) = c/2 ||B y - b||^2, or c (sum_j log(1 + e^{(By)_j}) - <b, By>)
// with labels b in {0,1}. The weight c defaults to 1; c = 1/m_i gives the
// per-sample average.
class LocalLoss {
 public:
  LocalLoss(LossKind kind, Matrix data, Vector targets, double weight = 1.0)
      : kind_(kind),
        data_(std::move(data)),
        targets_(std::move(targets)),
        weight_(weight) {
    if (!(weight_ > 0.0) || !std::isfinite(weight_)) {
      throw ValidationError("loss weight must be positive and finite");
    }
    if (data_.rows() != targets_.size()) {
      throw ValidationError("loss data has " + std::to_string(data_.rows()) +
                            " rows but " + std::to_string(targets_.size()) +
                            " targets");
    }
    if (kind_ == LossKind::kLogistic) {
      for (Eigen::Index j = 0; j < targets_.size(); ++j) {
        if (targets_(j) != 0.0 && targets_(j) != 1.0) {
          throw ValidationError("logistic labels must be 0 or 1");
        }
      }
    }
    const double top = weight_ * largest_gram_eigenvalue(data_);
    lipschitz_ = kind_ == LossKind::kLeastSquares ? top : 0.25 * top;
  }

  static LocalLoss least_squares(Matrix data, Vector targets,
                                 double weight = 1.0) {
    return {LossKind::kLeastSquares, std::move(data), std::move(targets), weight};
  }
  static LocalLoss logistic(Matrix data, Vector labels, double weight = 1.0) {
    return {LossKind::kLogistic, std::move(data), std::move(labels), weight};
  }

  LossKind kind() const noexcept { return kind_; }
  Eigen::Index dimension() const noexcept { return data_.cols(); }
  Eigen::Index samples() const noexcept { return data_.rows(); }
  const Matrix& data() const noexcept { return data_; }
  const Vector& targets() const noexcept { return targets_; }
  double weight() const noexcept { return weight_; }
  double lipschitz() const noexcept { return lipschitz_; }

  double value(const Vector& y) const {
    check_dim(y);
    if (kind_ == LossKind::kLeastSquares) {
      return 0.5 * weight_ * (data_ * y - targets_).squaredNorm();
    }
    const Vector z = data_ * y;
    double s = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) s += softplus(z(j));
    return weight_ * (s - targets_.dot(z));
  }

  Vector gradient(const Vector& y) const {
    check_dim(y);
    if (kind_ == LossKind::kLeastSquares) {
      return weight_ * (data_.transpose() * (data_ * y - targets_));
    }
    Vector z = data_ * y;
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = sigmoid(z(j)) - targets_(j);
    return weight_ * (data_.transpose() * z);
  }

 private:
  void check_dim(const Vector& y) const {
    if (y.size() != data_.cols()) {
      throw ValidationError("dimension mismatch: loss expects " +
                            std::to_string(data_.cols()) + ", got " +
                            std::to_string(y.size()));
    }
  }
  static double softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  static double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  LossKind kind_;
  Matrix data_;
  Vector targets_;
  double weight_ = 1.0;
  double lipschitz_ = 0.0;
};

inline Vector grad_local(const LocalLoss& loss, const Vector& y) {
  return loss.gradient(y);
}
inline double lipschitz(const LocalLoss& loss) { return loss.lipschitz(); }

enum class RegularizerKind { kNone, kL1, kElasticNet };

// r(x) = 0, nu ||x||_1, or nu1 ||x||_1 + nu2 ||x||^2.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::kNone;
  double l1 = 0.0;
  double l2 = 0.0;

  static Regularizer none() { return {}; }
  static Regularizer lasso(double nu) {
    return checked({RegularizerKind::kL1, nu, 0.0});
  }
  static Regularizer elastic_net(double nu1, double nu2) {
    return checked({RegularizerKind::kElasticNet, nu1, nu2});
  }

  static Regularizer checked(Regularizer r) {
    if (!(r.l1 >= 0.0) || !(r.l2 >= 0.0) || !std::isfinite(r.l1) ||
        !std::isfinite(r.l2)) {
      throw ValidationError("regularizer weights must be finite and >= 0");
    }
    return r;
  }

  double value(const Vector& x) const {
    switch (kind) {
      case RegularizerKind::kNone:
        return 0.0;
      case RegularizerKind::kL1:
        return l1 * x.lpNorm<1>();
      case RegularizerKind::kElasticNet:
        return l1 * x.lpNorm<1>() + l2 * x.squaredNorm();
    }
    return 0.0;
  }

  // Largest violation of g in the subdifferential of weight * r at x,
  // measured componentwise. Zero means exact membership.
  double subgradient_violation(const Vector& x, const Vector& g,
                               double weight) const {
    double worst = 0.0;
    const double a = kind == RegularizerKind::kNone ? 0.0 : weight * l1;
    const double c = kind == RegularizerKind::kElasticNet ? 2.0 * weight * l2 : 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double smooth = c * x(j);
      double v = 0.0;
      if (x(j) > 0.0) {
        v = std::abs(g(j) - smooth - a);
      } else if (x(j) < 0.0) {
        v = std::abs(g(j) - smooth + a);
      } else {
        v = std::max(0.0, std::abs(g(j)) - a);
      }
      worst = std::max(worst, v);
    }
    return worst;
  }
};

inline std::string_view to_string(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::kNone:
      return "none";
    case RegularizerKind::kL1:
      return "l1";
    case RegularizerKind::kElasticNet:
      return "elastic-net";
  }
  return "none";
}

inline RegularizerKind parse_regularizer_kind(std::string_view s) {
  if (s == "none") return RegularizerKind::kNone;
  if (s == "l1") return RegularizerKind::kL1;
  if (s == "elastic-net") return RegularizerKind::kElasticNet;
  if (s == "linf" || s == "fused-lasso") {
    throw UnsupportedError("regularizer '" + std::string(s) +
                           "' is not supported (use none, l1 or elastic-net)");
  }
  throw ValidationError("unknown regularizer '" + std::string(s) + "'");
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// prox_{w r}(z).
inline Vector prox_reg(const Regularizer& reg, const Vector& z, double weight) {
  switch (reg.kind) {
    case RegularizerKind::kNone:
      return z;
    case RegularizerKind::kL1:
      return z.unaryExpr(
          [t = weight * reg.l1](double v) { return soft_threshold(v, t); });
    case RegularizerKind::kElasticNet: {
      const double scale = 1.0 / (1.0 + 2.0 * weight * reg.l2);
      return z.unaryExpr([t = weight * reg.l1, scale](double v) {
        return scale * soft_threshold(v, t);
      });
    }
  }
  return z;
}

// sum_i f_i(x) + w r(x); w defaults to the agent count.
class ProblemInstance {
 public:
  ProblemInstance(std::vector<LocalLoss> losses, Regularizer reg,
                  std::optional<double> prox_weight = std::nullopt)
      : losses_(std::move(losses)), reg_(reg) {
    if (losses_.empty()) throw ValidationError("problem needs at least one agent");
    dim_ = losses_.front().dimension();
    if (dim_ <= 0) throw ValidationError("problem dimension must be positive");
    for (std::size_t i = 0; i < losses_.size(); ++i) {
      if (losses_[i].dimension() != dim_) {
        throw ValidationError("agent " + std::to_string(i + 1) +
                              " has dimension " +
                              std::to_string(losses_[i].dimension()) +
                              ", expected " + std::to_string(dim_));
      }
    }
    prox_weight_ = prox_weight.value_or(static_cast<double>(losses_.size()));
    if (!(prox_weight_ > 0.0) || !std::isfinite(prox_weight_)) {
      throw ValidationError("prox weight must be positive");
    }
  }

  std::size_t agents() const noexcept { return losses_.size(); }
  Eigen::Index dimension() const noexcept { return dim_; }
  const LocalLoss& loss(AgentId i) const { return losses_.at(i); }
  const std::vector<LocalLoss>& losses() const noexcept { return losses_; }
  const Regularizer& regularizer() const noexcept { return reg_; }
  double prox_weight() const noexcept { return prox_weight_; }

  Vector prox(const Vector& z) const { return prox_reg(reg_, z, prox_weight_); }

  double smooth_value(const Vector& x) const {
    double s = 0.0;
    for (const auto& f : losses_) s += f.value(x);
    return s;
  }
  Vector smooth_gradient(const Vector& x) const {
    Vector g = Vector::Zero(dim_);
    for (const auto& f : losses_) g += f.gradient(x);
    return g;
  }
  double value(const Vector& x) const {
    return smooth_value(x) + prox_weight_ * reg_.value(x);
  }

  double max_lipschitz() const {
    double l = 0.0;
    for (const auto& f : losses_) l = std::max(l, f.lipschitz());
    return l;
  }

 private:
  std::vector<LocalLoss> losses_;
  Regularizer reg_;
  Eigen::Index dim_ = 0;
  double prox_weight_ = 1.0;
};

inline double objective_value(const ProblemInstance& p, const Vector& x) {
  if (x.size() != p.dimension()) {
    throw ValidationError("dimension mismatch in objective_value");
  }
  return p.value(x);
}

// Per-agent primal stepsizes alpha_i and the coupling stepsize
// beta = 1 / (2 (n + 1)).
struct StepsizeSet {
  std::vector<double> alpha;
  double beta = 0.0;

  static double coupling_for(std::size_t n) {
    return 1.0 / (2.0 * (static_cast<double>(n) + 1.0));
  }

  static StepsizeSet explicit_values(std::vector<double> alpha) {
    StepsizeSet s;
    s.beta = coupling_for(alpha.size());
    s.alpha = std::move(alpha);
    return s;
  }

  // alpha_i = fraction * 2 / (L_i + 1).
  static StepsizeSet local_bound(const ProblemInstance& p, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
      throw ValidationError("stepsize fraction must lie in (0, 1)");
    }
    std::vector<double> a(p.agents());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = fraction * 2.0 / (p.loss(i).lipschitz() + 1.0);
    }
    return explicit_values(std::move(a));
  }

  double max_alpha() const {
    return alpha.empty() ? 0.0 : *std::max_element(alpha.begin(), alpha.end());
  }
};

enum class StepsizeCheck { kSimple, kMatrix };

struct StepsizeReport {
  bool ok = true;
  StepsizeCheck mode = StepsizeCheck::kSimple;
  std::vector<AgentId> violations;           // agents breaking the bound
  std::optional<double> smallest_eigenvalue;  // matrix mode only
  std::string message;
};

// Block matrix [[I, 0], [0, G^-1 - Q/2]] - beta [[U'U, -U'], [-U, I]] with
// U = 1 (x) I_q. Rows 0..q-1 hold x, then one q-block per agent.
inline Matrix stepsize_condition_matrix(const StepsizeSet& s,
                                        const ProblemInstance& p) {
  const Eigen::Index q = p.dimension();
  const auto n = static_cast<Eigen::Index>(p.agents());
  const double beta = s.beta;
  Matrix m = Matrix::Zero(q + n * q, q + n * q);
  m.topLeftCorner(q, q).diagonal().setConstant(1.0 - beta * static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index off = q + i * q;
    const double alpha = s.alpha[static_cast<std::size_t>(i)];
    const double li = p.loss(static_cast<AgentId>(i)).lipschitz();
    m.block(off, off, q, q).diagonal().setConstant(1.0 / alpha - 0.5 * li - beta);
    m.block(0, off, q, q).diagonal().setConstant(beta);
    m.block(off, 0, q, q).diagonal().setConstant(beta);
  }
  return m;
}

inline StepsizeReport validate_stepsizes(const StepsizeSet& s,
                                         const ProblemInstance& p,
                                         StepsizeCheck mode) {
  StepsizeReport r;
  r.mode = mode;
  if (s.alpha.size() != p.agents()) {
    throw ValidationError("expected " + std::to_string(p.agents()) +
                          " stepsizes, got " + std::to_string(s.alpha.size()));
  }
  for (std::size_t i = 0; i < s.alpha.size(); ++i) {
    if (!(s.alpha[i] > 0.0) || !std::isfinite(s.alpha[i])) {
      r.ok = false;
      r.violations.push_back(i);
    }
  }
  if (!r.ok) {
    r.message = "non-positive stepsize for agent " +
                std::to_string(r.violations.front() + 1);
    return r;
  }

  if (mode == StepsizeCheck::kSimple) {
    for (std::size_t i = 0; i < s.alpha.size(); ++i) {
      if (s.alpha[i] >= 2.0 / (p.loss(i).lipschitz() + 1.0)) {
        r.violations.push_back(i);
      }
    }
    r.ok = r.violations.empty();
    r.message = r.ok ? "alpha_i < 2/(L_i+1) for every agent"
                     : "alpha_i >= 2/(L_i+1) for agent " +
                           std::to_string(r.violations.front() + 1);
    return r;
  }

  const Matrix m = stepsize_condition_matrix(s, p);
  Eigen::LLT<Matrix> llt(m);
  r.ok = llt.info() == Eigen::Success;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  r.smallest_eigenvalue = eig.eigenvalues()(0);
  if (r.ok && *r.smallest_eigenvalue <= 0.0) r.ok = false;
  r.message = r.ok ? "condition matrix is positive definite"
                   : "condition matrix is not positive definite (smallest "
                     "eigenvalue " +
                         std::to_string(*r.smallest_eigenvalue) + ")";
  return r;
}

}  // namespace dprecal

#endif  // DPRECAL_OBJECTIVE_HPP_
