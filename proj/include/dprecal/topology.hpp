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

// Communication graph, relay transition matrix and stationary activation
// probabilities of the relay chain.
//
// Agent ids are 0-based everywhere in this header. Text I/O (read_graph /
// write_graph) uses 1-based ids.

#ifndef DPRECAL_TOPOLOGY_HPP_
#define DPRECAL_TOPOLOGY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dprecal/error.hpp"

namespace dprecal {

using AgentId = std::size_t;

struct Edge {
  AgentId a = 0;
  AgentId b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected, simple, connected graph. Immutable once built.
class Graph {
 public:
  // Validates and normalizes the edge list (each edge stored with a < b,
  // sorted). Throws ValidationError on self-loops, duplicates or bad
  // endpoints and ConnectivityError when some agent is unreachable.
  static Graph build(std::size_t n, std::vector<Edge> edges) {
    if (n == 0) throw ValidationError("graph needs at least one agent");
    for (Edge& e : edges) {
      if (e.a >= n || e.b >= n) {
        throw ValidationError("edge (" + std::to_string(e.a + 1) + "," +
                              std::to_string(e.b + 1) +
                              ") has an endpoint outside [1.." +
                              std::to_string(n) + "]");
      }
      if (e.a == e.b) {
        throw ValidationError("self-loop at agent " + std::to_string(e.a + 1));
      }
      if (e.a > e.b) std::swap(e.a, e.b);
    }
    std::sort(edges.begin(), edges.end());
    auto dup = std::adjacent_find(edges.begin(), edges.end());
    if (dup != edges.end()) {
      throw ValidationError("duplicate edge (" + std::to_string(dup->a + 1) +
                            "," + std::to_string(dup->b + 1) + ")");
    }

    Graph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.neighbors_.assign(n, {});
    for (const Edge& e : g.edges_) {
      g.neighbors_[e.a].push_back(e.b);
      g.neighbors_[e.b].push_back(e.a);
    }
    for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());

    // Breadth-first reachability from agent 0.
    std::vector<bool> seen(n, false);
    std::queue<AgentId> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
      AgentId v = frontier.front();
      frontier.pop();
      for (AgentId w : g.neighbors_[v]) {
        if (!seen[w]) {
          seen[w] = true;
          ++reached;
          frontier.push(w);
        }
      }
    }
    if (reached != n) {
      auto it = std::find(seen.begin(), seen.end(), false);
      throw ConnectivityError(
          "graph is disconnected: agent " +
          std::to_string(std::distance(seen.begin(), it) + 1) +
          " is unreachable from agent 1");
    }
    return g;
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<AgentId>& neighbors(AgentId i) const {
    return neighbors_.at(i);
  }
  std::size_t degree(AgentId i) const { return neighbors_.at(i).size(); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(n_);
    for (AgentId i = 0; i < n_; ++i) d[i] = neighbors_[i].size();
    return d;
  }

  bool has_edge(AgentId i, AgentId j) const {
    const auto& nb = neighbors_.at(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

 private:
  Graph() = default;

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<AgentId>> neighbors_;
};

inline Graph build_graph(std::size_t n, std::vector<Edge> edges) {
  return Graph::build(n, std::move(edges));
}

struct GraphMatrices {
  Eigen::MatrixXd degree;     // D
  Eigen::MatrixXd laplacian;  // L = D - adjacency
};

inline GraphMatrices graph_matrices(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  GraphMatrices m{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (AgentId i = 0; i < g.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    m.degree(ii, ii) = static_cast<double>(g.degree(i));
  }
  m.laplacian = m.degree;
  for (const Edge& e : g.edges()) {
    const auto a = static_cast<Eigen::Index>(e.a);
    const auto b = static_cast<Eigen::Index>(e.b);
    m.laplacian(a, b) -= 1.0;
    m.laplacian(b, a) -= 1.0;
  }
  return m;
}

// Row-stochastic relay matrix with uniform neighbor choice, P_ij = 1/d_i on
// edges. A single isolated agent (n == 1) relays to itself.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(const Graph& g)
      : dense_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()),
                                     static_cast<Eigen::Index>(g.size()))),
        rows_(g.size()) {
    for (AgentId i = 0; i < g.size(); ++i) {
      const auto& nb = g.neighbors(i);
      if (nb.empty()) {
        rows_[i].push_back({i, 1.0});
        dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
            1.0;
        continue;
      }
      const double p = 1.0 / static_cast<double>(nb.size());
      for (AgentId j : nb) {
        rows_[i].push_back({j, p});
        dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
      }
    }
  }

  struct Entry {
    AgentId to;
    double probability;
  };

  std::size_t size() const noexcept { return rows_.size(); }
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }
  const std::vector<Entry>& row(AgentId i) const { return rows_.at(i); }
  double operator()(AgentId i, AgentId j) const {
    return dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd dense_;
  std::vector<std::vector<Entry>> rows_;
};

inline TransitionMatrix transition_matrix(const Graph& g) {
  return TransitionMatrix(g);
}

// Second construction route, P = I - D^{-1} L. Used to cross-check the
// edge-wise construction.
inline Eigen::MatrixXd transition_from_laplacian(const Graph& g) {
  const GraphMatrices m = graph_matrices(g);
  const auto n = m.degree.rows();
  if (n == 1) return Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd inv_d = m.degree.diagonal().cwiseInverse();
  return Eigen::MatrixXd::Identity(n, n) - inv_d.asDiagonal() * m.laplacian;
}

struct ActivationProbabilities {
  Eigen::VectorXd g;

  double max() const { return g.maxCoeff(); }
};

// Solves (D^-1 L^2 D^-1 + 1 1^T) g = 1, the normal-equation form of the
// stationarity system [L D^-1; 1^T] g = [0; 1].
inline Eigen::VectorXd solve_activation_system(const Graph& g) {
  const GraphMatrices m = graph_matrices(g);
  const auto n = m.degree.rows();
  if (n == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd inv_d = m.degree.diagonal().cwiseInverse();
  Eigen::MatrixXd ldinv = m.laplacian * inv_d.asDiagonal();
  Eigen::MatrixXd system =
      ldinv.transpose() * ldinv + Eigen::MatrixXd::Ones(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw InternalError("activation system is not positive definite");
  }
  return llt.solve(Eigen::VectorXd::Ones(n));
}

// Closed form g = D 1 / (1^T D 1).
inline Eigen::VectorXd degree_proportional_law(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i) = static_cast<double>(g.degree(static_cast<AgentId>(i)));
  }
  return d / d.sum();
}

// Linear-system route, cross-checked against the closed form.
inline ActivationProbabilities activation_probabilities(const Graph& g) {
  Eigen::VectorXd solved = solve_activation_system(g);
  Eigen::VectorXd closed = degree_proportional_law(g);
  if ((solved - closed).lpNorm<Eigen::Infinity>() > 1e-8 ||
      solved.minCoeff() <= 0.0) {
    throw InternalError("activation system solution disagrees with D1/(1'D1)");
  }
  return {std::move(solved)};
}

// Draws the next baton holder from row `current` of P.
template <class Rng>
AgentId sample_next(const TransitionMatrix& p, AgentId current, Rng& rng) {
  const auto& row = p.row(current);
  if (row.size() == 1) return row.front().to;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double draw = unit(rng);
  for (const auto& e : row) {
    draw -= e.probability;
    if (draw < 0.0) return e.to;
  }
  return row.back().to;
}

// ---------------------------------------------------------------------------
// Generators

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (AgentId i = 0; i < n; ++i)
    for (AgentId j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Graph::build(n, std::move(edges));
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (AgentId i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph::build(n, std::move(edges));
}

// Cycle on n >= 3 agents; degenerates to the path graph for n <= 2.
inline Graph ring_graph(std::size_t n) {
  if (n <= 2) return path_graph(n);
  std::vector<Edge> edges;
  for (AgentId i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Graph::build(n, std::move(edges));
}

// G(n, p) conditioned on connectivity by rejection.
template <class Rng>
Graph erdos_renyi_graph(std::size_t n, double p, Rng& rng,
                        std::size_t max_attempts = 10000) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ValidationError("edge probability must lie in (0, 1]");
  }
  std::bernoulli_distribution coin(p);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Edge> edges;
    for (AgentId i = 0; i < n; ++i)
      for (AgentId j = i + 1; j < n; ++j)
        if (coin(rng)) edges.push_back({i, j});
    try {
      return Graph::build(n, std::move(edges));
    } catch (const ConnectivityError&) {
    }
  }
  throw ConnectivityError("no connected G(n,p) sample after " +
                          std::to_string(max_attempts) + " attempts");
}

// Parses `complete`, `ring`, `path` or `erdos-renyi:<p>`.
template <class Rng>
Graph graph_from_spec(const std::string& spec, std::size_t n, Rng& rng) {
  if (spec == "complete") return complete_graph(n);
  if (spec == "ring") return ring_graph(n);
  if (spec == "path") return path_graph(n);
  const std::string er = "erdos-renyi:";
  if (spec.rfind(er, 0) == 0) {
    const std::string tail = spec.substr(er.size());
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tail.size()) {
      throw ValidationError("bad edge probability in topology '" + spec + "'");
    }
    return erdos_renyi_graph(n, p, rng);
  }
  throw ValidationError("unknown topology '" + spec +
                        "' (expected complete|ring|path|erdos-renyi:<p>)");
}

// Text format: first line `n m`, then m lines `i j` with 1-based ids.
inline Graph read_graph(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) throw ValidationError("graph file: missing 'n m' header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    long long i = 0, j = 0;
    if (!(in >> i >> j)) {
      throw ValidationError("graph file: expected " + std::to_string(m) +
                            " edges, got " + std::to_string(k));
    }
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > n ||
        static_cast<std::size_t>(j) > n) {
      throw ValidationError("graph file: edge " + std::to_string(k + 1) +
                            " has an endpoint outside [1.." +
                            std::to_string(n) + "]");
    }
    edges.push_back({static_cast<AgentId>(i - 1), static_cast<AgentId>(j - 1)});
  }
  return Graph::build(n, std::move(edges));
}

inline void write_graph(std::ostream& out, const Graph& g) {
  out << g.size() << ' ' << g.edges().size() << '\n';
  for (const Edge& e : g.edges()) out << e.a + 1 << ' ' << e.b + 1 << '\n';
}

}  // namespace dprecal

#endif  // DPRECAL_TOPOLOGY_HPP_
