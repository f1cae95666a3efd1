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

// CSV ingestion: rectangular numeric table, last column is the label.

#ifndef DPRECAL_DATASET_HPP_
#define DPRECAL_DATASET_HPP_

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dprecal/error.hpp"
#include "dprecal/objective.hpp"

namespace dprecal {

struct Table {
  Matrix features;
  Vector labels;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_cell(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// A first row made only of non-numeric cells is taken as a header.
inline Table read_csv_table(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_row(line);
    std::vector<double> row;
    row.reserve(cells.size());
    std::size_t bad = 0;
    std::optional<std::size_t> first_bad;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = detail::parse_cell(cells[c]);
      if (!v) {
        ++bad;
        if (!first_bad) first_bad = c;
        continue;
      }
      row.push_back(*v);
    }
    if (bad == cells.size() && rows.empty() && width == 0) {
      width = cells.size();  // header
      continue;
    }
    if (first_bad) {
      throw ValidationError("csv line " + std::to_string(line_no) + ", column " +
                            std::to_string(*first_bad + 1) +
                            ": non-numeric cell '" +
                            std::string(cells[*first_bad]) + "'");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw ValidationError("csv line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("csv has no data rows");
  if (width < 2) throw ValidationError("csv needs at least one feature and a label");
  Table t;
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(width - 1);
  t.features.resize(r, f);
  t.labels.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < f; ++j) t.features(i, j) = row[static_cast<std::size_t>(j)];
    t.labels(i) = row.back();
  }
  return t;
}

// Min-max scaling of each column to [0, 1]; constant columns become 0.
inline void normalize_columns(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double lo = m.col(j).minCoeff();
    const double hi = m.col(j).maxCoeff();
    if (hi > lo) {
      m.col(j) = (m.col(j).array() - lo) / (hi - lo);
    } else {
      m.col(j).setZero();
    }
  }
}

// Contiguous shard sizes; the remainder goes to the first shards.
inline std::vector<Eigen::Index> shard_sizes(Eigen::Index rows, std::size_t n) {
  if (n == 0) throw ValidationError("need at least one agent");
  if (rows < static_cast<Eigen::Index>(n)) {
    throw ValidationError("dataset has " + std::to_string(rows) +
                          " rows, fewer than " + std::to_string(n) + " agents");
  }
  const auto nn = static_cast<Eigen::Index>(n);
  std::vector<Eigen::Index> sizes(n, rows / nn);
  for (Eigen::Index i = 0; i < rows % nn; ++i) ++sizes[static_cast<std::size_t>(i)];
  return sizes;
}

struct DatasetOptions {
  LossKind loss = LossKind::kLeastSquares;
  Regularizer regularizer = Regularizer::none();
  std::optional<double> prox_weight;
  bool sample_average = true;
};

inline ProblemInstance problem_from_table(Table t, std::size_t n,
                                          const DatasetOptions& opts) {
  normalize_columns(t.features);
  if (opts.loss == LossKind::kLogistic) {
    for (Eigen::Index i = 0; i < t.labels.size(); ++i) {
      const double v = t.labels(i);
      if (v == 1.0) {
        t.labels(i) = 1.0;
      } else if (v == -1.0 || v == 0.0) {
        t.labels(i) = 0.0;
      } else {
        throw ValidationError("logistic label on row " + std::to_string(i + 1) +
                              " must be +1, -1 or 0");
      }
    }
  }
  const auto sizes = shard_sizes(t.features.rows(), n);
  std::vector<LocalLoss> losses;
  losses.reserve(n);
  Eigen::Index offset = 0;
  for (Eigen::Index m : sizes) {
    const double weight = opts.sample_average ? 1.0 / static_cast<double>(m) : 1.0;
    losses.emplace_back(opts.loss, t.features.middleRows(offset, m),
                        t.labels.segment(offset, m), weight);
    offset += m;
  }
  return ProblemInstance(std::move(losses), opts.regularizer, opts.prox_weight);
}

inline ProblemInstance load_csv_dataset(const std::string& path, std::size_t n,
                                        const DatasetOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path + "'");
  return problem_from_table(read_csv_table(in), n, opts);
}

}  // namespace dprecal

#endif  // DPRECAL_DATASET_HPP_
