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

// Result bundles and their on-disk form.
//
// `<stem>.summary.json` holds one JSON document:
//   {"format": "dprecal-summary", "version": 1, "config": {...}, "summary": {...}}
// `<stem>.records.jsonl` holds one IterationRecord per line, sorted by k:
//   {"k":..,"active":..,"relative_error":..,"s_norm":..,"consensus":..,
//    "communications":..,"lci":..,"epsilon":..}
// An empty trajectory writes the summary only.

#ifndef DPRECAL_RESULTS_HPP_
#define DPRECAL_RESULTS_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dprecal/error.hpp"
#include "dprecal/metrics.hpp"

namespace dprecal {

struct RunSummary {
  std::size_t iterations = 0;
  std::size_t agents = 0;
  std::size_t dimension = 0;
  double final_relative_error = 0.0;
  double final_s_norm = 0.0;
  double final_consensus = 0.0;
  std::size_t communications = 0;
  std::size_t lci = 0;
  std::vector<std::size_t> activations;
  bool private_run = false;
  double sigma1_sq = 0.0;
  std::size_t planned_lci = 0;
  double prospective_epsilon = 0.0;
  double realized_epsilon = 0.0;
  double realized_zcdp = 0.0;
  std::optional<double> rate_slope;
  std::optional<double> rate_r_squared;
  std::size_t reference_iterations = 0;
  std::vector<double> x_final;

  bool operator==(const RunSummary&) const = default;
};

struct ResultBundle {
  nlohmann::json config;
  RunSummary summary;
  std::vector<IterationRecord> records;

  bool operator==(const ResultBundle&) const = default;
};

inline nlohmann::json record_to_json(const IterationRecord& r) {
  return nlohmann::json{{"k", r.k},
                        {"active", r.active},
                        {"relative_error", r.relative_error},
                        {"s_norm", r.s_norm},
                        {"consensus", r.consensus},
                        {"communications", r.communications},
                        {"lci", r.lci},
                        {"epsilon", r.epsilon}};
}

inline IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.k = j.at("k").get<std::size_t>();
  r.active = j.at("active").get<std::size_t>();
  r.relative_error = j.at("relative_error").get<double>();
  r.s_norm = j.at("s_norm").get<double>();
  r.consensus = j.at("consensus").get<double>();
  r.communications = j.at("communications").get<std::size_t>();
  r.lci = j.at("lci").get<std::size_t>();
  r.epsilon = j.at("epsilon").get<double>();
  return r;
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"iterations", s.iterations},
              {"agents", s.agents},
              {"dimension", s.dimension},
              {"final_relative_error", s.final_relative_error},
              {"final_s_norm", s.final_s_norm},
              {"final_consensus", s.final_consensus},
              {"communications", s.communications},
              {"lci", s.lci},
              {"activations", s.activations},
              {"private", s.private_run},
              {"sigma1_sq", s.sigma1_sq},
              {"planned_lci", s.planned_lci},
              {"prospective_epsilon", s.prospective_epsilon},
              {"realized_epsilon", s.realized_epsilon},
              {"realized_zcdp", s.realized_zcdp},
              {"rate_slope", opt(s.rate_slope)},
              {"rate_r_squared", opt(s.rate_r_squared)},
              {"reference_iterations", s.reference_iterations},
              {"x_final", s.x_final}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  RunSummary s;
  s.iterations = j.at("iterations").get<std::size_t>();
  s.agents = j.at("agents").get<std::size_t>();
  s.dimension = j.at("dimension").get<std::size_t>();
  s.final_relative_error = j.at("final_relative_error").get<double>();
  s.final_s_norm = j.at("final_s_norm").get<double>();
  s.final_consensus = j.at("final_consensus").get<double>();
  s.communications = j.at("communications").get<std::size_t>();
  s.lci = j.at("lci").get<std::size_t>();
  s.activations = j.at("activations").get<std::vector<std::size_t>>();
  s.private_run = j.at("private").get<bool>();
  s.sigma1_sq = j.at("sigma1_sq").get<double>();
  s.planned_lci = j.at("planned_lci").get<std::size_t>();
  s.prospective_epsilon = j.at("prospective_epsilon").get<double>();
  s.realized_epsilon = j.at("realized_epsilon").get<double>();
  s.realized_zcdp = j.at("realized_zcdp").get<double>();
  s.rate_slope = opt("rate_slope");
  s.rate_r_squared = opt("rate_r_squared");
  s.reference_iterations = j.at("reference_iterations").get<std::size_t>();
  s.x_final = j.at("x_final").get<std::vector<double>>();
  return s;
}

inline std::string summary_path(const std::string& stem) { return stem + ".summary.json"; }
inline std::string records_path(const std::string& stem) { return stem + ".records.jsonl"; }

inline std::string summary_document(const ResultBundle& b) {
  const nlohmann::json doc{{"format", "dprecal-summary"},
                           {"version", 1},
                           {"config", b.config},
                           {"summary", summary_to_json(b.summary)}};
  return doc.dump(2) + "\n";
}

inline std::string records_document(const ResultBundle& b) {
  std::string out;
  for (const auto& r : b.records) out += record_to_json(r).dump() + "\n";
  return out;
}

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace detail

inline void emit_results(const ResultBundle& b, const std::string& stem) {
  for (std::size_t i = 1; i < b.records.size(); ++i) {
    if (b.records[i].k <= b.records[i - 1].k) {
      throw InternalError("records are not sorted by k");
    }
  }
  detail::write_file(summary_path(stem), summary_document(b));
  if (b.records.empty()) {
    std::error_code ec;
    std::filesystem::remove(records_path(stem), ec);
    return;
  }
  detail::write_file(records_path(stem), records_document(b));
}

inline ResultBundle load_results(const std::string& stem) {
  ResultBundle b;
  std::ifstream in(summary_path(stem));
  if (!in) throw Error("cannot open '" + summary_path(stem) + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("format") != "dprecal-summary" || doc.at("version") != 1) {
      throw Error("unsupported summary format in '" + summary_path(stem) + "'");
    }
    b.config = doc.at("config");
    b.summary = summary_from_json(doc.at("summary"));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed summary '" + summary_path(stem) + "': " + e.what());
  }
  std::ifstream rin(records_path(stem));
  if (!rin) return b;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(rin, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      b.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(records_path(stem) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return b;
}

}  // namespace dprecal

#endif  // DPRECAL_RESULTS_HPP_
