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

// Run configuration: a JSON document with a strict schema. Unknown keys
// and out-of-range values are rejected with the JSON-pointer path of the
// offending field.
//
//   {
//     "iterations": 10000,                       // required, >= 0
//     "agents": 8,
//     "topology": "ring",     // complete|ring|path|erdos-renyi:<p>|file:<path>
//     "problem": {
//       "source": "synthetic",                   // or "csv"
//       "path": "data.csv",                      // csv only
//       "dimension": 20, "samples_per_agent": 30,
//       "noise_level": 0.01, "sparsity": 0.5,    // synthetic only
//       "loss": "least-squares",                 // or "logistic"
//       "regularizer": {"kind": "l1", "nu": 0.1},
//       "prox_weight": 8,                        // default: agent count
//       "sample_average": true
//     },
//     "stepsize": {"mode": "local-bound", "fraction": 0.9},
//                 // or {"mode": "explicit", "values": [...]}
//     "privacy": {"enabled": true, "delta": 1e-3, "attenuation": 1.05,
//                 "target_epsilon": 5, "planned_lci": 1250},
//                 // or "sigma1_sq" instead of "target_epsilon"
//     "seeds": {"relay": 1, "noise": 2, "data": 3},
//     "start_agent": 1,
//     "tail_fraction": 0.5,
//     "record_stride": 1,
//     "output": "results/run"
//   }

#ifndef DPRECAL_CONFIG_HPP_
#define DPRECAL_CONFIG_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dprecal/error.hpp"
#include "dprecal/objective.hpp"

namespace dprecal {

using Json = nlohmann::json;

struct ProblemConfig {
  std::string source = "synthetic";
  std::string path;
  Eigen::Index dimension = 20;
  Eigen::Index samples_per_agent = 30;
  double noise_level = 0.01;
  double sparsity = 0.5;
  LossKind loss = LossKind::kLeastSquares;
  Regularizer regularizer = Regularizer::lasso(0.1);
  std::optional<double> prox_weight;
  bool sample_average = true;
};

struct StepsizeConfig {
  std::string mode = "local-bound";
  double fraction = 0.9;
  std::vector<double> values;
};

struct PrivacyConfig {
  bool enabled = false;
  double delta = 1e-3;
  double attenuation = 1.05;
  std::optional<double> sigma1_sq;
  std::optional<double> target_epsilon;
  std::optional<std::size_t> planned_lci;
};

struct SeedConfig {
  std::uint64_t relay = 1;
  std::uint64_t noise = 2;
  std::uint64_t data = 3;
};

struct RunConfig {
  std::size_t iterations = 0;
  std::size_t agents = 8;
  std::string topology = "ring";
  ProblemConfig problem;
  StepsizeConfig stepsize;
  PrivacyConfig privacy;
  SeedConfig seeds;
  std::size_t start_agent = 1;  // 1-based
  double tail_fraction = 0.5;
  std::size_t record_stride = 1;
  std::string output;
};

namespace detail {

// Reads members of one JSON object and rejects leftovers.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }

  const Json& raw(const std::string& key) { seen_.insert(key); return j_.at(key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "must be finite");
    return d;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key, 0.0);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      const auto signed_value = v.get<std::int64_t>();
      if (signed_value < 0) throw ConfigError(child(key), "must be a non-negative integer");
      return static_cast<std::uint64_t>(signed_value);
    }
    throw ConfigError(child(key), "expected a non-negative integer");
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(child(it.key()), "unknown key");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "/" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Regularizer read_regularizer(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind_name = r.string("kind", "l1");
  RegularizerKind kind;
  try {
    kind = parse_regularizer_kind(kind_name);
  } catch (const Error& e) {
    throw ConfigError(r.child("kind"), e.what());
  }
  Regularizer reg;
  reg.kind = kind;
  if (kind == RegularizerKind::kL1) {
    reg.l1 = r.number("nu", 0.1);
  } else if (kind == RegularizerKind::kElasticNet) {
    reg.l1 = r.number("nu1", 0.1);
    reg.l2 = r.number("nu2", 0.1);
  }
  if (reg.l1 < 0.0 || reg.l2 < 0.0) throw ConfigError(path, "weights must be >= 0");
  r.finish();
  return reg;
}

}  // namespace detail

// Validates a parsed document and fills defaults.
inline RunConfig config_from_json(const Json& doc) {
  using detail::ObjectReader;
  RunConfig c;
  ObjectReader r(doc, "");
  if (!r.has("iterations")) throw ConfigError("/iterations", "required field missing");
  c.iterations = r.unsigned_integer("iterations", 0);
  c.agents = r.unsigned_integer("agents", c.agents);
  if (c.agents < 1) throw ConfigError("/agents", "must be >= 1");
  c.topology = r.string("topology", c.topology);
  c.start_agent = r.unsigned_integer("start_agent", c.start_agent);
  if (c.start_agent < 1 || c.start_agent > c.agents) {
    throw ConfigError("/start_agent", "must lie in [1.." + std::to_string(c.agents) + "]");
  }
  c.tail_fraction = r.number("tail_fraction", c.tail_fraction);
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) {
    throw ConfigError("/tail_fraction", "must lie in (0, 1]");
  }
  c.record_stride = r.unsigned_integer("record_stride", c.record_stride);
  if (c.record_stride < 1) throw ConfigError("/record_stride", "must be >= 1");
  c.output = r.string("output", "");

  if (c.topology.rfind("file:", 0) == 0) {
    const std::string gpath = c.topology.substr(5);
    if (!std::filesystem::exists(gpath)) {
      throw ConfigError("/topology", "graph file '" + gpath + "' does not exist");
    }
  } else if (c.topology != "complete" && c.topology != "ring" &&
             c.topology != "path" && c.topology.rfind("erdos-renyi:", 0) != 0) {
    throw ConfigError("/topology", "expected complete|ring|path|erdos-renyi:<p>|file:<path>");
  }

  if (r.has("problem")) {
    ObjectReader p(r.raw("problem"), "/problem");
    auto& pc = c.problem;
    pc.source = p.string("source", pc.source);
    if (pc.source == "csv") {
      pc.path = p.string("path", "");
      if (pc.path.empty()) throw ConfigError("/problem/path", "required for csv source");
      if (!std::filesystem::exists(pc.path)) {
        throw ConfigError("/problem/path", "file '" + pc.path + "' does not exist");
      }
    } else if (pc.source == "synthetic") {
      pc.dimension = static_cast<Eigen::Index>(p.unsigned_integer("dimension", 20));
      pc.samples_per_agent =
          static_cast<Eigen::Index>(p.unsigned_integer("samples_per_agent", 30));
      if (pc.dimension < 1) throw ConfigError("/problem/dimension", "must be >= 1");
      if (pc.samples_per_agent < 1) {
        throw ConfigError("/problem/samples_per_agent", "must be >= 1");
      }
      pc.noise_level = p.number("noise_level", pc.noise_level);
      if (pc.noise_level < 0.0) throw ConfigError("/problem/noise_level", "must be >= 0");
      pc.sparsity = p.number("sparsity", pc.sparsity);
      if (!(pc.sparsity >= 0.0 && pc.sparsity <= 1.0)) {
        throw ConfigError("/problem/sparsity", "must lie in [0, 1]");
      }
    } else {
      throw ConfigError("/problem/source", "expected 'synthetic' or 'csv'");
    }
    try {
      pc.loss = parse_loss_kind(p.string("loss", "least-squares"));
    } catch (const Error& e) {
      throw ConfigError("/problem/loss", e.what());
    }
    if (p.has("regularizer")) {
      pc.regularizer = detail::read_regularizer(p.raw("regularizer"), "/problem/regularizer");
    }
    pc.prox_weight = p.optional_number("prox_weight");
    if (pc.prox_weight && !(*pc.prox_weight > 0.0)) {
      throw ConfigError("/problem/prox_weight", "must be > 0");
    }
    pc.sample_average = p.boolean("sample_average", pc.sample_average);
    p.finish();
  }

  if (r.has("stepsize")) {
    ObjectReader s(r.raw("stepsize"), "/stepsize");
    auto& sc = c.stepsize;
    sc.mode = s.string("mode", sc.mode);
    if (sc.mode == "local-bound") {
      sc.fraction = s.number("fraction", sc.fraction);
      if (!(sc.fraction > 0.0 && sc.fraction < 1.0)) {
        throw ConfigError("/stepsize/fraction", "must lie in (0, 1)");
      }
    } else if (sc.mode == "explicit") {
      if (!s.has("values") || !s.raw("values").is_array()) {
        throw ConfigError("/stepsize/values", "expected an array of stepsizes");
      }
      const Json& vals = s.raw("values");
      if (vals.size() != c.agents) {
        throw ConfigError("/stepsize/values", "expected " + std::to_string(c.agents) +
                                                  " entries, got " +
                                                  std::to_string(vals.size()));
      }
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (!vals[i].is_number() || !(vals[i].get<double>() > 0.0)) {
          throw ConfigError("/stepsize/values/" + std::to_string(i), "must be a positive number");
        }
        sc.values.push_back(vals[i].get<double>());
      }
    } else {
      throw ConfigError("/stepsize/mode", "expected 'local-bound' or 'explicit'");
    }
    s.finish();
  }

  if (r.has("privacy")) {
    ObjectReader pr(r.raw("privacy"), "/privacy");
    auto& pc = c.privacy;
    pc.enabled = pr.boolean("enabled", true);
    pc.delta = pr.number("delta", pc.delta);
    if (!(pc.delta > 0.0 && pc.delta < 1.0)) throw ConfigError("/privacy/delta", "must lie in (0, 1)");
    pc.attenuation = pr.number("attenuation", pc.attenuation);
    if (!(pc.attenuation > 1.0)) throw ConfigError("/privacy/attenuation", "must be > 1");
    pc.sigma1_sq = pr.optional_number("sigma1_sq");
    pc.target_epsilon = pr.optional_number("target_epsilon");
    if (pc.sigma1_sq && pc.target_epsilon) {
      throw ConfigError("/privacy", "sigma1_sq and target_epsilon are mutually exclusive");
    }
    if (pc.sigma1_sq && !(*pc.sigma1_sq > 0.0)) throw ConfigError("/privacy/sigma1_sq", "must be > 0");
    if (pc.target_epsilon && !(*pc.target_epsilon > 0.0)) {
      throw ConfigError("/privacy/target_epsilon", "must be > 0");
    }
    if (pr.has("planned_lci") && !pr.raw("planned_lci").is_null()) {
      pc.planned_lci = pr.unsigned_integer("planned_lci", 0);
      if (*pc.planned_lci < 1) throw ConfigError("/privacy/planned_lci", "must be >= 1");
    }
    if (pc.enabled && !pc.sigma1_sq && !pc.target_epsilon) {
      throw ConfigError("/privacy", "enabled privacy needs sigma1_sq or target_epsilon");
    }
    pr.finish();
  }

  if (r.has("seeds")) {
    ObjectReader s(r.raw("seeds"), "/seeds");
    c.seeds.relay = s.unsigned_integer("relay", c.seeds.relay);
    c.seeds.noise = s.unsigned_integer("noise", c.seeds.noise);
    c.seeds.data = s.unsigned_integer("data", c.seeds.data);
    s.finish();
  }
  r.finish();
  return c;
}

// Canonical echo with every default made explicit; config_from_json of the
// result reproduces the same config.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["iterations"] = c.iterations;
  j["agents"] = c.agents;
  j["topology"] = c.topology;
  Json p;
  p["source"] = c.problem.source;
  if (c.problem.source == "csv") {
    p["path"] = c.problem.path;
  } else {
    p["dimension"] = c.problem.dimension;
    p["samples_per_agent"] = c.problem.samples_per_agent;
    p["noise_level"] = c.problem.noise_level;
    p["sparsity"] = c.problem.sparsity;
  }
  p["loss"] = std::string(to_string(c.problem.loss));
  Json reg;
  reg["kind"] = std::string(to_string(c.problem.regularizer.kind));
  if (c.problem.regularizer.kind == RegularizerKind::kL1) {
    reg["nu"] = c.problem.regularizer.l1;
  } else if (c.problem.regularizer.kind == RegularizerKind::kElasticNet) {
    reg["nu1"] = c.problem.regularizer.l1;
    reg["nu2"] = c.problem.regularizer.l2;
  }
  p["regularizer"] = reg;
  p["prox_weight"] = c.problem.prox_weight ? Json(*c.problem.prox_weight) : Json(nullptr);
  p["sample_average"] = c.problem.sample_average;
  j["problem"] = p;
  Json s;
  s["mode"] = c.stepsize.mode;
  if (c.stepsize.mode == "explicit") {
    s["values"] = c.stepsize.values;
  } else {
    s["fraction"] = c.stepsize.fraction;
  }
  j["stepsize"] = s;
  Json pr;
  pr["enabled"] = c.privacy.enabled;
  pr["delta"] = c.privacy.delta;
  pr["attenuation"] = c.privacy.attenuation;
  pr["sigma1_sq"] = c.privacy.sigma1_sq ? Json(*c.privacy.sigma1_sq) : Json(nullptr);
  pr["target_epsilon"] =
      c.privacy.target_epsilon ? Json(*c.privacy.target_epsilon) : Json(nullptr);
  pr["planned_lci"] = c.privacy.planned_lci ? Json(*c.privacy.planned_lci) : Json(nullptr);
  j["privacy"] = pr;
  j["seeds"] = {{"relay", c.seeds.relay}, {"noise", c.seeds.noise}, {"data", c.seeds.data}};
  j["start_agent"] = c.start_agent;
  j["tail_fraction"] = c.tail_fraction;
  j["record_stride"] = c.record_stride;
  j["output"] = c.output;
  return j;
}

// Parses JSON text; syntax errors are reported with their line number.
inline Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i) line += text[i] == '\n';
    throw ConfigError("line " + std::to_string(line), e.what());
  }
}

inline Json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Applies `pointer=value` to a parsed document before validation. The value
// is read as JSON when it parses, otherwise as a plain string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("", "override '" + assignment + "' is not of the form path=value");
  }
  std::string pointer = assignment.substr(0, eq);
  if (pointer.front() != '/') pointer = "/" + pointer;
  for (char& c : pointer) c = c == '.' ? '/' : c;
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  try {
    doc[Json::json_pointer(pointer)] = std::move(value);
  } catch (const Json::exception& e) {
    throw ConfigError(pointer, e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  return config_from_json(read_config_document(path));
}

}  // namespace dprecal

#endif  // DPRECAL_CONFIG_HPP_
