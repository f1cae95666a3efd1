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

#ifndef DPRECAL_ERROR_HPP_
#define DPRECAL_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dprecal {

// Base of every error thrown by the library. Callers that only need a
// diagnostic can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad edges, dimension mismatches, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConnectivityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared during an iteration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& quantity, std::size_t iteration,
                  std::size_t agent)
      : Error("divergence: non-finite " + quantity + " at iteration " +
              std::to_string(iteration) + " (agent " +
              std::to_string(agent + 1) + ")"),
        quantity_(quantity),
        iteration_(iteration),
        agent_(agent) {}

  const std::string& quantity() const noexcept { return quantity_; }
  std::size_t iteration() const noexcept { return iteration_; }
  // 0-based.
  std::size_t agent() const noexcept { return agent_; }

 private:
  std::string quantity_;
  std::size_t iteration_;
  std::size_t agent_;
};

// The reference solver or the sigma calibration could not meet its tolerance.
class OracleError : public Error {
 public:
  using Error::Error;
};

// Configuration problems. `path` is a JSON-pointer style field path, or
// "line N" for parse errors.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dprecal

#endif  // DPRECAL_ERROR_HPP_
