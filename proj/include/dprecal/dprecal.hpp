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

#ifndef DPRECAL_DPRECAL_HPP_
#define DPRECAL_DPRECAL_HPP_

#include "dprecal/config.hpp"
#include "dprecal/dataset.hpp"
#include "dprecal/engine.hpp"
#include "dprecal/error.hpp"
#include "dprecal/experiment.hpp"
#include "dprecal/metrics.hpp"
#include "dprecal/objective.hpp"
#include "dprecal/privacy.hpp"
#include "dprecal/results.hpp"
#include "dprecal/state.hpp"
#include "dprecal/synthetic.hpp"
#include "dprecal/topology.hpp"

#endif  // DPRECAL_DPRECAL_HPP_
