/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Per-step record of a closed-loop run, shared by the runner, the CSV writer
// and the certificate checks.

#include <limits>
#include <string>
#include <vector>

#include "ramp/embedding.hpp"

namespace ramp {

enum class Phase { Warmup, Mpc, Local, Baseline };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Warmup: return "warmup";
    case Phase::Mpc: return "mpc";
    case Phase::Local: return "local";
    case Phase::Baseline: return "baseline";
  }
  return "unknown";
}

struct StepRecord {
  int t = 0;
  VectorXd x;                              // plant state at t
  embedding::LiftedState<double> estimate;  // after the measurement update at t
  embedding::ParamBounds<double> theta;
  embedding::DemandBounds<double> demand;
  VectorXd lambda;  // demand that entered during t -> t+1
  VectorXd u;       // control applied at t
  double value = std::numeric_limits<double>::quiet_NaN();  // MPC objective, NaN when not solved
  double bound = std::numeric_limits<double>::quiet_NaN();  // solver lower bound on the optimum
  double stage_cost = 0;                                     // l'x_upper at t
  bool feasible = false;
  bool fallback = false;
  Phase phase = Phase::Baseline;
  long nodes = 0;

  double total_vehicles() const { return x.sum(); }
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
};

}  // namespace ramp
