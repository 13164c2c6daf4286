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

// Scenario files, the closed-loop runner and CSV output. The scenario grammar
// is described in docs/scenario-format.md.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ramp/analysis.hpp"
#include "ramp/controllers.hpp"
#include "ramp/estimators.hpp"
#include "ramp/log.hpp"

namespace ramp::harness {

struct DemandProfile {
  enum class Kind { Constant, Periodic };
  Kind kind = Kind::Constant;
  VectorXd base;
  double amplitude = 0;  // relative, lambda(t) = base (1 + amplitude sin(omega t))
  double omega = 0;

  VectorXd at(int t) const;
};

enum class ControllerKind { SetPc, Alinea, OpenLoop, Local };
const char* to_string(ControllerKind k);
ControllerKind parse_controller_kind(const std::string& s);  // throws DomainError

enum class TerminalKind {
  Recoverable,   // mainline up to x_up, empty ramps; needs known parameters and demand
  FreeFlowCrit,  // mainline up to the smallest critical density, ramps unbounded
};

struct Scenario {
  std::string name;
  Index cells = 0;

  ctm::FreewayParams<double> truth;
  DemandProfile demand;
  VectorXd x0;

  embedding::ParamBounds<double> theta;  // initial parameter box
  embedding::DemandBounds<double> demand_box;
  VectorXd mainline_prior_lower, mainline_prior_upper;
  ctm::OutputModel output;

  ControllerKind controller = ControllerKind::SetPc;
  controllers::SetPcConfig setpc;  // carries the MPC and local-law settings
  TerminalKind terminal = TerminalKind::Recoverable;
  double alinea_gain = 70.0 / (60.0 * 160.0);
  VectorXd alinea_setpoint;  // empty: critical densities c_max / v of the truth

  estimators::EstimatorConfig estimator;
  bool assume_free_flow = false;  // let the identifier use every reading, e.g. under u = lambda from free flow

  int steps = 300;
  int warmup = 1;  // steps of constant input before the controller starts
  std::uint64_t seed = 1;
  bool sample_truth = false;  // parameters and demand drawn from their boxes with `seed`

  // Weights entering the certificates: d = mainline part of b.
  VectorXd demand_gain() const;
};

// Parses scenario text; `origin` names the source in error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
// Reads a file, or a bundled preset when `path_or_preset` names one.
Scenario load_scenario(const std::string& path_or_preset);
std::vector<std::string> preset_names();

// Fills derived fields (terminal box, terminal weights, sampled truth) and
// validates the scenario. parse_scenario already calls it; call it again
// after editing a scenario in code.
void finalize(Scenario& s);

std::unique_ptr<controllers::Controller> make_controller(const Scenario& s);

struct RunOptions {
  int steps = -1;  // negative: scenario value
  bool stop_at_terminal = false;
};

TrajectoryLog run_closed_loop(const Scenario& s, const RunOptions& opts = {});

// Columns: t, x_*, xhat_up_*, xhat_lo_*, u_*, theta_up_<field>_*, theta_lo_<field>_*,
// Vstar, feasible, phase, total_vehicles, then the extras lambda_*, lambda_up_*,
// lambda_lo_*, Vbound, stage_cost, fallback, nodes. Numbers use 12 significant
// digits.
void write_csv(const TrajectoryLog& log, std::ostream& out);
void write_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_csv(const std::string& path);

// Equilibrium geometry of the true plant and the two sufficient feasibility
// conditions evaluated on the scenario's boxes and terminal set.
struct FeasibilityReport {
  VectorXd f_eq, x_unc, x_up, x_crit;
  bool condition1 = false;  // positive mainline terminal bounds, unbounded ramps
  bool condition2 = false;  // known parameters and demand, terminal covers x_up
};

FeasibilityReport feasibility_conditions(const Scenario& s);

// Free-flow identification on the readings at steps k, k+1, k+2 of the log,
// k = the terminal entry when there is one, else the first controlled step.
// Inflows are recovered from the ramp balance with the logged demand.
struct IdentifyReport {
  int start = -1;
  estimators::SweepResult sweep;
};

IdentifyReport identify_from_log(const Scenario& s, const TrajectoryLog& log, int start = -1);

struct Certificates {
  analysis::IssConstants constants;
  analysis::CheckReport iss, lyapunov, value_bounds, containment;
  int terminal_entry = -1;
};

Certificates certify(const Scenario& s, const TrajectoryLog& log);
void write_summary(const Scenario& s, const TrajectoryLog& log, const Certificates& c, const std::string& path);

}  // namespace ramp::harness
