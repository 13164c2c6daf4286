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
// Command-line front end: simulate, identify, check-feasibility, verify and
// dump-model. Exit codes: 0 ok, 1 domain error, 2 internal invariant.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ramp/harness.hpp"
#include "ramp/mpc.hpp"
#include "ramp/types.hpp"

namespace {

using namespace ramp;

std::string fmt_vec(const VectorXd& v) {
  std::ostringstream os;
  os.precision(12);
  os << '[';
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

void print_report(const char* name, const analysis::CheckReport& r) {
  std::printf("%s: %s, %d checks, min margin %.6g at t=%d%s%s\n", name, r.ok ? "ok" : "VIOLATED", r.checked,
              r.min_margin, r.worst_step, r.detail.empty() ? "" : ", ", r.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ramp metering with set-membership predictive control"};
  app.require_subcommand(1);

  std::string scenario, out, log_path, mode, controller;
  int steps = -1, t_dump = 0;
  double gap_relative = -1;

  auto* sim = app.add_subcommand("simulate", "run a closed loop and write the trajectory CSV");
  sim->add_option("--scenario", scenario, "scenario file or preset name")->required();
  sim->add_option("--controller", controller, "override the scenario controller")
      ->check(CLI::IsMember({"setpc", "alinea", "openloop", "local"}));
  sim->add_option("--steps", steps, "override the number of steps");
  sim->add_option("--out", out, "CSV output path")->required();
  sim->add_option("--gap-relative", gap_relative, "relative MILP gap, e.g. 0.01");

  auto* ident = app.add_subcommand("identify", "run the scenario and identify v and beta from free-flow readings");
  ident->add_option("--scenario", scenario)->required();
  ident->add_option("--out", out, "report path (stdout when omitted)");

  auto* feas = app.add_subcommand("check-feasibility", "equilibrium geometry and sufficient feasibility conditions");
  feas->add_option("--scenario", scenario)->required();

  auto* ver = app.add_subcommand("verify", "check certificates on a trajectory CSV");
  ver->add_option("--log", log_path)->required();
  ver->add_option("--mode", mode)->required()->check(CLI::IsMember({"iss", "lyapunov", "containment"}));
  ver->add_option("--scenario", scenario, "scenario that produced the log")->required();

  auto* dump = app.add_subcommand("dump-model", "write the MPC model at step t in LP format");
  dump->add_option("--scenario", scenario)->required();
  dump->add_option("--t", t_dump, "closed-loop step whose estimate seeds the model");
  dump->add_option("--out", out, "output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    harness::Scenario s = harness::load_scenario(scenario);
    if (*sim) {
      if (!controller.empty()) s.controller = harness::parse_controller_kind(controller);
      if (gap_relative >= 0) s.setpc.mpc.solver.rel_gap = gap_relative;
      harness::RunOptions opts;
      opts.steps = steps;
      const auto log = harness::run_closed_loop(s, opts);
      harness::write_csv(log, out);
      const auto certs = harness::certify(s, log);
      harness::write_summary(s, log, certs, out + ".summary");
      std::printf("%zu steps written to %s, terminal entry %d\n", log.steps.size(), out.c_str(), certs.terminal_entry);
    } else if (*ident) {
      const auto log = harness::run_closed_loop(s);
      const auto rep = harness::identify_from_log(s, log);
      std::ostringstream os;
      os << "window_start = " << rep.start << '\n';
      for (Index i = 0; i < s.cells; ++i) {
        os << "cell " << i + 1 << ": " << estimators::to_string(rep.sweep.status[i]);
        os.precision(15);
        if (rep.sweep.status[i] == estimators::CellStatus::Identified) {
          os << " v = " << rep.sweep.v[i];
          if (i > 0) os << " beta = " << rep.sweep.beta[i - 1];
        }
        os << '\n';
      }
      if (out.empty()) {
        std::cout << os.str();
      } else {
        std::ofstream f(out);
        f << os.str();
      }
    } else if (*feas) {
      const auto r = harness::feasibility_conditions(s);
      std::printf("f_eq   = %s\nx_unc  = %s\nx_up   = %s\nx_crit = %s\n", fmt_vec(r.f_eq).c_str(),
                  fmt_vec(r.x_unc).c_str(), fmt_vec(r.x_up).c_str(), fmt_vec(r.x_crit).c_str());
      std::printf("condition 1 %s\ncondition 2 %s\n", r.condition1 ? "satisfied" : "not satisfied",
                  r.condition2 ? "satisfied" : "not satisfied");
    } else if (*ver) {
      const auto log = harness::read_csv(log_path);
      const auto c = harness::certify(s, log);
      if (mode == "iss") print_report("iss", c.iss);
      if (mode == "lyapunov") {
        print_report("lyapunov", c.lyapunov);
        print_report("value_bounds", c.value_bounds);
      }
      if (mode == "containment") {
        print_report("containment", c.containment);
        std::printf("%d violations\n", c.containment.ok ? 0 : 1);
      }
      const bool ok = mode == "iss" ? c.iss.ok
                      : mode == "lyapunov" ? c.lyapunov.ok && c.value_bounds.ok
                                           : c.containment.ok;
      return ok ? 0 : 1;
    } else if (*dump) {
      harness::RunOptions opts;
      opts.steps = t_dump + 1;
      // The model is built from the estimate the controller saw at t.
      const auto log = harness::run_closed_loop(s, opts);
      const auto& st = log.steps.back();
      const auto problem = mpc::build_problem(st.estimate, st.demand, controllers::mpc_params(st.theta), s.setpc.mpc);
      const std::string lp = milp::to_lp_format(problem.model);
      if (out.empty()) {
        std::cout << lp;
      } else {
        std::ofstream f(out);
        f << lp;
      }
      std::fprintf(stderr, "t=%d: %d variables, %d rows, %d binaries\n", st.t, problem.model.num_vars(),
                   problem.model.num_rows(), problem.model.num_binaries());
    }
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
