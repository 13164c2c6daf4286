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
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ramp/harness.hpp"
#include "ramp/types.hpp"

namespace ramp::harness {

namespace {

void vec_header(std::vector<std::string>& h, const std::string& prefix, Index n) {
  for (Index i = 0; i < n; ++i) h.push_back(fmt::format("{}{}", prefix, i + 1));
}

std::vector<std::string> header(Index n) {
  std::vector<std::string> h{"t"};
  vec_header(h, "x_", 2 * n);
  vec_header(h, "xhat_up_", 2 * n);
  vec_header(h, "xhat_lo_", 2 * n);
  vec_header(h, "u_", n);
  for (const char* end : {"theta_up_", "theta_lo_"})
    for (const auto& [name, field] : ctm::param_fields<double>()) {
      (void)field;
      vec_header(h, std::string(end) + name + "_", std::string(name) == "beta" ? n - 1 : n);
    }
  for (const char* c : {"Vstar", "feasible", "phase", "total_vehicles"}) h.push_back(c);
  vec_header(h, "lambda_", n);
  vec_header(h, "lambda_up_", n);
  vec_header(h, "lambda_lo_", n);
  for (const char* c : {"Vbound", "stage_cost", "fallback", "nodes"}) h.push_back(c);
  return h;
}

std::string num(double v) { return fmt::format("{:.12g}", v); }

void put(std::string& line, double v) {
  line += ',';
  line += num(v);
}

void put(std::string& line, const VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) put(line, v[i]);
}

double parse_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw DomainError(fmt::format("csv line {}: not a number '{}'", line, s));
  return v;
}

Phase parse_phase(const std::string& s, int line) {
  for (Phase p : {Phase::Warmup, Phase::Mpc, Phase::Local, Phase::Baseline})
    if (s == to_string(p)) return p;
  throw DomainError(fmt::format("csv line {}: unknown phase '{}'", line, s));
}

}  // namespace

void write_csv(const TrajectoryLog& log, std::ostream& out) {
  const Index n = log.steps.empty() ? 0 : log.steps.front().x.size() / 2;
  if (log.steps.empty()) {
    out << "t\n";
    return;
  }
  const auto h = header(n);
  std::string line;
  for (std::size_t k = 0; k < h.size(); ++k) line += (k ? "," : "") + h[k];
  out << line << '\n';
  for (const auto& s : log.steps) {
    line = std::to_string(s.t);
    put(line, s.x);
    put(line, s.estimate.upper);
    put(line, s.estimate.lower);
    put(line, s.u);
    for (const auto* end : {&s.theta.upper, &s.theta.lower})
      for (const auto& [name, field] : ctm::param_fields<double>()) {
        (void)name;
        put(line, end->*field);
      }
    put(line, s.value);
    line += s.feasible ? ",1," : ",0,";
    line += to_string(s.phase);
    put(line, s.total_vehicles());
    put(line, s.lambda);
    put(line, s.demand.upper);
    put(line, s.demand.lower);
    put(line, s.bound);
    put(line, s.stage_cost);
    line += s.fallback ? ",1," : ",0,";
    line += std::to_string(s.nodes);
    out << line << '\n';
  }
}

void write_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path);
  write_csv(log, out);
}

TrajectoryLog read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path + ": empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  }
  TrajectoryLog log;
  if (cols.size() == 1) return log;
  Index n = 0;
  while (std::find(cols.begin(), cols.end(), fmt::format("u_{}", n + 1)) != cols.end()) ++n;
  if (cols != header(n)) throw DomainError(path + ": unexpected header");

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() != cols.size()) throw DomainError(fmt::format("{}:{}: wrong number of fields", path, lineno));
    std::size_t k = 0;
    const auto next = [&] { return parse_double(f[k++], lineno); };
    const auto vec = [&](Index m) {
      VectorXd v(m);
      for (Index i = 0; i < m; ++i) v[i] = next();
      return v;
    };
    StepRecord s;
    s.t = int(next());
    s.x = vec(2 * n);
    s.estimate.upper = vec(2 * n);
    s.estimate.lower = vec(2 * n);
    s.u = vec(n);
    for (auto* end : {&s.theta.upper, &s.theta.lower})
      for (const auto& [name, field] : ctm::param_fields<double>()) end->*field = vec(std::string(name) == "beta" ? n - 1 : n);
    s.value = next();
    s.feasible = next() != 0;
    s.phase = parse_phase(f[k++], lineno);
    next();  // total_vehicles is derived
    s.lambda = vec(n);
    s.demand.upper = vec(n);
    s.demand.lower = vec(n);
    s.bound = next();
    s.stage_cost = next();
    s.fallback = next() != 0;
    s.nodes = long(next());
    log.steps.push_back(std::move(s));
  }
  return log;
}

}  // namespace ramp::harness
