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
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "ramp/harness.hpp"
#include "ramp/types.hpp"

#ifndef RAMP_SCENARIO_DIR
#define RAMP_SCENARIO_DIR "scenarios"
#endif

namespace ramp::harness {

namespace {

// One parsed block: `key value...` entries and nested `name { ... }` blocks.
struct Block {
  struct Entry {
    std::vector<std::string> values;
    int line = 0;
    bool used = false;
  };
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
  std::map<std::string, Block> children;
  bool used = false;
};

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in(text);
    std::string raw;
    std::vector<Block*> stack{&root_};
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
      std::istringstream ls(raw);
      std::vector<std::string> tok;
      for (std::string t; ls >> t;) tok.push_back(t);
      if (tok.empty()) continue;
      if (tok.size() == 1 && tok[0] == "}") {
        if (stack.size() == 1) fail(line, "}", "unmatched closing brace");
        stack.pop_back();
        continue;
      }
      if (tok.size() == 2 && tok[1] == "{") {
        Block& parent = *stack.back();
        if (parent.children.count(tok[0]) || parent.entries.count(tok[0])) fail(line, tok[0], "duplicate block");
        Block& b = parent.children[tok[0]];
        b.name = tok[0];
        b.line = line;
        stack.push_back(&b);
        continue;
      }
      if (tok.size() < 2) fail(line, tok[0], "missing value");
      Block& cur = *stack.back();
      if (cur.entries.count(tok[0]) || cur.children.count(tok[0])) fail(line, tok[0], "duplicate key");
      cur.entries[tok[0]] = {std::vector<std::string>(tok.begin() + 1, tok.end()), line, false};
    }
    if (stack.size() != 1) fail(stack.back()->line, stack.back()->name, "block is not closed");
  }

  [[noreturn]] void fail(int line, const std::string& key, const std::string& what) const {
    throw DomainError(origin_ + ":" + std::to_string(line) + ": key '" + key + "': " + what);
  }

  Block& root() { return root_; }

  // Numbers may be written as products and quotients, e.g. 70/60/160 or 1/6.
  double number(const Block::Entry& e, const std::string& key, const std::string& tok) const {
    double acc = 0;
    char op = 0;
    std::size_t pos = 0;
    while (pos <= tok.size()) {
      const std::size_t next = tok.find_first_of("*/", pos == 0 ? 0 : pos);
      const std::string part = tok.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      double v;
      if (part == "inf") {
        v = std::numeric_limits<double>::infinity();
      } else {
        char* end = nullptr;
        v = std::strtod(part.c_str(), &end);
        if (part.empty() || end != part.c_str() + part.size()) fail(e.line, key, "not a number: " + tok);
      }
      if (op == 0) acc = v;
      else if (op == '*') acc *= v;
      else acc /= v;
      if (next == std::string::npos) break;
      op = tok[next];
      pos = next + 1;
    }
    return acc;
  }

 private:
  std::string origin_;
  Block root_;
};

// Same length and at most two differing characters, as in a typo.
bool near_miss(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  int diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
  return diff <= 2;
}

// Typed access to one block; every read marks the key as used so that
// leftovers can be reported.
class View {
 public:
  View(Parser& p, Block* b, std::string path) : p_(p), b_(b), path_(std::move(path)) {}

  bool present() const { return b_ != nullptr; }
  bool has(const std::string& k) const { return b_ && b_->entries.count(k); }

  View child(const std::string& k) const {
    if (!b_) return View(p_, nullptr, qualified(k));
    auto it = b_->children.find(k);
    if (it == b_->children.end()) return View(p_, nullptr, qualified(k));
    it->second.used = true;
    return View(p_, &it->second, qualified(k));
  }

  const Block::Entry* entry(const std::string& k, bool required) const {
    if (!b_ || !b_->entries.count(k)) {
      if (required) {
        std::string what = "required key is missing";
        if (b_)
          for (const auto& [name, e] : b_->entries)
            if (!e.used && near_miss(name, k)) {
              what += "; unknown key '" + qualified(name) + "' at line " + std::to_string(e.line);
              break;
            }
        p_.fail(b_ ? b_->line : 0, qualified(k), what);
      }
      return nullptr;
    }
    auto& e = b_->entries.at(k);
    e.used = true;
    return &e;
  }

  std::string word(const std::string& k, const std::string& def = "", bool required = false) const {
    const auto* e = entry(k, required);
    if (!e) return def;
    if (e->values.size() != 1) p_.fail(e->line, qualified(k), "expects one value");
    return e->values[0];
  }

  double num(const std::string& k, double def, bool required = false) const {
    const auto* e = entry(k, required);
    if (!e) return def;
    if (e->values.size() != 1) p_.fail(e->line, qualified(k), "expects one value");
    return p_.number(*e, qualified(k), e->values[0]);
  }

  long integer(const std::string& k, long def) const {
    const double v = num(k, double(def));
    if (v != std::floor(v)) p_.fail(entry(k, true)->line, qualified(k), "expects an integer");
    return long(v);
  }

  bool flag(const std::string& k, bool def) const {
    const std::string w = word(k, def ? "true" : "false");
    if (w == "true" || w == "yes" || w == "1") return true;
    if (w == "false" || w == "no" || w == "0") return false;
    p_.fail(entry(k, true)->line, qualified(k), "expects true or false");
  }

  // A single value broadcasts to all n entries.
  VectorXd vec(const std::string& k, Index n, bool required = false, const VectorXd& def = {}) const {
    const auto* e = entry(k, required);
    if (!e) return def;
    const auto& vals = e->values;
    if (vals.size() != 1 && Index(vals.size()) != n)
      p_.fail(e->line, qualified(k), "expects 1 or " + std::to_string(n) + " values");
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) out[i] = p_.number(*e, qualified(k), vals[vals.size() == 1 ? 0 : i]);
    return out;
  }

  // `key lower upper` with scalars broadcast, or `key_lower ...` / `key_upper ...`.
  bool range(const std::string& k, Index n, VectorXd& lo, VectorXd& hi) const {
    if (has(k)) {
      const auto* e = entry(k, true);
      if (e->values.size() != 2) p_.fail(e->line, qualified(k), "expects lower and upper");
      lo = VectorXd::Constant(n, p_.number(*e, qualified(k), e->values[0]));
      hi = VectorXd::Constant(n, p_.number(*e, qualified(k), e->values[1]));
      return true;
    }
    if (has(k + "_lower") || has(k + "_upper")) {
      lo = vec(k + "_lower", n, true);
      hi = vec(k + "_upper", n, true);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& k, const std::string& what) const {
    const auto* e = b_ && b_->entries.count(k) ? &b_->entries.at(k) : nullptr;
    p_.fail(e ? e->line : (b_ ? b_->line : 0), qualified(k), what);
  }

 private:
  std::string qualified(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  Parser& p_;
  Block* b_;
  std::string path_;
};

void check_unused(Parser& p, const Block& b, const std::string& path) {
  for (const auto& [k, e] : b.entries)
    if (!e.used) p.fail(e.line, path.empty() ? k : path + "." + k, "unknown key");
  for (const auto& [k, c] : b.children) {
    const std::string q = path.empty() ? k : path + "." + k;
    if (!c.used) p.fail(c.line, q, "unknown block");
    check_unused(p, c, q);
  }
}

VectorXd inf_vec(Index n) { return VectorXd::Constant(n, std::numeric_limits<double>::infinity()); }

// Deterministic uniform draw in [0, 1); independent of the standard library's
// distribution implementations.
double unit(std::mt19937_64& g) { return double(g() >> 11) * 0x1.0p-53; }

}  // namespace

VectorXd DemandProfile::at(int t) const {
  if (kind == Kind::Constant) return base;
  return base * (1 + amplitude * std::sin(omega * t));
}

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::SetPc: return "setpc";
    case ControllerKind::Alinea: return "alinea";
    case ControllerKind::OpenLoop: return "openloop";
    case ControllerKind::Local: return "local";
  }
  return "unknown";
}

ControllerKind parse_controller_kind(const std::string& s) {
  if (s == "setpc") return ControllerKind::SetPc;
  if (s == "alinea") return ControllerKind::Alinea;
  if (s == "openloop") return ControllerKind::OpenLoop;
  if (s == "local") return ControllerKind::Local;
  throw DomainError("unknown controller '" + s + "' (expected setpc, alinea, openloop or local)");
}

VectorXd Scenario::demand_gain() const {
  const auto& b = setpc.mpc.terminal_weight;
  return b.size() == 2 * cells ? VectorXd(b.head(cells)) : VectorXd();
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Parser parser(text, origin);
  View top(parser, &parser.root(), "");
  Scenario s;
  s.name = top.word("name", "unnamed");
  const long cells = top.integer("cells", 0);
  if (cells < 1) top.fail("cells", "must be a positive integer");
  const Index n = cells;
  s.cells = n;

  const View params = top.child("params");
  if (!params.present()) parser.fail(0, "params", "required block is missing");
  auto& p = s.truth;
  p.v = params.vec("v", n, true);
  p.w = params.vec("w", n, true);
  p.x_jam = params.vec("x_jam", n, true);
  p.c_max = params.vec("c_max", n, true);
  p.alpha = params.vec("alpha", n, true);
  p.beta = n > 1 ? params.vec("beta", n - 1, true) : VectorXd();

  const View demand = top.child("demand");
  s.demand.base = demand.vec("base", n, true);
  const std::string kind = demand.word("kind", "constant");
  if (kind == "periodic") {
    s.demand.kind = DemandProfile::Kind::Periodic;
    s.demand.amplitude = demand.num("amplitude", 0, true);
    s.demand.omega = demand.num("omega", 0, true);
  } else if (kind != "constant") {
    demand.fail("kind", "expects constant or periodic");
  }

  const View init = top.child("initial");
  s.x0 = init.vec("state", 2 * n, true);

  // Parameter and demand boxes default to points at the truth.
  const View boxes = top.child("boxes");
  s.theta = embedding::ParamBounds<double>::point(p);
  for (const auto& [name, field] : ctm::param_fields<double>()) {
    const Index m = (s.truth.*field).size();
    VectorXd lo, hi;
    if (boxes.range(name, m, lo, hi)) {
      s.theta.lower.*field = lo;
      s.theta.upper.*field = hi;
    }
  }
  s.sample_truth = boxes.flag("sample_truth", false);
  const double rel = boxes.num("demand_rel", 0);
  if (rel < 0) boxes.fail("demand_rel", "must be nonnegative");
  s.demand_box.lower = s.demand.base * (1 - rel);
  s.demand_box.upper = s.demand.base * (1 + rel);
  if (boxes.has("demand_lower") || boxes.has("demand_upper")) {
    s.demand_box.lower = boxes.vec("demand_lower", n, true);
    s.demand_box.upper = boxes.vec("demand_upper", n, true);
  }
  s.mainline_prior_lower = boxes.vec("mainline_lower", n, false, VectorXd::Zero(n));
  s.mainline_prior_upper = boxes.vec("mainline_upper", n, false, s.theta.upper.x_jam);

  const View out = top.child("output");
  s.output = ctm::OutputModel::full(n);
  if (out.has("measured")) {
    const VectorXd m = out.vec("measured", n, true);
    for (Index i = 0; i < n; ++i) s.output.measured[i] = m[i] != 0;
  }
  s.output.gain = out.vec("gain", n, false, VectorXd::Ones(n));

  const View ctrl = top.child("controller");
  s.controller = parse_controller_kind(ctrl.word("kind", "setpc"));
  s.alinea_gain = ctrl.num("alinea_gain", s.alinea_gain);
  s.alinea_setpoint = ctrl.vec("alinea_setpoint", n);
  s.setpc.local.average = int(ctrl.integer("local_average", 1));
  s.setpc.local.epsilon = ctrl.num("epsilon", 0.1);
  s.setpc.dual_mode = ctrl.flag("dual_mode", true);
  s.setpc.revert_to_mpc = ctrl.flag("revert", true);
  s.setpc.fallback_steps = int(ctrl.integer("fallback_steps", 400));
  const std::string fb = ctrl.word("fallback", "error");
  if (fb == "error") s.setpc.fallback = controllers::Fallback::Error;
  else if (fb == "zero") s.setpc.fallback = controllers::Fallback::ZeroControl;
  else if (fb == "constructive") s.setpc.fallback = controllers::Fallback::Constructive;
  else ctrl.fail("fallback", "expects error, zero or constructive");

  const View mpc = top.child("mpc");
  auto& m = s.setpc.mpc;
  m.horizon = int(mpc.integer("horizon", 60));
  m.stage_weight = mpc.vec("stage_weight", 2 * n, false, VectorXd::Ones(2 * n));
  if (mpc.has("terminal_weight")) m.terminal_weight = mpc.vec("terminal_weight", 2 * n, true);
  const std::string mode = mpc.word("mode", "linear");
  if (mode == "linear") m.mode = mpc::CostMode::Linear;
  else if (mode == "indicator") m.mode = mpc::CostMode::Indicator;
  else mpc.fail("mode", "expects linear or indicator");
  const std::string term = mpc.word("terminal", "recoverable");
  if (term == "recoverable") s.terminal = TerminalKind::Recoverable;
  else if (term == "freeflow") s.terminal = TerminalKind::FreeFlowCrit;
  else mpc.fail("terminal", "expects recoverable or freeflow");
  m.u_max = mpc.vec("u_max", n, true);
  m.solver.abs_gap = mpc.num("gap", 1e-6);
  m.solver.rel_gap = mpc.num("gap_relative", 0);
  m.solver.node_limit = mpc.integer("node_limit", m.solver.node_limit);
  m.constructive_starts = mpc.flag("constructive_starts", true);

  const View est = top.child("estimator");
  s.estimator.horizon = int(est.integer("horizon", 1));
  s.estimator.prune_depth = int(est.integer("prune_depth", 8));
  s.estimator.prune_budget = int(est.integer("prune_budget", 400));
  s.estimator.identify = est.flag("identify", true);
  s.assume_free_flow = est.flag("assume_free_flow", false);

  const View run = top.child("run");
  s.steps = int(run.integer("steps", 300));
  s.warmup = int(run.integer("warmup", s.estimator.horizon));
  s.seed = std::uint64_t(run.integer("seed", 1));

  check_unused(parser, parser.root(), "");
  finalize(s);
  return s;
}

void finalize(Scenario& s) {
  const Index n = s.cells;
  if (s.x0.size() != 2 * n) throw DomainError("initial state must have 2 * cells entries");
  if (s.steps < 0 || s.warmup < 0) throw DomainError("steps and warmup must be nonnegative");
  s.theta.validate();
  if (s.sample_truth) {
    // Draw in field order so the sample depends on the seed alone.
    std::mt19937_64 g(s.seed);
    for (const auto& [name, field] : ctm::param_fields<double>()) {
      (void)name;
      VectorXd& x = s.truth.*field;
      const VectorXd& lo = s.theta.lower.*field;
      const VectorXd& hi = s.theta.upper.*field;
      for (Index i = 0; i < x.size(); ++i) x[i] = lo[i] + unit(g) * (hi[i] - lo[i]);
    }
    if (s.demand.kind == DemandProfile::Kind::Constant)
      for (Index i = 0; i < n; ++i)
        s.demand.base[i] = s.demand_box.lower[i] + unit(g) * (s.demand_box.upper[i] - s.demand_box.lower[i]);
    s.sample_truth = false;
  }
  s.truth.validate();
  if (!s.theta.contains(s.truth)) throw DomainError("true parameters lie outside the parameter box");
  ctm::equilibrium_uncongested(s.truth, s.demand.base);  // throws when the mean demand exceeds capacity

  auto& m = s.setpc.mpc;
  const auto& lo = s.theta.lower;
  const auto& hi = s.theta.upper;
  if (m.terminal_weight.size() == 0) {
    // Slowest speed and largest split give the largest admissible weights.
    auto conservative = lo;
    conservative.beta = hi.beta;
    m.terminal_weight = mpc::choose_terminal_weights(conservative, m.stage_weight);
  }
  m.terminal_upper = VectorXd(2 * n);
  if (s.terminal == TerminalKind::Recoverable) {
    if (!s.theta.is_point() || s.demand_box.upper != s.demand_box.lower)
      throw DomainError("terminal 'recoverable' needs known parameters and demand");
    m.terminal_upper.head(n) = mpc::compute_xup(lo, s.demand_box.lower);
    m.terminal_upper.tail(n).setZero();
  } else {
    m.terminal_upper.head(n) = lo.c_max.cwiseQuotient(hi.v);
    m.terminal_upper.tail(n) = inf_vec(n);
  }
  if (s.alinea_setpoint.size() == 0) s.alinea_setpoint = s.truth.critical_density();
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(RAMP_SCENARIO_DIR, ec))
    if (e.path().extension() == ".scn") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Scenario load_scenario(const std::string& path_or_preset) {
  std::filesystem::path path(path_or_preset);
  if (!std::filesystem::exists(path)) {
    const auto preset = std::filesystem::path(RAMP_SCENARIO_DIR) / (path_or_preset + ".scn");
    if (!std::filesystem::exists(preset)) throw DomainError("no scenario file or preset named '" + path_or_preset + "'");
    path = preset;
  }
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

}  // namespace ramp::harness
