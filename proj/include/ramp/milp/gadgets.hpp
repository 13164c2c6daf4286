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

// Exact big-M encodings of the piecewise-linear pieces of the traffic model.
// Every big-M constant is the tightest one implied by the current variable
// bounds, so bounds must be set before a gadget is added. Each gadget also
// registers a definition so a partial assignment can be completed.

#include <optional>
#include <string>

#include "ramp/milp/model.hpp"

namespace ramp::milp {

struct GadgetOptions {
  // Skip the binary when the bounds already decide which argument is active.
  bool eliminate_redundant = true;
};

// Margin by which a density must exceed a drop threshold to count as dropped.
inline constexpr double kDropMargin = 1e-5;  // above the default feasibility tolerance

// New variable f with f = min(a, b). With `selector`, the caller guarantees
// that selector = 1 implies a <= b and selector = 0 implies b <= a, and no
// new binary is created.
Var encode_min_equality(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                        std::optional<Var> selector = std::nullopt, const GadgetOptions& o = {});

Var encode_max_equality(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                        const GadgetOptions& o = {});

struct CapacityDrop {
  LinExpr capacity;         // c_full when x <= threshold, c_drop otherwise
  std::optional<Var> full;  // 1 iff x <= threshold; absent when decided by bounds
};

// Capacity with drop as a function of x. Values strictly between threshold
// and threshold + kDropMargin are excluded unless x is a constant.
CapacityDrop encode_capacity_drop(Model& m, const LinExpr& x, double threshold, double c_full, double c_drop,
                                  const std::string& name, const GadgetOptions& o = {});

// f = max{0, min{a, b}}.
Var encode_saturation(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                      const GadgetOptions& o = {});

// z = 1 implies e <= rhs.
void encode_indicator_le(Model& m, Var z, const LinExpr& e, double rhs, const std::string& name = {});

}  // namespace ramp::milp
