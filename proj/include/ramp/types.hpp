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

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace ramp {

using Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Eigen::VectorXd;
using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Slack used when checking that a state stays inside [0, x_jam]. Values inside
// the slack are clamped, values outside raise.
inline constexpr double kStateTol = 1e-9;

// Input outside the documented domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke a documented precondition (e.g. a ramp asked to release more
// than it holds in the compact model).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internal invariant failed. Always a bug or a numerical breakdown.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Measurements contradict the current set estimate.
class ContainmentViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AdmissibilityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class RankDeficient : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace ramp
