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
#include "ramp/milp/simplex.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "ramp/types.hpp"

namespace ramp::milp {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Columns of B_k = B_0 E_1 ... E_k differ from B_0 by one column per eta.
struct Eta {
  int row;
  double pivot;
  std::vector<int> idx;  // entries of the FTRAN'd column other than `row`
  std::vector<double> val;
};

class Worker {
 public:
  Worker(const SpMat& a, const VectorXd& c, VectorXd lo, VectorXd hi, const LpOptions& o)
      : a_(a), c_(c), lo_(std::move(lo)), hi_(std::move(hi)), o_(o), m_(a.rows()), n_(a.cols()), nt_(m_ + n_) {
    basic_.resize(m_);
    pos_.assign(nt_, -1);
    st_.assign(nt_, VarStatus::AtLower);
    x_.setZero(nt_);
  }

  LpResult run(const Basis* warm) {
    if (!(warm && install(*warm))) cold_start();
    refactor();
    long max_iter = o_.max_iterations > 0 ? o_.max_iterations : 40 * static_cast<long>(nt_) + 1000;
    long iter = 0;
    int degenerate = 0;
    bool verified = false;
    VectorXd cb(m_), y(m_), alpha(m_);
    for (;;) {
      if (iter >= max_iter) return finish(LpStatus::IterationLimit, iter);
      bool phase1 = false;
      for (int i = 0; i < m_; ++i) {
        const int j = basic_[i];
        const double tol = o_.primal_tol * (1 + std::abs(x_[j]));
        if (x_[j] < lo_[j] - tol) {
          cb[i] = -1;
          phase1 = true;
        } else if (x_[j] > hi_[j] + tol) {
          cb[i] = 1;
          phase1 = true;
        } else {
          cb[i] = 0;
        }
      }
      if (!phase1)
        for (int i = 0; i < m_; ++i) cb[i] = cost(basic_[i]);
      y = cb;
      btran(y);

      const bool bland = degenerate > o_.degenerate_switch;
      int q = -1;
      double dq = 0, best = 0;
      for (int j = 0; j < nt_; ++j) {
        if (st_[j] == VarStatus::Basic || lo_[j] == hi_[j]) continue;
        const double dj = (phase1 ? 0.0 : cost(j)) - dot_column(j, y);
        const bool ok = (st_[j] == VarStatus::AtLower && dj < -o_.dual_tol) ||
                        (st_[j] == VarStatus::AtUpper && dj > o_.dual_tol) ||
                        (st_[j] == VarStatus::Free && std::abs(dj) > o_.dual_tol);
        if (!ok) continue;
        if (bland) {
          q = j;
          dq = dj;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
          dq = dj;
        }
      }
      if (q < 0) {
        // Confirm against a fresh factorization before declaring the end.
        if (!verified) {
          refactor();
          verified = true;
          continue;
        }
        return finish(phase1 ? LpStatus::Infeasible : LpStatus::Optimal, iter);
      }
      verified = false;
      ++iter;

      const double dir = dq < 0 ? 1.0 : -1.0;
      load_column(q, alpha);
      ftran(alpha);

      // Harris two-pass ratio test. Infeasible basics (phase 1 only) block at
      // the first bound they reach, so the infeasibility sum never grows.
      double t_relaxed = kInfinity;
      for (int i = 0; i < m_; ++i) {
        const double d = -dir * alpha[i];
        if (std::abs(alpha[i]) <= o_.pivot_tol) continue;
        const double lim = limit(i, d, true);
        t_relaxed = std::min(t_relaxed, lim);
      }
      int r = -1;
      double t = kInfinity, pivot_mag = 0;
      if (std::isfinite(t_relaxed)) {
        for (int i = 0; i < m_; ++i) {
          const double d = -dir * alpha[i];
          if (std::abs(alpha[i]) <= o_.pivot_tol) continue;
          const double lim = limit(i, d, false);
          if (lim > t_relaxed) continue;
          const bool take = r < 0 || (bland ? basic_[i] < basic_[r] : std::abs(alpha[i]) > pivot_mag);
          if (take) {
            r = i;
            t = std::max(0.0, lim);
            pivot_mag = std::abs(alpha[i]);
          }
        }
      }
      const double range = st_[q] == VarStatus::Free ? kInfinity : hi_[q] - lo_[q];
      if (r < 0 && !std::isfinite(range)) {
        if (phase1) throw NumericalError("simplex: unbounded ray while minimizing infeasibility");
        return finish(LpStatus::Unbounded, iter);
      }
      if (r < 0 || range <= t) {
        // Bound flip of the entering variable.
        for (int i = 0; i < m_; ++i) x_[basic_[i]] -= dir * range * alpha[i];
        if (st_[q] == VarStatus::AtLower) {
          st_[q] = VarStatus::AtUpper;
          x_[q] = hi_[q];
        } else {
          st_[q] = VarStatus::AtLower;
          x_[q] = lo_[q];
        }
        degenerate = 0;
        continue;
      }
      degenerate = t <= 1e-12 ? degenerate + 1 : 0;
      const int leave = basic_[r];
      const double d_leave = -dir * alpha[r];
      // Leaving variable lands on the bound it was heading for.
      const bool to_upper = leaving_to_upper(leave, d_leave, phase1);
      for (int i = 0; i < m_; ++i) x_[basic_[i]] -= dir * t * alpha[i];
      x_[q] += dir * t;
      st_[leave] = to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      x_[leave] = to_upper ? hi_[leave] : lo_[leave];
      pos_[leave] = -1;
      basic_[r] = q;
      pos_[q] = r;
      st_[q] = VarStatus::Basic;
      push_eta(r, alpha);
      if (static_cast<int>(etas_.size()) >= o_.refactor_interval || pivot_mag < 1e-7) refactor();
    }
  }

 private:
  double cost(int j) const { return j < n_ ? c_[j] : 0.0; }

  double dot_column(int j, const VectorXd& y) const {
    if (j >= n_) return -y[j - n_];
    double s = 0;
    for (SpMat::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
    return s;
  }

  void load_column(int j, VectorXd& out) const {
    out.setZero(m_);
    if (j >= n_) {
      out[j - n_] = -1;
      return;
    }
    for (SpMat::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
  }

  // Step length at which basic i reaches the bound it is moving towards.
  double limit(int i, double d, bool relaxed) const {
    const int j = basic_[i];
    const double xb = x_[j];
    const double tol = o_.primal_tol * (1 + std::abs(xb));
    const double slack = relaxed ? tol : 0.0;
    if (d > 0) {
      if (xb < lo_[j] - tol) return (lo_[j] - xb + slack) / d;
      if (xb <= hi_[j] + tol && std::isfinite(hi_[j])) return std::max(0.0, hi_[j] - xb + slack) / d;
    } else {
      if (xb > hi_[j] + tol) return (xb - hi_[j] + slack) / -d;
      if (xb >= lo_[j] - tol && std::isfinite(lo_[j])) return std::max(0.0, xb - lo_[j] + slack) / -d;
    }
    return kInfinity;
  }

  bool leaving_to_upper(int j, double d, bool phase1) const {
    const double tol = o_.primal_tol * (1 + std::abs(x_[j]));
    if (d > 0) return !(phase1 && x_[j] < lo_[j] - tol);
    return phase1 && x_[j] > hi_[j] + tol;
  }

  void cold_start() {
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        st_[j] = VarStatus::AtLower;
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        st_[j] = VarStatus::AtUpper;
        x_[j] = hi_[j];
      } else {
        st_[j] = VarStatus::Free;
        x_[j] = 0;
      }
      pos_[j] = -1;
    }
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      pos_[n_ + r] = r;
      st_[n_ + r] = VarStatus::Basic;
    }
  }

  bool install(const Basis& b) {
    if (static_cast<int>(b.status.size()) != nt_) return false;
    int k = 0;
    for (int j = 0; j < nt_; ++j) {
      VarStatus s = b.status[j];
      if (s == VarStatus::Basic) {
        if (k >= m_) return false;
        basic_[k] = j;
        pos_[j] = k++;
        st_[j] = s;
        continue;
      }
      pos_[j] = -1;
      if (s == VarStatus::AtLower && !std::isfinite(lo_[j])) s = VarStatus::AtUpper;
      if (s == VarStatus::AtUpper && !std::isfinite(hi_[j])) s = std::isfinite(lo_[j]) ? VarStatus::AtLower : VarStatus::Free;
      if (s == VarStatus::Free && std::isfinite(lo_[j])) s = VarStatus::AtLower;
      st_[j] = s;
      x_[j] = s == VarStatus::AtLower ? lo_[j] : s == VarStatus::AtUpper ? hi_[j] : 0.0;
    }
    if (k != m_) return false;
    try {
      factor();
    } catch (const NumericalError&) {
      return false;
    }
    return true;
  }

  void factor() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 3);
    for (int i = 0; i < m_; ++i) {
      const int j = basic_[i];
      if (j >= n_) {
        trip.emplace_back(j - n_, i, -1.0);
      } else {
        for (SpMat::InnerIterator it(a_, j); it; ++it) trip.emplace_back(it.row(), i, it.value());
      }
    }
    SpMat b(m_, m_);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(b);
    lu_->factorize(b);
    if (lu_->info() != Eigen::Success)
      throw NumericalError("simplex: basis factorization failed (" + lu_->lastErrorMessage() + ")");
    etas_.clear();
  }

  void refactor() {
    factor();
    VectorXd rhs = VectorXd::Zero(m_);
    for (int j = 0; j < nt_; ++j) {
      if (st_[j] == VarStatus::Basic || x_[j] == 0) continue;
      if (j >= n_) {
        rhs[j - n_] += x_[j];
      } else {
        for (SpMat::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
      }
    }
    ftran(rhs);
    for (int i = 0; i < m_; ++i) {
      if (!std::isfinite(rhs[i])) throw NumericalError("simplex: non-finite basic solution after refactorization");
      x_[basic_[i]] = rhs[i];
    }
  }

  void ftran(VectorXd& v) const {
    VectorXd tmp = lu_->solve(v);
    v.swap(tmp);
    for (const Eta& e : etas_) {
      const double vr = v[e.row] / e.pivot;
      v[e.row] = vr;
      if (vr == 0) continue;
      for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * vr;
    }
  }

  void btran(VectorXd& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
      v[it->row] = s / it->pivot;
    }
    VectorXd tmp = lu_->transpose().solve(v);
    v.swap(tmp);
  }

  void push_eta(int r, const VectorXd& alpha) {
    Eta e{r, alpha[r], {}, {}};
    for (int i = 0; i < m_; ++i)
      if (i != r && alpha[i] != 0) {
        e.idx.push_back(i);
        e.val.push_back(alpha[i]);
      }
    etas_.push_back(std::move(e));
  }

  LpResult finish(LpStatus s, long iter) const {
    LpResult res;
    res.status = s;
    res.iterations = iter;
    res.x = x_.head(n_);
    res.row_activity = a_ * res.x;
    res.objective = c_.dot(res.x);
    res.basis.status = st_;
    return res;
  }

  const SpMat& a_;
  const VectorXd& c_;
  VectorXd lo_, hi_;
  const LpOptions& o_;
  int m_, n_, nt_;
  std::vector<int> basic_, pos_;
  std::vector<VarStatus> st_;
  VectorXd x_;
  std::unique_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

SimplexSolver::SimplexSolver(Eigen::SparseMatrix<double> a, Eigen::VectorXd c, Eigen::VectorXd row_lo,
                             Eigen::VectorXd row_hi, LpOptions opts)
    : a_(std::move(a)), c_(std::move(c)), row_lo_(std::move(row_lo)), row_hi_(std::move(row_hi)), opts_(opts) {
  a_.makeCompressed();
  if (c_.size() != a_.cols() || row_lo_.size() != a_.rows() || row_hi_.size() != a_.rows())
    throw DomainError("SimplexSolver: dimension mismatch");
  for (Eigen::Index r = 0; r < a_.rows(); ++r)
    if (row_lo_[r] > row_hi_[r]) throw DomainError("SimplexSolver: row with empty range");
}

LpResult SimplexSolver::solve(const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi, const Basis* warm) const {
  const int n = cols(), m = rows();
  if (col_lo.size() != n || col_hi.size() != n) throw DomainError("SimplexSolver::solve: bound size mismatch");
  VectorXd lo(n + m), hi(n + m);
  lo << col_lo, row_lo_;
  hi << col_hi, row_hi_;
  for (int j = 0; j < n; ++j)
    if (lo[j] > hi[j]) {
      LpResult res;
      res.status = LpStatus::Infeasible;
      return res;
    }
  if (m == 0) {
    // No rows: every column sits at its cheaper bound.
    LpResult res;
    res.status = LpStatus::Optimal;
    res.x = VectorXd::Zero(n);
    res.row_activity = VectorXd::Zero(0);
    res.basis.status.resize(n);
    for (int j = 0; j < n; ++j) {
      const double c = c_[j];
      const double at = c > 0 ? lo[j] : c < 0 ? hi[j] : (std::isfinite(lo[j]) ? lo[j] : std::isfinite(hi[j]) ? hi[j] : 0.0);
      if (!std::isfinite(at)) {
        res.status = LpStatus::Unbounded;
        return res;
      }
      res.x[j] = at;
      res.objective += c * at;
      res.basis.status[j] = at == lo[j] ? VarStatus::AtLower : at == hi[j] ? VarStatus::AtUpper : VarStatus::Free;
    }
    return res;
  }
  try {
    Worker w(a_, c_, lo, hi, opts_);
    return w.run(warm);
  } catch (const NumericalError&) {
    // Retry once from the slack basis with a stricter pivot threshold.
    LpOptions strict = opts_;
    strict.pivot_tol = std::max(opts_.pivot_tol, 1e-7);
    strict.refactor_interval = std::min(opts_.refactor_interval, 20);
    Worker w(a_, c_, std::move(lo), std::move(hi), strict);
    return w.run(nullptr);
  }
}

}  // namespace ramp::milp
