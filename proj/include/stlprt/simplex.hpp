#pragma once

// Dense bounded-variable simplex.
//
// Every row i gets a logical variable s_i = a_i'x carrying the row's sense as
// bounds, so the constraint system is [A -I](x, s) = 0 with all restrictions
// expressed as variable bounds. The tableau T = B^{-1}[A -I] is kept
// explicitly (row-major) and updated by elementary row operations.
//
// solve_primal() runs phase 1 (sum of infeasibilities) then phase 2 from the
// current basis. solve_dual() reoptimizes a dual feasible basis after bound
// changes, which is what branch-and-bound needs.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stlprt/milp_model.hpp"

namespace stlprt {

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  long max_iterations = 500000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_limit = 50;
  /// Basic values are recomputed from the tableau this often.
  int refresh_period = 64;
  int reinvert_period = 2000;
  /// Dual simplex stops once the (monotone) dual objective exceeds this.
  double cutoff = kInf;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit, cutoff, numerical };

class DenseSimplex {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit DenseSimplex(const MilpModel& model) : n_(model.num_variables()), m_(model.num_rows()) {
    const int nt = n_ + m_;
    A_ = RowMatrix::Zero(m_, n_);
    lb_.resize(nt);
    ub_.resize(nt);
    c_ = Eigen::VectorXd::Zero(nt);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = model.var(j).lower;
      ub_[j] = model.var(j).upper;
      c_(j) = model.objective()[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      const Row& r = model.row(i);
      for (const auto& t : r.terms) A_(i, t.var) = t.coef;
      lb_[n_ + i] = r.sense == Sense::le ? -kInf : r.rhs;
      ub_[n_ + i] = r.sense == Sense::ge ? kInf : r.rhs;
    }
    constant_ = model.objective_constant();
    T_.resize(m_, nt);
    T_.leftCols(n_) = -A_;
    T_.rightCols(m_).setIdentity();
    basis_.resize(static_cast<std::size_t>(m_));
    where_.assign(static_cast<std::size_t>(nt), -1);
    for (int i = 0; i < m_; ++i) {
      basis_[static_cast<std::size_t>(i)] = n_ + i;
      where_[static_cast<std::size_t>(n_ + i)] = i;
    }
    x_ = Eigen::VectorXd::Zero(nt);
    for (int j = 0; j < n_; ++j) x_(j) = resting_value(j);
    recompute_basic();
  }

  int num_structural() const { return n_; }
  int num_rows() const { return m_; }
  long iterations() const { return iterations_; }

  double lower(int j) const { return lb_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return ub_[static_cast<std::size_t>(j)]; }

  /// Changes bounds of a structural variable. A nonbasic variable stays on
  /// the same side (lower/upper), which preserves dual feasibility.
  void set_bounds(int j, double lo, double hi) {
    const auto k = static_cast<std::size_t>(j);
    if (lb_[k] == lo && ub_[k] == hi) return;
    const bool at_upper = where_[k] < 0 && std::isfinite(ub_[k]) && x_(j) == ub_[k] && x_(j) != lb_[k];
    lb_[k] = lo;
    ub_[k] = hi;
    if (where_[k] >= 0) return;
    double target;
    if (at_upper && std::isfinite(hi))
      target = hi;
    else if (std::isfinite(lo))
      target = lo;
    else if (std::isfinite(hi))
      target = hi;
    else
      target = 0.0;
    shift_nonbasic(j, target - x_(j));
  }

  double objective() const { return constant_ + c_.head(n_).dot(x_.head(n_)); }

  std::vector<double> values() const {
    std::vector<double> v(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) v[static_cast<std::size_t>(j)] = x_(j);
    return v;
  }

  double value(int j) const { return x_(j); }

  /// Two-phase primal simplex from the current basis.
  LpStatus solve_primal(const LpOptions& opt = {}) {
    int degenerate = 0;
    long since_refresh = 0, since_reinvert = 0;
    bool verified_once = false;
    for (;;) {
      if (iterations_ >= opt.max_iterations) return LpStatus::iteration_limit;
      if (since_reinvert >= opt.reinvert_period) {
        if (!reinvert()) return LpStatus::numerical;
        since_reinvert = 0;
      } else if (since_refresh >= opt.refresh_period) {
        recompute_basic();
        since_refresh = 0;
      }
      const bool phase1 = compute_phase_costs(opt.feas_tol);
      compute_reduced_costs();
      const bool bland = degenerate > opt.degenerate_limit;
      const int j = price(opt.opt_tol, bland);
      if (j < 0) {
        // Confirm the verdict once on refreshed (or refactorized) values.
        if (!verified_once) {
          verified_once = true;
          if (!refresh()) return LpStatus::numerical;
          continue;
        }
        return phase1 ? LpStatus::infeasible : LpStatus::optimal;
      }
      const double dir = direction(j);
      const Step s = ratio_test(j, dir, opt, bland);
      if (s.unbounded) {
        if (phase1) return LpStatus::numerical;
        return LpStatus::unbounded;
      }
      apply(j, dir, s);
      ++iterations_;
      ++since_refresh;
      ++since_reinvert;
      degenerate = s.theta <= 1e-12 ? degenerate + 1 : 0;
      verified_once = false;
    }
  }

  /// Dual simplex. Requires a dual feasible basis; otherwise (or if it stalls)
  /// it hands over to the primal method.
  LpStatus solve_dual(const LpOptions& opt = {}) {
    compute_true_costs();
    compute_reduced_costs();
    if (!dual_feasible(1e-7)) return solve_primal(opt);
    long since_refresh = 0, since_reinvert = 0;
    const long start = iterations_;
    const long budget = std::max<long>(50L * (m_ + 10), 2000L);
    for (;;) {
      if (iterations_ >= opt.max_iterations) return LpStatus::iteration_limit;
      if (iterations_ - start > budget) return solve_primal(opt);
      if (since_reinvert >= opt.reinvert_period) {
        if (!reinvert()) return LpStatus::numerical;
        since_reinvert = 0;
        since_refresh = 0;
      } else if (since_refresh >= opt.refresh_period) {
        recompute_basic();
        since_refresh = 0;
      }
      if (objective() > opt.cutoff) return LpStatus::cutoff;
      // Reduced costs are updated with each pivot and rebuilt on refresh.
      if (since_refresh == 0) compute_reduced_costs();
      const int r = leaving_row(opt.feas_tol);
      if (r < 0) return solve_primal(opt);
      const int b = basis_[static_cast<std::size_t>(r)];
      const bool below = x_(b) < lb_[static_cast<std::size_t>(b)];
      const double target = below ? lb_[static_cast<std::size_t>(b)] : ub_[static_cast<std::size_t>(b)];
      const int j = dual_entering(r, below, opt);
      if (j < 0) {
        // Dual ray: confirm on refreshed values before declaring infeasible.
        if (!refresh()) return LpStatus::numerical;
        compute_reduced_costs();
        const int r2 = leaving_row(opt.feas_tol);
        if (r2 < 0) return solve_primal(opt);
        const int b2 = basis_[static_cast<std::size_t>(r2)];
        if (dual_entering(r2, x_(b2) < lb_[static_cast<std::size_t>(b2)], opt) < 0) return LpStatus::infeasible;
        continue;
      }
      const double alpha = T_(r, j);
      const double dx = -(target - x_(b)) / alpha;
      x_(j) += dx;
      x_basic_update(j, dx);
      const double dj = d_(j);
      pivot(r, j);
      x_(b) = target;
      if (dj != 0.0)
        for (int k : nz_) d_(k) -= dj * T_(r, k);
      d_(j) = 0.0;
      ++iterations_;
      ++since_refresh;
      ++since_reinvert;
    }
  }

 private:
  struct Step {
    double theta = 0.0;
    int row = -1;  // -1 with finite theta: bound flip of the entering variable
    double leave_value = 0.0;
    bool unbounded = false;
  };

  double resting_value(int j) const {
    const auto k = static_cast<std::size_t>(j);
    if (std::isfinite(lb_[k])) return lb_[k];
    if (std::isfinite(ub_[k])) return ub_[k];
    return 0.0;
  }

  void shift_nonbasic(int j, double delta) {
    if (delta == 0.0) return;
    x_(j) += delta;
    x_basic_update(j, delta);
  }

  // Basic values move by -T(:,j) * dx when nonbasic j moves by dx.
  void x_basic_update(int j, double dx) {
    for (int i = 0; i < m_; ++i) {
      const double t = T_(i, j);
      if (t != 0.0) x_(basis_[static_cast<std::size_t>(i)]) -= t * dx;
    }
  }

  void recompute_basic() {
    Eigen::VectorXd xn = x_;
    for (int b : basis_) xn(b) = 0.0;
    Eigen::VectorXd xb = -(T_ * xn);
    for (int i = 0; i < m_; ++i) x_(basis_[static_cast<std::size_t>(i)]) = xb(i);
  }

  // Recomputes basic values; refactorizes when they no longer satisfy the
  // original rows.
  bool refresh() {
    recompute_basic();
    if (m_ == 0) return true;
    Eigen::VectorXd res = A_ * x_.head(n_) - x_.tail(m_);
    const double scale = 1.0 + x_.cwiseAbs().maxCoeff();
    if (res.cwiseAbs().maxCoeff() <= 1e-9 * scale) return true;
    return reinvert();
  }

  // Rebuilds T from the original data for the current basis.
  bool reinvert() {
    if (m_ == 0) return true;
    RowMatrix B(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int col = basis_[static_cast<std::size_t>(i)];
      if (col < n_)
        B.col(i) = A_.col(col);
      else {
        B.col(i).setZero();
        B(col - n_, i) = -1.0;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    if (!(lu.rcond() > 1e-14)) return false;
    Eigen::MatrixXd full(m_, n_ + m_);
    full.leftCols(n_) = A_;
    full.rightCols(m_) = -Eigen::MatrixXd::Identity(m_, m_);
    T_ = lu.solve(full);
    recompute_basic();
    return true;
  }

  // Phase costs: +-1 on infeasible basics, zero elsewhere. Returns whether
  // any basic variable is infeasible.
  bool compute_phase_costs(double tol) {
    cost_.setZero(n_ + m_);
    bool any = false;
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[static_cast<std::size_t>(i)];
      if (x_(b) < lb_[static_cast<std::size_t>(b)] - tol) {
        cost_(b) = -1.0;
        any = true;
      } else if (x_(b) > ub_[static_cast<std::size_t>(b)] + tol) {
        cost_(b) = 1.0;
        any = true;
      }
    }
    phase1_ = any;
    if (!any) cost_ = c_;
    return any;
  }

  void compute_true_costs() {
    cost_ = c_;
    phase1_ = false;
  }

  // d = cost - T' cost_B, accumulated over rows with a nonzero basic cost.
  void compute_reduced_costs() {
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) d_.noalias() -= cb * T_.row(i).transpose();
    }
    for (int b : basis_) d_(b) = 0.0;
  }

  bool is_fixed(int j) const { return lb_[static_cast<std::size_t>(j)] == ub_[static_cast<std::size_t>(j)]; }
  bool at_lower(int j) const { return x_(j) == lb_[static_cast<std::size_t>(j)]; }
  bool at_upper(int j) const { return x_(j) == ub_[static_cast<std::size_t>(j)]; }

  // Improvement available by moving nonbasic j; 0 when none.
  double attractiveness(int j, double tol) const {
    if (where_[static_cast<std::size_t>(j)] >= 0 || is_fixed(j)) return 0.0;
    const double d = d_(j);
    const bool can_up = !at_upper(j);
    const bool can_down = !at_lower(j);
    if (d < -tol && can_up) return -d;
    if (d > tol && can_down) return d;
    return 0.0;
  }

  double direction(int j) const { return d_(j) < 0.0 ? 1.0 : -1.0; }

  int price(double tol, bool bland) const {
    int best = -1;
    double best_v = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const double v = attractiveness(j, tol);
      if (v <= 0.0) continue;
      if (bland) return j;
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    return best;
  }

  // Effective bounds of a basic variable: infeasible ones may only move back
  // to the bound they violate.
  std::pair<double, double> effective_bounds(int b, double tol) const {
    const double lo = lb_[static_cast<std::size_t>(b)], hi = ub_[static_cast<std::size_t>(b)];
    if (phase1_) {
      if (x_(b) < lo - tol) return {-kInf, lo};
      if (x_(b) > hi + tol) return {hi, kInf};
    }
    return {lo, hi};
  }

  Step ratio_test(int j, double dir, const LpOptions& opt, bool bland) const {
    Step best;
    const double span = ub_[static_cast<std::size_t>(j)] - lb_[static_cast<std::size_t>(j)];
    double limit = std::isfinite(span) ? span : kInf;
    // Pass 1 (Harris): largest step with bounds relaxed by the feasibility tolerance.
    double relaxed = limit;
    const double tol = bland ? 0.0 : opt.feas_tol;
    for (int i = 0; i < m_; ++i) {
      const double a = T_(i, j);
      if (std::fabs(a) <= opt.pivot_tol) continue;
      const double g = -dir * a;  // rate of change of the basic variable
      const int b = basis_[static_cast<std::size_t>(i)];
      auto [lo, hi] = effective_bounds(b, opt.feas_tol);
      if (g < 0.0 && std::isfinite(lo)) relaxed = std::min(relaxed, (x_(b) - lo + tol) / -g);
      if (g > 0.0 && std::isfinite(hi)) relaxed = std::min(relaxed, (hi - x_(b) + tol) / g);
    }
    if (!std::isfinite(relaxed)) {
      best.unbounded = true;
      return best;
    }
    // Pass 2: among rows whose exact ratio fits, take the largest pivot
    // (Bland: the smallest basic index).
    double best_piv = 0.0;
    int best_var = -1;
    for (int i = 0; i < m_; ++i) {
      const double a = T_(i, j);
      if (std::fabs(a) <= opt.pivot_tol) continue;
      const double g = -dir * a;
      const int b = basis_[static_cast<std::size_t>(i)];
      auto [lo, hi] = effective_bounds(b, opt.feas_tol);
      double ratio, bound;
      if (g < 0.0 && std::isfinite(lo)) {
        ratio = (x_(b) - lo) / -g;
        bound = lo;
      } else if (g > 0.0 && std::isfinite(hi)) {
        ratio = (hi - x_(b)) / g;
        bound = hi;
      } else {
        continue;
      }
      if (ratio > relaxed) continue;
      const bool better = bland ? (best_var < 0 || b < best_var) : std::fabs(a) > best_piv;
      if (better) {
        best_piv = std::fabs(a);
        best_var = b;
        best.row = i;
        best.theta = std::max(0.0, ratio);
        best.leave_value = bound;
      }
    }
    if (best.row < 0 || (std::isfinite(limit) && limit <= best.theta)) {
      best.row = -1;
      best.theta = limit;
    }
    return best;
  }

  void apply(int j, double dir, const Step& s) {
    const double dx = dir * s.theta;
    x_(j) += dx;
    x_basic_update(j, dx);
    if (s.row < 0) {
      // Bound flip: snap exactly onto the opposite bound.
      x_(j) = dir > 0 ? ub_[static_cast<std::size_t>(j)] : lb_[static_cast<std::size_t>(j)];
      return;
    }
    const int leaving = basis_[static_cast<std::size_t>(s.row)];
    pivot(s.row, j);
    x_(leaving) = s.leave_value;
  }

  void pivot(int r, int j) {
    const int leaving = basis_[static_cast<std::size_t>(r)];
    const double piv = T_(r, j);
    T_.row(r) /= piv;
    const int nt = n_ + m_;
    const double* pr = T_.row(r).data();
    nz_.clear();
    for (int k = 0; k < nt; ++k)
      if (pr[k] != 0.0) nz_.push_back(k);
    const bool sparse = 4 * nz_.size() < static_cast<std::size_t>(nt);
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = T_(i, j);
      if (f == 0.0) continue;
      if (sparse) {
        double* pi = T_.row(i).data();
        for (int k : nz_) pi[k] -= f * pr[k];
      } else {
        T_.row(i) -= f * T_.row(r);
      }
    }
    basis_[static_cast<std::size_t>(r)] = j;
    where_[static_cast<std::size_t>(j)] = r;
    where_[static_cast<std::size_t>(leaving)] = -1;
  }

  bool dual_feasible(double tol) const {
    for (int j = 0; j < n_ + m_; ++j)
      if (attractiveness(j, tol) > 0.0) return false;
    return true;
  }

  int leaving_row(double tol) const {
    int best = -1;
    double worst = tol;
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[static_cast<std::size_t>(i)];
      const double v = std::max(lb_[static_cast<std::size_t>(b)] - x_(b), x_(b) - ub_[static_cast<std::size_t>(b)]);
      if (v > worst) {
        worst = v;
        best = i;
      }
    }
    return best;
  }

  // Entering variable for the dual ratio test on row r (two-pass Harris).
  int dual_entering(int r, bool increase_basic, const LpOptions& opt) const {
    auto eligible = [&](int j, double a) {
      if (where_[static_cast<std::size_t>(j)] >= 0 || is_fixed(j) || std::fabs(a) <= opt.pivot_tol) return false;
      // basic changes by -a*dx; we need sign(-a*dx) matching the requested move
      const bool up_ok = !at_upper(j);    // dx > 0 possible
      const bool down_ok = !at_lower(j);  // dx < 0 possible
      if (increase_basic) return (a < 0.0 && up_ok) || (a > 0.0 && down_ok);
      return (a > 0.0 && up_ok) || (a < 0.0 && down_ok);
    };
    double relaxed = kInf;
    for (int j = 0; j < n_ + m_; ++j) {
      const double a = T_(r, j);
      if (!eligible(j, a)) continue;
      relaxed = std::min(relaxed, (std::fabs(d_(j)) + opt.opt_tol) / std::fabs(a));
    }
    if (!std::isfinite(relaxed)) return -1;
    int best = -1;
    double best_piv = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const double a = T_(r, j);
      if (!eligible(j, a)) continue;
      if (std::fabs(d_(j)) / std::fabs(a) > relaxed) continue;
      if (std::fabs(a) > best_piv) {
        best_piv = std::fabs(a);
        best = j;
      }
    }
    return best;
  }

  int n_, m_;
  RowMatrix A_;
  std::vector<double> lb_, ub_;
  Eigen::VectorXd c_;
  double constant_ = 0.0;
  RowMatrix T_;
  std::vector<int> basis_;
  // Nonzero columns of the last pivot row.
  std::vector<int> nz_;
  std::vector<int> where_;
  Eigen::VectorXd x_;
  Eigen::VectorXd cost_;
  Eigen::VectorXd d_;
  bool phase1_ = false;
  long iterations_ = 0;
};

/// Solves the LP relaxation of a model (integrality ignored).
inline SolveOutcome solve_lp(const MilpModel& model, const LpOptions& opt = {}) {
  SolveOutcome out;
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.var(j).lower > model.var(j).upper) {
      out.status = SolveStatus::infeasible;
      out.message = "empty bounds on " + model.var(j).name;
      return out;
    }
  DenseSimplex lp(model);
  const LpStatus st = lp.solve_primal(opt);
  out.iterations = lp.iterations();
  switch (st) {
    case LpStatus::optimal:
      out.status = SolveStatus::optimal;
      out.values = lp.values();
      out.objective = model.evaluate_objective(out.values);
      break;
    case LpStatus::infeasible:
      out.status = SolveStatus::infeasible;
      break;
    case LpStatus::unbounded:
      out.status = SolveStatus::unbounded;
      out.objective = -kInf;
      break;
    case LpStatus::iteration_limit:
      out.status = SolveStatus::iteration_limit;
      break;
    default:
      out.status = SolveStatus::error;
      out.message = "numerical failure in simplex";
  }
  return out;
}

}  // namespace stlprt
