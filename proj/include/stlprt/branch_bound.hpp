#pragma once

// Best-first branch-and-bound over the dense simplex.
//
// Children are reoptimized with the dual simplex starting from a copy of the
// parent's final tableau (any tableau in the tree is dual feasible, since
// bound changes do not touch reduced costs). Tableau copies are shared by the
// two children and dropped once both are processed; past a memory budget the
// children fall back to the nearest retained ancestor.

#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <vector>

#include "stlprt/milp_model.hpp"
#include "stlprt/simplex.hpp"

namespace stlprt {

struct MilpLimits {
  long max_nodes = 1000000;
  double time_limit = 600.0;
  /// Absolute optimality gap.
  double gap = 1e-6;
  double integrality_tol = 1e-6;
  /// Memory budget for cached tableau copies.
  std::size_t snapshot_bytes = std::size_t{384} << 20;
  LpOptions lp;
};

namespace detail {

struct BbNode {
  double bound = -kInf;
  int depth = 0;
  long id = 0;
  std::vector<double> lower, upper;
  std::shared_ptr<const DenseSimplex> warm;
};

struct BbOrder {
  bool operator()(const std::shared_ptr<BbNode>& a, const std::shared_ptr<BbNode>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->id > b->id;
  }
};

// Fixes integer variables at their rounded values and solves the remaining
// LP from scratch; accepted only if the original model verifies.
inline bool polish_incumbent(const MilpModel& model, const std::vector<double>& x, const MilpLimits& limits,
                             std::vector<double>& out, double& obj) {
  MilpModel fixed = model;
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.var(j).is_integer()) {
      const double v = std::round(x[static_cast<std::size_t>(j)]);
      fixed.set_bounds(j, v, v);
    }
  DenseSimplex lp(fixed);
  if (lp.solve_primal(limits.lp) != LpStatus::optimal) return false;
  out = lp.values();
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.var(j).is_integer()) out[static_cast<std::size_t>(j)] = std::round(out[static_cast<std::size_t>(j)]);
  if (!model.check_feasible(out, 1e-6)) return false;
  obj = model.evaluate_objective(out);
  return true;
}

}  // namespace detail

inline SolveOutcome solve_milp(const MilpModel& model, const MilpLimits& limits = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  SolveOutcome out;
  const int n = model.num_variables();
  std::vector<int> integer_vars;
  for (int j = 0; j < n; ++j) {
    const auto& v = model.var(j);
    if (v.lower > v.upper) {
      out.status = SolveStatus::infeasible;
      out.message = "empty bounds on " + v.name;
      return out;
    }
    if (v.is_integer()) integer_vars.push_back(j);
  }

  auto root_lp = std::make_shared<DenseSimplex>(model);
  const std::size_t snapshot_size =
      sizeof(double) * static_cast<std::size_t>(model.num_rows()) * static_cast<std::size_t>(n + model.num_rows()) + 1;
  std::size_t live_bytes = 0;
  auto retain = [&](const DenseSimplex& lp) -> std::shared_ptr<const DenseSimplex> {
    if (live_bytes + snapshot_size > limits.snapshot_bytes) return nullptr;
    live_bytes += snapshot_size;
    return std::shared_ptr<const DenseSimplex>(new DenseSimplex(lp), [&live_bytes, snapshot_size](const DenseSimplex* p) {
      live_bytes -= snapshot_size;
      delete p;
    });
  };

  std::priority_queue<std::shared_ptr<detail::BbNode>, std::vector<std::shared_ptr<detail::BbNode>>, detail::BbOrder>
      open;
  long next_id = 0;
  {
    auto root = std::make_shared<detail::BbNode>();
    root->id = next_id++;
    for (int j = 0; j < n; ++j) {
      root->lower.push_back(model.var(j).lower);
      root->upper.push_back(model.var(j).upper);
    }
    open.push(root);
  }

  double incumbent = kInf;
  std::vector<double> best;
  bool limited = false;
  bool root_unbounded = false;
  bool numerical = false;
  const std::shared_ptr<const DenseSimplex> root_warm = root_lp;

  while (!open.empty()) {
    if (out.nodes >= limits.max_nodes || elapsed() > limits.time_limit) {
      limited = true;
      break;
    }
    auto node = open.top();
    open.pop();
    if (node->bound >= incumbent - limits.gap) continue;
    ++out.nodes;

    DenseSimplex lp = node->warm ? *node->warm : *root_warm;
    const long before = lp.iterations();
    for (int j : integer_vars) lp.set_bounds(j, node->lower[static_cast<std::size_t>(j)], node->upper[static_cast<std::size_t>(j)]);
    LpOptions opt = limits.lp;
    opt.cutoff = incumbent - limits.gap;
    const LpStatus st = node->id == 0 ? lp.solve_primal(opt) : lp.solve_dual(opt);
    out.iterations += lp.iterations() - before;
    if (st == LpStatus::infeasible || st == LpStatus::cutoff) continue;
    if (st == LpStatus::unbounded) {
      if (node->id == 0) root_unbounded = true;
      break;
    }
    if (st != LpStatus::optimal) {
      numerical = true;
      continue;
    }
    const double bound = lp.objective();
    if (bound >= incumbent - limits.gap) continue;

    // Most fractional integer variable; ties go to the lowest index.
    int branch = -1;
    double best_frac = limits.integrality_tol;
    for (int j : integer_vars) {
      const double v = lp.value(j);
      const double f = std::fabs(v - std::round(v));
      if (f > best_frac + 1e-12) {
        best_frac = f;
        branch = j;
      }
    }
    if (branch < 0) {
      std::vector<double> cand;
      double obj = kInf;
      if (detail::polish_incumbent(model, lp.values(), limits, cand, obj)) {
        if (obj < incumbent) {
          incumbent = obj;
          best = std::move(cand);
        }
      } else {
        numerical = true;
      }
      continue;
    }

    std::shared_ptr<const DenseSimplex> warm = retain(lp);
    if (!warm) warm = node->warm;
    const double v = lp.value(branch);
    for (int side = 0; side < 2; ++side) {
      auto child = std::make_shared<detail::BbNode>();
      child->bound = bound;
      child->depth = node->depth + 1;
      child->id = next_id++;
      child->lower = node->lower;
      child->upper = node->upper;
      if (side == 0)
        child->upper[static_cast<std::size_t>(branch)] = std::floor(v);
      else
        child->lower[static_cast<std::size_t>(branch)] = std::ceil(v);
      child->warm = warm;
      open.push(child);
    }
  }

  out.seconds = elapsed();
  if (root_unbounded) {
    out.status = SolveStatus::unbounded;
    out.objective = -kInf;
    return out;
  }
  if (!best.empty()) {
    out.values = std::move(best);
    out.objective = incumbent;
    out.status = limited ? SolveStatus::iteration_limit : SolveStatus::optimal;
    return out;
  }
  if (limited) {
    out.status = SolveStatus::iteration_limit;
    return out;
  }
  if (numerical) {
    out.status = SolveStatus::error;
    out.message = "numerical trouble while proving infeasibility";
    return out;
  }
  out.status = SolveStatus::infeasible;
  return out;
}

}  // namespace stlprt
