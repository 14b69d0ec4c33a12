#pragma once

// Distributed synthesis: per-agent task sets, update schedules, and the
// iterative procedure in which scheduled agents improve their least robust
// joint task while every other agent holds its previous plan.

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stlprt/branch_bound.hpp"
#include "stlprt/encoding.hpp"
#include "stlprt/error.hpp"
#include "stlprt/model.hpp"
#include "stlprt/stl.hpp"
#include "stlprt/tightening.hpp"

namespace stlprt {

/// Agent -> cliques containing it, each with the agent removed.
using TaskSets = std::map<int, std::vector<Clique>>;

inline Clique without(const Clique& c, int agent) {
  Clique out;
  for (int j : c)
    if (j != agent) out.push_back(j);
  return out;
}

inline TaskSets build_task_sets(const GlobalSpec& spec) {
  TaskSets out;
  for (const auto& [c, f] : spec.joint_tasks)
    for (int i : c) out[i].push_back(without(c, i));
  for (auto& [i, ts] : out) std::sort(ts.begin(), ts.end());
  return out;
}

/// Everything agent i is responsible for: its own task and one reference per
/// joint task it takes part in (keyed by the full clique).
struct AgentBundle {
  int agent = 0;
  Formula local = Formula::truth();
  std::map<Clique, Formula> joint;

  std::size_t size() const { return 1 + joint.size(); }
};

inline std::map<int, AgentBundle> build_bundles(const MasModel& model, const GlobalSpec& spec) {
  std::map<int, AgentBundle> out;
  for (const auto& a : model.agents) {
    AgentBundle b;
    b.agent = a.id;
    if (auto it = spec.local_tasks.find(a.id); it != spec.local_tasks.end()) b.local = it->second;
    out.emplace(a.id, std::move(b));
  }
  const TaskSets sets = build_task_sets(spec);
  for (const auto& [i, others] : sets)
    for (const auto& o : others) {
      Clique c = o;
      c.push_back(i);
      std::sort(c.begin(), c.end());
      out.at(i).joint.emplace(c, spec.joint_tasks.at(c));
    }
  return out;
}

enum class SchedulePolicy { round_robin, coloring };

struct Schedule {
  SchedulePolicy policy = SchedulePolicy::round_robin;
  /// Update sets, repeated cyclically: O_k = cycle[(k - 1) mod size].
  std::vector<std::vector<int>> cycle;
  int k_max = 1;

  const std::vector<int>& active(int k) const {
    if (k < 1) throw ValidationError("iterations start at k = 1");
    return cycle[static_cast<std::size_t>(k - 1) % cycle.size()];
  }
};

/// k_max = 0 selects 10 M. Coloring sets must not contain two members of one
/// clique, and every agent that belongs to a clique must appear somewhere.
inline Schedule make_schedule(const MasModel& model, SchedulePolicy policy, int k_max = 0,
                              std::vector<std::vector<int>> coloring = {}) {
  if (model.agents.empty()) throw ValidationError("no agents to schedule");
  if (k_max < 0) throw ValidationError("k_max must be positive");
  Schedule s;
  s.policy = policy;
  s.k_max = k_max == 0 ? 10 * static_cast<int>(model.agents.size()) : k_max;
  if (policy == SchedulePolicy::round_robin) {
    for (const auto& a : model.agents) s.cycle.push_back({a.id});
    return s;
  }
  if (coloring.empty()) throw ValidationError("coloring schedule needs at least one set");
  std::set<int> ids, covered;
  for (const auto& a : model.agents) ids.insert(a.id);
  const auto cliques = model.spec.cliques();
  for (auto& set : coloring) {
    std::sort(set.begin(), set.end());
    if (set.empty()) throw ValidationError("empty update set in coloring");
    if (std::adjacent_find(set.begin(), set.end()) != set.end()) throw ValidationError("duplicate agent in update set");
    for (int i : set) {
      if (!ids.count(i)) throw ValidationError("update set names unknown agent " + std::to_string(i));
      covered.insert(i);
    }
    for (const auto& c : cliques) {
      std::vector<int> shared;
      std::set_intersection(set.begin(), set.end(), c.begin(), c.end(), std::back_inserter(shared));
      if (shared.size() > 1)
        throw ValidationError("agents " + std::to_string(shared[0]) + " and " + std::to_string(shared[1]) +
                              " share a clique but are updated together");
    }
  }
  for (const auto& c : cliques)
    for (int i : c)
      if (!covered.count(i)) throw ValidationError("agent " + std::to_string(i) + " is never scheduled");
  s.cycle = std::move(coloring);
  return s;
}

using MilpSolver = std::function<SolveOutcome(const MilpModel&)>;

inline MilpSolver internal_solver(MilpLimits limits = {}) {
  return [limits](const MilpModel& m) { return solve_milp(m, limits); };
}

struct PlannerConfig {
  EncodingConfig encoding;
  MilpSolver solver = internal_solver();
  /// Solve the members of one update set concurrently.
  bool parallel = true;
  /// Slack on the robustness contract and on the termination test.
  double contract_tol = 1e-6;
  double termination_tol = 1e-7;
};

enum class PlanStatus { satisfied, minimally_violating, infeasible };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::satisfied:
      return "satisfied";
    case PlanStatus::minimally_violating:
      return "minimally-violating";
    case PlanStatus::infeasible:
      return "infeasible";
  }
  return "?";
}

struct AgentRecord {
  int agent = 0;
  SolveStatus status = SolveStatus::error;
  bool carried_forward = false;
  double cost = 0.0;
  std::optional<Clique> selected;
  double mu = 0.0;
  /// Largest row violation of the previous iterate in this subproblem.
  double witness_violation = 0.0;
  long nodes = 0;
  double seconds = 0.0;
};

struct IterationRecord {
  int k = 0;
  std::vector<int> active;
  std::vector<AgentRecord> agents;
  /// Certified robustness of each joint task after the sweep.
  std::map<Clique, double> robustness;
  double psi_robustness = 0.0;
  /// Joint tasks whose robustness fell below min(0, previous) - tol.
  std::vector<Clique> contract_violations;
};

struct PlanResult {
  PlanStatus status = PlanStatus::infeasible;
  Trajectory z;
  std::map<int, std::vector<Vector>> inputs;
  std::vector<IterationRecord> log;
  int iterations = 0;
  double psi_robustness = 0.0;
  double total_cost = 0.0;
  int infeasible_agent = -1;
  std::string message;
  double seconds = 0.0;
};

namespace detail {

inline std::vector<Vector> simulate_nominal(const AgentModel& a, const std::vector<Vector>& v) {
  std::vector<Vector> z{a.x0};
  for (const auto& vt : v) z.push_back(a.A * z.back() + a.B * vt);
  return z;
}

inline Trajectory assemble(const MasModel& model, const std::map<int, std::vector<Vector>>& states, int N) {
  Trajectory out{model.layout(), {}};
  for (int t = 0; t <= N; ++t) {
    Vector s(out.layout.total());
    for (const auto& [id, zs] : states) s.segment(out.layout.offset(id), out.layout.dim(id)) = zs[static_cast<std::size_t>(t)];
    out.samples.push_back(std::move(s));
  }
  return out;
}

inline double l1_cost(const AgentModel& a, const std::vector<Vector>& z, const std::vector<Vector>& v) {
  auto dot = [](const Vector& w, const Vector& x) {
    double s = 0.0;
    for (int d = 0; d < std::min(w.size(), x.size()); ++d) s += w(d) * std::fabs(x(d));
    return s;
  };
  double c = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) c += dot(a.cost.state, z[t]) + dot(a.cost.input, v[t]);
  return c + dot(a.cost.terminal, z.back());
}

inline double worst_violation(const MilpModel& m, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < m.num_variables(); ++j) {
    const auto& v = m.var(j);
    const double xj = x[static_cast<std::size_t>(j)];
    worst = std::max({worst, v.lower - xj, xj - v.upper});
    if (v.is_integer()) worst = std::max(worst, std::fabs(xj - std::round(xj)));
  }
  for (const auto& r : m.rows()) {
    const double a = MilpModel::activity(r, x);
    if (r.sense != Sense::ge) worst = std::max(worst, a - r.rhs);
    if (r.sense != Sense::le) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

struct AgentUpdate {
  AgentRecord record;
  std::vector<Vector> z, v;
};

}  // namespace detail

/// Solves the single-agent problem with the local task only.
inline detail::AgentUpdate solve_initial(const MasModel& model, const TightenedSpec& ts, int agent,
                                         const PlannerConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Encoder enc = build_init_problem(model, ts, agent, cfg.encoding);
  const SolveOutcome r = cfg.solver(enc.model());
  detail::AgentUpdate out;
  out.record.agent = agent;
  out.record.status = r.status;
  out.record.nodes = r.nodes;
  if (r.status == SolveStatus::optimal || (r.status == SolveStatus::iteration_limit && r.has_solution())) {
    out.v = enc.inputs(r.values).at(agent);
    out.z = detail::simulate_nominal(model.agent(agent), out.v);
    out.record.cost = detail::l1_cost(model.agent(agent), out.z, out.v);
  }
  out.record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Centralized planning: one MILP over all agents.
inline PlanResult plan_centralized(const MasModel& model, const TightenedSpec& ts, const PlannerConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Encoder enc = build_plan_problem(model, ts, cfg.encoding);
  const SolveOutcome r = cfg.solver(enc.model());
  PlanResult out;
  const int N = ts.psi.N;
  if (r.status == SolveStatus::infeasible) {
    out.status = PlanStatus::infeasible;
    out.message = "centralized problem is infeasible";
  } else if (!r.has_solution()) {
    throw SolverError(std::string("centralized solve failed: ") + to_string(r.status) + " " + r.message);
  } else {
    std::map<int, std::vector<Vector>> states;
    out.inputs = enc.inputs(r.values);
    for (const auto& a : model.agents) {
      states[a.id] = detail::simulate_nominal(a, out.inputs.at(a.id));
      out.total_cost += detail::l1_cost(a, states[a.id], out.inputs.at(a.id));
    }
    out.z = detail::assemble(model, states, N);
    const Formula psi = ts.psi.conjunction();
    out.psi_robustness = certified_robustness(psi, out.z, cfg.encoding.eps);
    const bool ok = out.psi_robustness >= -cfg.termination_tol && eval_boolean(psi, out.z);
    out.status = ok ? PlanStatus::satisfied : PlanStatus::minimally_violating;
    if (r.status != SolveStatus::optimal) out.message = "solver stopped early; best incumbent returned";
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// The iterative procedure. Throws InvariantError if a previous iterate is
/// infeasible for its successor subproblem or a local task is lost.
inline PlanResult run_iterative(const MasModel& model, const TightenedSpec& ts, const Schedule& schedule,
                                const PlannerConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const int N = ts.psi.N;
  const double eps = cfg.encoding.eps;
  PlanResult out;
  const TaskSets task_sets = build_task_sets(ts.psi);
  const auto bundles = build_bundles(model, ts.psi);
  const Formula psi = ts.psi.conjunction();

  std::map<int, std::vector<Vector>> states, inputs;
  std::map<int, double> costs;
  {
    std::vector<std::future<detail::AgentUpdate>> jobs;
    std::vector<detail::AgentUpdate> done;
    for (const auto& a : model.agents) {
      if (cfg.parallel)
        jobs.push_back(std::async(std::launch::async, [&, id = a.id] { return solve_initial(model, ts, id, cfg); }));
      else
        done.push_back(solve_initial(model, ts, a.id, cfg));
    }
    for (auto& j : jobs) done.push_back(j.get());
    IterationRecord init;
    bool infeasible = false;
    for (auto& u : done) {
      init.active.push_back(u.record.agent);
      if (u.record.status == SolveStatus::infeasible) {
        infeasible = true;
        out.status = PlanStatus::infeasible;
        out.infeasible_agent = u.record.agent;
        out.message = "initial problem of agent " + std::to_string(u.record.agent) + " is infeasible";
      } else if (u.z.empty()) {
        throw SolverError("initial solve of agent " + std::to_string(u.record.agent) + " failed: " +
                          to_string(u.record.status));
      } else {
        states[u.record.agent] = u.z;
        inputs[u.record.agent] = u.v;
        costs[u.record.agent] = u.record.cost;
      }
      init.agents.push_back(u.record);
    }
    if (infeasible) {
      out.log.push_back(std::move(init));
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return out;
    }
    out.z = detail::assemble(model, states, N);
    for (const auto& [c, f] : ts.psi.joint_tasks) init.robustness[c] = certified_robustness(f, out.z, eps);
    init.psi_robustness = certified_robustness(psi, out.z, eps);
    out.log.push_back(std::move(init));
  }

  auto satisfied = [&](const Trajectory& z, double rho) { return rho >= -cfg.termination_tol && eval_boolean(psi, z); };

  for (int k = 1; k <= schedule.k_max; ++k) {
    const Trajectory prev = out.z;
    const auto& prev_rob = out.log.back().robustness;
    IterationRecord rec;
    rec.k = k;
    rec.active = schedule.active(k);

    auto update = [&](int agent) -> detail::AgentUpdate {
      const auto ta = std::chrono::steady_clock::now();
      detail::AgentUpdate u;
      u.record.agent = agent;
      const auto& bundle = bundles.at(agent);
      if (bundle.joint.empty()) {
        // Without joint tasks the subproblem is the initial one again.
        u.record.status = SolveStatus::optimal;
        u.record.carried_forward = true;
        u.z = states.at(agent);
        u.v = inputs.at(agent);
        u.record.cost = costs.at(agent);
        return u;
      }
      AgentStep step;
      step.agent = agent;
      step.previous = &prev;
      for (const auto& [c, f] : bundle.joint) step.previous_robustness[c] = prev_rob.at(c);
      for (const auto& [c, rho] : step.previous_robustness)
        if (step.selected.empty() || rho < step.previous_robustness.at(step.selected)) step.selected = c;
      u.record.selected = step.selected;
      AgentProblem p = build_agent_problem(model, ts, step, cfg.encoding);
      const MilpModel& m = p.encoder.model();

      std::map<int, std::vector<Vector>> own{{agent, inputs.at(agent)}};
      const auto w = p.encoder.witness(prev, own);
      u.record.witness_violation = detail::worst_violation(m, w);
      if (u.record.witness_violation > 1e-6) {
        std::ostringstream os;
        os << "iteration " << k << ", agent " << agent << ": previous iterate violates the new subproblem";
        for (const auto& v : m.violations(w, 1e-6)) os << "\n  " << v;
        throw InvariantError(os.str());
      }

      const SolveOutcome r = cfg.solver(m);
      u.record.status = r.status;
      u.record.nodes = r.nodes;
      if (r.has_solution()) {
        u.v = p.encoder.inputs(r.values).at(agent);
        u.record.mu = r.values[static_cast<std::size_t>(p.mu)];
      } else if (r.status == SolveStatus::infeasible) {
        throw InvariantError("iteration " + std::to_string(k) + ", agent " + std::to_string(agent) +
                             ": subproblem reported infeasible although the previous iterate is feasible");
      } else {
        // Solver gave up without an incumbent: the previous plan is feasible.
        u.v = inputs.at(agent);
        u.record.carried_forward = true;
        u.record.mu = w[static_cast<std::size_t>(p.mu)];
      }
      u.z = detail::simulate_nominal(model.agent(agent), u.v);
      u.record.cost = detail::l1_cost(model.agent(agent), u.z, u.v);
      u.record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ta).count();
      return u;
    };

    std::vector<detail::AgentUpdate> updates;
    if (cfg.parallel && rec.active.size() > 1) {
      std::vector<std::future<detail::AgentUpdate>> jobs;
      for (int i : rec.active) jobs.push_back(std::async(std::launch::async, update, i));
      for (auto& j : jobs) updates.push_back(j.get());
    } else {
      for (int i : rec.active) updates.push_back(update(i));
    }

    for (auto& u : updates) {
      const int i = u.record.agent;
      states[i] = std::move(u.z);
      inputs[i] = std::move(u.v);
      costs[i] = u.record.cost;
      rec.agents.push_back(u.record);
    }
    out.z = detail::assemble(model, states, N);
    for (const auto& u : rec.agents) {
      const Formula& local = bundles.at(u.agent).local;
      if (!eval_boolean(local, out.z))
        throw InvariantError("iteration " + std::to_string(k) + ", agent " + std::to_string(u.agent) +
                             " lost its local task");
    }
    for (const auto& [c, f] : ts.psi.joint_tasks) {
      const double rho = certified_robustness(f, out.z, eps);
      rec.robustness[c] = rho;
      if (rho < std::min(0.0, prev_rob.at(c)) - cfg.contract_tol) rec.contract_violations.push_back(c);
    }
    rec.psi_robustness = certified_robustness(psi, out.z, eps);
    out.log.push_back(std::move(rec));
    out.iterations = k;
    if (satisfied(out.z, out.log.back().psi_robustness)) break;
  }

  out.inputs = inputs;
  out.psi_robustness = out.log.back().psi_robustness;
  for (const auto& [i, c] : costs) out.total_cost += c;
  out.status = satisfied(out.z, out.psi_robustness) ? PlanStatus::satisfied : PlanStatus::minimally_violating;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string clique_label(const Clique& c) {
  std::string s = "(";
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
  return s + ")";
}

/// One line per agent solve and one summary line per iteration; k = 0 holds
/// the initial solves. Without timings the text is reproducible run to run.
inline std::string format_iteration_log(const PlanResult& r, bool timings = true) {
  std::ostringstream os;
  for (const auto& it : r.log) {
    for (const auto& a : it.agents) {
      os << "k=" << it.k << " agent=" << a.agent << " status=" << to_string(a.status)
         << " cost=" << format_number(a.cost);
      if (a.selected) os << " selected=" << clique_label(*a.selected) << " mu=" << format_number(a.mu);
      if (a.carried_forward) os << " carried-forward";
      os << " nodes=" << a.nodes;
      if (timings) os << " seconds=" << format_number(a.seconds);
      os << "\n";
    }
    os << "k=" << it.k << " summary rho_psi=" << format_number(it.psi_robustness);
    for (const auto& [c, rho] : it.robustness) os << " rho" << clique_label(c) << "=" << format_number(rho);
    for (const auto& c : it.contract_violations) os << " contract-violated" << clique_label(c);
    os << "\n";
  }
  os << "status=" << to_string(r.status) << " iterations=" << r.iterations << " cost=" << format_number(r.total_cost)
     << " rho_psi=" << format_number(r.psi_robustness) << "\n";
  return os.str();
}

}  // namespace stlprt
