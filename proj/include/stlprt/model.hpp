#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stlprt/linalg.hpp"
#include "stlprt/stl.hpp"

namespace stlprt {

/// Per-coordinate interval [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  int size() const { return static_cast<int>(lower.size()); }
  bool empty() const { return (lower.array() > upper.array()).any(); }
  bool contains(const Vector& x, double tol = 0.0) const {
    return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
  }
};

struct DisturbanceSpec {
  enum class Kind { moment_only, gaussian };
  Kind kind = Kind::gaussian;
  /// Covariance; the mean is zero.
  Matrix Q;
};

/// L1 weights: l_i(x, u) = sum w_x |x_d| + sum w_u |u_d|, V_f(x) = sum w_f |x_d|.
struct CostSpec {
  Vector state;
  Vector input;
  Vector terminal;
};

struct AgentModel {
  int id = 0;
  Matrix A;
  Matrix B;
  Matrix K;
  Vector x0;
  Box input_box;
  std::optional<Box> state_box;
  DisturbanceSpec disturbance;
  CostSpec cost;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  Matrix closed_loop() const { return A + B * K; }
};

using Clique = std::vector<int>;

/// phi = AND_i phi_i  AND  AND_nu phi_nu, required with probability >= theta.
struct GlobalSpec {
  std::map<int, Formula> local_tasks;
  std::map<Clique, Formula> joint_tasks;
  double theta = 0.9;
  int N = 0;

  /// The whole conjunction as one formula (locals first, then cliques).
  Formula conjunction() const {
    std::vector<Formula> parts;
    for (const auto& [i, f] : local_tasks) parts.push_back(f);
    for (const auto& [c, f] : joint_tasks) parts.push_back(f);
    if (parts.empty()) return Formula::truth();
    return parts.size() == 1 ? parts.front() : Formula::conjunction(std::move(parts));
  }

  /// Cliques in lexicographic order.
  std::vector<Clique> cliques() const {
    std::vector<Clique> out;
    for (const auto& [c, f] : joint_tasks) out.push_back(c);
    return out;
  }
};

struct MasModel {
  std::vector<AgentModel> agents;  // ids 1..M, in order
  GlobalSpec spec;

  int M() const { return static_cast<int>(agents.size()); }
  const AgentModel& agent(int id) const { return agents.at(static_cast<std::size_t>(id - 1)); }

  Layout layout() const {
    std::map<int, int> dims;
    for (const auto& a : agents) dims[a.id] = a.n();
    return Layout(std::move(dims));
  }
};

/// G[0,N](lower <= x_i <= upper), coordinate by coordinate.
inline Formula state_box_formula(int agent, const Box& box, int N) {
  std::vector<Formula> parts;
  for (int d = 0; d < box.size(); ++d) {
    Predicate lo, hi;
    lo.coeffs[{agent, d}] = 1.0;
    lo.offset = -box.lower(d);
    hi.coeffs[{agent, d}] = -1.0;
    hi.offset = box.upper(d);
    if (std::isfinite(box.lower(d))) parts.push_back(Formula::pred(std::move(lo)));
    if (std::isfinite(box.upper(d))) parts.push_back(Formula::pred(std::move(hi)));
  }
  if (parts.empty()) return Formula::truth();
  Formula inner = parts.size() == 1 ? parts.front() : Formula::conjunction(std::move(parts));
  return Formula::always(std::move(inner), 0, N);
}

/// The specification actually planned for: each state box becomes an extra
/// always-conjunct of its agent's local task.
inline GlobalSpec effective_spec(const MasModel& model) {
  GlobalSpec spec = model.spec;
  for (const auto& a : model.agents) {
    if (!a.state_box) continue;
    Formula box = state_box_formula(a.id, *a.state_box, spec.N);
    auto it = spec.local_tasks.find(a.id);
    if (it == spec.local_tasks.end())
      spec.local_tasks.emplace(a.id, box);
    else
      it->second = Formula::conjunction({it->second, box});
  }
  return spec;
}

/// Unordered agent pairs sharing at least one clique.
inline std::set<std::pair<int, int>> induced_graph(const GlobalSpec& spec) {
  std::set<std::pair<int, int>> edges;
  for (const auto& [clique, f] : spec.joint_tasks)
    for (std::size_t a = 0; a < clique.size(); ++a)
      for (std::size_t b = a + 1; b < clique.size(); ++b)
        edges.insert({std::min(clique[a], clique[b]), std::max(clique[a], clique[b])});
  return edges;
}

struct AggregateDynamics {
  Matrix A;
  Matrix B;
  Matrix K;
  Matrix closed_loop;
  std::vector<int> state_offsets;
  std::vector<int> input_offsets;

  Matrix block_A(std::size_t i, int n) const { return A.block(state_offsets[i], state_offsets[i], n, n); }
};

inline AggregateDynamics aggregate_dynamics(const std::vector<AgentModel>& agents) {
  if (agents.empty()) throw ValidationError("at least one agent is required");
  std::vector<Matrix> as, bs, ks;
  AggregateDynamics out;
  int xo = 0, uo = 0;
  for (const auto& a : agents) {
    as.push_back(a.A);
    bs.push_back(a.B);
    ks.push_back(a.K);
    out.state_offsets.push_back(xo);
    out.input_offsets.push_back(uo);
    xo += a.n();
    uo += a.m();
  }
  out.A = block_diagonal(as);
  out.B = block_diagonal(bs);
  out.K = block_diagonal(ks);
  out.closed_loop = out.A + out.B * out.K;
  return out;
}

/// Gain -alpha * pinv(B) * A. For fully actuated integrators this gives
/// A + BK = (1 - alpha) A. Not part of the planning method proper: gains are
/// normally supplied by the user.
inline Matrix proportional_gain(const Matrix& A, const Matrix& B, double alpha) {
  Matrix pinv = B.completeOrthogonalDecomposition().pseudoInverse();
  return -alpha * pinv * A;
}

inline void validate_agent(const AgentModel& a) {
  const std::string who = "agent " + std::to_string(a.id) + ": ";
  const int n = a.n();
  const int m = a.m();
  if (n == 0 || a.A.cols() != n) throw ValidationError(who + "A must be square and non-empty");
  if (a.B.rows() != n || m == 0) throw ValidationError(who + "B has wrong shape");
  if (a.K.rows() != m || a.K.cols() != n) throw ValidationError(who + "K must be m x n");
  if (a.x0.size() != n) throw ValidationError(who + "x0 has wrong size");
  if (a.input_box.size() != m || a.input_box.upper.size() != m) throw ValidationError(who + "input box has wrong size");
  if (a.input_box.empty()) throw ValidationError(who + "input box is empty");
  if (a.state_box) {
    if (a.state_box->size() != n || a.state_box->upper.size() != n) throw ValidationError(who + "state box has wrong size");
    if (a.state_box->empty()) throw ValidationError(who + "state box is empty");
  }
  if (!is_symmetric_positive_definite(a.disturbance.Q) || a.disturbance.Q.rows() != n)
    throw ValidationError(who + "disturbance covariance must be symmetric positive definite");
  const double rho = spectral_radius(a.closed_loop());
  if (!(rho < 1.0 - 1e-6))
    throw ValidationError(who + "A + BK is not Schur stable (spectral radius " + std::to_string(rho) + ")");
  auto check_weights = [&](const Vector& w, int size, const char* what) {
    if (w.size() != size) throw ValidationError(who + what + " cost weights have wrong size");
    if ((w.array() < 0.0).any()) throw ValidationError(who + what + " cost weights must be non-negative");
  };
  check_weights(a.cost.state, n, "state");
  check_weights(a.cost.input, m, "input");
  check_weights(a.cost.terminal, n, "terminal");
}

/// Full model validation, including the no-complementary-literal rule over
/// the whole conjunction.
inline void validate(const MasModel& model) {
  if (model.agents.empty()) throw ValidationError("no agents");
  for (std::size_t i = 0; i < model.agents.size(); ++i) {
    if (model.agents[i].id != static_cast<int>(i) + 1) throw ValidationError("agent ids must be 1..M in order");
    validate_agent(model.agents[i]);
  }
  const auto& spec = model.spec;
  if (!(spec.theta > 0.0 && spec.theta < 1.0)) throw ValidationError("theta must lie in (0,1)");
  if (spec.N < 1) throw ValidationError("horizon N must be at least 1");
  const Layout layout = model.layout();
  auto check_refs = [&](const Formula& f, const std::set<int>& allowed, const std::string& what) {
    auto visit = [&](auto&& self, const Formula& g) -> void {
      if (g.kind() == NodeKind::Pred)
        for (const auto& [s, c] : g.predicate().coeffs) {
          if (!layout.has(s))
            throw ValidationError(what + " references unknown signal x" + std::to_string(s.agent) + "[" +
                                  std::to_string(s.dim) + "]");
          if (!allowed.count(s.agent))
            throw ValidationError(what + " references agent " + std::to_string(s.agent) + " outside its scope");
        }
      for (const auto& c : g.children()) self(self, c);
    };
    visit(visit, f);
    if (f.horizon() > spec.N)
      throw ValidationError(what + " has horizon " + std::to_string(f.horizon()) + " > N=" + std::to_string(spec.N));
  };
  for (const auto& [i, f] : spec.local_tasks) {
    if (!layout.has_agent(i)) throw ValidationError("local task for unknown agent " + std::to_string(i));
    check_refs(f, {i}, "local task of agent " + std::to_string(i));
  }
  for (const auto& [clique, f] : spec.joint_tasks) {
    if (clique.size() < 2) throw ValidationError("cliques need at least two agents");
    if (!std::is_sorted(clique.begin(), clique.end()) ||
        std::adjacent_find(clique.begin(), clique.end()) != clique.end())
      throw ValidationError("clique tuples must be sorted and duplicate-free");
    for (int a : clique)
      if (!layout.has_agent(a)) throw ValidationError("clique references unknown agent " + std::to_string(a));
    check_refs(f, std::set<int>(clique.begin(), clique.end()), "joint task");
  }
  check_no_complementary_literals(collect_predicates(to_nnf(effective_spec(model).conjunction())));
}

}  // namespace stlprt
