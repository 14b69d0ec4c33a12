#pragma once

// Constraint tightening against the probabilistic reachable tubes.
//
// A positive literal a'x + b >= 0 is replaced by a'z + b' >= 0 with
// b' = b - max_t h_{E(t)}(-a); a negated literal a'x + b < 0 by
// a'z + b' < 0 with b' = b + max_t h_{E(t)}(a). For a clique predicate the
// tube is the Cartesian product of the members' tubes, so h splits into a
// sum of per-agent supports on the coefficient slices.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/model.hpp"
#include "stlprt/reach.hpp"
#include "stlprt/stl.hpp"

namespace stlprt {

/// Per-agent tubes E_i(0..N), keyed by agent id.
using TubeMap = std::map<int, std::vector<ReachSet>>;

struct TubeOptions {
  enum class Region { automatic, chebyshev, gaussian };
  /// automatic: exact Gaussian region for gaussian disturbances, Chebyshev
  /// for moment_only ones.
  Region region = Region::automatic;
  bool paper_radius = false;
};

inline Ellipsoid confidence_region(const AgentModel& a, double level, const TubeOptions& opt = {}) {
  const bool gaussian = opt.region == TubeOptions::Region::gaussian ||
                        (opt.region == TubeOptions::Region::automatic &&
                         a.disturbance.kind == DisturbanceSpec::Kind::gaussian);
  return gaussian ? gaussian_cr(a.disturbance.Q, level) : chebyshev_cr(a.disturbance.Q, level, opt.paper_radius);
}

inline TubeMap build_tubes(const MasModel& model, const ProbabilityBudget& budget, const TubeOptions& opt = {}) {
  if (budget.levels.size() != model.agents.size()) throw BudgetError("budget size does not match agent count", 0.0);
  TubeMap tubes;
  for (std::size_t i = 0; i < model.agents.size(); ++i) {
    const auto& a = model.agents[i];
    tubes.emplace(a.id, prs_sequence(a.closed_loop(), confidence_region(a, budget.levels[i], opt), model.spec.N, a.id));
  }
  return tubes;
}

/// Support of the product tube at time t in the predicate's coefficient direction.
inline double predicate_support(const Predicate& p, const TubeMap& tubes, int t, double sign) {
  std::map<int, Vector> slices;
  for (const auto& [s, c] : p.coeffs) {
    const auto& tube = tubes.at(s.agent);
    auto [it, fresh] = slices.try_emplace(s.agent, Vector::Zero(tube.front().dim()));
    it->second(s.dim) += sign * c;
  }
  double h = 0.0;
  for (const auto& [agent, a] : slices) h += tubes.at(agent).at(static_cast<std::size_t>(t)).support(a);
  return h;
}

struct PredicateShift {
  Predicate original;
  Predicate tightened;
  double delta = 0.0;
  /// Time index attaining the worst case (smallest on ties); -1 if the window was empty.
  int time = -1;
  /// Agent id for local tasks, clique tuple for joint tasks.
  std::vector<int> owner;
};

/// Tightens one literal over the times t in [t_lo, t_hi].
inline PredicateShift tighten_predicate(const Predicate& p, const TubeMap& tubes, int t_lo, int t_hi) {
  PredicateShift out{p, p, 0.0, -1, {}};
  const bool positive = p.polarity == Polarity::positive;
  double worst = 0.0;
  for (int t = t_lo; t <= t_hi; ++t) {
    const double h = predicate_support(p, tubes, t, positive ? -1.0 : 1.0);
    if (out.time < 0 || h > worst) {
      worst = h;
      out.time = t;
    }
  }
  out.delta = positive ? -worst : worst;
  out.tightened.offset = p.offset + out.delta;
  return out;
}

/// Tightening over the whole horizon t in [1, N].
inline PredicateShift tighten_predicate(const Predicate& p, const TubeMap& tubes, int N) {
  return tighten_predicate(p, tubes, 1, N);
}

namespace detail {

struct Tightener {
  const TubeMap& tubes;
  int N;
  bool per_window;
  std::vector<int> owner;
  std::vector<PredicateShift>* log;

  // [lo, hi] is the range of absolute times at which f is evaluated.
  Formula run(const Formula& f, int lo, int hi) {
    switch (f.kind()) {
      case NodeKind::True:
        return f;
      case NodeKind::Pred: {
        PredicateShift s = per_window ? tighten_predicate(f.predicate(), tubes, lo, std::min(hi, N))
                                      : tighten_predicate(f.predicate(), tubes, N);
        s.owner = owner;
        Formula out = Formula::pred(s.tightened);
        log->push_back(std::move(s));
        return out;
      }
      case NodeKind::Not:
        if (f.child().kind() != NodeKind::True) throw ValidationError("tightening requires negation normal form");
        return f;
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<Formula> cs;
        for (const auto& c : f.children()) cs.push_back(run(c, lo, hi));
        return f.kind() == NodeKind::And ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
      }
      case NodeKind::Eventually:
        return Formula::eventually(run(f.child(), lo + f.lo(), hi + f.hi()), f.lo(), f.hi());
      case NodeKind::Always:
        return Formula::always(run(f.child(), lo + f.lo(), hi + f.hi()), f.lo(), f.hi());
      case NodeKind::Until:
        return Formula::until(run(f.child(0), lo, hi + f.hi()), run(f.child(1), lo + f.lo(), hi + f.hi()), f.lo(),
                              f.hi());
    }
    return f;
  }
};

}  // namespace detail

/// Tightens an NNF formula. With per_window, each occurrence is tightened only
/// over the times at which it is evaluated instead of all of [1, N].
inline Formula tighten_formula(const Formula& f, const TubeMap& tubes, int N, bool per_window = false,
                               std::vector<PredicateShift>* log = nullptr, std::vector<int> owner = {}) {
  std::vector<PredicateShift> scratch;
  detail::Tightener t{tubes, N, per_window, std::move(owner), log ? log : &scratch};
  return t.run(f, 0, 0);
}

struct TighteningOptions {
  bool per_window = false;
};

struct TightenedSpec {
  /// Tightened specification psi; operator trees are the NNF of phi's.
  GlobalSpec psi;
  /// NNF of the original specification, aligned with psi.
  GlobalSpec phi_nnf;
  std::vector<PredicateShift> shifts;
  /// input_boxes[i][t] = U_i (-) K_i E_i(t), t = 0..N-1.
  std::map<int, std::vector<Box>> input_boxes;
  std::vector<std::string> warnings;
};

/// Box (-) K E: upper_j - h_E(K'e_j), lower_j + h_E(-K'e_j). Throws
/// InputBudgetError when a coordinate empties.
inline Box tighten_input_box(const Box& box, const Matrix& K, const ReachSet& E, int agent = 0) {
  if (box.empty()) throw ValidationError("input box is empty");
  Box out = box;
  for (int j = 0; j < box.size(); ++j) {
    Vector kj = K.row(j).transpose();
    out.upper(j) = box.upper(j) - E.support(kj);
    out.lower(j) = box.lower(j) + E.support(-kj);
  }
  if (out.empty())
    throw InputBudgetError("tightened input box of agent " + std::to_string(agent) + " is empty at t=" +
                               std::to_string(E.time()),
                           agent, E.time());
  return out;
}

namespace detail {
// Warns if the tightened literal cannot hold anywhere in the owners' state boxes.
inline void check_satisfiable(const MasModel& model, const PredicateShift& s, std::vector<std::string>& warnings) {
  double lo = s.tightened.offset, hi = s.tightened.offset;
  for (const auto& [sig, c] : s.tightened.coeffs) {
    const auto& box = model.agent(sig.agent).state_box;
    if (!box) return;
    const double a = c * box->lower(sig.dim), b = c * box->upper(sig.dim);
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  const bool positive = s.tightened.polarity == Polarity::positive;
  if ((positive && hi < 0.0) || (!positive && lo >= 0.0)) {
    std::ostringstream os;
    os << "tightened predicate " << to_string(Formula::pred(s.tightened)) << " is unsatisfiable over the state box";
    warnings.push_back(os.str());
  }
}
}  // namespace detail

/// Tightens every local and joint task of the effective specification and
/// every input box.
inline TightenedSpec tighten_spec(const MasModel& model, const TubeMap& tubes, const TighteningOptions& opt = {}) {
  TightenedSpec out;
  const GlobalSpec phi = effective_spec(model);
  out.phi_nnf.theta = out.psi.theta = phi.theta;
  out.phi_nnf.N = out.psi.N = phi.N;
  for (const auto& [i, f] : phi.local_tasks) {
    Formula g = to_nnf(f);
    out.phi_nnf.local_tasks.emplace(i, g);
    out.psi.local_tasks.emplace(i, tighten_formula(g, tubes, phi.N, opt.per_window, &out.shifts, {i}));
  }
  for (const auto& [c, f] : phi.joint_tasks) {
    Formula g = to_nnf(f);
    out.phi_nnf.joint_tasks.emplace(c, g);
    out.psi.joint_tasks.emplace(c, tighten_formula(g, tubes, phi.N, opt.per_window, &out.shifts, c));
  }
  for (const auto& s : out.shifts) detail::check_satisfiable(model, s, out.warnings);
  for (const auto& a : model.agents) {
    auto& boxes = out.input_boxes[a.id];
    const auto& tube = tubes.at(a.id);
    for (int t = 0; t < phi.N; ++t) boxes.push_back(tighten_input_box(a.input_box, a.K, tube.at(static_cast<std::size_t>(t)), a.id));
  }
  return out;
}

/// Structured text: one line per predicate occurrence and per input bound.
inline std::string tightening_report(const TightenedSpec& ts) {
  std::ostringstream os;
  os << "# predicate shifts: owner | polarity | predicate | b | b' | delta | t*\n";
  for (const auto& s : ts.shifts) {
    std::string owner;
    for (std::size_t k = 0; k < s.owner.size(); ++k) owner += (k ? "," : "") + std::to_string(s.owner[k]);
    Predicate plain = s.original;
    plain.polarity = Polarity::positive;
    os << "shift | " << owner << " | " << (s.original.polarity == Polarity::positive ? "positive" : "negated") << " | "
       << to_string(Formula::pred(plain)) << " | " << format_number(s.original.offset) << " | "
       << format_number(s.tightened.offset) << " | " << format_number(s.delta) << " | " << s.time << "\n";
  }
  os << "# input boxes: agent | t | coordinate | lower | upper\n";
  for (const auto& [agent, boxes] : ts.input_boxes)
    for (std::size_t t = 0; t < boxes.size(); ++t)
      for (int j = 0; j < boxes[t].size(); ++j)
        os << "input | " << agent << " | " << t << " | " << j << " | " << format_number(boxes[t].lower(j)) << " | "
           << format_number(boxes[t].upper(j)) << "\n";
  for (const auto& w : ts.warnings) os << "warning | " << w << "\n";
  return os.str();
}

}  // namespace stlprt
