#pragma once

// Big-M MILP encoding of STL satisfaction and robustness over linear
// dynamics.
//
// Every variable is created together with a recipe that recomputes its value
// from a given (z, v) pair. Evaluating the recipes in creation order yields
// the canonical assignment of a known trajectory, which is how previous
// iterates are substituted into new subproblems.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/milp_model.hpp"
#include "stlprt/model.hpp"
#include "stlprt/stl.hpp"
#include "stlprt/tightening.hpp"

namespace stlprt {

struct EncodingConfig {
  /// Uniform big-M. Zero derives a separate constant for every row from
  /// interval bounds on the states, which is always adequate.
  double big_m = 0.0;
  /// Strictness margin on predicate literals.
  double eps = 1e-4;
  /// Upper bound on the slack mu. At 0 an agent stops trading inputs for
  /// robustness once its selected task is satisfied.
  double robustness_cap = 0.0;
  /// Weight of -mu against the L1 cost. Above 1 so that, for unit-gain
  /// integrators with L1 input cost, progress on a task is never tied with
  /// standing still.
  double mu_weight = 10.0;
  /// Two-sided min/max encoding: the robustness variable equals the true
  /// robustness instead of bounding it from below.
  bool exact_robustness = false;
};

/// Uniform big-M from the model data: twice the largest |b| + |a|_1 R over
/// the predicates, R the largest state-box coordinate, at least 1e3.
inline double default_big_m(const MasModel& model, const Formula& f) {
  double R = 0.0;
  for (const auto& a : model.agents)
    if (a.state_box)
      for (int d = 0; d < a.state_box->size(); ++d) {
        if (std::isfinite(a.state_box->lower(d))) R = std::max(R, std::fabs(a.state_box->lower(d)));
        if (std::isfinite(a.state_box->upper(d))) R = std::max(R, std::fabs(a.state_box->upper(d)));
      }
  double worst = 0.0;
  for (const auto& p : collect_predicates(f)) {
    double l1 = 0.0;
    for (const auto& [s, c] : p.coeffs) l1 += std::fabs(c);
    worst = std::max(worst, std::fabs(p.offset) + l1 * R);
  }
  return std::max(1e3, 2.0 * worst);
}

/// Robustness with the encoder's strictness margin removed from every literal.
inline double certified_robustness(const Formula& f, const Trajectory& z, double eps, int t = 0) {
  return eval_robustness(f, z, t) - eps;
}

/// Satisfaction of a subformula: a [0,1] variable or a constant.
struct SatRef {
  int var = -1;
  bool value = false;

  bool is_constant() const { return var < 0; }
};

/// Lower bound on a subformula's robustness as an affine expression (a
/// single variable for min/max nodes), with interval bounds on its value.
struct RobRef {
  std::vector<LinearTerm> terms;
  double constant = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool is_constant() const { return terms.empty(); }
};

/// Trajectory and inputs used to build a canonical assignment.
struct WitnessSource {
  const Trajectory* z = nullptr;
  const std::map<int, std::vector<Vector>>* inputs = nullptr;
};

class Encoder {
 public:
  using Recipe = std::function<double(const std::vector<double>&, const WitnessSource&)>;

  static constexpr double kTop = 1e9;

  Encoder(const MasModel& model, int N, EncodingConfig cfg = {})
      : layout_(model.layout()), N_(N), cfg_(cfg) {
    if (!(cfg_.eps > 0.0)) throw ValidationError("eps must be positive");
    if (cfg_.big_m != 0.0 && !(cfg_.big_m > cfg_.eps)) throw ValidationError("big-M must exceed eps");
  }

  MilpModel& model() { return model_; }
  const MilpModel& model() const { return model_; }
  int N() const { return N_; }
  const EncodingConfig& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }
  /// Rows whose uniform big-M was smaller than the interval bounds require.
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool is_decision(int agent) const { return vars_.count(agent) != 0; }
  const std::vector<std::vector<int>>& state_vars(int agent) const { return vars_.at(agent).z; }
  const std::vector<std::vector<int>>& input_vars(int agent) const { return vars_.at(agent).v; }
  std::vector<int> decision_agents() const {
    std::vector<int> out;
    for (const auto& [id, v] : vars_) out.push_back(id);
    return out;
  }

  /// z(t+1) = A z(t) + B v(t) for t < N, z(0) = x0, v(t) in input_boxes[t].
  void add_agent(const AgentModel& a, const std::vector<Box>& input_boxes) {
    if (static_cast<int>(input_boxes.size()) < N_) throw ValidationError("missing input boxes for agent " + std::to_string(a.id));
    if (vars_.count(a.id) || frozen_.count(a.id)) throw ValidationError("agent added twice");
    AgentVars av;
    const int n = a.n(), m = a.m();
    Vector c = a.x0, r = Vector::Zero(n);
    const Matrix absA = a.A.cwiseAbs(), absB = a.B.cwiseAbs();
    for (int t = 0; t <= N_; ++t) {
      std::vector<int> zt;
      for (int d = 0; d < n; ++d) {
        const double pad = t == 0 ? 0.0 : 1e-7 * (1.0 + std::fabs(c(d)) + r(d));
        const SignalRef s{a.id, d};
        zt.push_back(new_var(name("z", a.id, t, d), c(d) - r(d) - pad, c(d) + r(d) + pad, VarType::continuous,
                             [s, t](const std::vector<double>&, const WitnessSource& w) { return w.z->at(t, s); }));
      }
      av.z.push_back(std::move(zt));
      if (t == N_) break;
      const Box& box = input_boxes[static_cast<std::size_t>(t)];
      std::vector<int> vt;
      for (int d = 0; d < m; ++d) {
        const int id = a.id;
        vt.push_back(new_var(name("v", a.id, t, d), box.lower(d), box.upper(d), VarType::continuous,
                             [id, t, d](const std::vector<double>&, const WitnessSource& w) {
                               return w.inputs->at(id).at(static_cast<std::size_t>(t))(d);
                             }));
      }
      av.v.push_back(std::move(vt));
      const Vector cv = 0.5 * (box.lower + box.upper), rv = 0.5 * (box.upper - box.lower);
      c = a.A * c + a.B * cv;
      r = absA * r + absB * rv;
    }
    for (int t = 0; t < N_; ++t)
      for (int d = 0; d < n; ++d) {
        std::vector<LinearTerm> row{{av.z[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(d)], 1.0}};
        for (int k = 0; k < n; ++k)
          if (a.A(d, k) != 0.0) row.push_back({av.z[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)], -a.A(d, k)});
        for (int k = 0; k < m; ++k)
          if (a.B(d, k) != 0.0) row.push_back({av.v[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)], -a.B(d, k)});
        model_.add_row(std::move(row), Sense::eq, 0.0, name("dyn", a.id, t, d));
      }
    vars_.emplace(a.id, std::move(av));
  }

  /// Fixes an agent's trajectory (rows of the full layout) to constants.
  void freeze_agent(int id, const Trajectory& z) {
    if (vars_.count(id)) throw ValidationError("agent " + std::to_string(id) + " is a decision agent");
    if (z.horizon() < N_) throw ValidationError("frozen trajectory is shorter than the horizon");
    std::vector<Vector> states;
    for (int t = 0; t <= N_; ++t) states.push_back(z.agent_state(t, id));
    frozen_[id] = std::move(states);
  }

  /// a'z(t) + b with interval bounds.
  RobRef affine(const Predicate& p, int t) const {
    RobRef out;
    out.constant = p.offset;
    out.lo = out.hi = p.offset;
    for (const auto& [s, c] : p.coeffs) {
      if (auto it = vars_.find(s.agent); it != vars_.end()) {
        const int j = it->second.z.at(static_cast<std::size_t>(t)).at(static_cast<std::size_t>(s.dim));
        out.terms.push_back({j, c});
        const double l = model_.var(j).lower, u = model_.var(j).upper;
        out.lo += std::min(c * l, c * u);
        out.hi += std::max(c * l, c * u);
      } else if (auto f = frozen_.find(s.agent); f != frozen_.end()) {
        const double v = c * f->second.at(static_cast<std::size_t>(t))(s.dim);
        out.constant += v;
        out.lo += v;
        out.hi += v;
      } else {
        throw ValidationError("missing trajectory for agent " + std::to_string(s.agent));
      }
    }
    return out;
  }

  /// Satisfaction of an NNF formula at time t.
  SatRef satisfaction(const Formula& f, int t) {
    if (t < 0 || t + f.horizon() > N_)
      throw HorizonError("formula with horizon " + std::to_string(f.horizon()) + " at t=" + std::to_string(t) +
                         " exceeds N=" + std::to_string(N_));
    const auto key = std::make_pair(f.id(), t);
    if (auto it = sat_memo_.find(key); it != sat_memo_.end()) return it->second;
    SatRef out;
    switch (f.kind()) {
      case NodeKind::True:
        out = {-1, true};
        break;
      case NodeKind::Not:
        if (f.child().kind() != NodeKind::True) throw ValidationError("encoding requires negation normal form");
        out = {-1, false};
        break;
      case NodeKind::Pred:
        out = literal(f.predicate(), t);
        break;
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<SatRef> cs;
        for (const auto& c : f.children()) cs.push_back(satisfaction(c, t));
        out = f.kind() == NodeKind::And ? sat_and(cs) : sat_or(cs);
        break;
      }
      case NodeKind::Eventually:
      case NodeKind::Always: {
        std::vector<SatRef> cs;
        for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) cs.push_back(satisfaction(f.child(), tau));
        out = f.kind() == NodeKind::Always ? sat_and(cs) : sat_or(cs);
        break;
      }
      case NodeKind::Until: {
        std::vector<SatRef> options;
        for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) {
          std::vector<SatRef> parts{satisfaction(f.child(1), tau)};
          for (int s = t; s <= tau; ++s) parts.push_back(satisfaction(f.child(0), s));
          options.push_back(sat_and(parts));
        }
        out = sat_or(options);
        break;
      }
    }
    sat_memo_.emplace(key, out);
    pinned_.push_back(f);
    return out;
  }

  /// Lower bound on the certified robustness (every literal less eps) at t.
  RobRef robustness(const Formula& f, int t) {
    if (t < 0 || t + f.horizon() > N_)
      throw HorizonError("formula with horizon " + std::to_string(f.horizon()) + " at t=" + std::to_string(t) +
                         " exceeds N=" + std::to_string(N_));
    const auto key = std::make_pair(f.id(), t);
    if (auto it = rob_memo_.find(key); it != rob_memo_.end()) return it->second;
    RobRef out;
    switch (f.kind()) {
      case NodeKind::True:
        out = constant(kTop);
        break;
      case NodeKind::Not:
        if (f.child().kind() != NodeKind::True) throw ValidationError("encoding requires negation normal form");
        out = constant(-kTop);
        break;
      case NodeKind::Pred: {
        out = affine(f.predicate(), t);
        if (f.predicate().polarity == Polarity::negated) {
          for (auto& term : out.terms) term.coef = -term.coef;
          out.constant = -out.constant;
          std::swap(out.lo, out.hi);
          out.lo = -out.lo;
          out.hi = -out.hi;
        }
        out.constant -= cfg_.eps;
        out.lo -= cfg_.eps;
        out.hi -= cfg_.eps;
        break;
      }
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<RobRef> cs;
        for (const auto& c : f.children()) cs.push_back(robustness(c, t));
        out = f.kind() == NodeKind::And ? rob_min(cs) : rob_max(cs);
        break;
      }
      case NodeKind::Eventually:
      case NodeKind::Always: {
        std::vector<RobRef> cs;
        for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) cs.push_back(robustness(f.child(), tau));
        out = f.kind() == NodeKind::Always ? rob_min(cs) : rob_max(cs);
        break;
      }
      case NodeKind::Until: {
        std::vector<RobRef> options;
        for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) {
          std::vector<RobRef> parts{robustness(f.child(1), tau)};
          for (int s = t; s <= tau; ++s) parts.push_back(robustness(f.child(0), s));
          options.push_back(rob_min(parts));
        }
        out = rob_max(options);
        break;
      }
    }
    rob_memo_.emplace(key, out);
    pinned_.push_back(f);
    return out;
  }

  /// Forces a satisfaction reference to 1.
  void require(const SatRef& s) {
    if (s.is_constant()) {
      if (!s.value) add_contradiction();
      return;
    }
    const auto& v = model_.var(s.var);
    model_.set_bounds(s.var, std::max(1.0, v.lower), v.upper);
  }

  /// r >= rhs_var + rhs (rhs_var < 0 means a pure constant bound).
  void require_at_least(const RobRef& r, int rhs_var, double rhs) {
    if (r.is_constant()) {
      if (r.constant >= kTop) return;
      if (rhs_var < 0) {
        if (r.constant < rhs) add_contradiction();
        return;
      }
      model_.add_row({{rhs_var, 1.0}}, Sense::le, r.constant - rhs, fresh("rb"));
      return;
    }
    std::vector<LinearTerm> row = r.terms;
    if (rhs_var >= 0) row.push_back({rhs_var, -1.0});
    model_.add_row(std::move(row), Sense::ge, rhs - r.constant, fresh("rb"));
  }

  /// Value of a robustness reference under an assignment.
  static double value(const RobRef& r, const std::vector<double>& x) {
    double v = r.constant;
    for (const auto& t : r.terms) v += t.coef * x.at(static_cast<std::size_t>(t.var));
    return v;
  }

  static double value(const SatRef& s, const std::vector<double>& x) {
    return s.is_constant() ? (s.value ? 1.0 : 0.0) : x.at(static_cast<std::size_t>(s.var));
  }

  /// Slack variable mu in [lower, cap] entering the objective as -weight*mu.
  int add_mu(const std::string& base, double lower, const RobRef& target) {
    const double cap = cfg_.robustness_cap;
    const double lo = std::min(lower, cap);
    const int j = new_var(fresh(base), lo, cap, VarType::continuous,
                          [target, lo, cap](const std::vector<double>& x, const WitnessSource&) {
                            return std::clamp(value(target, x), lo, cap);
                          });
    model_.add_objective(j, -cfg_.mu_weight);
    return j;
  }

  /// L1 stage and terminal costs of a decision agent.
  void add_costs(const AgentModel& a) {
    const auto& av = vars_.at(a.id);
    auto weight = [](const Vector& w, int d) { return d < w.size() ? w(d) : 0.0; };
    for (int t = 0; t <= N_; ++t) {
      const Vector& ws = t == N_ ? a.cost.terminal : a.cost.state;
      for (int d = 0; d < a.n(); ++d)
        add_abs(av.z[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)], weight(ws, d));
      if (t == N_) break;
      for (int d = 0; d < a.m(); ++d)
        add_abs(av.v[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)], weight(a.cost.input, d));
    }
  }

  /// Plan over the full layout: decision agents from x, frozen agents from
  /// their constants, zeros elsewhere.
  Trajectory trajectory(const std::vector<double>& x) const {
    Trajectory out{layout_, {}};
    for (int t = 0; t <= N_; ++t) {
      Vector s = Vector::Zero(layout_.total());
      for (const auto& [id, av] : vars_)
        for (std::size_t d = 0; d < av.z[static_cast<std::size_t>(t)].size(); ++d)
          s(layout_.offset(id) + static_cast<int>(d)) = x.at(static_cast<std::size_t>(av.z[static_cast<std::size_t>(t)][d]));
      for (const auto& [id, zs] : frozen_) s.segment(layout_.offset(id), zs[0].size()) = zs[static_cast<std::size_t>(t)];
      out.samples.push_back(std::move(s));
    }
    return out;
  }

  std::map<int, std::vector<Vector>> inputs(const std::vector<double>& x) const {
    std::map<int, std::vector<Vector>> out;
    for (const auto& [id, av] : vars_) {
      auto& seq = out[id];
      for (const auto& vt : av.v) {
        Vector u(static_cast<int>(vt.size()));
        for (std::size_t d = 0; d < vt.size(); ++d) u(static_cast<int>(d)) = x.at(static_cast<std::size_t>(vt[d]));
        seq.push_back(std::move(u));
      }
    }
    return out;
  }

  /// Canonical assignment for a given plan.
  std::vector<double> witness(const Trajectory& z, const std::map<int, std::vector<Vector>>& v) const {
    WitnessSource src{&z, &v};
    std::vector<double> x(recipes_.size(), 0.0);
    for (std::size_t j = 0; j < recipes_.size(); ++j) x[j] = recipes_[j](x, src);
    return x;
  }

  /// Largest |a'z(t) + b| over the big-M literal rows under an assignment.
  double max_literal_magnitude(const std::vector<double>& x) const {
    double worst = 0.0;
    for (const auto& expr : literal_rows_) worst = std::max(worst, std::fabs(value(expr, x)));
    return worst;
  }

 private:
  struct AgentVars {
    std::vector<std::vector<int>> z, v;
  };

  static std::string name(const char* base, int agent, int t, int d) {
    return std::string(base) + "_" + std::to_string(agent) + "_" + std::to_string(t) + "_" + std::to_string(d);
  }

  std::string fresh(const std::string& base) { return base + "_" + std::to_string(counter_++); }

  int new_var(std::string n, double lo, double hi, VarType type, Recipe recipe) {
    const int j = model_.add_variable(std::move(n), lo, hi, type);
    recipes_.push_back(std::move(recipe));
    return j;
  }

  static RobRef constant(double c) { return RobRef{{}, c, c, c}; }

  double big_m(double needed, const std::string& row) {
    if (cfg_.big_m == 0.0) return needed;
    if (cfg_.big_m < needed) warnings_.push_back("big-M " + format_number(cfg_.big_m) + " below " + format_number(needed) + " in " + row);
    return cfg_.big_m;
  }

  SatRef literal(const Predicate& p, int t) {
    const RobRef mu = affine(p, t);
    const bool positive = p.polarity == Polarity::positive;
    const double eps = cfg_.eps;
    // Frozen neighbours come from solver output, so their literals get the
    // same slack as the witness recipe below.
    if (mu.is_constant()) return {-1, positive ? mu.constant >= eps - 1e-7 : mu.constant <= -eps + 1e-7};
    if (positive ? mu.lo >= eps : mu.hi <= -eps) return {-1, true};
    if (positive ? mu.hi < eps : mu.lo > -eps) return {-1, false};
    const int j = new_var(fresh("p"), 0.0, 1.0, VarType::binary,
                          [mu, positive, eps](const std::vector<double>& x, const WitnessSource&) {
                            const double v = value(mu, x);
                            return (positive ? v >= eps - 1e-7 : v <= -eps + 1e-7) ? 1.0 : 0.0;
                          });
    std::vector<LinearTerm> row = mu.terms;
    const std::string rn = fresh("lit");
    if (positive) {
      // mu >= eps - M (1 - p)
      const double M = big_m(eps - mu.lo, rn);
      row.push_back({j, -M});
      model_.add_row(std::move(row), Sense::ge, eps - M - mu.constant, rn);
      literal_rows_.push_back(mu);
    } else {
      // mu <= -eps + M (1 - p)
      const double M = big_m(mu.hi + eps, rn);
      row.push_back({j, M});
      model_.add_row(std::move(row), Sense::le, M - eps - mu.constant, rn);
      literal_rows_.push_back(mu);
    }
    return {j, false};
  }

  SatRef sat_and(const std::vector<SatRef>& cs) {
    std::vector<int> vs;
    for (const auto& c : cs) {
      if (c.is_constant()) {
        if (!c.value) return {-1, false};
      } else if (std::find(vs.begin(), vs.end(), c.var) == vs.end()) {
        vs.push_back(c.var);
      }
    }
    if (vs.empty()) return {-1, true};
    if (vs.size() == 1) return {vs[0], false};
    const int q = new_var(fresh("q"), 0.0, 1.0, VarType::continuous, [vs](const std::vector<double>& x, const WitnessSource&) {
      double v = 1.0;
      for (int c : vs) v = std::min(v, x[static_cast<std::size_t>(c)]);
      return v;
    });
    std::vector<LinearTerm> lower{{q, 1.0}};
    for (int c : vs) {
      model_.add_row({{q, 1.0}, {c, -1.0}}, Sense::le, 0.0, fresh("and"));
      lower.push_back({c, -1.0});
    }
    model_.add_row(std::move(lower), Sense::ge, 1.0 - static_cast<double>(vs.size()), fresh("and"));
    return {q, false};
  }

  SatRef sat_or(const std::vector<SatRef>& cs) {
    std::vector<int> vs;
    for (const auto& c : cs) {
      if (c.is_constant()) {
        if (c.value) return {-1, true};
      } else if (std::find(vs.begin(), vs.end(), c.var) == vs.end()) {
        vs.push_back(c.var);
      }
    }
    if (vs.empty()) return {-1, false};
    if (vs.size() == 1) return {vs[0], false};
    const int q = new_var(fresh("q"), 0.0, 1.0, VarType::continuous, [vs](const std::vector<double>& x, const WitnessSource&) {
      double v = 0.0;
      for (int c : vs) v = std::max(v, x[static_cast<std::size_t>(c)]);
      return v;
    });
    std::vector<LinearTerm> upper{{q, 1.0}};
    for (int c : vs) {
      model_.add_row({{q, 1.0}, {c, -1.0}}, Sense::ge, 0.0, fresh("or"));
      upper.push_back({c, -1.0});
    }
    model_.add_row(std::move(upper), Sense::le, 0.0, fresh("or"));
    return {q, false};
  }

  // Shared by min and max: drops neutral constants and folds absorbing ones.
  std::optional<RobRef> fold(const std::vector<RobRef>& cs, bool is_min, std::vector<RobRef>& kept) {
    const double neutral = is_min ? kTop : -kTop;
    double folded = neutral;
    bool any_const = false;
    for (const auto& c : cs) {
      if (c.is_constant()) {
        if (is_min ? c.constant <= -kTop : c.constant >= kTop) return constant(-neutral);
        if (is_min ? c.constant >= kTop : c.constant <= -kTop) continue;
        folded = is_min ? std::min(folded, c.constant) : std::max(folded, c.constant);
        any_const = true;
      } else {
        kept.push_back(c);
      }
    }
    if (kept.empty()) return constant(folded);
    if (any_const) kept.push_back(constant(folded));
    if (kept.size() == 1) return kept.front();
    return std::nullopt;
  }

  RobRef rob_min(const std::vector<RobRef>& cs) {
    std::vector<RobRef> kept;
    if (auto done = fold(cs, true, kept)) return *done;
    double lo = kTop, hi = kTop;
    for (const auto& c : kept) {
      lo = std::min(lo, c.lo);
      hi = std::min(hi, c.hi);
    }
    const int r = new_var(fresh("r"), lo, hi, VarType::continuous, [kept](const std::vector<double>& x, const WitnessSource&) {
      double v = kTop;
      for (const auto& c : kept) v = std::min(v, value(c, x));
      return v;
    });
    for (const auto& c : kept) {
      std::vector<LinearTerm> row{{r, 1.0}};
      for (const auto& t : c.terms) row.push_back({t.var, -t.coef});
      model_.add_row(std::move(row), Sense::le, c.constant, fresh("min"));
    }
    if (cfg_.exact_robustness) select(r, kept, lo, true);
    return RobRef{{{r, 1.0}}, 0.0, lo, hi};
  }

  RobRef rob_max(const std::vector<RobRef>& cs) {
    std::vector<RobRef> kept;
    if (auto done = fold(cs, false, kept)) return *done;
    double lo = -kTop, hi = -kTop;
    for (const auto& c : kept) {
      lo = std::max(lo, c.lo);
      hi = std::max(hi, c.hi);
    }
    const int r = new_var(fresh("r"), lo, hi, VarType::continuous, [kept](const std::vector<double>& x, const WitnessSource&) {
      double v = -kTop;
      for (const auto& c : kept) v = std::max(v, value(c, x));
      return v;
    });
    if (cfg_.exact_robustness)
      for (const auto& c : kept) {
        std::vector<LinearTerm> row{{r, 1.0}};
        for (const auto& t : c.terms) row.push_back({t.var, -t.coef});
        model_.add_row(std::move(row), Sense::ge, c.constant, fresh("max"));
      }
    select(r, kept, hi, false);
    return RobRef{{{r, 1.0}}, 0.0, lo, hi};
  }

  // One binary per child; the selected child bounds r from the far side:
  // min nodes r >= child - M(1-b), max nodes r <= child + M(1-b).
  void select(int r, const std::vector<RobRef>& kept, double far, bool is_min) {
    std::vector<LinearTerm> pick;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const int b = new_var(fresh("b"), 0.0, 1.0, VarType::binary,
                            [kept, i, is_min](const std::vector<double>& x, const WitnessSource&) {
                              std::size_t best = 0;
                              for (std::size_t k = 1; k < kept.size(); ++k) {
                                const double vk = value(kept[k], x), vb = value(kept[best], x);
                                if (is_min ? vk < vb : vk > vb) best = k;
                              }
                              return best == i ? 1.0 : 0.0;
                            });
      pick.push_back({b, 1.0});
      const auto& c = kept[i];
      std::vector<LinearTerm> row{{r, 1.0}};
      for (const auto& t : c.terms) row.push_back({t.var, -t.coef});
      const std::string rn = fresh("sel");
      if (is_min) {
        const double M = big_m(std::max(0.0, c.hi - far), rn);
        row.push_back({b, -M});
        model_.add_row(std::move(row), Sense::ge, c.constant - M, rn);
      } else {
        const double M = big_m(std::max(0.0, far - c.lo), rn);
        row.push_back({b, M});
        model_.add_row(std::move(row), Sense::le, c.constant + M, rn);
      }
    }
    model_.add_row(std::move(pick), Sense::eq, 1.0, fresh("pick"));
  }

  void add_abs(int j, double w) {
    if (w == 0.0) return;
    if (w < 0.0) throw ValidationError("negative cost weight");
    const double lo = model_.var(j).lower, hi = model_.var(j).upper;
    if (lo >= 0.0) {
      model_.add_objective(j, w);
      return;
    }
    if (hi <= 0.0) {
      model_.add_objective(j, -w);
      return;
    }
    const int s = new_var(fresh("s"), 0.0, std::max(-lo, hi), VarType::continuous,
                          [j](const std::vector<double>& x, const WitnessSource&) { return std::fabs(x[static_cast<std::size_t>(j)]); });
    model_.add_row({{s, 1.0}, {j, -1.0}}, Sense::ge, 0.0, fresh("abs"));
    model_.add_row({{s, 1.0}, {j, 1.0}}, Sense::ge, 0.0, fresh("abs"));
    model_.add_objective(s, w);
  }

  void add_contradiction() {
    const int j = new_var(fresh("contradiction"), 0.0, 0.0, VarType::continuous,
                          [](const std::vector<double>&, const WitnessSource&) { return 0.0; });
    model_.add_row({{j, 1.0}}, Sense::ge, 1.0, fresh("contradiction"));
  }

  Layout layout_;
  int N_;
  EncodingConfig cfg_;
  MilpModel model_;
  std::vector<Recipe> recipes_;
  std::map<int, AgentVars> vars_;
  std::map<int, std::vector<Vector>> frozen_;
  std::map<std::pair<const void*, int>, SatRef> sat_memo_;
  std::map<std::pair<const void*, int>, RobRef> rob_memo_;
  // Keeps memoised nodes alive so their addresses cannot be reused.
  std::vector<Formula> pinned_;
  std::vector<RobRef> literal_rows_;
  std::vector<std::string> warnings_;
  long counter_ = 0;
};

/// Centralized problem: every agent, psi satisfied, summed L1 costs.
inline Encoder build_plan_problem(const MasModel& model, const TightenedSpec& ts, const EncodingConfig& cfg = {}) {
  Encoder enc(model, ts.psi.N, cfg);
  for (const auto& a : model.agents) enc.add_agent(a, ts.input_boxes.at(a.id));
  for (const auto& [i, f] : ts.psi.local_tasks) enc.require(enc.satisfaction(f, 0));
  for (const auto& [c, f] : ts.psi.joint_tasks) enc.require(enc.satisfaction(f, 0));
  for (const auto& a : model.agents) enc.add_costs(a);
  return enc;
}

/// Single-agent problem with the local task only.
inline Encoder build_init_problem(const MasModel& model, const TightenedSpec& ts, int agent,
                                  const EncodingConfig& cfg = {}) {
  Encoder enc(model, ts.psi.N, cfg);
  const AgentModel& a = model.agent(agent);
  enc.add_agent(a, ts.input_boxes.at(agent));
  if (auto it = ts.psi.local_tasks.find(agent); it != ts.psi.local_tasks.end()) enc.require(enc.satisfaction(it->second, 0));
  enc.add_costs(a);
  return enc;
}

/// One agent's iteration subproblem. Neighbours are frozen at the previous
/// iterate; the selected clique's robustness is pushed up through mu and
/// every other clique of the agent keeps rho >= min(0, previous rho).
struct AgentStep {
  int agent = 0;
  /// Previous iterate over the full layout.
  const Trajectory* previous = nullptr;
  /// Clique whose robustness is maximised.
  Clique selected;
  /// Certified robustness of each of the agent's cliques at the previous iterate.
  std::map<Clique, double> previous_robustness;
};

struct AgentProblem {
  Encoder encoder;
  int mu = -1;
  /// Robustness references of the agent's cliques, in clique order.
  std::map<Clique, RobRef> robustness;
};

inline AgentProblem build_agent_problem(const MasModel& model, const TightenedSpec& ts, const AgentStep& step,
                                        const EncodingConfig& cfg = {}) {
  if (!step.previous) throw ValidationError("missing previous iterate");
  AgentProblem out{Encoder(model, ts.psi.N, cfg), -1, {}};
  Encoder& enc = out.encoder;
  const AgentModel& a = model.agent(step.agent);
  enc.add_agent(a, ts.input_boxes.at(step.agent));
  std::set<int> neighbours;
  for (const auto& [c, f] : ts.psi.joint_tasks)
    if (std::find(c.begin(), c.end(), step.agent) != c.end())
      for (int j : c)
        if (j != step.agent) neighbours.insert(j);
  for (int j : neighbours) enc.freeze_agent(j, *step.previous);
  if (auto it = ts.psi.local_tasks.find(step.agent); it != ts.psi.local_tasks.end())
    enc.require(enc.satisfaction(it->second, 0));
  for (const auto& [c, f] : ts.psi.joint_tasks) {
    if (std::find(c.begin(), c.end(), step.agent) == c.end()) continue;
    out.robustness.emplace(c, enc.robustness(f, 0));
  }
  if (!out.robustness.count(step.selected)) throw ValidationError("selected clique does not contain the agent");
  for (const auto& [c, r] : out.robustness) {
    auto prev = step.previous_robustness.find(c);
    if (prev == step.previous_robustness.end()) throw ValidationError("missing previous robustness of a clique");
    const double floor = std::min(0.0, prev->second);
    if (c == step.selected) {
      out.mu = enc.add_mu("mu_" + std::to_string(step.agent), floor, r);
      enc.require_at_least(r, out.mu, 0.0);
    } else {
      enc.require_at_least(r, -1, floor);
    }
  }
  enc.add_costs(a);
  return out;
}

}  // namespace stlprt
