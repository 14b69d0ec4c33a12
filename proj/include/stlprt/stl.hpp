#pragma once

// Discrete-time STL over affine predicates.
//
// Satisfaction of a predicate is inclusive (a'x + b >= 0). Until follows the
// convention where the left operand must hold on [t, tau] *including* tau:
//
//   x(t) |= f U[a,b] g  <=>  exists tau in t+[a,b]: x(tau) |= g and
//                                                    x(t') |= f for all t' in [t, tau]
//
// Robustness uses the same windows, so the sign of the robustness agrees with
// Boolean satisfaction whenever it is nonzero.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/linalg.hpp"

namespace stlprt {

/// Reference to one coordinate of one agent's state: x<agent>[<dim>].
struct SignalRef {
  int agent = 0;
  int dim = 0;
  auto operator<=>(const SignalRef&) const = default;
};

enum class Polarity { positive, negated };

inline Polarity flip(Polarity p) { return p == Polarity::positive ? Polarity::negated : Polarity::positive; }

/// Agent-id -> state dimension table, with offsets into the stacked state.
/// Agents are stacked in increasing id order.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::map<int, int> dims) : dims_(std::move(dims)) {
    int off = 0;
    for (const auto& [agent, n] : dims_) {
      offsets_[agent] = off;
      off += n;
    }
    total_ = off;
  }

  bool has(SignalRef s) const {
    auto it = dims_.find(s.agent);
    return it != dims_.end() && s.dim >= 0 && s.dim < it->second;
  }
  bool has_agent(int agent) const { return dims_.count(agent) != 0; }
  int dim(int agent) const { return dims_.at(agent); }
  int offset(int agent) const { return offsets_.at(agent); }
  int index(SignalRef s) const { return offsets_.at(s.agent) + s.dim; }
  int total() const { return total_; }
  const std::map<int, int>& dims() const { return dims_; }

  /// Sub-layout restricted to the listed agents.
  Layout restricted(const std::vector<int>& agents) const {
    std::map<int, int> d;
    for (int a : agents) d[a] = dims_.at(a);
    return Layout(std::move(d));
  }

  bool operator==(const Layout& o) const { return dims_ == o.dims_; }

 private:
  std::map<int, int> dims_;
  std::map<int, int> offsets_;
  int total_ = 0;
};

/// Sampled signal x(0..N) of stacked agent states.
struct Trajectory {
  Layout layout;
  std::vector<Vector> samples;

  int horizon() const { return static_cast<int>(samples.size()) - 1; }
  double at(int t, SignalRef s) const { return samples[static_cast<std::size_t>(t)](layout.index(s)); }

  /// Agent block of sample t.
  Vector agent_state(int t, int agent) const {
    return samples[static_cast<std::size_t>(t)].segment(layout.offset(agent), layout.dim(agent));
  }
};

/// Pointwise x = z + e.
inline Trajectory decompose_trajectory(const Trajectory& z, const Trajectory& e) {
  if (!(z.layout == e.layout) || z.samples.size() != e.samples.size())
    throw ValidationError("trajectory shape mismatch");
  Trajectory x{z.layout, {}};
  x.samples.reserve(z.samples.size());
  for (std::size_t t = 0; t < z.samples.size(); ++t) {
    if (z.samples[t].size() != e.samples[t].size()) throw ValidationError("trajectory shape mismatch");
    x.samples.push_back(z.samples[t] + e.samples[t]);
  }
  return x;
}

/// pi := (a'x + b >= 0). Polarity is only ever set to negated by to_nnf().
struct Predicate {
  std::map<SignalRef, double> coeffs;
  double offset = 0.0;
  Polarity polarity = Polarity::positive;

  /// a'x(t) + b, ignoring polarity.
  double value(const Trajectory& x, int t) const {
    double v = offset;
    for (const auto& [s, c] : coeffs) v += c * x.at(t, s);
    return v;
  }

  /// Robustness of the literal: value for positive polarity, -value for negated.
  double literal(const Trajectory& x, int t) const {
    double v = value(x, t);
    return polarity == Polarity::positive ? v : -v;
  }

  std::set<int> agents() const {
    std::set<int> out;
    for (const auto& [s, c] : coeffs) out.insert(s.agent);
    return out;
  }

  /// Same halfspace (a, b), polarity ignored.
  bool same_function(const Predicate& o) const { return coeffs == o.coeffs && offset == o.offset; }

  bool operator==(const Predicate& o) const = default;
};

enum class NodeKind { True, Pred, Not, And, Or, Until, Eventually, Always };

struct EvalOptions {
  /// Robustness of TRUE; stands in for +infinity.
  double top = 1e9;
};

class Formula;

namespace detail {
struct Node {
  NodeKind kind = NodeKind::True;
  Predicate pred;
  std::vector<Formula> children;
  int lo = 0;
  int hi = 0;
  int horizon = 0;
};
}  // namespace detail

/// Immutable STL formula handle. Cheap to copy; subtrees are shared.
class Formula {
 public:
  Formula() : Formula(truth()) {}

  static Formula truth() {
    auto n = std::make_shared<detail::Node>();
    n->kind = NodeKind::True;
    return Formula(std::move(n));
  }

  static Formula pred(Predicate p) {
    if (p.coeffs.empty()) throw ValidationError("predicate without signal terms");
    auto n = std::make_shared<detail::Node>();
    n->kind = NodeKind::Pred;
    n->pred = std::move(p);
    return Formula(std::move(n));
  }

  static Formula negation(Formula f) {
    auto n = std::make_shared<detail::Node>();
    n->kind = NodeKind::Not;
    n->horizon = f.horizon();
    n->children.push_back(std::move(f));
    return Formula(std::move(n));
  }

  static Formula conjunction(std::vector<Formula> cs) { return nary(NodeKind::And, std::move(cs)); }
  static Formula disjunction(std::vector<Formula> cs) { return nary(NodeKind::Or, std::move(cs)); }

  static Formula until(Formula left, Formula right, int a, int b) {
    check_interval(a, b);
    auto n = std::make_shared<detail::Node>();
    n->kind = NodeKind::Until;
    n->lo = a;
    n->hi = b;
    n->horizon = b + std::max(left.horizon(), right.horizon());
    n->children = {std::move(left), std::move(right)};
    return Formula(std::move(n));
  }

  static Formula eventually(Formula f, int a, int b) { return temporal(NodeKind::Eventually, std::move(f), a, b); }
  static Formula always(Formula f, int a, int b) { return temporal(NodeKind::Always, std::move(f), a, b); }

  NodeKind kind() const { return node_->kind; }
  const Predicate& predicate() const { return node_->pred; }
  std::span<const Formula> children() const { return node_->children; }
  const Formula& child(std::size_t i = 0) const { return node_->children.at(i); }
  int lo() const { return node_->lo; }
  int hi() const { return node_->hi; }
  /// Cached at construction by the recursive horizon rules.
  int horizon() const { return node_->horizon; }
  /// Address of the shared node; equal for copies of one handle.
  const void* id() const { return node_.get(); }

  bool is_temporal() const {
    return kind() == NodeKind::Until || kind() == NodeKind::Eventually || kind() == NodeKind::Always;
  }

  /// Structural equality (predicates compared exactly).
  friend bool operator==(const Formula& x, const Formula& y) {
    if (x.node_ == y.node_) return true;
    if (x.kind() != y.kind() || x.lo() != y.lo() || x.hi() != y.hi()) return false;
    if (x.kind() == NodeKind::Pred && !(x.predicate() == y.predicate())) return false;
    if (x.children().size() != y.children().size()) return false;
    for (std::size_t i = 0; i < x.children().size(); ++i)
      if (!(x.children()[i] == y.children()[i])) return false;
    return true;
  }

 private:
  explicit Formula(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}

  static void check_interval(int a, int b) {
    if (a < 0 || b < a)
      throw ValidationError("invalid interval [" + std::to_string(a) + "," + std::to_string(b) + "]");
  }

  static Formula nary(NodeKind kind, std::vector<Formula> cs) {
    if (cs.empty()) throw ValidationError("empty conjunction/disjunction");
    auto n = std::make_shared<detail::Node>();
    n->kind = kind;
    for (const auto& c : cs) n->horizon = std::max(n->horizon, c.horizon());
    n->children = std::move(cs);
    return Formula(std::move(n));
  }

  static Formula temporal(NodeKind kind, Formula f, int a, int b) {
    check_interval(a, b);
    auto n = std::make_shared<detail::Node>();
    n->kind = kind;
    n->lo = a;
    n->hi = b;
    n->horizon = b + f.horizon();
    n->children.push_back(std::move(f));
    return Formula(std::move(n));
  }

  std::shared_ptr<const detail::Node> node_;
};

/// Recomputes the horizon from scratch (the handle also caches it).
inline int horizon(const Formula& f) {
  switch (f.kind()) {
    case NodeKind::True:
    case NodeKind::Pred:
      return 0;
    case NodeKind::Not:
      return horizon(f.child());
    case NodeKind::And:
    case NodeKind::Or: {
      int h = 0;
      for (const auto& c : f.children()) h = std::max(h, horizon(c));
      return h;
    }
    case NodeKind::Until:
      return f.hi() + std::max(horizon(f.child(0)), horizon(f.child(1)));
    case NodeKind::Eventually:
    case NodeKind::Always:
      return f.hi() + horizon(f.child());
  }
  return 0;
}

namespace detail {
inline void check_horizon(const Formula& f, const Trajectory& x, int t) {
  if (t < 0 || t + f.horizon() > x.horizon())
    throw HorizonError("formula with horizon " + std::to_string(f.horizon()) + " evaluated at t=" +
                       std::to_string(t) + " on a trajectory of length " + std::to_string(x.samples.size()));
}

inline bool eval_bool(const Formula& f, const Trajectory& x, int t) {
  switch (f.kind()) {
    case NodeKind::True:
      return true;
    case NodeKind::Pred:
      return f.predicate().literal(x, t) >= 0.0;
    case NodeKind::Not:
      return !eval_bool(f.child(), x, t);
    case NodeKind::And:
      for (const auto& c : f.children())
        if (!eval_bool(c, x, t)) return false;
      return true;
    case NodeKind::Or:
      for (const auto& c : f.children())
        if (eval_bool(c, x, t)) return true;
      return false;
    case NodeKind::Eventually:
      for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau)
        if (eval_bool(f.child(), x, tau)) return true;
      return false;
    case NodeKind::Always:
      for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau)
        if (!eval_bool(f.child(), x, tau)) return false;
      return true;
    case NodeKind::Until: {
      // Left operand must hold on [t, tau]; scan forward and stop once it fails.
      for (int tau = t; tau <= t + f.hi(); ++tau) {
        if (!eval_bool(f.child(0), x, tau)) return false;
        if (tau >= t + f.lo() && eval_bool(f.child(1), x, tau)) return true;
      }
      return false;
    }
  }
  return false;
}

inline double eval_rob(const Formula& f, const Trajectory& x, int t, const EvalOptions& opt) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (f.kind()) {
    case NodeKind::True:
      return opt.top;
    case NodeKind::Pred:
      return f.predicate().literal(x, t);
    case NodeKind::Not:
      return -eval_rob(f.child(), x, t, opt);
    case NodeKind::And: {
      double r = inf;
      for (const auto& c : f.children()) r = std::min(r, eval_rob(c, x, t, opt));
      return r;
    }
    case NodeKind::Or: {
      double r = -inf;
      for (const auto& c : f.children()) r = std::max(r, eval_rob(c, x, t, opt));
      return r;
    }
    case NodeKind::Eventually: {
      double r = -inf;
      for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) r = std::max(r, eval_rob(f.child(), x, tau, opt));
      return r;
    }
    case NodeKind::Always: {
      double r = inf;
      for (int tau = t + f.lo(); tau <= t + f.hi(); ++tau) r = std::min(r, eval_rob(f.child(), x, tau, opt));
      return r;
    }
    case NodeKind::Until: {
      double best = -inf;
      double left_min = inf;
      for (int tau = t; tau <= t + f.hi(); ++tau) {
        left_min = std::min(left_min, eval_rob(f.child(0), x, tau, opt));
        if (tau >= t + f.lo()) best = std::max(best, std::min(eval_rob(f.child(1), x, tau, opt), left_min));
      }
      return best;
    }
  }
  return 0.0;
}
}  // namespace detail

/// Boolean satisfaction x(t) |= f. Throws HorizonError if t + horizon(f) > N.
inline bool eval_boolean(const Formula& f, const Trajectory& x, int t = 0) {
  detail::check_horizon(f, x, t);
  return detail::eval_bool(f, x, t);
}

/// Quantitative robustness rho^f(x(t)).
inline double eval_robustness(const Formula& f, const Trajectory& x, int t = 0, const EvalOptions& opt = {}) {
  detail::check_horizon(f, x, t);
  return detail::eval_rob(f, x, t, opt);
}

/// Rewrites an Until node as OR_{k=a..b} ( F[k,k] right  AND  G[0,k] left ).
inline Formula expand_until(const Formula& f) {
  std::vector<Formula> terms;
  for (int k = f.lo(); k <= f.hi(); ++k)
    terms.push_back(Formula::conjunction({Formula::eventually(f.child(1), k, k), Formula::always(f.child(0), 0, k)}));
  return terms.size() == 1 ? terms.front() : Formula::disjunction(std::move(terms));
}

namespace detail {
inline Formula nnf(const Formula& f, bool negate) {
  auto map_children = [&](bool neg) {
    std::vector<Formula> cs;
    cs.reserve(f.children().size());
    for (const auto& c : f.children()) cs.push_back(nnf(c, neg));
    return cs;
  };
  switch (f.kind()) {
    case NodeKind::True:
      return negate ? Formula::negation(f) : f;
    case NodeKind::Pred: {
      if (!negate) return f;
      Predicate p = f.predicate();
      p.polarity = flip(p.polarity);
      return Formula::pred(std::move(p));
    }
    case NodeKind::Not:
      // Not(TRUE) is the one negation allowed to survive.
      if (f.child().kind() == NodeKind::True) return negate ? f.child() : f;
      return nnf(f.child(), !negate);
    case NodeKind::And:
      return negate ? Formula::disjunction(map_children(true)) : Formula::conjunction(map_children(false));
    case NodeKind::Or:
      return negate ? Formula::conjunction(map_children(true)) : Formula::disjunction(map_children(false));
    case NodeKind::Eventually:
      return negate ? Formula::always(nnf(f.child(), true), f.lo(), f.hi())
                    : Formula::eventually(nnf(f.child(), false), f.lo(), f.hi());
    case NodeKind::Always:
      return negate ? Formula::eventually(nnf(f.child(), true), f.lo(), f.hi())
                    : Formula::always(nnf(f.child(), false), f.lo(), f.hi());
    case NodeKind::Until:
      if (negate) return nnf(expand_until(f), true);
      return Formula::until(nnf(f.child(0), false), nnf(f.child(1), false), f.lo(), f.hi());
  }
  return f;
}
}  // namespace detail

/// Negation normal form: negations only on predicates (as polarity) or on TRUE.
inline Formula to_nnf(const Formula& f) { return detail::nnf(f, false); }

inline bool is_nnf(const Formula& f) {
  if (f.kind() == NodeKind::Not) return f.child().kind() == NodeKind::True;
  for (const auto& c : f.children())
    if (!is_nnf(c)) return false;
  return true;
}

/// Distinct predicate literals of an NNF formula, in document order.
inline std::vector<Predicate> collect_predicates(const Formula& f) {
  std::vector<Predicate> out;
  auto visit = [&](auto&& self, const Formula& g) -> void {
    if (g.kind() == NodeKind::Pred) {
      if (std::find(out.begin(), out.end(), g.predicate()) == out.end()) out.push_back(g.predicate());
      return;
    }
    for (const auto& c : g.children()) self(self, c);
  };
  visit(visit, f);
  return out;
}

/// Rejects a predicate appearing with both polarities.
inline void check_no_complementary_literals(const std::vector<Predicate>& preds) {
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = i + 1; j < preds.size(); ++j)
      if (preds[i].same_function(preds[j]) && preds[i].polarity != preds[j].polarity)
        throw ValidationError("a predicate and its negation both appear in the specification");
}

/// Rebuilds the tree with every predicate replaced by fn(pred); operators untouched.
template <typename Fn>
Formula map_predicates(const Formula& f, Fn&& fn) {
  switch (f.kind()) {
    case NodeKind::True:
      return f;
    case NodeKind::Pred:
      return Formula::pred(fn(f.predicate()));
    case NodeKind::Not:
      return Formula::negation(map_predicates(f.child(), fn));
    case NodeKind::And:
    case NodeKind::Or: {
      std::vector<Formula> cs;
      for (const auto& c : f.children()) cs.push_back(map_predicates(c, fn));
      return f.kind() == NodeKind::And ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
    }
    case NodeKind::Until:
      return Formula::until(map_predicates(f.child(0), fn), map_predicates(f.child(1), fn), f.lo(), f.hi());
    case NodeKind::Eventually:
      return Formula::eventually(map_predicates(f.child(), fn), f.lo(), f.hi());
    case NodeKind::Always:
      return Formula::always(map_predicates(f.child(), fn), f.lo(), f.hi());
  }
  return f;
}

/// Same operator tree and same predicate functions up to offsets.
inline bool same_structure(const Formula& x, const Formula& y) {
  if (x.kind() != y.kind() || x.lo() != y.lo() || x.hi() != y.hi()) return false;
  if (x.kind() == NodeKind::Pred)
    return x.predicate().coeffs == y.predicate().coeffs && x.predicate().polarity == y.predicate().polarity;
  if (x.children().size() != y.children().size()) return false;
  for (std::size_t i = 0; i < x.children().size(); ++i)
    if (!same_structure(x.children()[i], y.children()[i])) return false;
  return true;
}

/// Agents referenced anywhere in f.
inline std::set<int> referenced_agents(const Formula& f) {
  std::set<int> out;
  auto visit = [&](auto&& self, const Formula& g) -> void {
    if (g.kind() == NodeKind::Pred) {
      auto a = g.predicate().agents();
      out.insert(a.begin(), a.end());
    }
    for (const auto& c : g.children()) self(self, c);
  };
  visit(visit, f);
  return out;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Text in the concrete grammar accepted by parse_formula(). Every n-ary node
/// and every Until is parenthesized, so parse(to_string(f)) == f for formulas
/// without negated-polarity predicates.
inline std::string to_string(const Formula& f) {
  switch (f.kind()) {
    case NodeKind::True:
      return "TRUE";
    case NodeKind::Pred: {
      const auto& p = f.predicate();
      std::string s;
      bool first = true;
      for (const auto& [sig, c] : p.coeffs) {
        const bool neg = std::signbit(c);
        if (first)
          s += neg ? "-" : "";
        else
          s += neg ? " - " : " + ";
        s += format_number(std::fabs(c)) + "*x" + std::to_string(sig.agent) + "[" + std::to_string(sig.dim) + "]";
        first = false;
      }
      s += " >= " + format_number(-p.offset);
      return p.polarity == Polarity::negated ? "!(" + s + ")" : s;
    }
    case NodeKind::Not:
      return "!(" + to_string(f.child()) + ")";
    case NodeKind::And:
    case NodeKind::Or: {
      std::string s = "(";
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (i) s += f.kind() == NodeKind::And ? " & " : " | ";
        s += to_string(f.children()[i]);
      }
      return s + ")";
    }
    case NodeKind::Until:
      return "(" + to_string(f.child(0)) + " U[" + std::to_string(f.lo()) + "," + std::to_string(f.hi()) + "] " +
             to_string(f.child(1)) + ")";
    case NodeKind::Eventually:
    case NodeKind::Always:
      return std::string(f.kind() == NodeKind::Eventually ? "F" : "G") + "[" + std::to_string(f.lo()) + "," +
             std::to_string(f.hi()) + "](" + to_string(f.child()) + ")";
  }
  return {};
}

}  // namespace stlprt
