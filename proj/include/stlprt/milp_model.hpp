#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stlprt/error.hpp"

namespace stlprt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { continuous, binary, integer };
enum class Sense { le, ge, eq };

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  VarType type = VarType::continuous;

  bool is_integer() const { return type != VarType::continuous; }
};

struct Row {
  std::string name;
  std::vector<LinearTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// Linear objective (minimized), rows, and a name registry. Names double as
/// entity keys (e.g. z_1_3_0 for agent 1, time 3, coordinate 0), so every
/// name must be unique and usable verbatim in LP files.
class MilpModel {
 public:
  int add_variable(std::string name, double lower, double upper, VarType type = VarType::continuous) {
    check_name(name);
    if (type == VarType::binary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    if (std::isnan(lower) || std::isnan(upper)) throw Error("variable " + name + " has NaN bounds");
    auto [it, fresh] = index_.emplace(name, static_cast<int>(vars_.size()));
    if (!fresh) throw Error("duplicate variable name " + name);
    vars_.push_back({std::move(name), lower, upper, type});
    objective_.push_back(0.0);
    return it->second;
  }

  int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, VarType::binary); }

  bool has_variable(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

  int variable(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error("unknown variable " + std::string(name));
    return it->second;
  }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_integer() const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.is_integer(); }));
  }
  const Variable& var(int j) const { return vars_.at(static_cast<std::size_t>(j)); }
  const std::vector<Variable>& variables() const { return vars_; }
  const Row& row(int i) const { return rows_.at(static_cast<std::size_t>(i)); }
  const std::vector<Row>& rows() const { return rows_; }

  void set_bounds(int j, double lower, double upper) {
    auto& v = vars_.at(static_cast<std::size_t>(j));
    v.lower = lower;
    v.upper = upper;
  }

  void set_type(int j, VarType type) { vars_.at(static_cast<std::size_t>(j)).type = type; }

  /// Adds a row; duplicate terms are merged and zero coefficients dropped.
  int add_row(std::vector<LinearTerm> terms, Sense sense, double rhs, std::string name = {}) {
    std::map<int, double> merged;
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= num_variables()) throw Error("row references unregistered variable");
      if (!std::isfinite(t.coef)) throw Error("non-finite coefficient in row " + name);
      merged[t.var] += t.coef;
    }
    if (!std::isfinite(rhs)) throw Error("non-finite right-hand side in row " + name);
    Row r;
    r.name = name.empty() ? "c" + std::to_string(rows_.size()) : std::move(name);
    check_name(r.name);
    for (const auto& [v, c] : merged)
      if (c != 0.0) r.terms.push_back({v, c});
    r.sense = sense;
    r.rhs = rhs;
    rows_.push_back(std::move(r));
    return num_rows() - 1;
  }

  void set_objective(int j, double c) { objective_.at(static_cast<std::size_t>(j)) = c; }
  void add_objective(int j, double c) { objective_.at(static_cast<std::size_t>(j)) += c; }
  void set_objective_constant(double c) { objective_constant_ = c; }
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  double evaluate_objective(const std::vector<double>& x) const {
    double v = objective_constant_;
    for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x.at(j);
    return v;
  }

  static double activity(const Row& r, const std::vector<double>& x) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x.at(static_cast<std::size_t>(t.var));
    return a;
  }

  /// Human-readable list of bound, integrality, and row violations beyond tol.
  std::vector<std::string> violations(const std::vector<double>& x, double tol = 1e-6) const {
    std::vector<std::string> out;
    if (x.size() != vars_.size()) return {"assignment has wrong size"};
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const auto& v = vars_[j];
      if (!std::isfinite(x[j])) out.push_back(v.name + " is not finite");
      if (x[j] < v.lower - tol || x[j] > v.upper + tol) {
        std::ostringstream os;
        os << v.name << " = " << x[j] << " outside [" << v.lower << ", " << v.upper << "]";
        out.push_back(os.str());
      }
      if (v.is_integer() && std::fabs(x[j] - std::round(x[j])) > tol) out.push_back(v.name + " is fractional");
    }
    for (const auto& r : rows_) {
      const double a = activity(r, x);
      const bool bad = (r.sense == Sense::le && a > r.rhs + tol) || (r.sense == Sense::ge && a < r.rhs - tol) ||
                       (r.sense == Sense::eq && std::fabs(a - r.rhs) > tol);
      if (bad) {
        std::ostringstream os;
        os << r.name << ": activity " << a << (r.sense == Sense::le ? " > " : r.sense == Sense::ge ? " < " : " != ")
           << r.rhs;
        out.push_back(os.str());
      }
    }
    return out;
  }

  bool check_feasible(const std::vector<double>& x, double tol = 1e-6) const { return violations(x, tol).empty(); }

 private:
  static void check_name(const std::string& name) {
    const bool ok = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                    std::all_of(name.begin(), name.end(), [](char c) {
                      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
                    });
    if (!ok) throw Error("invalid model name '" + name + "'");
  }

  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  std::map<std::string, int, std::less<>> index_;
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit, error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::unbounded:
      return "unbounded";
    case SolveStatus::iteration_limit:
      return "iteration-limit";
    case SolveStatus::error:
      return "error";
  }
  return "?";
}

struct SolveOutcome {
  SolveStatus status = SolveStatus::error;
  double objective = kInf;
  /// Variable assignment, indexed like the model. Empty when no solution is known.
  std::vector<double> values;
  long nodes = 0;
  long iterations = 0;
  double seconds = 0.0;
  std::string message;

  bool has_solution() const { return !values.empty(); }
  double value(const MilpModel& m, std::string_view name) const {
    return values.at(static_cast<std::size_t>(m.variable(name)));
  }
};

}  // namespace stlprt
