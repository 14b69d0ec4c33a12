#pragma once

#include <stdexcept>
#include <string>

namespace stlprt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed STL text. Carries the 1-based position of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Evaluation was requested past the end of the trajectory.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double margin) : Error(what), margin_(margin) {}
  /// Signed amount by which the budget misses its target (negative means short).
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

/// U ⊖ K E(t) came out empty for some agent and time step.
class InputBudgetError : public Error {
 public:
  InputBudgetError(const std::string& what, int agent, int time)
      : Error(what), agent_(agent), time_(time) {}
  int agent() const noexcept { return agent_; }
  int time() const noexcept { return time_; }

 private:
  int agent_;
  int time_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// A guarantee of the iterative planner failed to hold; the message carries
/// the diagnostics.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace stlprt
