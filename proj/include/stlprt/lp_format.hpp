#pragma once

// LP text format (CPLEX dialect) for exchanging models with external solvers.
//
// Writer dialect:
//   - sections Minimize / Subject To / Bounds / General / Binary / End;
//   - numbers printed with %.17g so every double round-trips exactly;
//   - every variable gets an explicit bounds line ("x free", "lo <= x <= hi",
//     "-inf <= x <= hi" or "x >= lo");
//   - at most eight terms per physical line, continuation lines indented;
//   - the objective constant is not written; readers of solver output add it
//     back through MilpModel::evaluate_objective.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/milp_model.hpp"

namespace stlprt {

namespace detail {

inline std::string lp_number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_terms(std::ostream& os, const std::vector<LinearTerm>& terms, const MilpModel& m) {
  int on_line = 0;
  for (const auto& t : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    os << (t.coef < 0 ? " - " : " + ") << lp_number(std::fabs(t.coef)) << " " << m.var(t.var).name;
    ++on_line;
  }
}

}  // namespace detail

inline void write_lp(std::ostream& os, const MilpModel& m) {
  os << "\\ stlprt model: " << m.num_variables() << " variables, " << m.num_rows() << " rows\n";
  os << "Minimize\n obj:";
  std::vector<LinearTerm> obj;
  for (int j = 0; j < m.num_variables(); ++j)
    if (m.objective()[static_cast<std::size_t>(j)] != 0.0) obj.push_back({j, m.objective()[static_cast<std::size_t>(j)]});
  if (obj.empty() && m.num_variables() > 0) obj.push_back({0, 0.0});
  detail::write_terms(os, obj, m);
  os << "\nSubject To\n";
  for (const auto& r : m.rows()) {
    os << " " << r.name << ":";
    if (r.terms.empty())
      detail::write_terms(os, {{0, 0.0}}, m);
    else
      detail::write_terms(os, r.terms, m);
    os << (r.sense == Sense::le ? " <= " : r.sense == Sense::ge ? " >= " : " = ") << detail::lp_number(r.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : m.variables()) {
    if (v.lower == -kInf && v.upper == kInf)
      os << " " << v.name << " free\n";
    else if (v.upper == kInf)
      os << " " << v.name << " >= " << detail::lp_number(v.lower) << "\n";
    else
      os << " " << detail::lp_number(v.lower) << " <= " << v.name << " <= " << detail::lp_number(v.upper) << "\n";
  }
  std::vector<std::string> general, binary;
  for (const auto& v : m.variables()) {
    if (v.type == VarType::integer) general.push_back(v.name);
    if (v.type == VarType::binary) binary.push_back(v.name);
  }
  if (!general.empty()) {
    os << "General\n";
    for (const auto& n : general) os << " " << n << "\n";
  }
  if (!binary.empty()) {
    os << "Binary\n";
    for (const auto& n : binary) os << " " << n << "\n";
  }
  os << "End\n";
}

inline std::string to_lp_string(const MilpModel& m) {
  std::ostringstream os;
  write_lp(os, m);
  return os.str();
}

namespace detail {

class LpReader {
 public:
  explicit LpReader(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (auto c = line.find('\\'); c != std::string::npos) line.erase(c);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) split(tok);
    }
  }

  MilpModel parse() {
    MilpModel m;
    expect_keyword({"minimize", "minimise", "min"});
    // Objective: optional label, then terms until a section keyword.
    if (peek_label()) pos_ += 2;
    auto obj = terms_until_section(m);
    while (!at_end() && !is_keyword("end")) {
      if (is_keyword("subject") || is_keyword("st") || is_keyword("s.t.")) {
        if (is_keyword("subject")) {
          ++pos_;
          if (!is_keyword("to")) fail("expected 'To'");
        }
        ++pos_;
        while (!at_end() && !section_start()) read_row(m);
      } else if (is_keyword("bounds")) {
        ++pos_;
        while (!at_end() && !section_start()) read_bound(m);
      } else if (is_keyword("general") || is_keyword("generals") || is_keyword("gen") || is_keyword("integer")) {
        ++pos_;
        while (!at_end() && !section_start()) m.set_type(var(m, tokens_[pos_++]), VarType::integer);
      } else if (is_keyword("binary") || is_keyword("binaries") || is_keyword("bin")) {
        ++pos_;
        while (!at_end() && !section_start()) {
          const int j = var(m, tokens_[pos_++]);
          m.set_type(j, VarType::binary);
          m.set_bounds(j, std::max(0.0, declared_lower(j, 0.0)), std::min(1.0, declared_upper(j, 1.0)));
        }
      } else {
        fail("unexpected token '" + tokens_[pos_] + "'");
      }
    }
    if (at_end()) fail("missing End");
    for (const auto& [j, c] : obj) m.add_objective(j, c);
    return m;
  }

 private:
  void split(const std::string& tok) {
    // Separate relational operators and ':' glued to names or numbers.
    std::size_t i = 0;
    while (i < tok.size()) {
      if (tok[i] == '<' || tok[i] == '>' || tok[i] == '=') {
        std::size_t k = i + 1;
        if (k < tok.size() && (tok[k] == '=' || tok[k] == '<' || tok[k] == '>')) ++k;
        tokens_.push_back(tok.substr(i, k - i));
        i = k;
      } else if (tok[i] == ':') {
        tokens_.push_back(":");
        ++i;
      } else {
        std::size_t k = i;
        while (k < tok.size() && tok[k] != '<' && tok[k] != '>' && tok[k] != '=' && tok[k] != ':') ++k;
        tokens_.push_back(tok.substr(i, k - i));
        i = k;
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("LP file: " + what, 1, static_cast<int>(pos_) + 1); }

  bool at_end() const { return pos_ >= tokens_.size(); }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  bool is_keyword(const char* k) const { return !at_end() && lower(tokens_[pos_]) == k; }

  bool section_start() const {
    for (const char* k : {"subject", "st", "s.t.", "bounds", "general", "generals", "gen", "integer", "binary",
                          "binaries", "bin", "end"})
      if (is_keyword(k)) return true;
    return false;
  }

  void expect_keyword(std::initializer_list<const char*> ks) {
    for (const char* k : ks)
      if (is_keyword(k)) {
        ++pos_;
        return;
      }
    fail("expected objective section");
  }

  bool peek_label() const { return pos_ + 1 < tokens_.size() && tokens_[pos_ + 1] == ":"; }

  static bool parse_number(const std::string& s, double& out) {
    const std::string l = lower(s);
    if (l == "inf" || l == "+inf" || l == "infinity" || l == "+infinity") {
      out = kInf;
      return true;
    }
    if (l == "-inf" || l == "-infinity") {
      out = -kInf;
      return true;
    }
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
  }

  int var(MilpModel& m, const std::string& name) {
    if (m.has_variable(name)) return m.variable(name);
    const int j = m.add_variable(name, 0.0, kInf);
    return j;
  }

  double declared_lower(int j, double fallback) const {
    auto it = bounds_set_.find(j);
    return it != bounds_set_.end() && it->second.first ? lower_[j] : fallback;
  }
  double declared_upper(int j, double fallback) const {
    auto it = bounds_set_.find(j);
    return it != bounds_set_.end() && it->second.second ? upper_[j] : fallback;
  }

  std::vector<std::pair<int, double>> terms_until_section(MilpModel& m) {
    std::vector<std::pair<int, double>> out;
    while (!at_end() && !section_start() && !is_relation(tokens_[pos_])) {
      double sign = 1.0, coef = 1.0;
      if (tokens_[pos_] == "+" || tokens_[pos_] == "-") {
        sign = tokens_[pos_] == "-" ? -1.0 : 1.0;
        ++pos_;
      }
      if (at_end()) fail("dangling sign");
      double num;
      if (parse_number(tokens_[pos_], num)) {
        coef = num;
        ++pos_;
        if (at_end() || section_start() || is_relation(tokens_[pos_])) fail("constant terms are not supported");
      }
      out.push_back({var(m, tokens_[pos_++]), sign * coef});
    }
    return out;
  }

  static bool is_relation(const std::string& t) { return t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">" || t == "=<" || t == "=>"; }

  static Sense relation(const std::string& t) {
    if (t == "<=" || t == "<" || t == "=<") return Sense::le;
    if (t == ">=" || t == ">" || t == "=>") return Sense::ge;
    return Sense::eq;
  }

  void read_row(MilpModel& m) {
    std::string name;
    if (peek_label()) {
      name = tokens_[pos_];
      pos_ += 2;
    }
    auto terms = terms_until_section(m);
    if (at_end() || !is_relation(tokens_[pos_])) fail("expected relation in row " + name);
    const Sense s = relation(tokens_[pos_++]);
    double rhs;
    std::string sign;
    if (!at_end() && (tokens_[pos_] == "-" || tokens_[pos_] == "+")) sign = tokens_[pos_++];
    if (at_end() || !parse_number(sign + tokens_[pos_], rhs)) fail("expected right-hand side in row " + name);
    ++pos_;
    std::vector<LinearTerm> lt;
    for (const auto& [j, c] : terms) lt.push_back({j, c});
    m.add_row(std::move(lt), s, rhs, name);
  }

  void ensure_bound_slots(int j) {
    if (static_cast<int>(lower_.size()) <= j) {
      lower_.resize(static_cast<std::size_t>(j) + 1, 0.0);
      upper_.resize(static_cast<std::size_t>(j) + 1, kInf);
    }
  }

  void set_lower(MilpModel& m, int j, double v) {
    ensure_bound_slots(j);
    lower_[static_cast<std::size_t>(j)] = v;
    bounds_set_[j].first = true;
    m.set_bounds(j, v, m.var(j).upper);
  }
  void set_upper(MilpModel& m, int j, double v) {
    ensure_bound_slots(j);
    upper_[static_cast<std::size_t>(j)] = v;
    bounds_set_[j].second = true;
    m.set_bounds(j, m.var(j).lower, v);
  }

  double signed_number() {
    std::string sign;
    if (!at_end() && (tokens_[pos_] == "-" || tokens_[pos_] == "+")) sign = tokens_[pos_++];
    double v;
    if (at_end() || !parse_number(sign + tokens_[pos_], v)) fail("expected number in bounds");
    ++pos_;
    return v;
  }

  void read_bound(MilpModel& m) {
    double v;
    const bool leading_number = parse_number(tokens_[pos_], v) || tokens_[pos_] == "-" || tokens_[pos_] == "+";
    if (leading_number) {
      const double lo = signed_number();
      if (at_end()) fail("truncated bound");
      const Sense s1 = relation(tokens_[pos_++]);
      const int j = var(m, tokens_[pos_++]);
      if (s1 == Sense::le) set_lower(m, j, lo);
      else if (s1 == Sense::ge) set_upper(m, j, lo);
      else {
        set_lower(m, j, lo);
        set_upper(m, j, lo);
      }
      if (!at_end() && is_relation(tokens_[pos_])) {
        const Sense s2 = relation(tokens_[pos_++]);
        const double hi = signed_number();
        if (s2 == Sense::le) set_upper(m, j, hi);
        else set_lower(m, j, hi);
      }
      return;
    }
    const int j = var(m, tokens_[pos_++]);
    if (is_keyword("free")) {
      ++pos_;
      set_lower(m, j, -kInf);
      set_upper(m, j, kInf);
      return;
    }
    if (at_end() || !is_relation(tokens_[pos_])) fail("expected bound relation");
    const Sense s = relation(tokens_[pos_++]);
    const double b = signed_number();
    if (s == Sense::le) set_upper(m, j, b);
    else if (s == Sense::ge) set_lower(m, j, b);
    else {
      set_lower(m, j, b);
      set_upper(m, j, b);
    }
  }

  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
  std::vector<double> lower_, upper_;
  std::map<int, std::pair<bool, bool>> bounds_set_;
};

}  // namespace detail

/// Parses the LP dialect produced by write_lp (and the common CPLEX subset).
inline MilpModel read_lp(std::string_view text) { return detail::LpReader(text).parse(); }

/// Solver verdict and primal values keyed by variable name.
struct ExternalSolution {
  SolveStatus status = SolveStatus::error;
  std::map<std::string, double> values;
  /// Unlisted variables are zero (CBC prints nonzeros only).
  bool sparse = false;
};

namespace detail {
inline bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const std::string l(s);
  if (l == "inf" || l == "Infinity" || l == "infinity") {
    out = kInf;
    return true;
  }
  if (l == "-inf" || l == "-Infinity" || l == "-infinity") {
    out = -kInf;
    return true;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}
}  // namespace detail

/// HiGHS raw solution file ("Model status" header, "# Columns n" block).
inline ExternalSolution read_highs_solution(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(std::string("HiGHS solution: missing ") + what, 0, 0);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next("header");
  if (line != "Model status") throw ParseError("HiGHS solution: expected 'Model status'", 1, 1);
  next("status");
  ExternalSolution out;
  if (line == "Optimal")
    out.status = SolveStatus::optimal;
  else if (line == "Infeasible")
    out.status = SolveStatus::infeasible;
  else if (line == "Unbounded" || line == "Primal infeasible or unbounded")
    out.status = line == "Unbounded" ? SolveStatus::unbounded : SolveStatus::infeasible;
  else if (line.find("limit") != std::string::npos || line.find("Limit") != std::string::npos)
    out.status = SolveStatus::iteration_limit;
  else
    out.status = SolveStatus::error;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# Columns", 0) != 0) continue;
    int count = 0;
    {
      std::istringstream ls(line.substr(9));
      if (!(ls >> count) || count < 0) throw ParseError("HiGHS solution: bad column count", lineno, 1);
    }
    for (int k = 0; k < count; ++k) {
      if (!std::getline(in, line)) throw ParseError("HiGHS solution: truncated column block", lineno, 1);
      ++lineno;
      std::istringstream ls(line);
      std::string name, value;
      double v;
      if (!(ls >> name >> value) || !detail::parse_double(value, v))
        throw ParseError("HiGHS solution: malformed column line '" + line + "'", lineno, 1);
      out.values[name] = v;
    }
    return out;
  }
  if (out.status == SolveStatus::optimal || out.status == SolveStatus::iteration_limit)
    throw ParseError("HiGHS solution: no column values", lineno, 1);
  return out;
}

/// CBC solution file: a status line followed by "index name value reduced"
/// rows for nonzero columns.
inline ExternalSolution read_cbc_solution(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CBC solution: empty file", 1, 1);
  ExternalSolution out;
  out.sparse = true;
  auto starts = [&](const char* p) { return line.rfind(p, 0) == 0; };
  if (starts("Optimal"))
    out.status = SolveStatus::optimal;
  else if (starts("Infeasible") || starts("Integer infeasible"))
    out.status = SolveStatus::infeasible;
  else if (starts("Unbounded"))
    out.status = SolveStatus::unbounded;
  else if (starts("Stopped"))
    out.status = SolveStatus::iteration_limit;
  else
    throw ParseError("CBC solution: unknown status line '" + line + "'", 1, 1);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "**") ls >> first;
    std::string name, value;
    double v;
    if (!detail::parse_double(first, v) || !(ls >> name >> value) || !detail::parse_double(value, v))
      throw ParseError("CBC solution: malformed line '" + line + "'", lineno, 1);
    out.values[name] = v;
  }
  return out;
}

/// Detects the format from the first line.
inline ExternalSolution read_solution(std::string_view text) {
  if (text.rfind("Model status", 0) == 0) return read_highs_solution(text);
  return read_cbc_solution(text);
}

}  // namespace stlprt
